//! Ground-truth network, filter layout, input distributions and data generation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// RNG streams derived from one seed. Each consumer gets its own stream so
/// changing one stage never perturbs another.
pub(crate) mod stream {
    pub const TEACHER: u64 = 1;
    pub const INPUTS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const INIT: u64 = 4;
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// k contiguous, disjoint patches of size r tiling an input of length k·r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterLayout {
    k: usize,
    r: usize,
}

impl FilterLayout {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        if k == 0 || r == 0 {
            return Err(Error::Config(format!(
                "layout needs k, r >= 1 (got k={k}, r={r})"
            )));
        }
        Ok(FilterLayout { k, r })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.k * self.r
    }

    /// Index range of patch `j` (zero-based).
    pub fn block(&self, j: usize) -> std::ops::Range<usize> {
        j * self.r..(j + 1) * self.r
    }

    /// Patch `j` (zero-based) of `x`; the unchecked form used in hot loops.
    #[inline]
    pub fn patch_of<'a>(&self, x: &'a [f64], j: usize) -> &'a [f64] {
        &x[j * self.r..(j + 1) * self.r]
    }

    /// Patch `j` (one-based, `1..=k`) of `x`.
    pub fn patch<'a>(&self, x: &'a [f64], j: usize) -> Result<&'a [f64]> {
        if j == 0 || j > self.k {
            return Err(Error::PatchIndex {
                index: j,
                k: self.k,
            });
        }
        self.check_input(x)?;
        Ok(self.patch_of(x, j - 1))
    }

    pub fn patches<'a>(&self, x: &'a [f64]) -> std::slice::Chunks<'a, f64> {
        x.chunks(self.r)
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::Dimension {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDist {
    #[default]
    Gaussian,
    /// Uniform on the sphere of the given radius; `None` means √d.
    UniformSphere { radius: Option<f64> },
    /// Standard Gaussian entries cubed, optionally rescaled to unit variance.
    Transelliptical { standardize: bool },
}

/// E z⁶ for a standard normal; the variance of a cubed entry.
pub const CUBED_GAUSSIAN_VARIANCE: f64 = 15.0;

pub fn sample_inputs<R: Rng + ?Sized>(
    dist: InputDist,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    match dist {
        InputDist::Gaussian => {}
        InputDist::UniformSphere { radius } => {
            let radius = radius.unwrap_or((d as f64).sqrt());
            for row in out.chunks_mut(d) {
                let nrm = norm(row);
                let s = radius / nrm;
                row.iter_mut().for_each(|x| *x *= s);
            }
        }
        InputDist::Transelliptical { standardize } => {
            let s = if standardize {
                CUBED_GAUSSIAN_VARIANCE.sqrt().recip()
            } else {
                1.0
            };
            out.iter_mut().for_each(|x| *x = x.powi(3) * s);
        }
    }
    out
}

/// Seeded convenience wrapper over [`sample_inputs`].
pub fn sample_inputs_seeded(dist: InputDist, n: usize, d: usize, seed: u64) -> Vec<f64> {
    sample_inputs(dist, n, d, &mut seeded_rng(seed, stream::INPUTS))
}

/// Uniform draw from the unit sphere in ℝᵈ.
pub fn unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = norm(&v);
        if nrm > 0.0 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

pub fn standard_normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    pub layout: FilterLayout,
    pub w_star: Vec<f64>,
    pub v_star: Vec<f64>,
    pub activation: Activation,
    pub input_dist: InputDist,
    pub noise_std: f64,
}

impl TeacherSpec {
    /// Validates shapes, normalizes nothing: `w_star` must already be unit.
    pub fn new(
        layout: FilterLayout,
        w_star: Vec<f64>,
        v_star: Vec<f64>,
        activation: Activation,
        input_dist: InputDist,
        noise_std: f64,
    ) -> Result<Self> {
        if w_star.len() != layout.r() {
            return Err(Error::Dimension {
                expected: layout.r(),
                got: w_star.len(),
            });
        }
        if v_star.len() != layout.k() {
            return Err(Error::Dimension {
                expected: layout.k(),
                got: v_star.len(),
            });
        }
        if (norm(&w_star) - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "w_star must be a unit vector (norm {})",
                norm(&w_star)
            )));
        }
        if !(noise_std >= 0.0) {
            return Err(Error::Config(format!("noise_std {noise_std} must be >= 0")));
        }
        Ok(TeacherSpec {
            layout,
            w_star,
            v_star,
            activation,
            input_dist,
            noise_std,
        })
    }

    /// w* uniform on the sphere, v* standard Gaussian.
    pub fn random<R: Rng + ?Sized>(
        layout: FilterLayout,
        activation: Activation,
        input_dist: InputDist,
        noise_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let w_star = unit_sphere(layout.r(), rng);
        let v_star = standard_normal_vec(layout.k(), rng);
        Self::new(layout, w_star, v_star, activation, input_dist, noise_std)
    }

    pub fn random_seeded(
        layout: FilterLayout,
        activation: Activation,
        input_dist: InputDist,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::random(
            layout,
            activation,
            input_dist,
            noise_std,
            &mut seeded_rng(seed, stream::TEACHER),
        )
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.layout.check_input(x)?;
        Ok(network_output(
            &self.layout,
            self.activation,
            &self.w_star,
            &self.v_star,
            x,
        ))
    }
}

/// Σⱼ vⱼ σ(wᵀ Pⱼ x) without shape checks.
#[inline]
pub(crate) fn network_output(
    layout: &FilterLayout,
    act: Activation,
    w: &[f64],
    v: &[f64],
    x: &[f64],
) -> f64 {
    layout
        .patches(x)
        .zip(v)
        .map(|(p, vj)| vj * act.eval(dot(w, p)))
        .sum()
}

/// Row-major inputs with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    inputs: Vec<f64>,
    labels: Vec<f64>,
    /// Generation seed; `None` for datasets loaded from disk.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn from_parts(d: usize, inputs: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if d == 0 || inputs.len() != d * labels.len() {
            return Err(Error::Dimension {
                expected: d * labels.len(),
                got: inputs.len(),
            });
        }
        Ok(Dataset {
            d,
            inputs,
            labels,
            seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn inputs(&self) -> std::slice::Chunks<'_, f64> {
        self.inputs.chunks(self.d)
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [f64] {
        &mut self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.inputs.chunks(self.d).zip(self.labels.iter().copied())
    }

    pub(crate) fn check_layout(&self, layout: &FilterLayout) -> Result<()> {
        if self.d != layout.d() {
            return Err(Error::Dimension {
                expected: layout.d(),
                got: self.d,
            });
        }
        Ok(())
    }

    /// Writes `x_0,…,x_{d-1},y` with shortest round-trip float formatting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let header: Vec<String> = (0..self.d)
            .map(|i| format!("x_{i}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        let mut body = header.join(",");
        body.push('\n');
        for (x, y) in self.rows() {
            for v in x {
                body.push_str(&format!("{v:?},"));
            }
            body.push_str(&format!("{y:?}\n"));
        }
        out.write_all(body.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        let cols = headers.len();
        let well_formed = cols >= 2
            && headers.get(cols - 1) == Some("y")
            && (0..cols - 1).all(|i| headers.get(i) == Some(format!("x_{i}").as_str()));
        if !well_formed {
            return Err(Error::CsvFormat {
                path: path.into(),
                msg: "expected header x_0,…,x_{d-1},y".into(),
            });
        }
        let d = cols - 1;
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::CsvFormat {
                    path: path.into(),
                    msg: format!("bad float `{field}`"),
                })?;
                if c < d {
                    inputs.push(v);
                } else {
                    labels.push(v);
                }
            }
        }
        Dataset::from_parts(d, inputs, labels)
    }
}

/// Inputs from stream `INPUTS`, noise from stream `NOISE`; a pure function of
/// `(spec, n, seed)`.
pub fn generate_dataset(spec: &TeacherSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("dataset size n must be >= 1".into()));
    }
    let d = spec.layout.d();
    let inputs = sample_inputs(spec.input_dist, n, d, &mut seeded_rng(seed, stream::INPUTS));
    let mut noise_rng = seeded_rng(seed, stream::NOISE);
    let labels = inputs
        .chunks(d)
        .map(|x| {
            let clean =
                network_output(&spec.layout, spec.activation, &spec.w_star, &spec.v_star, x);
            if spec.noise_std > 0.0 {
                let e: f64 = noise_rng.sample(StandardNormal);
                clean + spec.noise_std * e
            } else {
                clean
            }
        })
        .collect();
    Ok(Dataset {
        d,
        inputs,
        labels,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_examples() {
        let l = FilterLayout::new(2, 2).unwrap();
        assert_eq!(l.patch(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), &[3.0, 4.0]);
        let l = FilterLayout::new(1, 3).unwrap();
        assert_eq!(l.patch(&[5.0, 6.0, 7.0], 1).unwrap(), &[5.0, 6.0, 7.0]);
        let l = FilterLayout::new(3, 1).unwrap();
        assert_eq!(l.patch(&[9.0, 8.0, 7.0], 1).unwrap(), &[9.0]);
    }

    #[test]
    fn patch_errors() {
        let l = FilterLayout::new(3, 1).unwrap();
        assert!(matches!(
            l.patch(&[9.0, 8.0, 7.0], 0),
            Err(Error::PatchIndex { index: 0, k: 3 })
        ));
        assert!(matches!(
            l.patch(&[9.0, 8.0, 7.0], 4),
            Err(Error::PatchIndex { .. })
        ));
        assert!(matches!(l.patch(&[9.0], 1), Err(Error::Dimension { .. })));
        assert!(FilterLayout::new(0, 2).is_err());
    }

    fn spec(act: Activation, k: usize, r: usize, w: Vec<f64>, v: Vec<f64>) -> TeacherSpec {
        TeacherSpec::new(
            FilterLayout::new(k, r).unwrap(),
            w,
            v,
            act,
            InputDist::Gaussian,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let s = spec(Activation::Relu, 2, 1, vec![1.0], vec![1.0, -1.0]);
        assert_eq!(s.forward(&[2.0, -3.0]).unwrap(), 2.0);
        let s = spec(Activation::Identity, 2, 2, vec![1.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(s.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        let s = spec(Activation::Identity, 2, 2, vec![1.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(s.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 4.0);
        assert!(matches!(s.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn spec_validation() {
        let l = FilterLayout::new(2, 2).unwrap();
        let g = InputDist::Gaussian;
        let a = Activation::Relu;
        assert!(TeacherSpec::new(l, vec![1.0, 1.0], vec![1.0, 1.0], a, g, 0.0).is_err());
        assert!(TeacherSpec::new(l, vec![1.0], vec![1.0, 1.0], a, g, 0.0).is_err());
        assert!(TeacherSpec::new(l, vec![1.0, 0.0], vec![1.0], a, g, 0.0).is_err());
        assert!(TeacherSpec::new(l, vec![1.0, 0.0], vec![1.0, 1.0], a, g, -1.0).is_err());
    }

    #[test]
    fn random_teacher_has_unit_filter() {
        let l = FilterLayout::new(15, 5).unwrap();
        for seed in 0..20 {
            let s = TeacherSpec::random_seeded(l, Activation::Tanh, InputDist::Gaussian, 0.1, seed)
                .unwrap();
            assert!((norm(&s.w_star) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_column_moments() {
        let (n, d) = (100_000, 4);
        let x = sample_inputs_seeded(InputDist::Gaussian, n, d, 7);
        for c in 0..d {
            let col: Vec<f64> = x.chunks(d).map(|row| row[c]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
            // sd of the sample variance is √(2/n)
            assert!(
                (var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(),
                "var {var}"
            );
        }
    }

    #[test]
    fn sphere_rows_have_radius() {
        let d = 6;
        let x = sample_inputs_seeded(InputDist::UniformSphere { radius: None }, 500, d, 3);
        for row in x.chunks(d) {
            assert!((norm(row) - (d as f64).sqrt()).abs() < 1e-12);
        }
        let x = sample_inputs_seeded(InputDist::UniformSphere { radius: Some(1.0) }, 50, d, 3);
        for row in x.chunks(d) {
            assert!((norm(row) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn transelliptical_variance() {
        // Oracle: E z⁶ = 15 with sd of the estimator √((E z¹² - 15²)/n) = √((10395 - 225)/n).
        let n = 1_000_000;
        let x = sample_inputs_seeded(InputDist::Transelliptical { standardize: false }, n, 1, 11);
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let se = ((10395.0 - 225.0) / n as f64).sqrt();
        assert!((var - 15.0).abs() < 4.0 * se, "var {var} se {se}");
        let x = sample_inputs_seeded(InputDist::Transelliptical { standardize: true }, n, 1, 11);
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 4.0 * se / 15.0);
    }

    #[test]
    fn noiseless_labels_match_forward() {
        let l = FilterLayout::new(3, 2).unwrap();
        let s =
            TeacherSpec::random_seeded(l, Activation::Relu, InputDist::Gaussian, 0.0, 5).unwrap();
        let data = generate_dataset(&s, 200, 9).unwrap();
        for (x, y) in data.rows() {
            assert_eq!(y, s.forward(x).unwrap());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let l = FilterLayout::new(3, 2).unwrap();
        let s =
            TeacherSpec::random_seeded(l, Activation::Tanh, InputDist::Gaussian, 0.3, 5).unwrap();
        let a = generate_dataset(&s, 100, 42).unwrap();
        let b = generate_dataset(&s, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&s, 100, 43).unwrap();
        assert_ne!(a.labels(), c.labels());
        assert!(generate_dataset(&s, 0, 1).is_err());
    }

    #[test]
    fn identity_label_mean_is_zero() {
        // E y = κ·1ᵀv* = 0 for the identity; label sd estimated from the sample.
        let l = FilterLayout::new(4, 3).unwrap();
        let s = TeacherSpec::random_seeded(l, Activation::Identity, InputDist::Gaussian, 0.0, 1)
            .unwrap();
        let n = 100_000;
        let data = generate_dataset(&s, n, 2).unwrap();
        let mean = data.labels().iter().sum::<f64>() / n as f64;
        let var = data
            .labels()
            .iter()
            .map(|y| (y - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn csv_round_trip() {
        let l = FilterLayout::new(2, 2).unwrap();
        let s =
            TeacherSpec::random_seeded(l, Activation::Tanh, InputDist::Gaussian, 0.1, 5).unwrap();
        let data = generate_dataset(&s, 30, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        data.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x_0,x_1,x_2,x_3,y\n"));
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back.labels(), data.labels());
        assert_eq!(
            back.inputs().collect::<Vec<_>>(),
            data.inputs().collect::<Vec<_>>()
        );
        assert_eq!(back.seed, None);
    }
}
