use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::activation::{compute_moments, Integrator};
use crate::teacher::{generate_dataset, InputDist};

fn scalar_instance() -> (Dataset, FilterLayout, TeacherSpec) {
    let layout = FilterLayout::new(1, 1).unwrap();
    let truth = TeacherSpec::new(
        layout,
        vec![1.0],
        vec![2.0],
        Activation::Identity,
        InputDist::Gaussian,
        0.0,
    )
    .unwrap();
    let data = Dataset::from_parts(1, vec![3.0], vec![6.0]).unwrap();
    (data, layout, truth)
}

#[test]
fn scalar_gradients_by_hand() {
    let (data, layout, _) = scalar_instance();
    let m = compute_moments(Activation::Identity, 64).unwrap();
    // ξ is 1 up to quadrature rounding; use the exact value for the hand check.
    let (gw, gv) =
        approx_gradients(&data, &layout, Activation::Identity, 1.0, &[1.0], &[1.0]).unwrap();
    assert_eq!(gw, vec![-9.0]);
    assert_eq!(gv, vec![-9.0]);
    let gw = approx_grad_w(&data, &layout, &m, Activation::Identity, &[1.0], &[1.0]).unwrap();
    assert!((gw[0] + 9.0).abs() < 1e-12);
    assert_eq!(
        grad_v(&data, &layout, Activation::Identity, &[1.0], &[1.0]).unwrap(),
        vec![-9.0]
    );
}

#[test]
fn zero_second_layer_kills_first_layer_gradient() {
    let layout = FilterLayout::new(3, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Relu, InputDist::Gaussian, 0.1, 1).unwrap();
    let data = generate_dataset(&truth, 50, 2).unwrap();
    let w = [0.6, 0.8];
    let (gw, _) = approx_gradients(&data, &layout, Activation::Relu, 0.5, &w, &[0.0; 3]).unwrap();
    assert!(gw.iter().all(|g| *g == 0.0));
}

#[test]
fn zero_residual_gives_zero_v_gradient() {
    let layout = FilterLayout::new(3, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Tanh, InputDist::Gaussian, 0.0, 1).unwrap();
    let data = generate_dataset(&truth, 50, 2).unwrap();
    let gv = grad_v(
        &data,
        &layout,
        Activation::Tanh,
        &truth.w_star,
        &truth.v_star,
    )
    .unwrap();
    assert!(gv.iter().all(|g| *g == 0.0));
}

#[test]
fn gradient_errors() {
    let (data, layout, _) = scalar_instance();
    assert!(matches!(
        approx_gradients(&data, &layout, Activation::Identity, 0.0, &[1.0], &[1.0]),
        Err(Error::NonPositiveXi(_))
    ));
    assert!(matches!(
        grad_v(&data, &layout, Activation::Identity, &[1.0, 0.0], &[1.0]),
        Err(Error::Dimension { .. })
    ));
    let other = FilterLayout::new(2, 1).unwrap();
    assert!(matches!(
        grad_v(&data, &other, Activation::Identity, &[1.0], &[1.0, 1.0]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn gradient_stats_agree_with_fast_path() {
    let layout = FilterLayout::new(4, 3).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Relu, InputDist::Gaussian, 0.2, 3).unwrap();
    let data = generate_dataset(&truth, 5000, 4).unwrap();
    let w = unit_sphere(3, &mut ChaCha8Rng::seed_from_u64(0));
    let v = vec![0.3, -0.2, 0.5, 1.0];
    let (gw, gv) = approx_gradients(&data, &layout, Activation::Relu, 0.5, &w, &v).unwrap();
    let stats = gradient_stats(&data, &layout, Activation::Relu, 0.5, &w, &v).unwrap();
    for (a, b) in gw.iter().zip(&stats.g_w).chain(gv.iter().zip(&stats.g_v)) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!(stats.se_w.iter().chain(&stats.se_v).all(|s| *s > 0.0));
}

#[test]
fn step_examples() {
    let s = LearnerState::new(vec![1.0, 0.0], vec![1.0, 2.0]);
    let next = gd_step(&s, &[0.0, -1.0], &[0.0, 0.0], 1.0).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((next.w[0] - h).abs() < 1e-15 && (next.w[1] - h).abs() < 1e-15);
    assert_eq!(next.t, 1);

    let fixed = gd_step(&s, &[0.0, 0.0], &[0.0, 0.0], 0.3).unwrap();
    assert_eq!(fixed.w, s.w);
    assert_eq!(fixed.v, s.v);
    assert_eq!(fixed.t, 1);

    let next = gd_step(&s, &[0.0, 0.0], &[2.0, -2.0], 0.5).unwrap();
    assert_eq!(next.v, vec![0.0, 3.0]);
}

#[test]
fn step_rejects_degenerate_normalization() {
    let s = LearnerState::new(vec![1.0, 0.0], vec![1.0]);
    assert!(matches!(
        gd_step(&s, &[1.0, 0.0], &[0.0], 1.0),
        Err(Error::DegenerateNormalization(_))
    ));
    assert!(matches!(
        gd_step(&s, &[1.0], &[0.0], 1.0),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn zero_iterations_keeps_initial_record() {
    let layout = FilterLayout::new(3, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Relu, InputDist::Gaussian, 0.1, 1).unwrap();
    let data = generate_dataset(&truth, 100, 2).unwrap();
    let m = compute_moments(Activation::Relu, 64).unwrap();
    let w0 = [1.0, 0.0];
    let v0 = [0.1, 0.1, 0.1];
    let traj = run(
        &data,
        &truth,
        &m,
        (&w0, &v0),
        HyperParams::new(0.1, 0).unwrap(),
    )
    .unwrap();
    assert_eq!(traj.records.len(), 1);
    let r = traj.records[0];
    assert_eq!(r.w_err, dist(&w0, &truth.w_star));
    assert_eq!(r.v_err, dist(&v0, &truth.v_star));
}

#[test]
fn run_requires_unit_init() {
    let layout = FilterLayout::new(2, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Relu, InputDist::Gaussian, 0.1, 1).unwrap();
    let data = generate_dataset(&truth, 20, 2).unwrap();
    let m = compute_moments(Activation::Relu, 64).unwrap();
    let hp = HyperParams::new(0.1, 3).unwrap();
    assert!(run(&data, &truth, &m, (&[2.0, 0.0], &[0.0, 0.0]), hp).is_err());
    assert!(HyperParams::new(0.0, 3).is_err());
}

#[test]
fn run_is_deterministic_and_normalized() {
    let layout = FilterLayout::new(5, 3).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Tanh, InputDist::Gaussian, 0.05, 8).unwrap();
    let data = generate_dataset(&truth, 3000, 9).unwrap();
    let m = compute_moments(Activation::Tanh, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (w0, v0) = random_init(&mut rng, &layout, init_ball_radius(&truth.v_star));
    let hp = HyperParams::new(0.1, 30).unwrap();
    let a = run(&data, &truth, &m, (&w0, &v0), hp).unwrap();
    let b = run(&data, &truth, &m, (&w0, &v0), hp).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 31);
    assert!((norm(&a.final_state.w) - 1.0).abs() < 1e-12);
}

#[test]
fn random_init_bounds() {
    let layout = FilterLayout::new(6, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for radius in [0.0, 0.1, 0.7, 100.0] {
        for _ in 0..200 {
            let (w, v) = random_init(&mut rng, &layout, radius);
            assert!((norm(&w) - 1.0).abs() < 1e-12);
            assert!(norm(&v) <= radius + 1e-12);
        }
    }
}

#[test]
fn random_init_direction_is_centred() {
    let layout = FilterLayout::new(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 10_000;
    let mut mean = [0.0; 3];
    for _ in 0..draws {
        let (w, _) = random_init(&mut rng, &layout, 1.0);
        for (m, x) in mean.iter_mut().zip(&w) {
            *m += x / draws as f64;
        }
    }
    for m in mean {
        assert!(m.abs() < 4.0 / (draws as f64).sqrt(), "{m}");
    }
}

#[test]
fn sign_candidates_cover_patterns() {
    let w = [0.6, -0.8];
    let v = [1.0, 2.0, -0.5];
    let cands = sign_candidates(&w, &v);
    assert_eq!(cands.len(), 4);
    for (i, a) in cands.iter().enumerate() {
        assert!((norm(&a.w) - norm(&w)).abs() < 1e-15);
        for b in &cands[i + 1..] {
            assert!(a.w != b.w || a.v != b.v);
        }
    }
    assert_eq!(cands[1].w, vec![-0.6, 0.8]);
    assert_eq!(cands[2].v, vec![-1.0, -2.0, 0.5]);
}

#[test]
fn init_condition_examples() {
    let layout = FilterLayout::new(4, 3).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Tanh, InputDist::Gaussian, 0.0, 2).unwrap();
    let q = Integrator::new(Activation::Tanh, 64).unwrap();
    let m = q.moments().unwrap();
    let psi = |t: f64| q.psi(t).unwrap();
    assert_eq!(m.kappa, 0.0);

    let at_truth = check_init_condition(&truth, &m, (&truth.w_star, &truth.v_star), psi);
    assert_eq!(
        (
            at_truth.w_aligned,
            at_truth.v_aligned,
            at_truth.mean_condition
        ),
        (true, true, true)
    );
    let flipped = negated(&truth.w_star);
    let c = check_init_condition(&truth, &m, (&flipped, &truth.v_star), psi);
    assert!(!c.w_aligned);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (w, v) = random_init(&mut rng, &layout, 5.0);
        for cand in sign_candidates(&w, &v) {
            let c = check_init_condition(&truth, &m, (&cand.w, &cand.v), psi);
            if c.v_aligned && c.w_aligned {
                assert!(c.mean_condition);
            }
        }
    }
}

#[test]
fn population_gradients_vanish_at_truth() {
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let layout = FilterLayout::new(5, 4).unwrap();
        let truth = TeacherSpec::random_seeded(layout, act, InputDist::Gaussian, 0.0, 4).unwrap();
        let q = Integrator::new(act, 64).unwrap();
        let m = q.moments().unwrap();
        let psi = |t: f64| q.psi(t).unwrap();
        let (ws, vs) = (&truth.w_star, &truth.v_star);
        assert!(population_grad_w(ws, vs, ws, vs).iter().all(|g| *g == 0.0));
        assert!(
            population_grad_v(&m, psi, ws, vs, ws, vs)
                .iter()
                .all(|g| *g == 0.0),
            "{act}"
        );

        // one population step at the truth is an exact fixed point
        let s = LearnerState::new(ws.clone(), vs.clone());
        let gw = population_grad_w(ws, vs, ws, vs);
        let gv = population_grad_v(&m, psi, ws, vs, ws, vs);
        let next = gd_step(&s, &gw, &gv, 0.1).unwrap();
        assert_eq!(&next.w, ws);
        assert_eq!(&next.v, vs);
    }
}

#[test]
fn population_gradient_algebra() {
    let w = [0.0, 1.0];
    let ws = [1.0, 0.0];
    let g = population_grad_w(&w, &[1.0, 0.0], &ws, &[1.0, 1.0]);
    assert_eq!(g, vec![-1.0, 1.0]);

    let q = Integrator::new(Activation::Relu, 64).unwrap();
    let m = q.moments().unwrap();
    let v = [0.3, -1.0, 2.0];
    let vs = [1.0, 0.5, -0.5];
    let g = population_grad_v(&m, |t| q.psi(t).unwrap(), &ws, &v, &ws, &vs);
    let k2 = m.kappa * m.kappa;
    let sum_diff: f64 = v.iter().zip(&vs).map(|(a, b)| a - b).sum();
    for j in 0..3 {
        let expected = m.delta * (v[j] - vs[j]) + k2 * sum_diff;
        assert!((g[j] - expected).abs() < 1e-14);
    }
}

#[test]
fn diagnostics_examples() {
    // identity, w⁰ = w*, v⁰ = v* = 1/√k: ρ = min{ψ(1/2)/3, 1} = 1/6 since ψ(τ) = τ
    let k = 4;
    let layout = FilterLayout::new(k, 3).unwrap();
    let vs = vec![1.0 / (k as f64).sqrt(); k];
    let ws = vec![1.0, 0.0, 0.0];
    let truth = TeacherSpec::new(
        layout,
        ws.clone(),
        vs.clone(),
        Activation::Identity,
        InputDist::Gaussian,
        0.0,
    )
    .unwrap();
    let q = Integrator::new(Activation::Identity, 64).unwrap();
    let m = q.moments().unwrap();
    let diag = theorem_constants(&truth, &m, (&ws, &vs), 0.05, 1000, 0.05, |t| {
        q.psi(t).unwrap()
    });
    assert!((diag.rho - 1.0 / 6.0).abs() < 1e-12, "{}", diag.rho);
    assert_eq!(diag.m, 0.0);
    assert!(diag.rho_positive);
    assert!((diag.gamma1 - (1.0 + 0.05 * diag.rho).powf(-0.5)).abs() < 1e-15);
    assert!(diag.gamma1 > 0.0 && diag.gamma1 < 1.0);
    assert!(
        (diag.gamma2 - (1.0 - 0.05 * m.delta + 4.0 * 0.0025 * m.delta * m.delta).sqrt()).abs()
            < 1e-15
    );
    assert!((diag.gamma3 - (1.0 - 0.05 * m.delta)).abs() < 1e-15);
    assert!(diag.d.is_finite() && diag.d0 > diag.d);
    assert!(diag.eta_w_scale > 0.0 && diag.eta_v_scale > 0.0);

    // αρ = 0.1 → γ₁ = 1/√1.1
    let alpha = 0.1 / diag.rho;
    let d2 = theorem_constants(&truth, &m, (&ws, &vs), alpha, 1000, 0.05, |t| {
        q.psi(t).unwrap()
    });
    assert!((d2.gamma1 - 0.953_462_589_245_592_4).abs() < 1e-12);
}

#[test]
fn diagnostics_flag_outside_basin_and_large_steps() {
    let layout = FilterLayout::new(3, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Relu, InputDist::Gaussian, 0.1, 6).unwrap();
    let q = Integrator::new(Activation::Relu, 64).unwrap();
    let m = q.moments().unwrap();
    let v0 = negated(&truth.v_star);
    let diag = theorem_constants(&truth, &m, (&truth.w_star, &v0), 0.01, 1000, 0.05, |t| {
        q.psi(t).unwrap()
    });
    assert!(!diag.rho_positive);
    let big = theorem_constants(
        &truth,
        &m,
        (&truth.w_star, &truth.v_star),
        10.0,
        1000,
        0.05,
        |t| q.psi(t).unwrap(),
    );
    assert!(!big.step_size_admissible());
    assert!(big.d.is_infinite());
    assert!(m.kappa != 0.0 && big.m > 0.0);
}

#[test]
fn gamma1_decreases_with_step_size() {
    let layout = FilterLayout::new(3, 2).unwrap();
    let truth =
        TeacherSpec::random_seeded(layout, Activation::Tanh, InputDist::Gaussian, 0.1, 6).unwrap();
    let q = Integrator::new(Activation::Tanh, 64).unwrap();
    let m = q.moments().unwrap();
    let mut last = 1.0;
    for i in 1..50 {
        let a = 0.01 * i as f64;
        let d = theorem_constants(
            &truth,
            &m,
            (&truth.w_star, &truth.v_star),
            a,
            1000,
            0.05,
            |t| q.psi(t).unwrap(),
        );
        assert!(d.gamma1 < last);
        last = d.gamma1;
    }
}
