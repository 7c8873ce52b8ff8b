//! CSV files for trajectories and sweep summaries.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learner::{Record, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,w_err,v_err,cos_w,one_v";
pub const SUMMARY_HEADER: &str = "n,median_w_err,median_v_err";

/// Trajectory CSV text; `with_diverged` appends the run-level `diverged` flag
/// to every row, as used for baseline runs.
pub fn trajectory_csv(traj: &Trajectory, with_diverged: bool) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    if with_diverged {
        out.push_str(",diverged");
    }
    out.push('\n');
    for r in &traj.records {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?}",
            r.t, r.w_err, r.v_err, r.cos_w, r.one_v
        ));
        if with_diverged {
            out.push_str(if traj.diverged { ",true" } else { ",false" });
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, with_diverged: bool, path: &Path) -> Result<()> {
    write_file(path, trajectory_csv(traj, with_diverged).as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub records: Vec<Record>,
    pub diverged: Option<bool>,
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryFile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_diverged = match names.as_slice() {
        ["t", "w_err", "v_err", "cos_w", "one_v"] => false,
        ["t", "w_err", "v_err", "cos_w", "one_v", "diverged"] => true,
        _ => {
            return Err(Error::CsvFormat {
                path: path.into(),
                msg: format!("expected header {TRAJECTORY_HEADER}[,diverged]"),
            })
        }
    };
    let bad = |msg: String| Error::CsvFormat {
        path: path.into(),
        msg,
    };
    let float = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("bad float `{s}`")))
    };
    let mut records = Vec::new();
    let mut diverged = None;
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let t = row[0]
            .parse::<usize>()
            .map_err(|_| bad(format!("bad iteration `{}`", &row[0])))?;
        records.push(Record {
            t,
            w_err: float(&row[1])?,
            v_err: float(&row[2])?,
            cos_w: float(&row[3])?,
            one_v: float(&row[4])?,
        });
        if with_diverged {
            let flag = row[5]
                .parse::<bool>()
                .map_err(|_| bad(format!("bad flag `{}`", &row[5])))?;
            diverged = Some(flag);
        }
    }
    Ok(TrajectoryFile { records, diverged })
}

/// `n,median_w_err,median_v_err` rows.
pub fn summary_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (n, w, v) in rows {
        out.push_str(&format!("{n},{w:?},{v:?}\n"));
    }
    out
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
