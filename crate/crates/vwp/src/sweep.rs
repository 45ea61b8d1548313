//! One-axis parameter sweeps written as CSV.

use std::time::Instant;

use anyhow::{bail, Result};

use vwp_core::identities::verify;

use crate::job::{Num, NumList, JobSpec};

pub const HEADER: &str = "value,rel_err,radius_used,wall_time_ms,error";

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub value: String,
    pub rel_err: f64,
    pub radius_used: u32,
    pub wall_time_ms: u64,
    /// Error kind, empty when the point ran.
    pub error: String,
}

impl Row {
    pub fn to_csv(&self) -> String {
        let rel = if self.rel_err.is_nan() { String::new() } else { format!("{:e}", self.rel_err) };
        format!("{},{},{},{},{}", self.value, rel, self.radius_used, self.wall_time_ms, self.error)
    }
}

/// `spec` with `axis` set to `value`.
pub fn with_axis(spec: &JobSpec, axis: &str, value: &str) -> Result<JobSpec> {
    let mut s = spec.clone();
    let v = Some(Num::from(value));
    match axis {
        "q" => s.q = v,
        "g" => s.g = v,
        "g1" => s.g1 = v,
        "g2" => s.g2 = v,
        "g3" => s.g3 = v,
        "g4" => s.g4 = v,
        _ => {
            let Some(j) = axis.strip_prefix('z').and_then(|j| j.parse::<usize>().ok()) else {
                bail!("unknown sweep axis {axis:?}");
            };
            let mut z = s.z.as_ref().map(|z| z.items()).unwrap_or_default();
            if j == 0 || j > z.len() {
                bail!("axis {axis} needs --z with at least {j} components");
            }
            z[j - 1] = value.to_string();
            s.z = Some(NumList::Joined(z.join(",")));
        }
    }
    Ok(s)
}

pub fn sweep(spec: &JobSpec, axis: &str, grid: &[String]) -> Result<Vec<Row>> {
    // fail early on a bad axis rather than per row
    with_axis(spec, axis, "0")?;
    let mut rows = Vec::with_capacity(grid.len());
    for value in grid {
        let t = Instant::now();
        let mut row = Row { value: value.clone(), rel_err: f64::NAN, radius_used: 0, wall_time_ms: 0, error: String::new() };
        match with_axis(spec, axis, value).and_then(|s| s.resolve()) {
            Ok((job, opts)) => {
                let r = verify(&job, &opts);
                row.rel_err = r.rel_err;
                row.radius_used = r.radius_used;
                if let Some(e) = &r.error {
                    row.error = e.kind.clone();
                } else if !r.passed() {
                    row.error = "Mismatch".into();
                }
            }
            Err(_) => row.error = "InvalidParameters".into(),
        }
        row.wall_time_ms = t.elapsed().as_millis() as u64;
        rows.push(row);
    }
    Ok(rows)
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}
