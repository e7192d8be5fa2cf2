use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "step,mse,l0,ortho,dead,total";

/// One row of the training metrics log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub mse: f64,
    pub l0: f64,
    pub ortho: f64,
    pub dead: usize,
    pub total: f64,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        // `{}` prints the shortest representation that round-trips, so logs are reproducible bit for bit
        let _ = writeln!(s, "{},{},{},{},{},{}", r.step, r.mse, r.l0, r.ortho, r.dead, r.total);
    }
    s
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, metrics_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::UndefinedInput("metrics CSV header mismatch".into()));
    }
    let bad = |l: &str| Error::UndefinedInput(format!("malformed metrics row: {l}"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            Ok(MetricsRow {
                step: f[0].parse().map_err(|_| bad(l))?,
                mse: f[1].parse().map_err(|_| bad(l))?,
                l0: f[2].parse().map_err(|_| bad(l))?,
                ortho: f[3].parse().map_err(|_| bad(l))?,
                dead: f[4].parse().map_err(|_| bad(l))?,
                total: f[5].parse().map_err(|_| bad(l))?,
            })
        })
        .collect()
}
