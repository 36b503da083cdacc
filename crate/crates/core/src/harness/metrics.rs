use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StreamConfig;
use crate::error::{Error, Result};
use crate::example::Label;
use crate::tree::RebuildStats;

/// `F1 = 2PR / (P + R)` on class 1, with `P = TP / (TP + FP)` and
/// `R = TP / (TP + FN)`; 0 when `P + R = 0` or a ratio is undefined.
pub fn prequential_f1(y: &[Label], yhat: &[Label]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch(y.len(), yhat.len()));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&a, &b) in y.iter().zip(yhat) {
        match (a, b) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * p * r / (p + r))
}

/// Label predicted for stream position `t` (1-based) before the step that
/// consumes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub t: usize,
    pub yhat: Label,
    pub y: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamMetrics {
    pub predictions: Vec<Prediction>,
    pub f1: f64,
    /// Wall time of each stream step's updates, excluding the prediction.
    pub per_update_nanos: Vec<u64>,
    pub rebuild_count: u64,
    pub rebuild_example_touches: u64,
    pub stats: RebuildStats,
}

impl StreamMetrics {
    pub(crate) fn finish(
        predictions: Vec<Prediction>,
        nanos: Vec<u64>,
        stats: RebuildStats,
    ) -> Result<Self> {
        let y: Vec<Label> = predictions.iter().map(|p| p.y).collect();
        let yhat: Vec<Label> = predictions.iter().map(|p| p.yhat).collect();
        Ok(StreamMetrics {
            f1: prequential_f1(&y, &yhat)?,
            predictions,
            per_update_nanos: nanos,
            rebuild_count: stats.rebuilds,
            rebuild_example_touches: stats.example_touches,
            stats,
        })
    }

    pub fn mean_nanos(&self) -> f64 {
        if self.per_update_nanos.is_empty() {
            return 0.0;
        }
        self.per_update_nanos.iter().map(|&n| n as f64).sum::<f64>()
            / self.per_update_nanos.len() as f64
    }

    pub fn median_nanos(&self) -> f64 {
        if self.per_update_nanos.is_empty() {
            return 0.0;
        }
        let mut v = self.per_update_nanos.clone();
        v.sort_unstable();
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m] as f64
        } else {
            (v[m - 1] as f64 + v[m] as f64) / 2.0
        }
    }

    pub fn summary(&self, config: &StreamConfig) -> Summary {
        Summary {
            f1: self.f1,
            predictions: self.predictions.len(),
            mean_update_nanos: self.mean_nanos(),
            median_update_nanos: self.median_nanos(),
            rebuild_count: self.rebuild_count,
            rebuild_example_touches: self.rebuild_example_touches,
            updates: self.stats.updates,
            max_path_nodes: self.stats.max_path_nodes,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub f1: f64,
    pub predictions: usize,
    pub mean_update_nanos: f64,
    pub median_update_nanos: f64,
    pub rebuild_count: u64,
    pub rebuild_example_touches: u64,
    pub updates: u64,
    pub max_path_nodes: usize,
    pub config: StreamConfig,
}

/// Writes the JSON summary to `path` and, if given, the per-step series
/// `t,yhat,y,nanos` to `series`.
pub fn emit_metrics(
    m: &StreamMetrics,
    config: &StreamConfig,
    path: &Path,
    series: Option<&Path>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &m.summary(config))?;
    writeln!(out)?;
    out.flush()?;
    if let Some(series) = series {
        write_series(m, File::create(series)?)?;
    }
    Ok(())
}

pub fn write_series<W: Write>(m: &StreamMetrics, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "yhat", "y", "nanos"])?;
    for (i, p) in m.predictions.iter().enumerate() {
        let nanos = m.per_update_nanos.get(i).copied().unwrap_or(0);
        out.write_record([
            p.t.to_string(),
            p.yhat.to_string(),
            p.y.to_string(),
            nanos.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
