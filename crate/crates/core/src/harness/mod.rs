//! Streaming experiments: CSV ingestion, the incremental, sliding-window and
//! random-update input models, prequential F1 and per-update timing.

mod load;
mod metrics;
mod runs;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::FeasibilityParams;

pub use load::{load_stream, Dataset};
pub use metrics::{emit_metrics, prequential_f1, write_series, Prediction, StreamMetrics, Summary};
pub use runs::{run, run_incremental, run_random_update, run_sliding_window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every step inserts the next example.
    Incremental,
    /// Every step inserts the next example after deleting the one leaving
    /// a window of the last `W`.
    SlidingWindow,
    /// Every step inserts the next example or, with probability 1/2,
    /// deletes a uniformly random active example instead.
    RandomUpdate,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incremental" | "inc" => Ok(Mode::Incremental),
            "sw" | "sliding_window" | "sliding-window" => Ok(Mode::SlidingWindow),
            "ru" | "random_update" | "random-update" => Ok(Mode::RandomUpdate),
            _ => Err(Error::InvalidParams(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Incremental => "incremental",
            Mode::SlidingWindow => "sw",
            Mode::RandomUpdate => "ru",
        })
    }
}

/// Label column given by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit strings are indices, anything else a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub mode: Mode,
    /// Window length `W`; required in sliding-window mode.
    pub window: Option<usize>,
    /// Examples consumed by the initial build. Defaults to `W` in
    /// sliding-window mode and 0 otherwise.
    pub warmup: Option<usize>,
    pub params: FeasibilityParams,
    pub seed: u64,
    pub dataset_path: Option<PathBuf>,
    pub label_column: LabelColumn,
    pub positive_class: String,
    /// Check the tree against the oracle after every update.
    pub verify: bool,
}

impl StreamConfig {
    pub fn new(mode: Mode, params: FeasibilityParams) -> Self {
        StreamConfig {
            mode,
            window: None,
            warmup: None,
            params,
            seed: 0,
            dataset_path: None,
            label_column: LabelColumn::Index(0),
            positive_class: "1".into(),
            verify: false,
        }
    }

    pub fn with_window(mut self, w: usize) -> Self {
        self.window = Some(w);
        self
    }

    pub fn with_warmup(mut self, w: usize) -> Self {
        self.warmup = Some(w);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        match (self.mode, self.window) {
            (Mode::SlidingWindow, None) => Err(Error::InvalidParams(
                "sliding-window mode needs a window".into(),
            )),
            (_, Some(0)) => Err(Error::InvalidParams("window must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn effective_warmup(&self) -> usize {
        match (self.warmup, self.mode) {
            (Some(w), _) => w,
            (None, Mode::SlidingWindow) => self.window.unwrap_or(0),
            (None, _) => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FeasibilityParams {
        FeasibilityParams::new(0.0, 0.0, 1, Some(10), 0.1).unwrap()
    }

    #[test]
    fn mode_names() {
        assert_eq!("sw".parse::<Mode>().unwrap(), Mode::SlidingWindow);
        assert_eq!("ru".parse::<Mode>().unwrap(), Mode::RandomUpdate);
        assert_eq!("incremental".parse::<Mode>().unwrap(), Mode::Incremental);
        assert!("batch".parse::<Mode>().is_err());
        assert_eq!(Mode::SlidingWindow.to_string(), "sw");
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("3".parse::<LabelColumn>().unwrap(), LabelColumn::Index(3));
        assert_eq!(
            "class".parse::<LabelColumn>().unwrap(),
            LabelColumn::Name("class".into())
        );
    }

    #[test]
    fn window_rules() {
        let c = StreamConfig::new(Mode::SlidingWindow, params());
        assert!(c.validate().is_err());
        let c = c.with_window(50);
        assert!(c.validate().is_ok());
        assert_eq!(c.effective_warmup(), 50);
        assert_eq!(c.clone().with_warmup(5).effective_warmup(), 5);
        assert_eq!(
            StreamConfig::new(Mode::Incremental, params()).effective_warmup(),
            0
        );
        assert!(StreamConfig::new(Mode::Incremental, params())
            .with_window(0)
            .validate()
            .is_err());
    }
}
