use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mode, Prediction, StreamConfig, StreamMetrics};
use crate::dynamic::UpdateOp;
use crate::error::{Error, Result};
use crate::example::{LabeledExample, Schema};
use crate::multiset::ActiveMultiset;
use crate::oracle::verify_tree;
use crate::tree::DecisionTree;

/// Dispatches on `config.mode`.
pub fn run(
    schema: &Arc<Schema>,
    examples: &[LabeledExample],
    config: &StreamConfig,
) -> Result<StreamMetrics> {
    match config.mode {
        Mode::Incremental => run_incremental(schema, examples, config),
        Mode::SlidingWindow => run_sliding_window(schema, examples, config),
        Mode::RandomUpdate => run_random_update(schema, examples, config),
    }
}

/// The tree under test, plus an independent copy of the active multiset
/// when verifying.
struct Engine {
    tree: DecisionTree,
    mirror: Option<ActiveMultiset>,
    updates: usize,
}

impl Engine {
    fn start(schema: &Arc<Schema>, warm: &[LabeledExample], config: &StreamConfig) -> Result<Self> {
        config.validate()?;
        let initial = ActiveMultiset::from_examples(schema.clone(), warm.iter().cloned())?;
        let mirror = config.verify.then(|| initial.clone());
        let tree = DecisionTree::from_multiset(initial, config.params)?;
        let engine = Engine {
            tree,
            mirror,
            updates: 0,
        };
        engine.check()?;
        Ok(engine)
    }

    fn apply(&mut self, e: &LabeledExample, op: UpdateOp) -> Result<()> {
        self.tree.update(e.clone(), op)?;
        self.updates += 1;
        if let Some(m) = &mut self.mirror {
            match op {
                UpdateOp::Insert => m.insert(e.clone())?,
                UpdateOp::Delete => m.delete(e)?,
            }
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let Some(m) = &self.mirror else { return Ok(()) };
        let report = verify_tree(&self.tree, m);
        match report.violation {
            None => Ok(()),
            Some(v) => Err(Error::Verification {
                update: self.updates,
                detail: format!(
                    "{:?} at node {} (depth {}): {}",
                    v.condition, v.node, v.depth, v.detail
                ),
            }),
        }
    }

    fn predict(&self, e: &LabeledExample, t: usize) -> Result<Prediction> {
        Ok(Prediction {
            t,
            yhat: self.tree.query(e.features())?,
            y: e.label(),
        })
    }
}

/// Timed step: the updates run between two clock reads, the oracle after.
fn timed(engine: &mut Engine, f: impl FnOnce(&mut Engine) -> Result<()>) -> Result<u64> {
    let start = Instant::now();
    f(engine)?;
    let nanos = start.elapsed().as_nanos() as u64;
    engine.check()?;
    Ok(nanos)
}

/// Builds on the first `warmup` examples, then for each later example
/// predicts its label and inserts it.
pub fn run_incremental(
    schema: &Arc<Schema>,
    examples: &[LabeledExample],
    config: &StreamConfig,
) -> Result<StreamMetrics> {
    let warm = config.effective_warmup().min(examples.len());
    let mut engine = Engine::start(schema, &examples[..warm], config)?;
    let mut preds = Vec::with_capacity(examples.len() - warm);
    let mut nanos = Vec::with_capacity(examples.len() - warm);
    for (i, e) in examples.iter().enumerate().skip(warm) {
        preds.push(engine.predict(e, i + 1)?);
        nanos.push(timed(&mut engine, |en| en.apply(e, UpdateOp::Insert))?);
    }
    StreamMetrics::finish(preds, nanos, engine.tree.stats())
}

/// Like [`run_incremental`], but the active set is the last `W` examples:
/// once `W` examples are active, each step first deletes the oldest. The
/// initial build uses the last `min(warmup, W)` warmup examples.
pub fn run_sliding_window(
    schema: &Arc<Schema>,
    examples: &[LabeledExample],
    config: &StreamConfig,
) -> Result<StreamMetrics> {
    config.validate()?;
    let w = config
        .window
        .ok_or_else(|| Error::InvalidParams("sliding-window mode needs a window".into()))?;
    let warm = config.effective_warmup().min(examples.len());
    let mut engine = Engine::start(schema, &examples[warm.saturating_sub(w)..warm], config)?;
    let mut preds = Vec::with_capacity(examples.len() - warm);
    let mut nanos = Vec::with_capacity(examples.len() - warm);
    for (i, e) in examples.iter().enumerate().skip(warm) {
        preds.push(engine.predict(e, i + 1)?);
        nanos.push(timed(&mut engine, |en| {
            if i >= w {
                en.apply(&examples[i - w], UpdateOp::Delete)?;
            }
            en.apply(e, UpdateOp::Insert)
        })?);
    }
    StreamMetrics::finish(preds, nanos, engine.tree.stats())
}

/// Each step predicts the next example, then with probability 1/2 inserts
/// it and otherwise deletes an active example drawn uniformly (with
/// multiplicity). A deletion drawn on an empty active set becomes the
/// insertion.
pub fn run_random_update(
    schema: &Arc<Schema>,
    examples: &[LabeledExample],
    config: &StreamConfig,
) -> Result<StreamMetrics> {
    let warm = config.effective_warmup().min(examples.len());
    let mut engine = Engine::start(schema, &examples[..warm], config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut active: Vec<LabeledExample> = examples[..warm].to_vec();
    let mut preds = Vec::with_capacity(examples.len() - warm);
    let mut nanos = Vec::with_capacity(examples.len() - warm);
    for (i, e) in examples.iter().enumerate().skip(warm) {
        preds.push(engine.predict(e, i + 1)?);
        let delete = rng.gen_bool(0.5) && !active.is_empty();
        if delete {
            let victim = active.swap_remove(rng.gen_range(0..active.len()));
            nanos.push(timed(&mut engine, |en| {
                en.apply(&victim, UpdateOp::Delete)
            })?);
        } else {
            active.push(e.clone());
            nanos.push(timed(&mut engine, |en| en.apply(e, UpdateOp::Insert))?);
        }
    }
    StreamMetrics::finish(preds, nanos, engine.tree.stats())
}
