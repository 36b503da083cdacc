mod common;

use dyntree::harness::{run, Mode, StreamConfig};
use dyntree::oracle::check_routing;
use dyntree::{ActiveMultiset, DecisionTree, FeasibilityParams, LabeledExample, Schema, UpdateOp};

fn params(eps: f64) -> FeasibilityParams {
    FeasibilityParams::new(0.0, 0.0, 1, Some(10), eps).unwrap()
}

#[test]
fn threshold_stream_is_learned() {
    let xs = common::threshold_stream(1, 2000, 3, 0.0, None);
    let cfg = StreamConfig::new(Mode::Incremental, params(0.1));
    let m = run(&Schema::real(3), &xs, &cfg).unwrap();
    assert_eq!(m.predictions.len(), 2000);
    assert!(m.f1 >= 0.95, "f1 {}", m.f1);
}

#[test]
fn sliding_window_recovers_from_drift() {
    let n = 4000;
    let xs = common::threshold_stream(2, n, 2, 0.0, Some(n / 2));
    let cfg = StreamConfig::new(Mode::SlidingWindow, params(0.1)).with_window(300);
    let m = run(&Schema::real(2), &xs, &cfg).unwrap();
    let tail = &m.predictions[m.predictions.len() - 1000..];
    let correct = tail.iter().filter(|p| p.yhat == p.y).count();
    assert!(correct >= 950, "{correct} of 1000 correct after the flip");
}

#[test]
fn constant_label_stream_scores_one() {
    let xs: Vec<LabeledExample> = common::threshold_stream(3, 500, 2, 0.0, None)
        .into_iter()
        .map(|e| LabeledExample::new(e.features().to_vec(), 1).unwrap())
        .collect();
    let cfg = StreamConfig::new(Mode::Incremental, params(0.1)).with_warmup(1);
    let m = run(&Schema::real(2), &xs, &cfg).unwrap();
    assert_eq!(m.f1, 1.0);
}

#[test]
fn identical_examples_stay_a_single_leaf() {
    let xs = vec![LabeledExample::new(vec![0.5, 0.5], 1).unwrap(); 300];
    let cfg = StreamConfig::new(Mode::RandomUpdate, params(0.1))
        .with_seed(9)
        .with_warmup(150)
        .with_verify(true);
    let m = run(&Schema::real(2), &xs, &cfg).unwrap();
    assert_eq!(m.stats.max_path_nodes, 1);
    assert!(m.predictions.iter().all(|p| p.yhat == 1));
}

#[test]
fn random_update_tracks_incremental_accuracy() {
    let xs = common::drifting_stream(4, 3000, 4, 0.05);
    let schema = Schema::real(4);
    let inc = run(
        &schema,
        &xs,
        &StreamConfig::new(Mode::Incremental, params(0.1)),
    )
    .unwrap();
    let ru_cfg = StreamConfig::new(Mode::RandomUpdate, params(0.1)).with_seed(11);
    let ru = run(&schema, &xs, &ru_cfg).unwrap();
    assert!(
        (inc.f1 - ru.f1).abs() <= 0.05,
        "incremental {} random {}",
        inc.f1,
        ru.f1
    );
}

#[test]
fn sliding_window_active_size() {
    // Replays the sliding-window schedule and checks the active size.
    let w = 25;
    let xs = common::threshold_stream(5, 120, 2, 0.1, None);
    let mut tree = DecisionTree::new(Schema::real(2), params(0.2)).unwrap();
    let mut mirror = ActiveMultiset::new(Schema::real(2));
    for (i, e) in xs.iter().enumerate() {
        if i >= w {
            tree.update(xs[i - w].clone(), UpdateOp::Delete).unwrap();
            mirror.delete(&xs[i - w]).unwrap();
        }
        tree.update(e.clone(), UpdateOp::Insert).unwrap();
        mirror.insert(e.clone()).unwrap();
        assert_eq!(tree.len() as usize, (i + 1).min(w));
        assert!(check_routing(&tree, &mirror).is_none());
    }
    let cfg = StreamConfig::new(Mode::SlidingWindow, params(0.2)).with_window(w);
    let m = run(&Schema::real(2), &xs, &cfg).unwrap();
    assert_eq!(m.predictions.len(), xs.len() - w);
    assert_eq!(m.stats.updates as usize, 2 * (xs.len() - w));
}
