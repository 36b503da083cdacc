mod common;

use dyntree::oracle::{check_feasibility, verify_tree};
use dyntree::{ActiveMultiset, DecisionTree, FeasibilityParams, LabeledExample, Schema, UpdateOp};

fn guaranteed() -> FeasibilityParams {
    FeasibilityParams::new(0.4, 0.5, 3, Some(12), 0.03).unwrap()
}

#[test]
fn feasible_after_every_prefix() {
    for seed in 0..5 {
        let (schema, stream) = common::update_stream(100 + seed, 200, 4);
        let mut tree = DecisionTree::new(schema.clone(), guaranteed()).unwrap();
        let mut mirror = ActiveMultiset::new(schema);
        for (t, (e, op)) in stream.into_iter().enumerate() {
            match op {
                UpdateOp::Insert => mirror.insert(e.clone()).unwrap(),
                UpdateOp::Delete => mirror.delete(&e).unwrap(),
            }
            tree.update(e, op).unwrap();
            let report = check_feasibility(&tree, &mirror, tree.params());
            assert!(
                report.passed(),
                "seed {seed} update {t}: {:?}",
                report.violation
            );
            assert!(
                verify_tree(&tree, &mirror).passed(),
                "seed {seed} update {t}"
            );
            assert_eq!(tree.len(), mirror.len());
        }
    }
}

#[test]
fn insert_delete_round_trip_restores_active_set() {
    let (schema, stream) = common::update_stream(7, 150, 3);
    let mut tree = DecisionTree::new(schema, guaranteed()).unwrap();
    for (e, op) in stream {
        tree.update(e, op).unwrap();
    }
    let before = tree.active_multiset();
    let extra: Vec<LabeledExample> = (0..40)
        .map(|i| {
            LabeledExample::new(
                vec![i as f64 / 40.0, 0.5, 1.0 - i as f64 / 40.0],
                (i % 2) as u8,
            )
            .unwrap()
        })
        .collect();
    for e in &extra {
        tree.insert(e.clone()).unwrap();
    }
    for e in extra.iter().rev() {
        tree.delete(e.clone()).unwrap();
    }
    let after = tree.active_multiset();
    assert_eq!(before.len(), after.len());
    assert!(before.iter().eq(after.iter()));
    assert!(verify_tree(&tree, &after).passed());
}

#[test]
fn deleting_from_empty_tree_fails_cleanly() {
    let mut tree = DecisionTree::new(Schema::real(2), guaranteed()).unwrap();
    let e = LabeledExample::new(vec![0.1, 0.2], 1).unwrap();
    assert!(tree.delete(e.clone()).is_err());
    assert!(tree.is_empty());
    tree.insert(e.clone()).unwrap();
    assert_eq!(tree.query(&[0.1, 0.2]).unwrap(), 1);
}
