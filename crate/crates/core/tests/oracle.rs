mod common;

use dyntree::gini::best_split;
use dyntree::oracle::{exact_to_f64, exhaustive_best};
use dyntree::{ActiveMultiset, LabeledExample, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exhaustive_maximum_agrees_with_split_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let d = rng.gen_range(1..5);
        let n = rng.gen_range(2..60);
        let grid = rng.gen_range(2..8);
        let examples = (0..n).map(|_| {
            let x: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0..grid) as f64 / grid as f64)
                .collect();
            LabeledExample::new(x, rng.gen_range(0..2)).unwrap()
        });
        let s =
            ActiveMultiset::from_examples(Schema::real(d), examples.collect::<Vec<_>>()).unwrap();
        let exact = exhaustive_best(&s);
        let fast = best_split(&s).unwrap();
        match exact.split {
            None => assert!(!fast.separates),
            Some(split) => {
                assert!(fast.separates);
                assert!((fast.best_gain - exact_to_f64(exact.gain)).abs() <= 1e-12);
                assert_eq!(fast.best_split, split);
                assert_eq!(exact.gain, exact.max_gain);
            }
        }
    }
}

#[test]
fn gains_are_bounded_by_parent_impurity() {
    let (schema, stream) = common::update_stream(5, 120, 3);
    let s = ActiveMultiset::from_examples(schema, stream.into_iter().map(|(e, _)| e)).unwrap();
    let best = exhaustive_best(&s);
    let h = s.label_histogram();
    let gini = dyntree::oracle::exact_gini(h.zeros(), h.ones());
    assert!(best.max_gain <= gini);
}
