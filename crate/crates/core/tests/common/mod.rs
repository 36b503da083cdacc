#![allow(dead_code)]

use std::sync::Arc;

use dyntree::{LabeledExample, Schema, UpdateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mix of insertions and deletions over continuous features. Labels
/// follow a random two-feature rule with label noise.
pub fn update_stream(
    seed: u64,
    len: usize,
    d: usize,
) -> (Arc<Schema>, Vec<(LabeledExample, UpdateOp)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (rng.gen_range(0..d), rng.gen_range(0..d));
    let (ta, tb) = (rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
    let noise = rng.gen_range(0.0..0.2);
    let insert_p = rng.gen_range(0.55..0.85);
    let mut active: Vec<LabeledExample> = Vec::new();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        if !active.is_empty() && !rng.gen_bool(insert_p) {
            let e = active.swap_remove(rng.gen_range(0..active.len()));
            out.push((e, UpdateOp::Delete));
        } else {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let clean = (x[a] > ta) ^ (x[b] > tb);
            let y = u8::from(clean ^ rng.gen_bool(noise));
            let e = LabeledExample::new(x, y).unwrap();
            active.push(e.clone());
            out.push((e, UpdateOp::Insert));
        }
    }
    (Schema::real(d), out)
}

/// Stream whose label is `x_0 > 0.5` with probability `1 - noise`; the rule
/// flips at `flip_at` if given.
pub fn threshold_stream(
    seed: u64,
    n: usize,
    d: usize,
    noise: f64,
    flip_at: Option<usize>,
) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|t| {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut y = (x[0] > 0.5) ^ rng.gen_bool(noise);
            if flip_at.is_some_and(|f| t >= f) {
                y = !y;
            }
            LabeledExample::new(x, u8::from(y)).unwrap()
        })
        .collect()
}

/// Stream with a slowly rotating linear boundary over the first two
/// features, a fixed axis rule on the third and label noise.
pub fn drifting_stream(seed: u64, n: usize, d: usize, noise: f64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|t| {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let angle = std::f64::consts::PI * t as f64 / n as f64;
            let side = angle.cos() * (x[0] - 0.5) + angle.sin() * (x[1] - 0.5) > 0.0;
            let y = (side && x[2] > 0.3) ^ rng.gen_bool(noise);
            LabeledExample::new(x, u8::from(y)).unwrap()
        })
        .collect()
}
