#![allow(dead_code)]

use doublewell::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 1e-3 {
            return z.into_iter().map(|v| v / len).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Three,
    Degenerate,
    Single,
}

/// Random instance whose `|f|²/T` puts it in the requested regime.
pub fn random_spec(rng: &mut impl Rng, target: Target) -> ProblemSpec {
    let alpha = 10f64.powf(rng.random_range(-1.0..1.0));
    let lambda = 10f64.powf(rng.random_range(-1.0..0.7));
    let n = rng.random_range(1..=4);
    let threshold = 8.0 * alpha * alpha * lambda.powi(3) / 27.0;
    let ratio = match target {
        Target::Three => rng.random_range(0.01..0.99),
        Target::Degenerate => 1.0,
        Target::Single => rng.random_range(1.01..10.0),
    };
    let fnorm = (ratio * threshold).sqrt();
    let f = unit_vector(rng, n).into_iter().map(|v| v * fnorm).collect();
    ProblemSpec::new(alpha, lambda, f).unwrap()
}

/// Cycles through the three regimes.
pub fn mixed_specs(seed: u64, count: usize) -> Vec<ProblemSpec> {
    let mut r = rng(seed);
    let targets = [Target::Three, Target::Single, Target::Three, Target::Degenerate];
    (0..count).map(|i| random_spec(&mut r, targets[i % targets.len()])).collect()
}
