//! Seeded random instances and contracts for experiments and test corpora.
//!
//! Effort chains satisfy FOSD by construction: each level starts from the
//! previous distribution and moves a random share of every outcome's mass to
//! a random higher outcome, which can only grow the upper tail sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Contract, Effort, Instance, InstanceFile, OutcomeModel, UtilitySpec};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Number of outcomes.
    pub k: usize,
    /// Number of positive effort levels.
    pub n: usize,
    pub utility: UtilitySpec,
}

/// Draws a valid instance. The same `(config, seed)` always yields the same file.
pub fn generate_instance(config: &GeneratorConfig, seed: u64) -> Result<InstanceFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance_file(config, &mut rng)
}

pub fn random_instance_file<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> Result<InstanceFile> {
    let (k, n) = (config.k.max(1), config.n.max(1));
    let cap = rng.random_range(1.0..3.0);
    let mut steps: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let scale = cap / steps.iter().sum::<f64>();
    steps.iter_mut().for_each(|s| *s *= scale);
    let mut pi: Vec<f64> = steps
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    pi[k - 1] = cap;
    let w0 = pi[0] * rng.random_range(0.05..0.5);

    let u = config.utility;
    let utility_span = (u.eval(cap) - u.eval(w0)).max(1e-3);
    let base_cost = match u {
        UtilitySpec::Log => (u.eval(w0) + rng.random_range(0.0..0.6) * utility_span).max(0.0),
        UtilitySpec::Crra { .. } => rng.random_range(0.0..0.6) * u.eval(cap),
    };

    let mut dist: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    // Bias the lowest effort toward low outcomes so higher efforts have room.
    for (j, p) in dist.iter_mut().enumerate() {
        *p *= (k - j) as f64;
    }
    normalize(&mut dist);

    let mut efforts = Vec::with_capacity(n);
    let mut cost = base_cost;
    for e in 0..n {
        if e > 0 {
            dist = shift_up(&dist, rng);
            cost += rng.random_range(0.0..0.4) * utility_span;
        }
        efforts.push(Effort { cost, dist: dist.clone() });
    }
    let file = InstanceFile { pi, w0, utility: u, efforts };
    // Validation is cheap and guards the construction.
    Instance::from_file(file.clone())?;
    Ok(file)
}

fn normalize(dist: &mut [f64]) {
    let total: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|p| *p /= total);
    // Push the rounding residue onto the largest entry so the sum is 1 to within an ulp.
    let residue = 1.0 - dist.iter().sum::<f64>();
    let big = (0..dist.len()).max_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
    dist[big] += residue;
}

fn shift_up<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> Vec<f64> {
    let k = dist.len();
    let mut next = dist.to_vec();
    for j in 0..k.saturating_sub(1) {
        let moved = next[j] * rng.random_range(0.0..0.6);
        let to = rng.random_range(j + 1..k);
        next[j] -= moved;
        next[to] += moved;
    }
    next
}

/// A uniformly drawn monotone-smooth, `H`-bounded contract: `w(1)` uniform in
/// `[w0, H]`, each increment uniform in `[0, pi(i+1) - pi(i)]`, redrawn until
/// every wage is at most `H`.
pub fn random_learnable_contract<R: Rng + ?Sized>(outcomes: &OutcomeModel, rng: &mut R) -> Contract {
    let (w0, cap) = (outcomes.min_wage(), outcomes.cap());
    loop {
        let mut wages = Vec::with_capacity(outcomes.k());
        let mut x = rng.random_range(w0..=cap);
        wages.push(x);
        for i in 0..outcomes.k() - 1 {
            x += rng.random_range(0.0..=outcomes.increment(i));
            wages.push(x);
        }
        if x <= cap {
            return Contract::new(wages).expect("positive wages");
        }
    }
}

/// An arbitrary positive contract with wages uniform in `[lo, hi]`.
pub fn random_contract<R: Rng + ?Sized>(k: usize, lo: f64, hi: f64, rng: &mut R) -> Contract {
    Contract::new((0..k).map(|_| rng.random_range(lo..=hi)).collect()).expect("positive wages")
}
