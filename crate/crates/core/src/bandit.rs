//! PAC best-arm identification by median elimination.
//!
//! Round `l` samples every surviving arm `n_l` times, keeps the better half by
//! empirical mean and tightens the accuracy schedule:
//!
//! ```text
//! eps_1 = eps / 4, delta_1 = delta / 2
//! n_l   = ceil(2 B^2 ln(3 / delta_l) / (eps_l / 2)^2)
//! eps_{l+1} = 3 eps_l / 4, delta_{l+1} = delta_l / 2
//! ```
//!
//! where `B` is the width of the reward range. Every arm draws from its own
//! ChaCha stream keyed by `(seed, round, arm)`, so results do not depend on
//! whether a round is sampled sequentially or in parallel.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type ArmRng = ChaCha8Rng;

/// Relative slack when checking an empirical mean against the declared range.
const RANGE_TOL: f64 = 1e-9;

/// A finite set of arms with bounded stochastic rewards.
///
/// Implementations must be safe to sample concurrently for distinct arms.
pub trait RewardSource: Sync {
    fn arm_count(&self) -> usize;

    /// Inclusive `(lo, hi)` bounds on a single reward.
    fn reward_range(&self) -> (f64, f64);

    fn pull(&self, arm: usize, rng: &mut ArmRng) -> f64;

    /// Sum of `n` independent pulls. Override when the sum can be drawn in
    /// one shot from its exact distribution.
    fn pull_sum(&self, arm: usize, n: u64, rng: &mut ArmRng) -> f64 {
        (0..n).map(|_| self.pull(arm, rng)).sum()
    }
}

/// The independent stream for one arm in one round.
pub fn arm_stream(seed: u64, round: usize, arm: usize) -> ArmRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 40) | arm as u64);
    rng
}

/// One step of the accuracy schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub epsilon: f64,
    pub delta: f64,
    pub samples_per_arm: u64,
}

fn validate(epsilon: f64, delta: f64, width: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("reward width = {width} must be positive")));
    }
    Ok(())
}

/// Per-arm sample count for one round at accuracy `eps_l` and confidence `delta_l`.
pub fn samples_per_arm(width: f64, eps_l: f64, delta_l: f64) -> Result<u64> {
    let half = eps_l / 2.0;
    let n = (2.0 * width * width * (3.0 / delta_l).ln() / (half * half)).ceil();
    if !(n.is_finite() && n < 2f64.powi(62)) {
        return Err(Error::InvalidParameter(format!("per-arm sample count {n} overflows")));
    }
    Ok(n as u64)
}

/// Schedule stages for `round = 1, 2, ...`. Stops producing once the
/// survivor count reaches one.
pub fn schedule(n_arms: usize, width: f64, epsilon: f64, delta: f64) -> Result<Vec<(usize, Stage)>> {
    validate(epsilon, delta, width)?;
    let mut out = Vec::new();
    let (mut eps, mut del, mut alive) = (epsilon / 4.0, delta / 2.0, n_arms);
    while alive > 1 {
        out.push((alive, Stage { epsilon: eps, delta: del, samples_per_arm: samples_per_arm(width, eps, del)? }));
        alive = alive.div_ceil(2);
        eps *= 0.75;
        del /= 2.0;
    }
    Ok(out)
}

/// Exact number of samples median elimination draws: `sum_l |S_l| n_l`.
pub fn total_sample_count(n_arms: usize, width: f64, epsilon: f64, delta: f64) -> Result<u64> {
    schedule(n_arms, width, epsilon, delta)?
        .iter()
        .try_fold(0u64, |acc, (alive, st)| {
            (*alive as u64).checked_mul(st.samples_per_arm).and_then(|c| acc.checked_add(c))
        })
        .ok_or_else(|| Error::InvalidParameter("total sample count overflows u64".into()))
}

/// Constant `C` in `total <= C * (N B^2 / eps^2) * ln(1 / delta)`, valid for
/// `delta <= 1/2` and `eps <= B`.
///
/// From the schedule: survivors in a running round satisfy
/// `|S_l| < 2 N / 2^(l-1)`, `n_l <= 128 B^2 (16/9)^(l-1) ln(3 2^l / delta) / eps^2 + 1`,
/// the sums `sum (8/9)^(l-1) = 9` and `sum l (8/9)^(l-1) = 81` close the series,
/// and `ln(3/delta) <= 2.59 ln(1/delta)`, `81 ln 2 <= 81 ln(1/delta)` for
/// `delta <= 1/2`. That gives `256 * (9 * 2.59 + 81) ~= 26_700`, plus at most
/// `4N` from the ceilings.
pub const SAMPLE_BOUND_CONSTANT: f64 = 30_000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrace {
    /// 1-based round number.
    pub round: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub samples_per_arm: u64,
    /// Surviving arms at the start of the round, ascending.
    pub arms: Vec<usize>,
    /// Empirical means aligned with `arms`.
    pub means: Vec<f64>,
    /// Arms dropped at the end of the round, ascending.
    pub eliminated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EliminationTrace {
    pub rounds: Vec<RoundTrace>,
    pub total_samples: u64,
}

impl EliminationTrace {
    /// CSV with columns `round,arm,samples,empirical_mean,eliminated`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["round", "arm", "samples", "empirical_mean", "eliminated"])?;
        for r in &self.rounds {
            for (&arm, &mean) in r.arms.iter().zip(&r.means) {
                let gone = r.eliminated.binary_search(&arm).is_ok();
                wtr.write_record([
                    r.round.to_string(),
                    arm.to_string(),
                    r.samples_per_arm.to_string(),
                    mean.to_string(),
                    gone.to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub best: usize,
    pub trace: EliminationTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianElimination {
    pub epsilon: f64,
    pub delta: f64,
    /// Sample the arms of a round on the rayon pool.
    pub parallel: bool,
}

impl MedianElimination {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        Self { epsilon, delta, parallel: false }
    }

    pub fn parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    /// Runs to a single survivor. With probability at least `1 - delta` the
    /// returned arm's mean is within `epsilon` of the best mean.
    pub fn run<S: RewardSource + ?Sized>(&self, source: &S, seed: u64) -> Result<Selection> {
        let n_arms = source.arm_count();
        if n_arms == 0 {
            return Err(Error::EmptyArmSet);
        }
        let (lo, hi) = source.reward_range();
        let width = hi - lo;
        let stages = schedule(n_arms, width, self.epsilon, self.delta)?;
        let slack = RANGE_TOL * width.max(1.0);

        let mut alive: Vec<usize> = (0..n_arms).collect();
        let mut rounds = Vec::with_capacity(stages.len());
        let mut total = 0u64;
        for (idx, (count, stage)) in stages.into_iter().enumerate() {
            debug_assert_eq!(count, alive.len());
            let round = idx + 1;
            let n = stage.samples_per_arm;
            let sample = |&arm: &usize| {
                let mut rng = arm_stream(seed, round, arm);
                source.pull_sum(arm, n, &mut rng) / n as f64
            };
            let means: Vec<f64> =
                if self.parallel { alive.par_iter().map(sample).collect() } else { alive.iter().map(sample).collect() };
            for (&arm, &mean) in alive.iter().zip(&means) {
                if !(mean >= lo - slack && mean <= hi + slack) {
                    return Err(Error::RewardOutOfRange { arm, mean, lo, hi });
                }
            }
            total += n * alive.len() as u64;

            let keep = alive.len().div_ceil(2);
            let mut order: Vec<usize> = (0..alive.len()).collect();
            // Best mean first; ties go to the lower arm index.
            order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(alive[a].cmp(&alive[b])));
            let mut survivors: Vec<usize> = order[..keep].iter().map(|&i| alive[i]).collect();
            let mut eliminated: Vec<usize> = order[keep..].iter().map(|&i| alive[i]).collect();
            survivors.sort_unstable();
            eliminated.sort_unstable();

            rounds.push(RoundTrace {
                round,
                epsilon: stage.epsilon,
                delta: stage.delta,
                samples_per_arm: n,
                arms: std::mem::replace(&mut alive, survivors),
                means,
                eliminated,
            });
        }
        Ok(Selection { best: alive[0], trace: EliminationTrace { rounds, total_samples: total } })
    }
}
