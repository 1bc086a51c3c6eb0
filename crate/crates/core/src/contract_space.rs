//! Contract classes and the exponential-ratio discretization of the
//! monotone-smooth contracts.
//!
//! A coarse contract is described by natural exponents `l_0, ..., l_{k-1}`:
//! `w(1) = w0 * exp(eta * l_0)` and `w(i + 1) = w(i) * exp(eta * l_i)`. Wages
//! are decoded through cumulative exponents, `w(i) = w0 * exp(eta * s_i)` with
//! `s_i = l_0 + ... + l_{i-1}`, so a code decodes to the same floats no matter
//! how it was produced.

use serde::{Deserialize, Serialize};

use crate::domain::{Contract, OutcomeModel};
use crate::error::{Error, Result};

/// Log-ratios within this distance of an integer are snapped before taking
/// the ceiling, so coarse contracts round to themselves.
pub const SNAP_TOL: f64 = 1e-9;

/// True iff every increment `w(i+1) - w(i)` lies in `[0, pi(i+1) - pi(i)]`.
pub fn is_monotone_smooth(outcomes: &OutcomeModel, w: &Contract) -> bool {
    if w.len() != outcomes.k() {
        return false;
    }
    w.wages().windows(2).enumerate().all(|(i, p)| {
        let step = p[1] - p[0];
        step >= 0.0 && step <= outcomes.increment(i)
    })
}

/// True iff `w0 <= w(i) <= bound` for every outcome.
pub fn is_bounded(w: &Contract, w0: f64, bound: f64) -> bool {
    w.wages().iter().all(|&x| w0 <= x && x <= bound)
}

/// Membership in the learnable class: monotone-smooth and `H`-bounded.
pub fn is_learnable(outcomes: &OutcomeModel, w: &Contract) -> bool {
    is_monotone_smooth(outcomes, w) && is_bounded(w, outcomes.min_wage(), outcomes.cap())
}

/// Exclusive upper limit `1 / (4k)` on the discretization step.
pub fn max_eta(k: usize) -> f64 {
    1.0 / (4.0 * k as f64)
}

pub fn check_eta(k: usize, eta: f64) -> Result<()> {
    let max = max_eta(k);
    if !(eta > 0.0 && eta < max) {
        return Err(Error::EtaOutOfRange { eta, max });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoarseCode(pub Vec<u32>);

impl CoarseCode {
    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Sum of all exponents; the last wage is `w0 * exp(eta * total)`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&l| u64::from(l)).sum()
    }

    pub fn decode(&self, w0: f64, eta: f64) -> Contract {
        let mut s = 0u64;
        let wages = self
            .0
            .iter()
            .map(|&l| {
                s += u64::from(l);
                coarse_wage(w0, eta, s)
            })
            .collect();
        Contract::new(wages).expect("coarse wages are positive")
    }
}

fn coarse_wage(w0: f64, eta: f64, cumulative: u64) -> f64 {
    w0 * (eta * cumulative as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseContract {
    pub code: CoarseCode,
    pub contract: Contract,
}

/// Largest cumulative exponent `s` with `w0 * exp(eta * s) <= bound`, using
/// the same float expression as decoding.
pub fn max_total_exponent(w0: f64, bound: f64, eta: f64) -> u64 {
    debug_assert!(w0 <= bound);
    let mut s = ((bound / w0).ln() / eta).floor().max(0.0) as u64;
    while coarse_wage(w0, eta, s + 1) <= bound {
        s += 1;
    }
    while s > 0 && coarse_wage(w0, eta, s) > bound {
        s -= 1;
    }
    s
}

/// `(L + 1)^k` with `L` from [`max_total_exponent`]: every coordinate of a
/// member has at most `L + 1` choices.
pub fn size_bound(w0: f64, bound: f64, eta: f64, k: usize) -> f64 {
    (max_total_exponent(w0, bound, eta) as f64 + 1.0).powi(k as i32)
}

/// The finite arm set: every eta-coarse, `2H`-bounded contract, in
/// lexicographic order of codes.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizedSpace {
    pub eta: f64,
    pub w0: f64,
    pub bound: f64,
    pub pruned: bool,
    pub members: Vec<CoarseContract>,
    /// Wage decodes performed while enumerating, including the failed probe
    /// that ends each branch.
    pub decode_steps: u64,
}

impl DiscretizedSpace {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn index_of(&self, code: &CoarseCode) -> Option<usize> {
        self.members.binary_search_by(|m| m.code.cmp(code)).ok()
    }

    pub fn contracts(&self) -> impl Iterator<Item = &Contract> {
        self.members.iter().map(|m| &m.contract)
    }
}

/// Depth-first enumeration of all eta-coarse contracts with wages at most `2H`.
/// With `prune_monotone_smooth`, branches whose increment already exceeds the
/// outcome increment are cut.
pub fn enumerate_space(outcomes: &OutcomeModel, eta: f64, prune_monotone_smooth: bool) -> Result<DiscretizedSpace> {
    check_eta(outcomes.k(), eta)?;
    enumerate_unchecked(outcomes, eta, prune_monotone_smooth)
}

pub(crate) fn enumerate_unchecked(
    outcomes: &OutcomeModel,
    eta: f64,
    prune_monotone_smooth: bool,
) -> Result<DiscretizedSpace> {
    let k = outcomes.k();
    let w0 = outcomes.min_wage();
    let bound = 2.0 * outcomes.cap();
    if !(eta > 0.0) || !(w0 < bound) {
        return Err(Error::InvalidParameter(format!("need eta > 0 and w0 < 2H, got eta = {eta}, w0 = {w0}")));
    }
    let mut walk = Walk {
        outcomes,
        eta,
        w0,
        bound,
        prune: prune_monotone_smooth,
        code: Vec::with_capacity(k),
        wages: Vec::with_capacity(k),
        members: Vec::new(),
        steps: 0,
    };
    walk.descend(0);
    Ok(DiscretizedSpace {
        eta,
        w0,
        bound,
        pruned: prune_monotone_smooth,
        members: walk.members,
        decode_steps: walk.steps,
    })
}

struct Walk<'a> {
    outcomes: &'a OutcomeModel,
    eta: f64,
    w0: f64,
    bound: f64,
    prune: bool,
    code: Vec<u32>,
    wages: Vec<f64>,
    members: Vec<CoarseContract>,
    steps: u64,
}

impl Walk<'_> {
    fn descend(&mut self, cumulative: u64) {
        let depth = self.code.len();
        if depth == self.outcomes.k() {
            self.members.push(CoarseContract {
                code: CoarseCode(self.code.clone()),
                contract: Contract::new(self.wages.clone()).expect("positive"),
            });
            return;
        }
        let mut l = 0u32;
        loop {
            let s = cumulative + u64::from(l);
            let wage = coarse_wage(self.w0, self.eta, s);
            self.steps += 1;
            if wage > self.bound {
                break;
            }
            if self.prune && depth > 0 && wage - self.wages[depth - 1] > self.outcomes.increment(depth - 1) {
                break;
            }
            self.code.push(l);
            self.wages.push(wage);
            self.descend(s);
            self.code.pop();
            self.wages.pop();
            l += 1;
        }
    }
}

fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP_TOL {
        r
    } else {
        x.ceil()
    }
}

/// Rounds a learnable contract up onto the coarse grid:
/// `l_0 = ceil(ln(w(1)/w0)/eta)`, `l_i = ceil(ln(w(i+1)/w(i))/eta)`.
pub fn round_to_coarse(outcomes: &OutcomeModel, eta: f64, w: &Contract) -> Result<CoarseContract> {
    let k = outcomes.k();
    check_eta(k, eta)?;
    w.check_len(k)?;
    let w0 = outcomes.min_wage();
    if !is_bounded(w, w0, outcomes.cap()) {
        return Err(Error::NotLearnable(format!("wages outside [{w0}, {}]", outcomes.cap())));
    }
    if !is_monotone_smooth(outcomes, w) {
        return Err(Error::NotLearnable("not monotone-smooth".into()));
    }
    let mut prev = w0;
    let exponents = w
        .wages()
        .iter()
        .map(|&x| {
            let l = snapped_ceil((x / prev).ln() / eta).max(0.0);
            prev = x;
            l as u32
        })
        .collect();
    let code = CoarseCode(exponents);
    let contract = code.decode(w0, eta);
    Ok(CoarseContract { code, contract })
}
