//! Brute-force ground truth. These functions read the hidden agent directly
//! and are only meant for benchmarking a learner after the fact.

use rayon::prelude::*;
use serde::Serialize;

use crate::agent_response::exact_profit;
use crate::domain::{dot, AgentInstance, Contract, OutcomeModel};
use crate::error::{Error, Result};

/// Point `i` of an `m`-point grid on `[a, b]`. Endpoints are exact, and the
/// grid for `2m - 1` points contains the `m`-point grid bit for bit.
fn grid_point(a: f64, b: f64, i: usize, m: usize) -> f64 {
    if i == m - 1 {
        return b;
    }
    a + (b - a) * (i as f64 / (m - 1) as f64)
}

/// Lipschitz-style slack `2 k H h` used when comparing grid searches.
pub fn grid_slack(k: usize, cap: f64, step: f64) -> f64 {
    2.0 * k as f64 * cap * step
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOptimum {
    pub contract: Contract,
    pub value: f64,
    /// Largest spacing of any grid axis.
    pub step: f64,
    /// Grid points that satisfied the `H` bound and were evaluated.
    pub evaluated: usize,
    /// Some wage of the maximizer sits at `H`, so the class bound is active.
    pub boundary_binds: bool,
}

/// Maximizes `V` over the monotone-smooth, `H`-bounded contracts on a grid:
/// `w(1)` takes `m` values in `[w0, H]`, each increment `m` values in
/// `[0, pi(i+1) - pi(i)]`. Points with a wage above `H` are skipped. Ties keep
/// the first point in lexicographic grid order.
pub fn grid_optimum(agent: &AgentInstance, outcomes: &OutcomeModel, m: usize) -> Result<GridOptimum> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid resolution {m} < 2")));
    }
    let k = outcomes.k();
    if agent.k() != k {
        return Err(Error::LengthMismatch { expected: k, got: agent.k() });
    }
    let (w0, cap) = (outcomes.min_wage(), outcomes.cap());
    if w0 > cap {
        return Err(Error::InvalidParameter(format!("w0 = {w0} above H = {cap}")));
    }
    let total = m.checked_pow(k as u32).ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;

    let first: Vec<f64> = (0..m).map(|i| grid_point(w0, cap, i, m)).collect();
    let incs: Vec<Vec<f64>> =
        (0..k - 1).map(|i| (0..m).map(|j| grid_point(0.0, outcomes.increment(i), j, m)).collect()).collect();

    let best = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            // Mixed-radix digits, most significant digit is w(1).
            let mut digits = vec![0usize; k];
            let mut rest = idx;
            for d in digits.iter_mut().rev() {
                *d = rest % m;
                rest /= m;
            }
            let mut wages = Vec::with_capacity(k);
            let mut x = first[digits[0]];
            wages.push(x);
            for i in 1..k {
                x += incs[i - 1][digits[i]];
                if x > cap {
                    return None;
                }
                wages.push(x);
            }
            let w = Contract::new(wages).ok()?;
            Some((exact_profit(agent, outcomes, &w), idx, w))
        })
        .map(|(v, idx, w)| (v, idx, w, 1usize))
        .reduce_with(|a, b| {
            let count = a.3 + b.3;
            let pick_b = b.0 > a.0 || (b.0 == a.0 && b.1 < a.1);
            if pick_b {
                (b.0, b.1, b.2, count)
            } else {
                (a.0, a.1, a.2, count)
            }
        })
        .expect("the constant contract at w0 is always on the grid");

    let step = std::iter::once((cap - w0) / (m - 1) as f64)
        .chain((0..k - 1).map(|i| outcomes.increment(i) / (m - 1) as f64))
        .fold(0.0, f64::max);
    let boundary_binds = best.2.wages().iter().any(|&x| x >= cap);
    Ok(GridOptimum { contract: best.2, value: best.0, step, evaluated: best.3, boundary_binds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoOutcomeShape {
    /// Share of the value increment passed on: `w(2) = w(1) + a (pi(2) - pi(1))`.
    pub a: f64,
    pub w1: f64,
    pub value: f64,
    pub grid_value: f64,
    pub slack: f64,
    pub matches: bool,
    pub boundary_binds: bool,
}

/// Searches the two-outcome shape over an `m x m` grid of `(w1, a)` in
/// `[w0, H] x [0, 1]`, skipping points with `w(2) > H`, and compares the best
/// value with [`grid_optimum`] at the same resolution.
pub fn two_outcome_shape_check(agent: &AgentInstance, outcomes: &OutcomeModel, m: usize) -> Result<TwoOutcomeShape> {
    if outcomes.k() != 2 {
        return Err(Error::InvalidParameter(format!("two-outcome check needs k = 2, got {}", outcomes.k())));
    }
    let full = grid_optimum(agent, outcomes, m)?;
    let (w0, cap, gap) = (outcomes.min_wage(), outcomes.cap(), outcomes.increment(0));
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..m {
        let w1 = grid_point(w0, cap, i, m);
        for j in 0..m {
            let a = grid_point(0.0, 1.0, j, m);
            let w2 = w1 + a * gap;
            if w2 > cap {
                continue;
            }
            let v = exact_profit(agent, outcomes, &Contract::new(vec![w1, w2])?);
            if best.is_none_or(|b| v > b.2) {
                best = Some((a, w1, v));
            }
        }
    }
    let (a, w1, value) = best.expect("w1 = w0, a = 0 is always feasible");
    let step = full.step.max(1.0 / (m - 1) as f64 * gap);
    let slack = grid_slack(2, cap, step);
    Ok(TwoOutcomeShape {
        a,
        w1,
        value,
        grid_value: full.value,
        slack,
        matches: (value - full.value).abs() <= slack,
        boundary_binds: w1 + a * gap >= cap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskNeutralShape {
    /// Fixed fee: `w(i) = pi(i) - alpha`.
    pub alpha: f64,
    pub value: f64,
    pub grid_value: f64,
    pub slack: f64,
    pub matches: bool,
    /// Grid points skipped for leaving `[w0, H]`; zero by construction of the range.
    pub clipped: usize,
    /// Best total surplus `max(0, max_e E_e[pi] - c(e))`. The principal can never
    /// earn more than this from a risk-neutral agent.
    pub surplus: f64,
    /// The surplus-extracting fee exceeds `pi(1) - w0`, so the wage floor
    /// blocks the unconstrained optimal shape.
    pub floor_binds: bool,
}

/// Searches `alpha` over `m` points of `[0, pi(1) - w0]`, the fees whose
/// shape contracts stay within `[w0, H]`, and compares with [`grid_optimum`].
pub fn risk_neutral_shape_check(agent: &AgentInstance, outcomes: &OutcomeModel, m: usize) -> Result<RiskNeutralShape> {
    if !agent.utility().is_risk_neutral() {
        return Err(Error::InvalidParameter("risk-neutral check needs crra rho = 1".into()));
    }
    let full = grid_optimum(agent, outcomes, m)?;
    let (w0, cap) = (outcomes.min_wage(), outcomes.cap());
    let max_alpha = outcomes.values()[0] - w0;
    if max_alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("w0 = {w0} above pi(1); no shape contract is feasible")));
    }
    let mut clipped = 0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..m {
        let alpha = grid_point(0.0, max_alpha, i, m);
        // pi(1) - (pi(1) - w0) can land an ulp under w0; snap it back.
        let wages: Vec<f64> =
            outcomes.values().iter().map(|p| p - alpha).map(|x| if (x - w0).abs() <= 1e-12 { w0 } else { x }).collect();
        if wages.iter().any(|&x| x < w0 || x > cap) {
            clipped += 1;
            continue;
        }
        let v = exact_profit(agent, outcomes, &Contract::new(wages)?);
        if best.is_none_or(|b| v > b.1) {
            best = Some((alpha, v));
        }
    }
    let (alpha, value) = best.ok_or_else(|| Error::InvalidParameter("every shape contract was clipped".into()))?;
    let surplus = agent.efforts().iter().map(|e| dot(&e.dist, outcomes.values()) - e.cost).fold(0.0, f64::max);
    let slack = grid_slack(outcomes.k(), cap, full.step);
    Ok(RiskNeutralShape {
        alpha,
        value,
        grid_value: full.value,
        slack,
        matches: (value - full.value).abs() <= slack,
        clipped,
        surplus,
        floor_binds: surplus > max_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Effort, UtilitySpec};

    fn instance_a() -> (OutcomeModel, AgentInstance) {
        let outcomes = OutcomeModel::new(vec![1.0, 2.0], 0.1).unwrap();
        let agent = AgentInstance::new(
            UtilitySpec::Crra { rho: 0.5 },
            vec![Effort { cost: 0.05, dist: vec![0.7, 0.3] }, Effort { cost: 0.2, dist: vec![0.4, 0.6] }],
        )
        .unwrap();
        (outcomes, agent)
    }

    #[test]
    fn grid_points_nest() {
        for m in [2usize, 3, 7, 50] {
            for i in 0..m {
                assert_eq!(grid_point(0.1, 2.0, i, m).to_bits(), grid_point(0.1, 2.0, 2 * i, 2 * m - 1).to_bits());
            }
        }
        assert_eq!(grid_point(0.1, 2.0, 9, 10), 2.0);
    }

    #[test]
    fn single_outcome_reduces_to_interval_search() {
        let outcomes = OutcomeModel::new(vec![3.0], 0.2).unwrap();
        let agent =
            AgentInstance::new(UtilitySpec::Crra { rho: 0.5 }, vec![Effort { cost: 1.0, dist: vec![1.0] }]).unwrap();
        let m = 41;
        let g = grid_optimum(&agent, &outcomes, m).unwrap();
        // Brute force: accepted iff sqrt(w) >= 1, profit 3 - w.
        let direct = (0..m)
            .map(|i| grid_point(0.2, 3.0, i, m))
            .map(|w| if w.sqrt() >= 1.0 - 1e-12 { 3.0 - w } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(g.value, direct);
        assert_eq!(g.evaluated, m);
        assert!((g.contract.wages()[0] - 1.0).abs() < 0.07);
    }

    #[test]
    fn refining_never_decreases_value() {
        let (outcomes, agent) = instance_a();
        let mut prev = f64::NEG_INFINITY;
        for m in [3usize, 5, 9, 17, 33] {
            let g = grid_optimum(&agent, &outcomes, m).unwrap();
            assert!(g.value >= prev);
            prev = g.value;
        }
    }

    #[test]
    fn optimum_is_learnable() {
        let (outcomes, agent) = instance_a();
        let g = grid_optimum(&agent, &outcomes, 60).unwrap();
        assert!(crate::contract_space::is_learnable(&outcomes, &g.contract));
    }

    #[test]
    fn two_outcome_shape_agrees() {
        let (outcomes, agent) = instance_a();
        let s = two_outcome_shape_check(&agent, &outcomes, 60).unwrap();
        assert!(s.matches);
        assert!((0.0..=1.0).contains(&s.a));
        let three = OutcomeModel::new(vec![1.0, 2.0, 3.0], 0.1).unwrap();
        assert!(two_outcome_shape_check(&agent, &three, 10).is_err());
    }

    #[test]
    fn risk_neutral_shape_boundaries() {
        let outcomes = OutcomeModel::new(vec![1.0, 1.5, 2.0], 0.1).unwrap();
        let agent = AgentInstance::new(
            UtilitySpec::Crra { rho: 1.0 },
            vec![Effort { cost: 1.0, dist: vec![0.5, 0.3, 0.2] }, Effort { cost: 1.3, dist: vec![0.2, 0.3, 0.5] }],
        )
        .unwrap();
        let s = risk_neutral_shape_check(&agent, &outcomes, 91).unwrap();
        assert_eq!(s.clipped, 0);
        // Surplus: E_1 = 1.35 - 1.0, E_2 = 1.65 - 1.3 -> 0.35.
        assert!((s.surplus - 0.35).abs() < 1e-12);
        assert!(!s.floor_binds);
        assert!(s.matches, "{s:?}");
        assert!(s.value <= s.surplus + 1e-12);
        // alpha = 0 pays out the full value.
        let w = Contract::new(outcomes.values().to_vec()).unwrap();
        assert!(exact_profit(&agent, &outcomes, &w).abs() < 1e-15);
    }

    #[test]
    fn wage_floor_can_beat_the_fixed_fee_shape() {
        // Cheap effort with a large surplus: extracting it needs wages below w0.
        let outcomes = OutcomeModel::new(vec![1.0, 2.0], 0.1).unwrap();
        let agent =
            AgentInstance::new(UtilitySpec::Crra { rho: 1.0 }, vec![Effort { cost: 0.05, dist: vec![0.2, 0.8] }])
                .unwrap();
        let s = risk_neutral_shape_check(&agent, &outcomes, 60).unwrap();
        assert!(s.floor_binds);
        assert!(s.grid_value > s.value + s.slack);
    }

    #[test]
    fn risk_neutral_check_requires_linear_utility() {
        let (outcomes, agent) = instance_a();
        assert!(risk_neutral_shape_check(&agent, &outcomes, 10).is_err());
    }
}
