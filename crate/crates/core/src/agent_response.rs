//! The agent's side of a single interaction: expected utility of an effort,
//! the best response with upward tie-breaking, and the principal's exact
//! expected net profit under that response.

use serde::Serialize;

use crate::domain::{dot, AgentInstance, Contract, OutcomeModel};
use crate::error::{Error, Result};

/// Two utilities closer than this are treated as a tie, which the agent
/// resolves toward the higher effort.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffortChoice {
    /// 0 means the agent rejects the contract.
    pub effort: usize,
    pub utility: f64,
}

/// `U(w, e) = sum_j f_e(j) u(w(j)) - c(e)`, and exactly 0 for `e = 0`.
pub fn agent_utility(agent: &AgentInstance, w: &Contract, e: usize) -> Result<f64> {
    if e > agent.n() {
        return Err(Error::EffortOutOfRange { effort: e, n: agent.n() });
    }
    w.check_len(agent.k())?;
    if e == 0 {
        return Ok(0.0);
    }
    Ok(utility_unchecked(agent, &wage_utilities(agent, w), e))
}

fn wage_utilities(agent: &AgentInstance, w: &Contract) -> Vec<f64> {
    let u = agent.utility();
    w.wages().iter().map(|&x| u.eval(x)).collect()
}

fn utility_unchecked(agent: &AgentInstance, uw: &[f64], e: usize) -> f64 {
    dot(agent.dist(e), uw) - agent.cost(e)
}

/// Enumerates every level including rejection and returns the highest index
/// whose utility is within [`TIE_TOL`] of the maximum.
///
/// # Panics
/// If the contract length differs from the agent's outcome count.
pub fn best_response(agent: &AgentInstance, w: &Contract) -> EffortChoice {
    assert_eq!(w.len(), agent.k(), "contract length must match outcome count");
    let uw = wage_utilities(agent, w);
    let utilities: Vec<f64> =
        std::iter::once(0.0).chain((1..=agent.n()).map(|e| utility_unchecked(agent, &uw, e))).collect();
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let effort = utilities.iter().rposition(|&u| u >= best - TIE_TOL).expect("reject level always present");
    EffortChoice { effort, utility: utilities[effort] }
}

/// `sum_j f_e(j) (pi(j) - w(j))` for a forced effort, 0 for rejection.
pub fn expected_margin(agent: &AgentInstance, outcomes: &OutcomeModel, w: &Contract, e: usize) -> f64 {
    if e == 0 {
        return 0.0;
    }
    agent.dist(e).iter().zip(outcomes.values().iter().zip(w.wages())).map(|(f, (pi, wage))| f * (pi - wage)).sum()
}

/// `V(w)`: the principal's expected net profit when the agent best-responds.
pub fn exact_profit(agent: &AgentInstance, outcomes: &OutcomeModel, w: &Contract) -> f64 {
    let choice = best_response(agent, w);
    expected_margin(agent, outcomes, w, choice.effort)
}

/// `sum_i (f_{e1}(i) - f_{e2}(i)) (u(w1(i)) - u(w2(i)))` with `e1`, `e2` the
/// best responses to `w1`, `w2`. Rejection contributes a zero distribution.
pub fn grossman_hart_gap(agent: &AgentInstance, w1: &Contract, w2: &Contract) -> f64 {
    let e1 = best_response(agent, w1).effort;
    let e2 = best_response(agent, w2).effort;
    if e1 == e2 {
        return 0.0;
    }
    let k = agent.k();
    let zero = vec![0.0; k];
    let f1 = if e1 == 0 { &zero[..] } else { agent.dist(e1) };
    let f2 = if e2 == 0 { &zero[..] } else { agent.dist(e2) };
    let u = agent.utility();
    (0..k).map(|i| (f1[i] - f2[i]) * (u.eval(w1.wages()[i]) - u.eval(w2.wages()[i]))).sum()
}
