//! End-to-end experiment: discretize with `eta = eps / (4 k H)`, run median
//! elimination at accuracy `eps / 2` on the coarse contracts, then score the
//! pick against the grid oracle.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agent_response::exact_profit;
use crate::bandit::{total_sample_count, EliminationTrace, MedianElimination};
use crate::contract_space::{check_eta, enumerate_space, max_eta, CoarseCode};
use crate::domain::{Contract, Instance};
use crate::environment::{make_arm_set, Environment, Sampling};
use crate::error::{Error, Result};
use crate::oracle::{grid_optimum, grid_slack};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Replaces `eps / (4 k H)`; must still satisfy `eta < 1/(4k)`.
    pub eta_override: Option<f64>,
    pub prune_monotone_smooth: bool,
    #[serde(skip)]
    pub sampling: Sampling,
    #[serde(skip)]
    pub parallel: bool,
}

impl LearnParams {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Self {
        Self {
            epsilon,
            delta,
            seed,
            eta_override: None,
            prune_monotone_smooth: false,
            sampling: Sampling::default(),
            parallel: false,
        }
    }
}

/// `eps / (4 k H)`.
pub fn eta_for(epsilon: f64, k: usize, cap: f64) -> f64 {
    epsilon / (4.0 * k as f64 * cap)
}

/// Result of one learning run. Apart from `wall_time_secs`, identical inputs
/// give identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_hash: String,
    pub params: LearnParams,
    pub k: usize,
    pub cap: f64,
    pub eta: f64,
    /// `eta` equals `eps / (4 k H)` exactly (false only under an override).
    pub eta_matches_formula: bool,
    pub bandit_epsilon: f64,
    pub reward_range: (f64, f64),
    pub arm_count: usize,
    pub learned_arm: usize,
    pub learned_code: CoarseCode,
    pub learned_contract: Contract,
    /// Exact `V` of the learned contract, computed from the hidden agent.
    pub learned_value: f64,
    pub predicted_budget: u64,
    pub samples_consumed: u64,
    pub rounds: usize,
    pub wall_time_secs: f64,
}

/// Validates parameters and returns `(eta, predicted_budget, arm_count)`
/// without sampling anything.
pub fn plan(instance: &Instance, params: &LearnParams) -> Result<(f64, u64, usize)> {
    let (eta, space) = space_for(instance, params)?;
    let cap = instance.outcomes.cap();
    let budget = total_sample_count(space.len(), 3.0 * cap, params.epsilon / 2.0, params.delta)?;
    Ok((eta, budget, space.len()))
}

fn space_for(instance: &Instance, params: &LearnParams) -> Result<(f64, crate::contract_space::DiscretizedSpace)> {
    let (k, cap) = (instance.outcomes.k(), instance.outcomes.cap());
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(Error::Precondition(format!("epsilon = {} must be positive", params.epsilon)));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::Precondition(format!("delta = {} must lie in (0, 1)", params.delta)));
    }
    let eta = match params.eta_override {
        Some(eta) => {
            check_eta(k, eta).map_err(|e| Error::Precondition(e.to_string()))?;
            eta
        }
        None => {
            let eta = eta_for(params.epsilon, k, cap);
            if eta >= max_eta(k) {
                return Err(Error::Precondition(format!(
                    "eta = eps/(4kH) = {eta} must be below 1/(4k) = {}; epsilon must be below H = {cap}",
                    max_eta(k)
                )));
            }
            eta
        }
    };
    let space = enumerate_space(&instance.outcomes, eta, params.prune_monotone_smooth)
        .map_err(|e| Error::Precondition(e.to_string()))?;
    Ok((eta, space))
}

/// Runs the learner against a fresh environment built from `instance`.
pub fn learn(instance: &Instance, params: &LearnParams) -> Result<(RunReport, EliminationTrace)> {
    let start = Instant::now();
    let (eta, space) = space_for(instance, params)?;
    let (k, cap) = (instance.outcomes.k(), instance.outcomes.cap());
    let bandit_epsilon = params.epsilon / 2.0;
    let predicted_budget = total_sample_count(space.len(), 3.0 * cap, bandit_epsilon, params.delta)?;

    let env = Environment::new(instance.clone());
    let arms = make_arm_set(&env, &space, params.sampling);
    let learner = MedianElimination::new(bandit_epsilon, params.delta).parallel(params.parallel);
    let selection = learner.run(&arms, params.seed)?;
    debug_assert_eq!(selection.trace.total_samples, predicted_budget);

    let member = &space.members[selection.best];
    // Oracle mode: the value is scored with the hidden agent after learning.
    let learned_value = exact_profit(&instance.agent, &instance.outcomes, &member.contract);
    let report = RunReport {
        instance_hash: instance.content_hash().to_owned(),
        params: *params,
        k,
        cap,
        eta,
        eta_matches_formula: eta == eta_for(params.epsilon, k, cap),
        bandit_epsilon,
        reward_range: (-2.0 * cap, cap),
        arm_count: space.len(),
        learned_arm: selection.best,
        learned_code: member.code.clone(),
        learned_contract: member.contract.clone(),
        learned_value,
        predicted_budget,
        samples_consumed: selection.trace.total_samples,
        rounds: selection.trace.rounds.len(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, selection.trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub instance_hash: String,
    /// Always true: evaluation reads the hidden agent.
    pub oracle_mode: bool,
    pub grid: usize,
    pub grid_contract: Contract,
    pub grid_value: f64,
    pub grid_step: f64,
    pub slack: f64,
    pub learned_contract: Contract,
    pub learned_value: f64,
    /// `max(0, V_grid - V_learned)`.
    pub regret: f64,
    pub epsilon: f64,
    pub success: bool,
}

/// Scores a learned contract against the grid optimum of the same instance.
pub fn evaluate(instance: &Instance, report: &RunReport, grid: usize) -> Result<RegretReport> {
    if report.instance_hash != instance.content_hash() {
        return Err(Error::HashMismatch {
            report: report.instance_hash.clone(),
            instance: instance.content_hash().to_owned(),
        });
    }
    let best = grid_optimum(&instance.agent, &instance.outcomes, grid)?;
    let learned_value = exact_profit(&instance.agent, &instance.outcomes, &report.learned_contract);
    let regret = (best.value - learned_value).max(0.0);
    let slack = grid_slack(instance.outcomes.k(), instance.outcomes.cap(), best.step);
    Ok(RegretReport {
        instance_hash: report.instance_hash.clone(),
        oracle_mode: true,
        grid,
        grid_contract: best.contract,
        grid_value: best.value,
        grid_step: best.step,
        slack,
        learned_contract: report.learned_contract.clone(),
        learned_value,
        regret,
        epsilon: report.params.epsilon,
        success: regret <= report.params.epsilon + slack,
    })
}

/// One CSV row of a multi-seed batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub seed: u64,
    pub arm_count: usize,
    pub samples: u64,
    pub learned_value: f64,
    pub grid_value: f64,
    pub regret: f64,
    pub slack: f64,
    pub success: bool,
}

/// Learns once per seed (in parallel) and scores every run against a single
/// grid optimum.
pub fn batch(instance: &Instance, params: &LearnParams, seeds: &[u64], grid: usize) -> Result<Vec<BatchRow>> {
    use rayon::prelude::*;
    let best = grid_optimum(&instance.agent, &instance.outcomes, grid)?;
    let slack = grid_slack(instance.outcomes.k(), instance.outcomes.cap(), best.step);
    seeds
        .par_iter()
        .map(|&seed| {
            let run = LearnParams { seed, ..*params };
            let (report, _) = learn(instance, &run)?;
            let regret = (best.value - report.learned_value).max(0.0);
            Ok(BatchRow {
                seed,
                arm_count: report.arm_count,
                samples: report.samples_consumed,
                learned_value: report.learned_value,
                grid_value: best.value,
                regret,
                slack,
                success: regret <= params.epsilon + slack,
            })
        })
        .collect()
}
