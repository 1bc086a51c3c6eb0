//! The repeated interaction seen from the principal's chair: offer a
//! contract, a fresh agent best-responds in private, one outcome is drawn and
//! only that outcome and its net profit come back.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::agent_response::best_response;
use crate::bandit::{ArmRng, RewardSource};
use crate::contract_space::DiscretizedSpace;
use crate::domain::{AgentInstance, Contract, Instance, OutcomeModel};

/// What the principal observes after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundResult {
    /// 1-based outcome, or 0 when the agent rejected.
    pub outcome: usize,
    pub net_profit: f64,
}

impl RoundResult {
    pub fn rejected(&self) -> bool {
        self.outcome == 0
    }
}

/// Plays one round. Exactly one uniform is drawn from `rng`, also on rejection.
pub fn play_round<R: Rng + ?Sized>(
    agent: &AgentInstance,
    outcomes: &OutcomeModel,
    w: &Contract,
    rng: &mut R,
) -> RoundResult {
    let effort = best_response(agent, w).effort;
    let u: f64 = rng.random();
    if effort == 0 {
        return RoundResult { outcome: 0, net_profit: 0.0 };
    }
    let j = inverse_cdf(agent.dist(effort), u);
    RoundResult { outcome: j + 1, net_profit: outcomes.values()[j] - w.wages()[j] }
}

/// 0-based index `j` with `cdf(j-1) <= u < cdf(j)`. Rounding that leaves `u`
/// above the final partial sum falls to the last outcome with positive mass.
fn inverse_cdf(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(dist.len() - 1)
}

/// Owns the hidden agent. The only thing a learner can do with it is play rounds.
#[derive(Debug, Clone)]
pub struct Environment {
    outcomes: OutcomeModel,
    agent: AgentInstance,
}

impl Environment {
    pub fn new(instance: Instance) -> Self {
        Self { outcomes: instance.outcomes, agent: instance.agent }
    }

    /// The public side of the problem.
    pub fn outcomes(&self) -> &OutcomeModel {
        &self.outcomes
    }

    pub fn play_round<R: Rng + ?Sized>(&self, w: &Contract, rng: &mut R) -> RoundResult {
        play_round(&self.agent, &self.outcomes, w, rng)
    }
}

/// How the arm set draws a batch of rounds for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Draw the outcome counts of a batch from their multinomial law.
    #[default]
    Aggregated,
    /// Simulate every round separately through [`play_round`].
    PerRound,
}

/// Per-contract response fixed at construction: the agent is the same in
/// every round, so the chosen effort is too.
#[derive(Debug, Clone)]
enum Plan {
    Rejected,
    Accepted { dist: Vec<f64>, profits: Vec<f64> },
}

/// One bandit arm per contract of a discretized space; a pull is one round
/// of the protocol and its reward is the principal's net profit.
pub struct ContractArms<'a> {
    env: &'a Environment,
    contracts: Vec<Contract>,
    plans: Vec<Plan>,
    sampling: Sampling,
    range: (f64, f64),
}

/// Rewards lie in `[-2H, H]`: wages are at most `2H` and values at most `H`.
pub fn make_arm_set<'a>(env: &'a Environment, space: &DiscretizedSpace, sampling: Sampling) -> ContractArms<'a> {
    let contracts: Vec<Contract> = space.contracts().cloned().collect();
    let h = env.outcomes.cap();
    let plans = contracts
        .iter()
        .map(|w| match best_response(&env.agent, w).effort {
            0 => Plan::Rejected,
            e => Plan::Accepted {
                dist: env.agent.dist(e).to_vec(),
                profits: env.outcomes.values().iter().zip(w.wages()).map(|(p, x)| p - x).collect(),
            },
        })
        .collect();
    ContractArms { env, contracts, plans, sampling, range: (-2.0 * h, h) }
}

impl ContractArms<'_> {
    pub fn contract(&self, arm: usize) -> &Contract {
        &self.contracts[arm]
    }
}

impl RewardSource for ContractArms<'_> {
    fn arm_count(&self) -> usize {
        self.contracts.len()
    }

    fn reward_range(&self) -> (f64, f64) {
        self.range
    }

    fn pull(&self, arm: usize, rng: &mut ArmRng) -> f64 {
        self.env.play_round(&self.contracts[arm], rng).net_profit
    }

    fn pull_sum(&self, arm: usize, n: u64, rng: &mut ArmRng) -> f64 {
        match (&self.plans[arm], self.sampling) {
            (_, Sampling::PerRound) => (0..n).map(|_| self.pull(arm, rng)).sum(),
            (Plan::Rejected, Sampling::Aggregated) => 0.0,
            (Plan::Accepted { dist, profits }, Sampling::Aggregated) => {
                multinomial_counts(dist, n, rng).iter().zip(profits).map(|(&c, p)| c as f64 * p).sum()
            }
        }
    }
}

/// Outcome counts of `n` categorical draws via sequential conditional binomials.
pub fn multinomial_counts<R: Rng + ?Sized>(dist: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; dist.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    let last = dist.iter().rposition(|&p| p > 0.0).unwrap_or(dist.len() - 1);
    for (j, &p) in dist.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j == last {
            counts[j] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng);
        counts[j] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}
