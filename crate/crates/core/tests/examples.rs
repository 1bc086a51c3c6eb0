use agency_core::agent_response::{best_response, exact_profit};
use agency_core::bandit::{
    schedule, total_sample_count, ArmRng, MedianElimination, RewardSource, SAMPLE_BOUND_CONSTANT,
};
use agency_core::contract_space::{max_eta, round_to_coarse};
use agency_core::generate::{generate_instance, GeneratorConfig};
use agency_core::oracle::{grid_optimum, two_outcome_shape_check};
use agency_core::pipeline::{batch, learn, LearnParams};
use agency_core::{Contract, Instance, UtilitySpec};
use serde_json::Value;

fn instance_a() -> Instance {
    Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/instance_a.json")).unwrap()
}

#[test]
fn grid_optimum_matches_frozen_fixture() {
    let text = include_str!("fixtures/instance_a_grid200.json");
    let frozen: Value = serde_json::from_str(text).unwrap();
    let inst = instance_a();
    let best = grid_optimum(&inst.agent, &inst.outcomes, 200).unwrap();
    let wages: Vec<f64> = frozen["contract"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(best.contract.wages(), wages.as_slice());
    assert_eq!(best.value, frozen["value"].as_f64().unwrap());
    assert_eq!(best.evaluated as u64, frozen["evaluated"].as_u64().unwrap());
    // Independent check: the floor contract keeps effort 1 at V = 0.7 * 0.9 + 0.3 * 1.9.
    assert!((best.value - 1.2).abs() < 1e-12);
}

#[test]
fn refining_the_grid_never_lowers_the_value() {
    let inst = instance_a();
    let mut last = f64::NEG_INFINITY;
    for m in [5, 9, 17, 33, 65] {
        let v = grid_optimum(&inst.agent, &inst.outcomes, m).unwrap().value;
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn two_outcome_search_agrees_on_instance_a() {
    let inst = instance_a();
    let s = two_outcome_shape_check(&inst.agent, &inst.outcomes, 200).unwrap();
    assert!(s.matches);
    assert!((s.value - s.grid_value).abs() <= s.slack);
}

#[test]
fn rounding_grid_points_of_instance_a_keeps_value() {
    // The agent of instance A accepts every contract in W, so the regret
    // bound applies to every grid point.
    let inst = instance_a();
    let (om, agent) = (&inst.outcomes, &inst.agent);
    let k = om.k();
    for eta in [0.01, 0.05, max_eta(k) - 1e-6] {
        for a in 0..40 {
            for b in 0..40 {
                let w1 = om.min_wage() + (om.cap() - om.min_wage()) * a as f64 / 39.0;
                let w2 = w1 + om.increment(0) * b as f64 / 39.0;
                if w2 > om.cap() {
                    continue;
                }
                let w = Contract::new(vec![w1, w2]).unwrap();
                assert!(best_response(agent, &w).effort >= 1);
                let r = round_to_coarse(om, eta, &w).unwrap().contract;
                let bound = 2.0 * k as f64 * om.cap() * eta;
                assert!(exact_profit(agent, om, &r) >= exact_profit(agent, om, &w) - bound - 1e-9);
            }
        }
    }
}

#[test]
fn schedule_scaling() {
    let (b, eps, delta) = (1.0, 0.2, 0.1);
    assert_eq!(total_sample_count(1, b, eps, delta).unwrap(), 0);
    for n in [2usize, 3, 10, 37, 100, 1000] {
        let single = total_sample_count(n, b, eps, delta).unwrap();
        let double = total_sample_count(2 * n, b, eps, delta).unwrap();
        // Round l runs at the same accuracy for any arm count, so 2n arms
        // need at most one more round than n arms.
        let stages = schedule(2 * n, b, eps, delta).unwrap();
        let (alive, last) = stages.last().unwrap();
        assert!(stages.len() <= schedule(n, b, eps, delta).unwrap().len() + 1);
        assert!(double <= 2 * single + *alive as u64 * last.samples_per_arm, "n = {n}");
        let fine = total_sample_count(n, b, eps / 2.0, delta).unwrap() as f64;
        let ratio = fine / single as f64;
        assert!((ratio - 4.0).abs() < 0.01, "n = {n}: ratio {ratio}");
    }
}

#[test]
fn schedule_stays_under_the_constant() {
    for n in [2usize, 5, 10, 100, 10_000, 1 << 20] {
        for (b, eps) in [(1.0, 1.0), (1.0, 0.01), (6.0, 0.125), (3.0, 2.9)] {
            for delta in [0.5, 0.1, 1e-3, 1e-9] {
                let total = total_sample_count(n, b, eps, delta).unwrap() as f64;
                let bound = SAMPLE_BOUND_CONSTANT * (n as f64 * b * b / (eps * eps)) * (1.0f64 / delta).ln();
                assert!(total <= bound, "n {n} b {b} eps {eps} delta {delta}: {total} > {bound}");
            }
        }
    }
}

struct Constant(Vec<f64>);

impl RewardSource for Constant {
    fn arm_count(&self) -> usize {
        self.0.len()
    }
    fn reward_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn pull(&self, arm: usize, _: &mut ArmRng) -> f64 {
        self.0[arm]
    }
}

#[test]
fn deterministic_arms() {
    for seed in 0..20 {
        let sel = MedianElimination::new(0.1, 0.1).run(&Constant(vec![0.0, 1.0]), seed).unwrap();
        assert_eq!(sel.best, 1);
    }
    let sel = MedianElimination::new(0.1, 0.1).run(&Constant(vec![0.4]), 0).unwrap();
    assert_eq!((sel.best, sel.trace.total_samples), (0, 0));
}

#[test]
fn learn_is_deterministic_and_spends_the_budget() {
    let inst = instance_a();
    let params = LearnParams::new(0.5, 0.1, 7);
    let (a, trace) = learn(&inst, &params).unwrap();
    let (mut b, _) = learn(&inst, &params).unwrap();
    b.wall_time_secs = a.wall_time_secs;
    assert_eq!(a, b);
    assert!(a.eta_matches_formula);
    assert_eq!(a.eta, 0.5 / (4.0 * 2.0 * 2.0));
    assert_eq!(a.samples_consumed, total_sample_count(a.arm_count, 6.0, 0.25, 0.1).unwrap());
    assert_eq!(trace.total_samples, a.samples_consumed);
}

#[test]
fn twenty_seed_batch_on_instance_a() {
    let inst = instance_a();
    let rows = batch(&inst, &LearnParams::new(0.25, 0.1, 0), &(0..20).collect::<Vec<_>>(), 100).unwrap();
    let ok = rows.iter().filter(|r| r.success).count();
    assert!(ok as f64 >= 0.9 * 20.0);
    assert!(rows.iter().all(|r| r.regret <= 3.0 * inst.outcomes.cap()));
}

#[test]
fn single_effort_generation() {
    let cfg = GeneratorConfig { k: 3, n: 1, utility: UtilitySpec::Crra { rho: 0.7 } };
    let inst = Instance::from_file(generate_instance(&cfg, 5).unwrap()).unwrap();
    assert_eq!(inst.agent.n(), 1);
}
