//! Value types for outcomes, contracts and agents, and the validators that
//! turn the modelling assumptions into checkable predicates.
//!
//! Outcomes are stored 0-based internally. Anything reported back to a user
//! (violations, effort indices) is 1-based, with effort 0 reserved for the
//! agent rejecting the contract.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};

/// Absolute tolerance for probability normalization and tail-sum dominance.
pub const PROB_TOL: f64 = 1e-12;

/// Tolerance used by [`validate_bra`] when comparing `x * u'(x)` on a grid.
pub const BRA_TOL: f64 = 1e-10;

/// The principal's side of the problem: ordered outcome values and the wage floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeModel {
    values: Vec<f64>,
    min_wage: f64,
}

impl OutcomeModel {
    pub fn new(values: Vec<f64>, min_wage: f64) -> Result<Self> {
        let violations = outcome_violations(&values, min_wage);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(Self { values, min_wage })
    }

    /// Number of outcomes.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the highest outcome, the cap `H`.
    pub fn cap(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min_wage(&self) -> f64 {
        self.min_wage
    }

    /// `value(i + 1) - value(i)` for 0-based `i < k - 1`.
    pub fn increment(&self, i: usize) -> f64 {
        self.values[i + 1] - self.values[i]
    }
}

fn outcome_violations(values: &[f64], min_wage: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    if values.is_empty() {
        out.push(Violation::NoOutcomes);
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::NonPositiveValue { outcome: i + 1, value: v });
        }
        if i > 0 && !(v > values[i - 1]) {
            out.push(Violation::ValuesNotIncreasing { outcome: i + 1 });
        }
    }
    if !(min_wage > 0.0 && min_wage.is_finite()) {
        out.push(Violation::NonPositiveMinWage { w0: min_wage });
    }
    out
}

/// A wage vector, one strictly positive payment per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Contract {
    wages: Vec<f64>,
}

impl Contract {
    pub fn new(wages: Vec<f64>) -> Result<Self> {
        let bad: Vec<_> = wages
            .iter()
            .enumerate()
            .filter(|(_, w)| !(**w > 0.0 && w.is_finite()))
            .map(|(i, &wage)| Violation::NonPositiveWage { outcome: i + 1, wage })
            .collect();
        if wages.is_empty() {
            return Err(Error::Invalid(vec![Violation::NoOutcomes]));
        }
        if !bad.is_empty() {
            return Err(Error::Invalid(bad));
        }
        Ok(Self { wages })
    }

    pub fn constant(wage: f64, k: usize) -> Result<Self> {
        Self::new(vec![wage; k])
    }

    pub fn wages(&self) -> &[f64] {
        &self.wages
    }

    pub fn len(&self) -> usize {
        self.wages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wages.is_empty()
    }

    pub(crate) fn check_len(&self, k: usize) -> Result<()> {
        if self.wages.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: self.wages.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Contract {
    type Error = Error;

    fn try_from(wages: Vec<f64>) -> Result<Self> {
        Self::new(wages)
    }
}

impl From<Contract> for Vec<f64> {
    fn from(c: Contract) -> Self {
        c.wages
    }
}

/// Parametric utility-of-wage families. Both satisfy bounded risk aversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum UtilitySpec {
    /// `u(x) = x^rho`, `rho` in (0, 1]. `rho = 1` is risk neutral.
    Crra { rho: f64 },
    /// `u(x) = ln x`.
    Log,
}

impl UtilitySpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Crra { rho: 1.0 } => x,
            UtilitySpec::Crra { rho } => x.powf(rho),
            UtilitySpec::Log => x.ln(),
        }
    }

    /// First derivative `u'(x)`.
    pub fn marginal(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Crra { rho } => rho * x.powf(rho - 1.0),
            UtilitySpec::Log => 1.0 / x,
        }
    }

    pub fn is_risk_neutral(&self) -> bool {
        matches!(self, UtilitySpec::Crra { rho } if *rho == 1.0)
    }

    fn violations(&self) -> Vec<Violation> {
        match *self {
            UtilitySpec::Crra { rho } if !(rho > 0.0 && rho <= 1.0) => {
                vec![Violation::BadUtility { reason: format!("crra rho = {rho} outside (0, 1]") }]
            }
            _ => Vec::new(),
        }
    }
}

/// One positive effort level: its cost and the outcome distribution it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effort {
    pub cost: f64,
    pub dist: Vec<f64>,
}

/// The hidden agent. Effort levels are ordered from lowest to highest; the
/// reject level is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentInstance {
    utility: UtilitySpec,
    efforts: Vec<Effort>,
}

impl AgentInstance {
    /// Validates normalization, costs, utility parameters and the FOSD chain.
    pub fn new(utility: UtilitySpec, efforts: Vec<Effort>) -> Result<Self> {
        let violations = agent_violations(&utility, &efforts);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(Self { utility, efforts })
    }

    pub fn utility(&self) -> &UtilitySpec {
        &self.utility
    }

    pub fn efforts(&self) -> &[Effort] {
        &self.efforts
    }

    /// Number of positive effort levels.
    pub fn n(&self) -> usize {
        self.efforts.len()
    }

    /// Number of outcomes.
    pub fn k(&self) -> usize {
        self.efforts[0].dist.len()
    }

    /// Distribution of effort `e` in `1..=n`.
    pub fn dist(&self, e: usize) -> &[f64] {
        &self.efforts[e - 1].dist
    }

    /// Cost of effort `e` in `1..=n`.
    pub fn cost(&self, e: usize) -> f64 {
        self.efforts[e - 1].cost
    }
}

fn agent_violations(utility: &UtilitySpec, efforts: &[Effort]) -> Vec<Violation> {
    let mut out = utility.violations();
    let Some(first) = efforts.first() else {
        out.push(Violation::NoEfforts);
        return out;
    };
    let k = first.dist.len();
    if k == 0 {
        out.push(Violation::NoOutcomes);
        return out;
    }
    for (idx, eff) in efforts.iter().enumerate() {
        let effort = idx + 1;
        if !(eff.cost >= 0.0 && eff.cost.is_finite()) {
            out.push(Violation::NegativeCost { effort, cost: eff.cost });
        }
        if eff.dist.len() != k {
            out.push(Violation::DistLength { effort, expected: k, got: eff.dist.len() });
            continue;
        }
        for (j, &p) in eff.dist.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                out.push(Violation::NegativeProbability { effort, outcome: j + 1, p });
            }
        }
        let sum: f64 = eff.dist.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            out.push(Violation::NotNormalized { effort, sum });
        }
    }
    // The dominance check only makes sense once every distribution is well formed.
    if out.is_empty() {
        if let Err(v) = validate_fosd(efforts) {
            out.push(v);
        }
    }
    out
}

/// Checks that every higher effort first-order stochastically dominates every
/// lower one. Returns the first violating `(higher, lower, outcome)` triple,
/// scanning higher efforts, then lower efforts, then outcomes in increasing
/// order.
pub fn validate_fosd(efforts: &[Effort]) -> std::result::Result<(), Violation> {
    let tails: Vec<Vec<f64>> = efforts.iter().map(|e| tail_sums(&e.dist)).collect();
    for hi in 1..tails.len() {
        for lo in 0..hi {
            if let Some(j) = tails[hi].iter().zip(&tails[lo]).position(|(h, l)| *h < l - PROB_TOL) {
                return Err(Violation::Fosd { higher: hi + 1, lower: lo + 1, outcome: j + 1 });
            }
        }
    }
    Ok(())
}

/// `tail[j] = sum_{i >= j} dist[i]`.
pub fn tail_sums(dist: &[f64]) -> Vec<f64> {
    let mut tails = vec![0.0; dist.len()];
    let mut acc = 0.0;
    for j in (0..dist.len()).rev() {
        acc += dist[j];
        tails[j] = acc;
    }
    tails
}

/// Probes bounded risk aversion: `x * u'(x)` must be nondecreasing along a
/// sorted, strictly positive grid. An unsorted or non-positive grid fails.
pub fn validate_bra(utility: &UtilitySpec, probe_grid: &[f64]) -> bool {
    if probe_grid.iter().any(|&x| !(x > 0.0)) || probe_grid.windows(2).any(|p| p[1] < p[0]) {
        return false;
    }
    let elasticity: Vec<f64> = probe_grid.iter().map(|&x| x * utility.marginal(x)).collect();
    elasticity.windows(2).all(|p| p[1] >= p[0] - BRA_TOL)
}

/// For a nondecreasing sequence `a`, checks `E_e[a] >= E_e'[a]` for every
/// pair of efforts `e > e'` (the expectation form of FOSD).
pub fn dominance_expectation_check(agent: &AgentInstance, a: &[f64]) -> Result<bool> {
    if a.len() != agent.k() {
        return Err(Error::LengthMismatch { expected: agent.k(), got: a.len() });
    }
    if a.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::NonMonotoneSequence);
    }
    let means: Vec<f64> = agent.efforts().iter().map(|e| dot(&e.dist, a)).collect();
    Ok((1..means.len()).all(|hi| (0..hi).all(|lo| means[hi] >= means[lo] - PROB_TOL)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-disk instance: the JSON layout read by the loader and written by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub pi: Vec<f64>,
    pub w0: f64,
    pub utility: UtilitySpec,
    pub efforts: Vec<Effort>,
}

/// A validated instance: public outcome model plus the hidden agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub outcomes: OutcomeModel,
    pub agent: AgentInstance,
    hash: String,
}

impl Instance {
    /// Runs every validator and collects all violations into one report.
    pub fn from_file(file: InstanceFile) -> Result<Self> {
        let mut violations = outcome_violations(&file.pi, file.w0);
        violations.extend(agent_violations(&file.utility, &file.efforts));
        if let Some(e) = file.efforts.iter().position(|e| e.dist.len() != file.pi.len()) {
            let got = file.efforts[e].dist.len();
            let v = Violation::DistLength { effort: e + 1, expected: file.pi.len(), got };
            if !violations.contains(&v) {
                violations.push(v);
            }
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        let hash = content_hash(&file)?;
        Ok(Self {
            outcomes: OutcomeModel { values: file.pi, min_wage: file.w0 },
            agent: AgentInstance { utility: file.utility, efforts: file.efforts },
            hash,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            pi: self.outcomes.values.clone(),
            w0: self.outcomes.min_wage,
            utility: self.agent.utility,
            efforts: self.agent.efforts.clone(),
        }
    }

    /// SHA-256 of the canonical compact JSON encoding, hex encoded.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }
}

fn content_hash(file: &InstanceFile) -> Result<String> {
    let canonical = serde_json::to_vec(file)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn effort(cost: f64, dist: &[f64]) -> Effort {
        Effort { cost, dist: dist.to_vec() }
    }

    #[test]
    fn fosd_examples() {
        assert!(validate_fosd(&[effort(0.0, &[0.7, 0.3]), effort(0.1, &[0.4, 0.6])]).is_ok());
        assert_eq!(
            validate_fosd(&[effort(0.0, &[0.4, 0.6]), effort(0.1, &[0.7, 0.3])]),
            Err(Violation::Fosd { higher: 2, lower: 1, outcome: 2 })
        );
        assert!(validate_fosd(&[effort(0.0, &[0.2, 0.8])]).is_ok());
    }

    #[test]
    fn fosd_checks_non_adjacent_pairs() {
        let efforts = [effort(0.0, &[0.5, 0.3, 0.2]), effort(0.0, &[0.5, 0.3, 0.2]), effort(0.0, &[0.4, 0.5, 0.1])];
        assert_eq!(validate_fosd(&efforts), Err(Violation::Fosd { higher: 3, lower: 1, outcome: 3 }));
    }

    #[test]
    fn bra_examples() {
        assert!(validate_bra(&UtilitySpec::Crra { rho: 0.5 }, &[0.1, 1.0, 10.0]));
        assert!(validate_bra(&UtilitySpec::Log, &[0.01, 0.5, 3.0, 1e4]));
        assert!(validate_bra(&UtilitySpec::Crra { rho: 1.0 }, &[0.1, 0.2, 7.0]));
        assert!(!validate_bra(&UtilitySpec::Log, &[1.0, 0.5]));
        assert!(!validate_bra(&UtilitySpec::Log, &[0.0, 0.5]));
    }

    #[test]
    fn crra_elasticity_closed_form() {
        let u = UtilitySpec::Crra { rho: 0.5 };
        let got: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&x| x * u.marginal(x)).collect();
        let want = [0.5 * 0.1f64.sqrt(), 0.5, 0.5 * 10f64.sqrt()];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn utilities_strictly_increasing() {
        let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        for u in [UtilitySpec::Crra { rho: 0.3 }, UtilitySpec::Crra { rho: 1.0 }, UtilitySpec::Log] {
            assert!(grid.windows(2).all(|p| u.eval(p[1]) > u.eval(p[0])));
        }
    }

    #[test]
    fn dominance_expectation_examples() {
        let agent =
            AgentInstance::new(UtilitySpec::Log, vec![effort(0.0, &[0.7, 0.3]), effort(0.1, &[0.4, 0.6])]).unwrap();
        assert!(dominance_expectation_check(&agent, &[0.0, 1.0]).unwrap());
        assert!(dominance_expectation_check(&agent, &[2.5, 2.5]).unwrap());
        assert!(matches!(dominance_expectation_check(&agent, &[1.0, 0.0]), Err(Error::NonMonotoneSequence)));
    }

    #[test]
    fn outcome_model_rejects_bad_values() {
        assert!(OutcomeModel::new(vec![1.0, 2.0], 0.1).is_ok());
        let Err(Error::Invalid(v)) = OutcomeModel::new(vec![1.0, 1.0], 0.0) else { panic!() };
        assert!(v.contains(&Violation::ValuesNotIncreasing { outcome: 2 }));
        assert!(v.contains(&Violation::NonPositiveMinWage { w0: 0.0 }));
        assert!(OutcomeModel::new(vec![0.0, 1.0], 0.1).is_err());
        assert!(OutcomeModel::new(vec![], 0.1).is_err());
    }

    #[test]
    fn contract_rejects_non_positive() {
        assert!(Contract::new(vec![0.1, 0.2]).is_ok());
        assert!(Contract::new(vec![0.1, 0.0]).is_err());
        assert!(Contract::new(vec![f64::NAN]).is_err());
        assert!(Contract::new(vec![]).is_err());
        assert!(serde_json::from_str::<Contract>("[0.5, -1.0]").is_err());
    }

    #[test]
    fn agent_rejects_unnormalized_and_non_dominating() {
        let err = AgentInstance::new(UtilitySpec::Log, vec![effort(0.0, &[0.5, 0.6])]).unwrap_err();
        assert!(matches!(err, Error::Invalid(ref v) if matches!(v[0], Violation::NotNormalized { effort: 1, .. })));
        let err = AgentInstance::new(UtilitySpec::Crra { rho: 1.5 }, vec![effort(-1.0, &[0.5, 0.5])]).unwrap_err();
        let Error::Invalid(v) = err else { panic!() };
        assert_eq!(v.len(), 2);
        assert!(AgentInstance::new(UtilitySpec::Log, vec![]).is_err());
    }

    #[test]
    fn instance_loader_reports_every_violation() {
        let text = r#"{"pi":[2.0,1.0],"w0":0.1,"utility":{"family":"crra","rho":0.5},
            "efforts":[{"cost":0.0,"dist":[0.4,0.6]},{"cost":0.1,"dist":[0.7,0.3]}]}"#;
        let Err(Error::Invalid(v)) = Instance::from_json(text) else { panic!() };
        assert_eq!(
            v,
            vec![Violation::ValuesNotIncreasing { outcome: 2 }, Violation::Fosd { higher: 2, lower: 1, outcome: 2 }]
        );
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json[1]["kind"], "fosd");
        assert_eq!(json[1]["higher"], 2);
    }

    #[test]
    fn instance_round_trip_and_hash() {
        let text = r#"{"pi":[1.0,2.0],"w0":0.1,"utility":{"family":"log"},
            "efforts":[{"cost":0.05,"dist":[0.7,0.3]}]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.outcomes.cap(), 2.0);
        assert_eq!(inst.agent.n(), 1);
        let again = Instance::from_file(inst.to_file()).unwrap();
        assert_eq!(inst.content_hash(), again.content_hash());
        assert_eq!(inst.content_hash().len(), 64);
        let mut other = inst.to_file();
        other.w0 = 0.2;
        assert_ne!(Instance::from_file(other).unwrap().content_hash(), inst.content_hash());
    }

    #[test]
    fn instance_rejects_mismatched_dist_length() {
        let text = r#"{"pi":[1.0,2.0,3.0],"w0":0.1,"utility":{"family":"log"},
            "efforts":[{"cost":0.05,"dist":[0.7,0.3]}]}"#;
        let Err(Error::Invalid(v)) = Instance::from_json(text) else { panic!() };
        assert_eq!(v, vec![Violation::DistLength { effort: 1, expected: 3, got: 2 }]);
    }
}
