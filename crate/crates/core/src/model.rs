//! Problem definitions and strategy results shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::core_math::distinguishability;
use crate::error::{unit_interval, Error, Result};

/// Tolerance on `prior_1 + prior_2 = 1`.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

/// Two pure qubit states with real non-negative overlap, sent with priors
/// `(prior_1, prior_2)` through a chain of `n_receivers` observers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationInstance {
    pub overlap_s: f64,
    pub prior_1: f64,
    pub prior_2: f64,
    pub n_receivers: usize,
}

impl DiscriminationInstance {
    pub fn new(overlap_s: f64, prior_1: f64, prior_2: f64, n_receivers: usize) -> Result<Self> {
        let inst = Self {
            overlap_s,
            prior_1,
            prior_2,
            n_receivers,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Instance with `prior_2 = 1 - prior_1`.
    pub fn with_prior(overlap_s: f64, prior_1: f64, n_receivers: usize) -> Result<Self> {
        Self::new(overlap_s, prior_1, 1.0 - prior_1, n_receivers)
    }

    pub fn equal_priors(overlap_s: f64, n_receivers: usize) -> Result<Self> {
        Self::new(overlap_s, 0.5, 0.5, n_receivers)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !in_unit(self.overlap_s) {
            return Err(Error::InvalidInstance(format!(
                "overlap {} is not in [0, 1]",
                self.overlap_s
            )));
        }
        if !in_unit(self.prior_1) || !in_unit(self.prior_2) {
            return Err(Error::InvalidInstance(format!(
                "priors ({}, {}) are not probabilities",
                self.prior_1, self.prior_2
            )));
        }
        if (self.prior_1 + self.prior_2 - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::InvalidInstance(format!(
                "priors ({}, {}) do not sum to 1",
                self.prior_1, self.prior_2
            )));
        }
        if self.n_receivers == 0 {
            return Err(Error::InvalidInstance(
                "at least one receiver is required".into(),
            ));
        }
        Ok(())
    }

    /// Overlap each receiver faces when the budget is split evenly, `s^(1/N)`.
    pub fn effective_overlap(&self) -> f64 {
        self.overlap_s.powf(1.0 / self.n_receivers as f64)
    }

    /// Same instance with the two state labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            prior_1: self.prior_2,
            prior_2: self.prior_1,
            ..*self
        }
    }

    /// `η₁·P₁ + η₂·P₂` for per-state chain success probabilities.
    pub fn weighted(&self, chain_p1: f64, chain_p2: f64) -> f64 {
        self.prior_1 * chain_p1 + self.prior_2 * chain_p2
    }
}

/// A receiver's conditional success probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessPair {
    pub p1: f64,
    pub p2: f64,
}

impl SuccessPair {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        Ok(Self {
            p1: unit_interval("p1", p1)?,
            p2: unit_interval("p2", p2)?,
        })
    }

    pub fn swapped(self) -> Self {
        Self {
            p1: self.p2,
            p2: self.p1,
        }
    }

    pub fn distinguishability(&self) -> f64 {
        // components are validated on construction
        distinguishability(self.p1, self.p2).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    JbgOptimal,
    JbgSymmetricAnalytic,
    IndividualGreedy,
    Boundary,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::JbgOptimal,
        Strategy::JbgSymmetricAnalytic,
        Strategy::IndividualGreedy,
        Strategy::Boundary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::JbgOptimal => "JBG_OPTIMAL",
            Strategy::JbgSymmetricAnalytic => "JBG_SYMMETRIC_ANALYTIC",
            Strategy::IndividualGreedy => "INDIVIDUAL_GREEDY",
            Strategy::Boundary => "BOUNDARY",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| {
                format!(
                    "unknown strategy `{s}` (expected one of JBG_OPTIMAL, JBG_SYMMETRIC_ANALYTIC, INDIVIDUAL_GREEDY, BOUNDARY)"
                )
            })
    }
}

/// Per-receiver success pairs, the chain of overlaps `t₁ … t_N` seen by each
/// receiver, and the resulting joint success probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub stages: Vec<SuccessPair>,
    pub overlaps: Vec<f64>,
    pub joint_success: f64,
    pub strategy: Strategy,
}

/// Tolerance used by [`StrategyResult::validate`] on the chained overlap constraints.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

impl StrategyResult {
    /// Every receiver uses `pair` and faces the overlap `s^((N-k+1)/N)`.
    pub fn uniform(inst: &DiscriminationInstance, pair: SuccessPair, strategy: Strategy) -> Self {
        let n = inst.n_receivers;
        let stages = vec![pair; n];
        let overlaps = uniform_overlaps(inst.overlap_s, n);
        let joint_success = joint_success(inst, &stages);
        Self {
            stages,
            overlaps,
            joint_success,
            strategy,
        }
    }

    /// Recomputes `η₁·∏p1 + η₂·∏p2` from the stored stages.
    pub fn recomputed_joint(&self, inst: &DiscriminationInstance) -> f64 {
        joint_success(inst, &self.stages)
    }

    /// Mean per-stage success `η₁p₁ + η₂p₂` of receiver `k`.
    pub fn stage_average(&self, inst: &DiscriminationInstance, k: usize) -> f64 {
        let pair = self.stages[k];
        inst.weighted(pair.p1, pair.p2)
    }

    /// Checks the structural invariants against `inst`.
    pub fn validate(&self, inst: &DiscriminationInstance) -> Result<()> {
        let n = inst.n_receivers;
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.stages.len() != n || self.overlaps.len() != n {
            return bad(format!(
                "expected {n} stages and overlaps, got {} and {}",
                self.stages.len(),
                self.overlaps.len()
            ));
        }
        for pair in &self.stages {
            SuccessPair::new(pair.p1, pair.p2)?;
        }
        if (self.overlaps[0] - inst.overlap_s).abs() > CHAIN_TOLERANCE {
            return bad(format!(
                "first overlap {} differs from s = {}",
                self.overlaps[0], inst.overlap_s
            ));
        }
        let recomputed = self.recomputed_joint(inst);
        if (recomputed - self.joint_success).abs() > 1e-12 {
            return bad(format!(
                "joint success {} does not match recomputed value {recomputed}",
                self.joint_success
            ));
        }
        for (k, pair) in self.stages.iter().enumerate() {
            let t_in = self.overlaps[k];
            let t_out = self.overlaps.get(k + 1).copied().unwrap_or(1.0);
            let lhs = pair.distinguishability() * t_out;
            if (lhs - t_in).abs() > CHAIN_TOLERANCE {
                return Err(Error::InfeasibleStage {
                    stage: Some(k),
                    detail: format!("D(p1, p2) * t_out = {lhs}, but t_in = {t_in}"),
                });
            }
        }
        if self.strategy == Strategy::JbgOptimal
            && self
                .overlaps
                .windows(2)
                .any(|w| w[1] < w[0] - CHAIN_TOLERANCE)
        {
            return bad("overlaps decrease along the chain".into());
        }
        Ok(())
    }
}

/// `η₁·∏p1ₙ + η₂·∏p2ₙ`.
pub fn joint_success(inst: &DiscriminationInstance, stages: &[SuccessPair]) -> f64 {
    let chain_p1: f64 = stages.iter().map(|s| s.p1).product();
    let chain_p2: f64 = stages.iter().map(|s| s.p2).product();
    inst.weighted(chain_p1, chain_p2)
}

/// `t_k = s^((N-k+1)/N)` for `k = 1..=N`.
pub fn uniform_overlaps(s: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| s.powf((n - k + 1) as f64 / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_validation() {
        assert!(DiscriminationInstance::new(0.5, 0.5, 0.5, 2).is_ok());
        assert!(DiscriminationInstance::new(1.2, 0.5, 0.5, 2).is_err());
        assert!(DiscriminationInstance::new(-0.1, 0.5, 0.5, 2).is_err());
        assert!(DiscriminationInstance::new(0.5, 0.6, 0.5, 2).is_err());
        assert!(DiscriminationInstance::new(0.5, 0.5, 0.5, 0).is_err());
        assert!(DiscriminationInstance::new(f64::NAN, 0.5, 0.5, 1).is_err());
        assert!(DiscriminationInstance::with_prior(0.3, 0.3, 1).is_ok());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.as_str()));
        }
        assert_eq!(
            "individual-greedy".parse::<Strategy>().unwrap(),
            Strategy::IndividualGreedy
        );
        assert!("HELSTROM".parse::<Strategy>().is_err());
    }

    #[test]
    fn uniform_overlap_chain() {
        let t = uniform_overlaps(0.25, 2);
        assert_eq!(t[0], 0.25);
        assert!((t[1] - 0.5).abs() < 1e-15);
        assert_eq!(uniform_overlaps(0.4, 1), vec![0.4]);
    }

    #[test]
    fn validate_rejects_tampered_joint() {
        let inst = DiscriminationInstance::equal_priors(0.0, 2).unwrap();
        let pair = SuccessPair::new(1.0, 1.0).unwrap();
        let mut r = StrategyResult::uniform(&inst, pair, Strategy::JbgOptimal);
        assert!(r.validate(&inst).is_ok());
        r.joint_success = 0.9;
        assert!(r.validate(&inst).is_err());
    }
}
