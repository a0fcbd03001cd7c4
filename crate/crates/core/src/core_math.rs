//! Closed-form quantities of the joint best guess problem.
//!
//! A receiver whose input pair has overlap `t_in` and who forwards pure states
//! with overlap `t_out` can reach success probabilities `(p1, p2)` only if
//! `D(p1, p2) · t_out = t_in`, where `D` is [`distinguishability`]. When the
//! overlap budget is split evenly over `N` receivers every stage sees the
//! effective overlap `s^(1/N)`.
//!
//! Angles follow the parametrization `p1 = cos²θ`, `s_eff = sin φ`, under
//! which the constraint-saturating partner probability is `p2 = cos²(φ - θ)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{unit_interval, Error, Result};
use crate::model::{DiscriminationInstance, Strategy, StrategyResult, SuccessPair};

/// `√(p1(1-p2)) + √(p2(1-p1))`, the ratio `t_in / t_out` a measurement with
/// conditional successes `(p1, p2)` imposes on a pure-output stage.
pub fn distinguishability(p1: f64, p2: f64) -> Result<f64> {
    let p1 = unit_interval("p1", p1)?;
    let p2 = unit_interval("p2", p2)?;
    Ok(distinguishability_unchecked(p1, p2))
}

pub(crate) fn distinguishability_unchecked(p1: f64, p2: f64) -> f64 {
    ((p1 * (1.0 - p2)).sqrt() + (p2 * (1.0 - p1)).sqrt()).min(1.0)
}

/// `s^(2/N)`, computed as `s²` when `N = 1` so single-receiver results agree
/// bit-for-bit with the textbook Helstrom expressions.
pub(crate) fn effective_overlap_sq(s: f64, n: usize) -> f64 {
    if n == 1 {
        s * s
    } else {
        s.powf(2.0 / n as f64)
    }
}

/// Success probability of the symmetric Helstrom measurement on overlap `s_eff`.
pub(crate) fn symmetric_helstrom(s_eff_sq: f64) -> f64 {
    0.5 * (1.0 + (1.0 - s_eff_sq).max(0.0).sqrt())
}

/// Helstrom optimum for unnormalized weights `w1, w2` and overlap `t`.
pub(crate) fn helstrom_value(w1: f64, w2: f64, t: f64) -> f64 {
    let total = w1 + w2;
    0.5 * (total + (total * total - 4.0 * w1 * w2 * t * t).max(0.0).sqrt())
}

/// Symmetric analytic strategy for equal priors:
/// every receiver has `p1 = p2 = ½(1 + √(1 - s^(2/N)))`.
///
/// The formula is evaluated for any `s`; it is the global optimum only below
/// the threshold located by [`crate::optimizer::find_sb`].
pub fn equal_prior_jbg(s: f64, n: usize) -> Result<StrategyResult> {
    symmetric_analytic(&DiscriminationInstance::equal_priors(s, n)?)
}

/// The symmetric strategy applied to an instance with arbitrary priors. The
/// joint success is `p^N` whatever the priors.
pub fn symmetric_analytic(inst: &DiscriminationInstance) -> Result<StrategyResult> {
    inst.validate()?;
    let p = symmetric_helstrom(effective_overlap_sq(inst.overlap_s, inst.n_receivers));
    let pair = SuccessPair::new(p, p)?;
    Ok(StrategyResult::uniform(
        inst,
        pair,
        Strategy::JbgSymmetricAnalytic,
    ))
}

/// Larger partner probability `p2 = (s_eff√(1-p1) + √p1·√(1-s_eff²))²`.
///
/// For `p1 ≥ 1 - s_eff²` the pair saturates `D(p1, p2) = s_eff`; below that
/// point it saturates the opposite-sign combination
/// `|√(p1(1-p2)) - √(p2(1-p1))| = s_eff`.
pub fn p2_from_p1(p1: f64, s_eff: f64) -> Result<f64> {
    let p1 = unit_interval("p1", p1)?;
    let s_eff = unit_interval("s_eff", s_eff)?;
    Ok(p2_branch(p1, s_eff, 1.0))
}

/// The smaller partner probability `(s_eff√(1-p1) - √p1·√(1-s_eff²))²`.
#[cfg(test)]
pub(crate) fn p2_minus_branch(p1: f64, s_eff: f64) -> f64 {
    p2_branch(p1, s_eff, -1.0)
}

fn p2_branch(p1: f64, s_eff: f64, sign: f64) -> f64 {
    let amp = s_eff * (1.0 - p1).sqrt() + sign * p1.sqrt() * (1.0 - s_eff * s_eff).sqrt();
    (amp * amp).min(1.0)
}

/// Stationarity condition of the reduced objective `η₁p1^N + η₂p2(p1)^N`,
/// written in terms of `p1`:
///
/// `η₁p1^(N-1)√(p1(1-p1)) + η₂c^(2N-1)(√((1-p1)(1-s_eff²)) - s_eff√p1)`
///
/// with `c = s_eff√(1-p1) + √p1√(1-s_eff²)`. It equals `-1/(2N)` times the
/// derivative of the objective with respect to `θ = arccos√p1`.
pub fn stationarity_residual(p1: f64, inst: &DiscriminationInstance) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::Domain {
            name: "p1",
            value: p1,
            domain: "(0, 1)",
        });
    }
    inst.validate()?;
    let n = inst.n_receivers as i32;
    let s_eff = inst.effective_overlap();
    let c_sq = 1.0 - effective_overlap_sq(inst.overlap_s, inst.n_receivers);
    let c = s_eff * (1.0 - p1).sqrt() + p1.sqrt() * c_sq.sqrt();
    let own = inst.prior_1 * p1.powi(n - 1) * (p1 * (1.0 - p1)).sqrt();
    let partner =
        inst.prior_2 * c.powi(2 * n - 1) * (((1.0 - p1) * c_sq).sqrt() - s_eff * p1.sqrt());
    Ok(own + partner)
}

/// Reduced objective `g(θ) = η₁cos^(2N)θ + η₂cos^(2N)(φ - θ)` on `θ ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReducedObjective {
    prior_1: f64,
    prior_2: f64,
    n: i32,
    /// `φ = arcsin(s^(1/N))`
    phi: f64,
}

impl ReducedObjective {
    pub(crate) fn new(inst: &DiscriminationInstance) -> Self {
        Self {
            prior_1: inst.prior_1,
            prior_2: inst.prior_2,
            n: inst.n_receivers as i32,
            phi: inst.effective_overlap().asin(),
        }
    }

    pub(crate) fn pair(&self, theta: f64) -> (f64, f64) {
        let p1 = theta.cos().powi(2);
        let p2 = (self.phi - theta).cos().powi(2);
        (p1.min(1.0), p2.min(1.0))
    }

    pub(crate) fn value(&self, theta: f64) -> f64 {
        let (p1, p2) = self.pair(theta);
        self.prior_1 * p1.powi(self.n) + self.prior_2 * p2.powi(self.n)
    }

    /// `-g'(θ) / 2N`; same sign convention as [`stationarity_residual`].
    pub(crate) fn residual(&self, theta: f64) -> f64 {
        let n = self.n;
        let d = self.phi - theta;
        self.prior_1 * theta.cos().powi(2 * n - 1) * theta.sin()
            - self.prior_2 * d.cos().powi(2 * n - 1) * d.sin()
    }

    pub(crate) const LOWER: f64 = 0.0;
    pub(crate) const UPPER: f64 = FRAC_PI_2;
}

/// Every receiver independently maximizes its own average success on the
/// effective overlap `s^(1/N)`:
/// `p_i = ½(1 + (1 - 2η_j s^(2/N)) / √(1 - 4η₁η₂s^(2/N)))`, `j ≠ i`.
pub fn individual_greedy(inst: &DiscriminationInstance) -> Result<StrategyResult> {
    inst.validate()?;
    let x = effective_overlap_sq(inst.overlap_s, inst.n_receivers);
    let radicand = 1.0 - 4.0 * inst.prior_1 * inst.prior_2 * x;
    let pair = if radicand <= 0.0 {
        // s = 1 with equal priors: 0/0, defined by continuity
        SuccessPair::new(0.5, 0.5)?
    } else {
        let d = radicand.sqrt();
        let p =
            |other_prior: f64| (0.5 * (1.0 + (1.0 - 2.0 * other_prior * x) / d)).clamp(0.0, 1.0);
        SuccessPair::new(p(inst.prior_2), p(inst.prior_1))?
    };
    Ok(StrategyResult::uniform(
        inst,
        pair,
        Strategy::IndividualGreedy,
    ))
}

/// Better of the two one-sided strategies: `p2 = 1, p1 = 1 - s^(2/N)` or its
/// mirror `p1 = 1, p2 = 1 - s^(2/N)`. Ties keep the first.
pub fn boundary_solution(inst: &DiscriminationInstance) -> Result<StrategyResult> {
    inst.validate()?;
    let other = 1.0 - effective_overlap_sq(inst.overlap_s, inst.n_receivers);
    let favour_2 = StrategyResult::uniform(inst, SuccessPair::new(other, 1.0)?, Strategy::Boundary);
    let favour_1 = StrategyResult::uniform(inst, SuccessPair::new(1.0, other)?, Strategy::Boundary);
    Ok(if favour_1.joint_success > favour_2.joint_success {
        favour_1
    } else {
        favour_2
    })
}
