//! Global optimization of the joint best guess strategy.
//!
//! [`optimize_reduced`] works on the one-dimensional problem in which every
//! receiver faces the effective overlap `s^(1/N)`. [`grid_search_oracle`] and
//! [`optimize_full_chain`] are brute-force searches used to check it; the
//! latter searches the unreduced chain, with free intermediate overlaps and
//! per-receiver probabilities, and so tests the reduction independently.

use serde::{Deserialize, Serialize};

use crate::core_math::{
    distinguishability_unchecked, effective_overlap_sq, equal_prior_jbg, helstrom_value,
    p2_from_p1, ReducedObjective,
};
use crate::error::{Error, Result};
use crate::model::{DiscriminationInstance, Strategy, StrategyResult, SuccessPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of points in the coarse scan over `θ ∈ [0, π/2]`.
    pub scan_points: usize,
    /// Bracket width in `θ` at which root refinement stops.
    pub refine_tolerance: f64,
    /// Candidates within this distance of the best joint success are tied.
    pub candidate_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            scan_points: 2001,
            refine_tolerance: 1e-12,
            candidate_tolerance: 1e-10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scan_points < 3 {
            return Err(Error::InvalidConfig(format!(
                "scan_points must be at least 3, got {}",
                self.scan_points
            )));
        }
        if !(self.refine_tolerance > 0.0 && self.candidate_tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Global maximum of the reduced joint success over `θ ∈ [0, π/2]`.
///
/// Candidates are the interval endpoints, the one-sided point `θ = φ`, every
/// stationary point bracketed by a sign change of the residual on the coarse
/// scan, and a golden-section refinement of the best scan point. Candidates
/// within `candidate_tolerance` of the best are tied, and the tie goes to the
/// smallest `|p1 - p2|`, then to the larger `p1`.
pub fn optimize_reduced(
    inst: &DiscriminationInstance,
    cfg: &OptimizerConfig,
) -> Result<StrategyResult> {
    inst.validate()?;
    cfg.validate()?;
    // Solve with prior_1 >= prior_2 so that relabelled instances follow the
    // same arithmetic and give mirrored results.
    if inst.prior_1 < inst.prior_2 {
        let mirrored = inst.swapped();
        let best = reduced_optimum(&mirrored, cfg)?.swapped();
        return Ok(StrategyResult::uniform(inst, best, Strategy::JbgOptimal));
    }
    let best = reduced_optimum(inst, cfg)?;
    Ok(StrategyResult::uniform(inst, best, Strategy::JbgOptimal))
}

fn reduced_optimum(inst: &DiscriminationInstance, cfg: &OptimizerConfig) -> Result<SuccessPair> {
    let g = ReducedObjective::new(inst);
    let s_eff = inst.effective_overlap();
    let (lo, hi) = (ReducedObjective::LOWER, ReducedObjective::UPPER);
    let m = cfg.scan_points;
    let grid: Vec<f64> = (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect();
    let residuals: Vec<f64> = grid.iter().map(|&t| g.residual(t)).collect();
    let values: Vec<f64> = grid.iter().map(|&t| g.value(t)).collect();

    let one_sided = s_eff.asin();
    let mut roots = Vec::new();
    for i in 0..m - 1 {
        let (a, b) = (residuals[i], residuals[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            roots.push(bisect_root(
                &g,
                grid[i],
                grid[i + 1],
                a,
                cfg.refine_tolerance,
            ));
        }
    }
    let best_index = argmax(&values);
    let left = grid[best_index.saturating_sub(1)];
    let right = grid[(best_index + 1).min(m - 1)];
    let golden = golden_max(&g, left, right, cfg.refine_tolerance);
    // Golden section only resolves θ to about √ε; a bisected root in the
    // same cell is the same maximum located more precisely.
    let step = (hi - lo) / (m - 1) as f64;
    let mut thetas = vec![lo, hi, one_sided];
    if !roots.iter().any(|r| (r - golden).abs() <= step) {
        thetas.push(golden);
    }
    thetas.extend(roots);

    let mut candidates = Vec::with_capacity(thetas.len());
    let one_sided_p1 = 1.0 - effective_overlap_sq(inst.overlap_s, inst.n_receivers);
    for theta in thetas {
        let pair = if theta == one_sided {
            SuccessPair::new(one_sided_p1, 1.0)?
        } else {
            let p1 = theta.cos().powi(2).min(1.0);
            SuccessPair::new(p1, p2_from_p1(p1, s_eff)?)?
        };
        let (p1, p2) = (pair.p1, pair.p2);
        let n = inst.n_receivers as i32;
        let joint = inst.weighted(p1.powi(n), p2.powi(n));
        candidates.push((joint, pair));
    }
    Ok(select_candidate(&candidates, cfg.candidate_tolerance))
}

fn select_candidate(candidates: &[(f64, SuccessPair)], tolerance: f64) -> SuccessPair {
    let best = candidates
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<SuccessPair> = None;
    for &(joint, pair) in candidates {
        if joint < best - tolerance {
            continue;
        }
        chosen = match chosen {
            None => Some(pair),
            Some(current) => {
                let gap_new = (pair.p1 - pair.p2).abs();
                let gap_cur = (current.p1 - current.p2).abs();
                if gap_new < gap_cur || (gap_new == gap_cur && pair.p1 > current.p1) {
                    Some(pair)
                } else {
                    Some(current)
                }
            }
        };
    }
    chosen.expect("candidate list is never empty")
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn bisect_root(g: &ReducedObjective, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = g.residual(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

fn golden_max(g: &ReducedObjective, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g.value(c), g.value(d));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g.value(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Exhaustive scan of `θ` over `resolution` evenly spaced points of `[0, π/2]`.
///
/// Deliberately shares no code with [`optimize_reduced`]: the partner
/// probability is evaluated from the angle form `cos²(φ - θ)`.
pub fn grid_search_oracle(
    inst: &DiscriminationInstance,
    resolution: usize,
) -> Result<StrategyResult> {
    inst.validate()?;
    if resolution < 10 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be at least 10, got {resolution}"
        )));
    }
    let n = inst.n_receivers as i32;
    let phi = inst.effective_overlap().asin();
    let mut best = (f64::NEG_INFINITY, 1.0, 1.0);
    for i in 0..resolution {
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (resolution - 1) as f64;
        let p1 = theta.cos().powi(2).min(1.0);
        let p2 = (phi - theta).cos().powi(2).min(1.0);
        let joint = inst.prior_1 * p1.powi(n) + inst.prior_2 * p2.powi(n);
        if joint > best.0 {
            best = (joint, p1, p2);
        }
    }
    let pair = SuccessPair::new(best.1, best.2)?;
    Ok(StrategyResult::uniform(inst, pair, Strategy::JbgOptimal))
}

/// Best point found by the unreduced brute-force search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullChainSolution {
    /// One pair per receiver, each chosen independently.
    pub stages: Vec<SuccessPair>,
    /// Overlaps `t₁ … t_N`; `t₁ = s`, the rest were searched.
    pub overlaps: Vec<f64>,
    pub joint_success: f64,
}

impl FullChainSolution {
    /// The searched overlaps `t₂ … t_N`.
    pub fn intermediate_overlaps(&self) -> &[f64] {
        &self.overlaps[1..]
    }

    /// Largest violation of `t_n / t_(n+1) = D(p1n, p2n)` (with `t_(N+1) = 1`),
    /// written multiplicatively as `|D · t_(n+1) - t_n|`.
    pub fn max_constraint_violation(&self) -> f64 {
        self.stages
            .iter()
            .enumerate()
            .map(|(k, pair)| {
                let t_out = self.overlaps.get(k + 1).copied().unwrap_or(1.0);
                (distinguishability_unchecked(pair.p1, pair.p2) * t_out - self.overlaps[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Brute-force search over every receiver's probabilities and every
/// intermediate overlap, for 2 or 3 receivers.
///
/// Each non-final receiver picks an output overlap `t_out ∈ [t_in, 1]` and an
/// angle `θ ∈ [0, φ]` with `sin φ = t_in / t_out`, both on grids of
/// `resolution` points; the final receiver performs the Helstrom measurement
/// for the accumulated weights `η_i ∏ p_i`. Cost grows as `resolution^(2(N-1))`.
pub fn optimize_full_chain(
    inst: &DiscriminationInstance,
    resolution: usize,
) -> Result<FullChainSolution> {
    inst.validate()?;
    let n = inst.n_receivers;
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedReceivers(n));
    }
    if resolution < 20 {
        return Err(Error::InvalidConfig(format!(
            "full-chain resolution must be at least 20, got {resolution}"
        )));
    }
    let mut search = ChainSearch {
        resolution,
        n,
        path: Vec::with_capacity(n),
        best_value: f64::NEG_INFINITY,
        best_path: Vec::new(),
    };
    search.descend(inst.overlap_s, inst.prior_1, inst.prior_2);

    let mut stages = Vec::with_capacity(n);
    let mut overlaps = vec![inst.overlap_s];
    for step in &search.best_path {
        stages.push(SuccessPair::new(step.p1, step.p2)?);
        overlaps.push(step.t_out);
    }
    // The final receiver's output overlap is not part of the chain.
    overlaps.pop();
    let joint_success = crate::model::joint_success(inst, &stages);
    Ok(FullChainSolution {
        stages,
        overlaps,
        joint_success,
    })
}

#[derive(Debug, Clone, Copy)]
struct ChainStep {
    p1: f64,
    p2: f64,
    t_out: f64,
}

struct ChainSearch {
    resolution: usize,
    n: usize,
    path: Vec<ChainStep>,
    best_value: f64,
    best_path: Vec<ChainStep>,
}

impl ChainSearch {
    fn descend(&mut self, t_in: f64, w1: f64, w2: f64) {
        if self.path.len() + 1 == self.n {
            let value = helstrom_value(w1, w2, t_in);
            if value > self.best_value {
                self.best_value = value;
                self.best_path.clone_from(&self.path);
                self.best_path.push(final_helstrom_step(w1, w2, t_in));
            }
            return;
        }
        let r = self.resolution;
        for i in 0..r {
            let t_out = t_in + (1.0 - t_in) * i as f64 / (r - 1) as f64;
            let ratio = if t_in == 0.0 {
                0.0
            } else {
                (t_in / t_out).min(1.0)
            };
            let phi = ratio.asin();
            for j in 0..r {
                let theta = phi * j as f64 / (r - 1) as f64;
                let p1 = theta.cos().powi(2).min(1.0);
                let p2 = (phi - theta).cos().powi(2).min(1.0);
                self.path.push(ChainStep { p1, p2, t_out });
                self.descend(t_out, w1 * p1, w2 * p2);
                self.path.pop();
            }
        }
    }
}

/// Conditional successes of the Helstrom measurement for weights `w1, w2`.
fn final_helstrom_step(w1: f64, w2: f64, t: f64) -> ChainStep {
    let total = w1 + w2;
    if total <= 0.0 {
        return ChainStep {
            p1: 0.5,
            p2: 0.5,
            t_out: 1.0,
        };
    }
    let (q1, q2) = (w1 / total, w2 / total);
    let radicand = 1.0 - 4.0 * q1 * q2 * t * t;
    let (p1, p2) = if radicand <= 0.0 {
        (0.5, 0.5)
    } else {
        let d = radicand.sqrt();
        (
            (0.5 * (1.0 + (1.0 - 2.0 * q2 * t * t) / d)).clamp(0.0, 1.0),
            (0.5 * (1.0 + (1.0 - 2.0 * q1 * t * t) / d)).clamp(0.0, 1.0),
        )
    };
    ChainStep { p1, p2, t_out: 1.0 }
}

/// Smallest overlap at which, for equal priors and `n` receivers, the global
/// optimum beats the symmetric analytic solution by more than
/// `cfg.candidate_tolerance`. Located by bisection on `[0, 1]` to `1e-6`.
pub fn find_sb(n: usize, cfg: &OptimizerConfig) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "the analytic threshold needs at least 2 receivers, got {n}"
        )));
    }
    cfg.validate()?;
    let exceeds = |s: f64| -> Result<bool> {
        let inst = DiscriminationInstance::equal_priors(s, n)?;
        let optimum = optimize_reduced(&inst, cfg)?.joint_success;
        let symmetric = equal_prior_jbg(s, n)?.joint_success;
        Ok(optimum - symmetric > cfg.candidate_tolerance)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
