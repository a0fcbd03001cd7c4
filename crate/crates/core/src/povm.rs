//! Explicit detection operators for each receiver in the chain.
//!
//! A receiver's measurement is given by two detection operators `B₁, B₂` with
//! POVM elements `Πᵢ = Bᵢ†Bᵢ`. Outcome `i` is read as the guess "state `i`
//! was sent", and the post-measurement state is `Bᵢ|ψ⟩ / ‖Bᵢ|ψ⟩‖`. The stages
//! built here forward a pure state that depends only on which state came in,
//! never on the outcome:
//!
//! ```text
//! B₁|ψ₁⟩ = √p₁ |v₁⟩        B₁|ψ₂⟩ = √(1-p₂) |v₂⟩
//! B₂|ψ₁⟩ = √(1-p₁) |v₁⟩    B₂|ψ₂⟩ = √p₂ |v₂⟩
//! ```
//!
//! Completeness `B₁†B₁ + B₂†B₂ = I` then holds exactly when
//! `D(p₁, p₂)·⟨v₁|v₂⟩ = ⟨ψ₁|ψ₂⟩`.

use serde::{Deserialize, Serialize};

use crate::core_math::distinguishability_unchecked;
use crate::error::{unit_interval, Error, Result};
use crate::linalg::{inner, norm_sqr, phase_aligned_distance, scale, Ket, Mat2, C64};
use crate::model::{DiscriminationInstance, StrategyResult, SuccessPair};

/// Tolerance on `|D·t_out - t_in|` accepted by [`build_stage`].
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-12;
pub const ACTION_TOLERANCE: f64 = 1e-10;
const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Requested output overlaps this close to the exact value are kept as given.
const ROUNDING_SLACK: f64 = 1e-12;

/// Normalized single-qubit pure state `a|0⟩ + b|1⟩`.
/// Serializes as `[[re, im], [re, im]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[C64; 2]", into = "[C64; 2]")]
pub struct QubitState {
    amplitudes: Ket,
}

impl TryFrom<[C64; 2]> for QubitState {
    type Error = Error;

    fn try_from(amplitudes: [C64; 2]) -> Result<Self> {
        QubitState::new(amplitudes[0], amplitudes[1])
    }
}

impl From<QubitState> for [C64; 2] {
    fn from(state: QubitState) -> Self {
        state.amplitudes
    }
}

impl QubitState {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Domain {
                name: "|a|² + |b|²",
                value: norm,
                domain: "{1}",
            });
        }
        Ok(Self { amplitudes: [a, b] })
    }

    pub fn real(a: f64, b: f64) -> Result<Self> {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    /// Normalizes a nonzero vector.
    pub(crate) fn from_unnormalized(ket: Ket) -> Option<Self> {
        let norm = norm_sqr(&ket).sqrt();
        (norm > 0.0).then(|| Self {
            amplitudes: scale(&ket, C64::new(1.0 / norm, 0.0)),
        })
    }

    pub fn amplitudes(&self) -> &Ket {
        &self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &QubitState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn fidelity(&self, other: &QubitState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// The state `(-b*, a*)`, orthogonal to `a|0⟩ + b|1⟩`.
    pub fn orthogonal(&self) -> QubitState {
        let [a, b] = self.amplitudes;
        QubitState {
            amplitudes: [-b.conj(), a.conj()],
        }
    }

    /// Representative with the first nonzero amplitude real and positive.
    pub fn canonical(&self) -> QubitState {
        let lead = if self.amplitudes[0].norm() > 1e-15 {
            self.amplitudes[0]
        } else {
            self.amplitudes[1]
        };
        let phase = lead.conj() / lead.norm();
        QubitState {
            amplitudes: scale(&self.amplitudes, phase),
        }
    }

    pub(crate) fn with_phase(&self, phase: C64) -> QubitState {
        QubitState {
            amplitudes: scale(&self.amplitudes, phase),
        }
    }
}

/// Real states `cos α|0⟩ ± sin α|1⟩` with `cos 2α = overlap`, symmetric about `|0⟩`.
pub fn make_state_pair(overlap: f64) -> Result<(QubitState, QubitState)> {
    let overlap = unit_interval("overlap", overlap)?;
    let alpha = 0.5 * overlap.acos();
    let (sin, cos) = alpha.sin_cos();
    Ok((QubitState::real(cos, sin)?, QubitState::real(cos, -sin)?))
}

/// One receiver's measurement together with the states it consumes and emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStage {
    pub detectors: [Mat2; 2],
    pub inputs: [QubitState; 2],
    pub outputs: [QubitState; 2],
    pub success: SuccessPair,
    pub in_overlap: f64,
    pub out_overlap: f64,
}

/// Measured deviations of a stage from the ideal measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDiagnostics {
    /// `‖B₁†B₁ + B₂†B₂ - I‖_max`
    pub completeness_error: f64,
    /// Smallest eigenvalue over both POVM elements.
    pub min_eigenvalue: f64,
    /// Worst phase-aligned entry error of the four prescribed actions.
    pub action_error: f64,
    /// Worst Born-rule error on the conditional success probabilities.
    pub probability_error: f64,
    /// Smallest fidelity of a nonvanishing post-measurement state with its expected output.
    pub min_output_fidelity: f64,
    pub output_overlap_error: f64,
}

impl StageDiagnostics {
    pub fn passes(&self) -> bool {
        self.completeness_error <= COMPLETENESS_TOLERANCE
            && self.min_eigenvalue >= -POSITIVITY_TOLERANCE
            && self.action_error <= ACTION_TOLERANCE
            && self.probability_error <= ACTION_TOLERANCE
            && self.min_output_fidelity >= 1.0 - ACTION_TOLERANCE
            && self.output_overlap_error <= ACTION_TOLERANCE
    }
}

impl MeasurementStage {
    pub fn povm_elements(&self) -> [Mat2; 2] {
        self.detectors.map(|b| b.adjoint() * b)
    }

    pub fn diagnostics(&self) -> StageDiagnostics {
        let [pi1, pi2] = self.povm_elements();
        let completeness_error = (pi1 + pi2).max_abs_diff(&Mat2::identity());
        let min_eigenvalue = pi1.hermitian_eigenvalues()[0].min(pi2.hermitian_eigenvalues()[0]);

        let p = [self.success.p1, self.success.p2];
        let mut action_error: f64 = 0.0;
        let mut probability_error: f64 = 0.0;
        let mut min_output_fidelity: f64 = 1.0;
        for (i, input) in self.inputs.iter().enumerate() {
            let output = &self.outputs[i];
            for (j, detector) in self.detectors.iter().enumerate() {
                let weight = if i == j { p[i] } else { 1.0 - p[i] };
                let image = detector.apply(input.amplitudes());
                let expected = scale(output.amplitudes(), C64::new(weight.sqrt(), 0.0));
                action_error = action_error.max(phase_aligned_distance(&image, &expected));
                let born = norm_sqr(&image);
                probability_error = probability_error.max((born - weight).abs());
                if born > 1e-12 {
                    let post = QubitState::from_unnormalized(image).expect("nonzero image");
                    min_output_fidelity = min_output_fidelity.min(post.fidelity(output));
                }
            }
        }
        let output_overlap_error =
            (self.outputs[0].inner(&self.outputs[1]) - self.out_overlap).norm();
        StageDiagnostics {
            completeness_error,
            min_eigenvalue,
            action_error,
            probability_error,
            min_output_fidelity,
            output_overlap_error,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.passes() {
            Ok(())
        } else {
            Err(Error::InfeasibleStage {
                stage: None,
                detail: format!("constructed stage violates measurement invariants: {d:?}"),
            })
        }
    }
}

/// Builds the detection operators taking `in_pair` to the canonical output
/// pair of overlap `out_overlap` with conditional successes `success`.
///
/// A complex overlap between the inputs is rotated into the second state's
/// global phase. A request that is feasible only to within
/// [`FEASIBILITY_TOLERANCE`] gets the output overlap `t_in / D(p₁, p₂)`, so
/// completeness holds to rounding error.
pub fn build_stage(
    in_pair: (QubitState, QubitState),
    success: SuccessPair,
    out_overlap: f64,
) -> Result<MeasurementStage> {
    let out_overlap = unit_interval("out_overlap", out_overlap)?;
    let success = SuccessPair::new(success.p1, success.p2)?;
    let (psi1, psi2_raw) = in_pair;
    let raw_overlap = psi1.inner(&psi2_raw);
    let in_overlap = raw_overlap.norm().min(1.0);
    let psi2 = if in_overlap > 0.0 {
        psi2_raw.with_phase(raw_overlap.conj() / in_overlap)
    } else {
        psi2_raw
    };

    let d = distinguishability_unchecked(success.p1, success.p2);
    let identical_inputs = in_overlap >= 1.0 - NORMALIZATION_TOLERANCE;
    if identical_inputs && out_overlap < 1.0 - FEASIBILITY_TOLERANCE {
        return Err(Error::DegenerateInput(format!(
            "identical input states cannot be mapped to outputs with overlap {out_overlap}"
        )));
    }
    let mismatch = d * out_overlap - in_overlap;
    if mismatch.abs() > FEASIBILITY_TOLERANCE {
        return Err(Error::InfeasibleStage {
            stage: None,
            detail: format!(
                "D(p1, p2) * t_out = {} but t_in = {in_overlap} for (p1, p2) = ({}, {})",
                d * out_overlap,
                success.p1,
                success.p2
            ),
        });
    }

    let out_overlap = if identical_inputs {
        1.0
    } else if d > 0.0 {
        let exact = (in_overlap / d).min(1.0);
        if (exact - out_overlap).abs() <= ROUNDING_SLACK {
            out_overlap
        } else {
            exact
        }
    } else {
        out_overlap
    };
    let (v1, v2) = make_state_pair(out_overlap)?;
    let detectors = if identical_inputs {
        merged_detectors(&psi1, &v1, success.p1)
    } else {
        dual_basis_detectors(&psi1, &psi2, &v1, &v2, success)
    };

    let stage = MeasurementStage {
        detectors,
        inputs: [psi1, psi2_raw],
        outputs: [v1, v2],
        success,
        in_overlap,
        out_overlap,
    };
    stage.validate()?;
    Ok(stage)
}

/// `Bᵢ = Σₖ |image of ψₖ under Bᵢ⟩⟨dₖ|`, with the reciprocal functionals
/// `⟨d₁| = ⟨ψ₂^⊥| / ⟨ψ₂^⊥|ψ₁⟩` and `⟨d₂| = ⟨ψ₁^⊥| / ⟨ψ₁^⊥|ψ₂⟩`.
fn dual_basis_detectors(
    psi1: &QubitState,
    psi2: &QubitState,
    v1: &QubitState,
    v2: &QubitState,
    success: SuccessPair,
) -> [Mat2; 2] {
    let perp2 = psi2.orthogonal();
    let perp1 = psi1.orthogonal();
    // outer(ket, bra) conjugates the bra, so divide by the conjugated normalizer.
    let dual1 = scale(
        perp2.amplitudes(),
        C64::new(1.0, 0.0) / perp2.inner(psi1).conj(),
    );
    let dual2 = scale(
        perp1.amplitudes(),
        C64::new(1.0, 0.0) / perp1.inner(psi2).conj(),
    );
    let amp = |x: f64| C64::new(x.sqrt(), 0.0);
    let detector = |w1: f64, w2: f64| {
        Mat2::outer(&scale(v1.amplitudes(), amp(w1)), &dual1)
            + Mat2::outer(&scale(v2.amplitudes(), amp(w2)), &dual2)
    };
    [
        detector(success.p1, 1.0 - success.p2),
        detector(1.0 - success.p1, success.p2),
    ]
}

/// Identical inputs `ψ` go to the single output `v` whatever the outcome:
/// `B₁ = |v⟩(√p⟨ψ| + √(1-p)⟨ψ^⊥|)`, `B₂ = |v⟩(√(1-p)⟨ψ| - √p⟨ψ^⊥|)`.
fn merged_detectors(psi: &QubitState, v: &QubitState, p1: f64) -> [Mat2; 2] {
    let perp = psi.orthogonal();
    let (a, b) = (p1.sqrt(), (1.0 - p1).sqrt());
    let row = |x: f64, y: f64| -> Ket {
        let [p0, p1] = *psi.amplitudes();
        let [q0, q1] = *perp.amplitudes();
        [p0 * x + q0 * y, p1 * x + q1 * y]
    };
    [
        Mat2::outer(v.amplitudes(), &row(a, b)),
        Mat2::outer(v.amplitudes(), &row(b, -a)),
    ]
}

/// Stage `k` consumes the pair with overlap `t_k` and emits the pair the
/// next stage consumes; the last stage merges its outputs (`t_out = 1`).
pub fn build_chain(
    inst: &DiscriminationInstance,
    result: &StrategyResult,
) -> Result<Vec<MeasurementStage>> {
    result.validate(inst)?;
    let n = result.stages.len();
    let mut pair = make_state_pair(inst.overlap_s)?;
    let mut chain = Vec::with_capacity(n);
    for (k, success) in result.stages.iter().enumerate() {
        let t_out = result.overlaps.get(k + 1).copied().unwrap_or(1.0);
        let stage = build_stage(pair, *success, t_out).map_err(|e| e.at_stage(k))?;
        pair = (stage.outputs[0], stage.outputs[1]);
        chain.push(stage);
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_math::equal_prior_jbg;
    use crate::linalg::ZERO;

    #[test]
    fn state_pair_examples() {
        let (a, b) = make_state_pair(1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.amplitudes()[0], C64::new(1.0, 0.0));

        let (a, b) = make_state_pair(0.0).unwrap();
        assert!(a.inner(&b).norm() < 1e-15);
        assert!((a.amplitudes()[0].re - 0.5f64.sqrt()).abs() < 1e-15);

        let (a, b) = make_state_pair(0.5).unwrap();
        assert!((a.inner(&b) - C64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(make_state_pair(1.5).is_err());
    }

    #[test]
    fn qubit_state_rules() {
        assert!(QubitState::real(0.6, 0.8).is_ok());
        assert!(QubitState::real(0.6, 0.7).is_err());
        let s = QubitState::new(C64::new(0.0, 0.6), C64::new(0.8, 0.0)).unwrap();
        let c = s.canonical();
        assert!((c.amplitudes()[0] - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((s.fidelity(&c) - 1.0).abs() < 1e-15);
        assert!(s.inner(&s.orthogonal()).norm() < 1e-15);
        let z = QubitState::new(ZERO, C64::new(0.0, -1.0))
            .unwrap()
            .canonical();
        assert_eq!(z.amplitudes()[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn projective_stage_on_orthogonal_states() {
        let pair = make_state_pair(0.0).unwrap();
        let one = SuccessPair::new(1.0, 1.0).unwrap();
        let stage = build_stage(pair, one, 0.0).unwrap();
        let d = stage.diagnostics();
        assert!(d.completeness_error < 1e-15);
        let expected = Mat2::outer(stage.outputs[0].amplitudes(), pair.0.amplitudes());
        assert!(stage.detectors[0].max_abs_diff(&expected) < 1e-15);
        assert!(stage.outputs[0].inner(&stage.outputs[1]).norm() < 1e-15);
    }

    #[test]
    fn first_stage_of_two_receiver_chain() {
        let pair = make_state_pair(0.5).unwrap();
        let p = 0.5 * (1.0 + 0.5f64.sqrt());
        let stage = build_stage(pair, SuccessPair::new(p, p).unwrap(), 0.5f64.sqrt()).unwrap();
        let d = stage.diagnostics();
        assert!(d.passes(), "{d:?}");
        assert!(d.probability_error < 1e-12);
    }

    #[test]
    fn identical_inputs_merge() {
        let pair = make_state_pair(1.0).unwrap();
        let half = SuccessPair::new(0.5, 0.5).unwrap();
        let stage = build_stage(pair, half, 1.0).unwrap();
        for b in &stage.detectors {
            let image = b.apply(pair.0.amplitudes());
            let expected = scale(stage.outputs[0].amplitudes(), C64::new(0.5f64.sqrt(), 0.0));
            assert!(phase_aligned_distance(&image, &expected) < 1e-15);
        }
        assert!(stage.diagnostics().completeness_error < 1e-15);

        assert!(matches!(
            build_stage(pair, half, 0.5),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            build_stage(pair, SuccessPair::new(0.7, 0.7).unwrap(), 1.0),
            Err(Error::InfeasibleStage { .. })
        ));
    }

    #[test]
    fn complex_input_overlap_is_rephased() {
        let (a, b) = make_state_pair(0.6).unwrap();
        let b = b.with_phase(C64::from_polar(1.0, 0.9));
        let p = 0.5 * (1.0 + (1.0f64 - 0.36).sqrt());
        let stage = build_stage((a, b), SuccessPair::new(p, p).unwrap(), 1.0).unwrap();
        assert!((stage.in_overlap - 0.6).abs() < 1e-14);
        assert!(stage.diagnostics().passes());
    }

    #[test]
    fn feasibility_boundary_is_enforced() {
        let pair = make_state_pair(0.5).unwrap();
        let p = 0.5 * (1.0 + 0.5f64.sqrt());
        let ok = SuccessPair::new(p, p).unwrap();
        let t = 0.5f64.sqrt();
        for delta in [1e-6, -1e-6] {
            assert!(build_stage(pair, ok, t + delta).is_err());
            let off = SuccessPair::new(p + delta, p).unwrap();
            assert!(build_stage(pair, off, t).is_err());
        }
        assert!(build_stage(pair, ok, t + 1e-11).is_ok());
    }

    #[test]
    fn chain_examples() {
        let inst = DiscriminationInstance::equal_priors(0.25, 2).unwrap();
        let result = equal_prior_jbg(0.25, 2).unwrap();
        let chain = build_chain(&inst, &result).unwrap();
        assert_eq!(chain.len(), 2);
        assert!((chain[0].in_overlap - 0.25).abs() < 1e-14);
        assert!((chain[1].in_overlap - 0.5).abs() < 1e-14);
        assert_eq!(chain[1].out_overlap, 1.0);
        assert!((chain[0].success.p1 - 0.933_012_7).abs() < 1e-7);

        let inst = DiscriminationInstance::equal_priors(0.6, 1).unwrap();
        let chain = build_chain(&inst, &equal_prior_jbg(0.6, 1).unwrap()).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].out_overlap, 1.0);

        let inst = DiscriminationInstance::equal_priors(0.0, 3).unwrap();
        let chain = build_chain(&inst, &equal_prior_jbg(0.0, 3).unwrap()).unwrap();
        assert_eq!(chain.len(), 3);
        assert!(chain
            .iter()
            .all(|s| s.success.p1 == 1.0 && s.success.p2 == 1.0));
    }

    #[test]
    fn chain_rejects_inconsistent_result() {
        let inst = DiscriminationInstance::equal_priors(0.25, 2).unwrap();
        let mut result = equal_prior_jbg(0.25, 2).unwrap();
        result.overlaps[1] = 0.6;
        assert!(matches!(
            build_chain(&inst, &result),
            Err(Error::InfeasibleStage { stage: Some(0), .. })
        ));
    }

    #[test]
    fn stage_serializes() {
        let pair = make_state_pair(0.3).unwrap();
        let p = 0.5 * (1.0 + (1.0f64 - 0.09).sqrt());
        let stage = build_stage(pair, SuccessPair::new(p, p).unwrap(), 1.0).unwrap();
        let json = serde_json::to_value(&stage).unwrap();
        assert_eq!(json["detectors"][0].as_array().unwrap().len(), 4);
        assert_eq!(json["detectors"][0][0].as_array().unwrap().len(), 2);
        let back: MeasurementStage = serde_json::from_value(json).unwrap();
        assert_eq!(back, stage);
    }
}
