//! Monte Carlo simulation of the full preparation and measurement chain.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is keyed once
//! from the seed (`ChaCha8Rng::seed_from_u64`) and trial `k` uses stream `k`.
//! Trials are therefore independent of each other and of how they are
//! scheduled across threads, and all counters are integers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_sqr;
use crate::model::{joint_success, DiscriminationInstance, SuccessPair};
use crate::povm::{make_state_pair, MeasurementStage, QubitState};

/// Name and stream rule of the generator, recorded in every report.
pub const PRNG_DESCRIPTION: &str =
    "ChaCha8Rng (rand_chacha 0.3), key = seed_from_u64(seed), stream = trial index";

/// Slack on squared norms before an outcome probability counts as negative.
const UNDERFLOW_SLACK: f64 = 1e-12;
/// Allowed deviation of `q₁ + q₂` from one.
const COMPLETENESS_SLACK: f64 = 1e-10;
/// Minimum fidelity of a forwarded state with its expected output.
pub const PURITY_THRESHOLD: f64 = 1.0 - 1e-9;
/// Outcomes at or below this probability never occur and have no
/// post-measurement state to check.
const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub record_per_receiver: bool,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            record_per_receiver: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig(
                "at least one trial is required".into(),
            ));
        }
        Ok(())
    }
}

/// Empirical frequency of an event together with its binomial z-score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub empirical: f64,
    pub std_error: f64,
    pub predicted: f64,
    pub z_score: f64,
}

impl Estimate {
    /// The standard error is `√(p̂(1-p̂)/n)`. When the estimate sits at 0 or 1
    /// the predicted value is used in its place; when both vanish the z-score
    /// is zero for an exact match and infinite otherwise.
    pub fn new(successes: u64, trials: u64, predicted: f64) -> Self {
        let n = trials as f64;
        let empirical = if trials == 0 {
            0.0
        } else {
            successes as f64 / n
        };
        let binomial = |p: f64| (p * (1.0 - p) / n).max(0.0).sqrt();
        let mut std_error = binomial(empirical);
        if std_error == 0.0 {
            std_error = binomial(predicted);
        }
        let diff = empirical - predicted;
        let z_score = if std_error > 0.0 {
            diff / std_error
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        Self {
            successes,
            trials,
            empirical,
            std_error,
            predicted,
            z_score,
        }
    }
}

/// Conditional success of one receiver, split by the state that was sent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverStats {
    pub receiver: usize,
    pub given_state_1: Estimate,
    pub given_state_2: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub prng: String,
    pub seed: u64,
    pub trials: u64,
    pub joint_successes: u64,
    pub empirical_joint: f64,
    pub std_error: f64,
    pub predicted_joint: f64,
    pub z_score: f64,
    /// How often each state was sent.
    pub per_state_counts: [u64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_receiver_success: Option<Vec<ReceiverStats>>,
}

impl SimReport {
    /// Largest `|z|` over the joint estimate and, when recorded, every
    /// per-receiver conditional estimate. NaN if any z-score is NaN.
    pub fn max_abs_z(&self) -> f64 {
        let receivers = self
            .per_receiver_success
            .iter()
            .flatten()
            .flat_map(|r| [r.given_state_1.z_score, r.given_state_2.z_score]);
        std::iter::once(self.z_score)
            .chain(receivers)
            .map(f64::abs)
            .fold(0.0, |acc, z| if z.is_nan() || z > acc { z } else { acc })
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    joint: u64,
    sent: [u64; 2],
    /// `[receiver][state]`
    correct: Vec<[u64; 2]>,
}

impl Tally {
    fn new(receivers: usize) -> Self {
        Self {
            correct: vec![[0; 2]; receivers],
            ..Self::default()
        }
    }

    fn absorb(&mut self, other: &Tally) {
        self.joint += other.joint;
        for i in 0..2 {
            self.sent[i] += other.sent[i];
        }
        for (mine, theirs) in self.correct.iter_mut().zip(&other.correct) {
            for i in 0..2 {
                mine[i] += theirs[i];
            }
        }
    }
}

fn trial_rng(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng
}

/// Outcome probabilities `q_j = ‖B_j|cur⟩‖²`, checked and clamped.
fn outcome_probabilities(
    stage: &MeasurementStage,
    index: usize,
    cur: &QubitState,
) -> Result<[f64; 2]> {
    let mut q = [0.0; 2];
    for (j, detector) in stage.detectors.iter().enumerate() {
        let value = norm_sqr(&detector.apply(cur.amplitudes()));
        if value < -UNDERFLOW_SLACK || !value.is_finite() {
            return Err(Error::NumericalUnderflow {
                stage: index,
                value,
            });
        }
        q[j] = value.clamp(0.0, 1.0);
    }
    let sum = q[0] + q[1];
    if (sum - 1.0).abs() > COMPLETENESS_SLACK {
        return Err(Error::IncompleteMeasurement { stage: index, sum });
    }
    Ok(q)
}

fn check_chain(inst: &DiscriminationInstance, stages: &[MeasurementStage]) -> Result<()> {
    inst.validate()?;
    if stages.len() != inst.n_receivers {
        return Err(Error::InvalidInstance(format!(
            "{} receivers but {} measurement stages",
            inst.n_receivers,
            stages.len()
        )));
    }
    Ok(())
}

/// Runs `cfg.trials` independent rounds of the protocol: the sender picks
/// state `i` with probability `η_i`, and each stage samples its outcome from
/// `q_j = ‖B_j|cur⟩‖²` and forwards `B_j|cur⟩ / ‖B_j|cur⟩‖`. A round is a
/// joint success when every receiver's outcome equals `i`.
pub fn run_chain_simulation(
    inst: &DiscriminationInstance,
    stages: &[MeasurementStage],
    cfg: &SimConfig,
) -> Result<SimReport> {
    check_chain(inst, stages)?;
    cfg.validate()?;
    let (psi1, psi2) = make_state_pair(inst.overlap_s)?;
    let inputs = [psi1, psi2];
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let receivers = stages.len();

    let run_trial = |trial: u64, tally: &mut Tally| -> Result<()> {
        let mut rng = trial_rng(&base, trial);
        let sent = if rng.gen::<f64>() < inst.prior_1 {
            0
        } else {
            1
        };
        tally.sent[sent] += 1;
        let mut cur = inputs[sent];
        let mut all_correct = true;
        for (k, stage) in stages.iter().enumerate() {
            let q = outcome_probabilities(stage, k, &cur)?;
            let outcome = if rng.gen::<f64>() < q[0] { 0 } else { 1 };
            if outcome == sent {
                tally.correct[k][sent] += 1;
            } else {
                all_correct = false;
            }
            let image = stage.detectors[outcome].apply(cur.amplitudes());
            cur = QubitState::from_unnormalized(image).ok_or(Error::NumericalUnderflow {
                stage: k,
                value: 0.0,
            })?;
        }
        if all_correct {
            tally.joint += 1;
        }
        Ok(())
    };

    let chunks = cfg.trials.div_ceil(CHUNK);
    let partials: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = Tally::new(receivers);
            let end = ((c + 1) * CHUNK).min(cfg.trials);
            for trial in c * CHUNK..end {
                run_trial(trial, &mut tally)?;
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    let mut total = Tally::new(receivers);
    for part in &partials {
        total.absorb(part);
    }

    let successes: Vec<SuccessPair> = stages.iter().map(|s| s.success).collect();
    let predicted = joint_success(inst, &successes);
    let joint = Estimate::new(total.joint, cfg.trials, predicted);
    let per_receiver_success = cfg.record_per_receiver.then(|| {
        successes
            .iter()
            .zip(&total.correct)
            .enumerate()
            .map(|(k, (pair, correct))| ReceiverStats {
                receiver: k + 1,
                given_state_1: Estimate::new(correct[0], total.sent[0], pair.p1),
                given_state_2: Estimate::new(correct[1], total.sent[1], pair.p2),
            })
            .collect()
    });
    Ok(SimReport {
        prng: PRNG_DESCRIPTION.to_string(),
        seed: cfg.seed,
        trials: cfg.trials,
        joint_successes: total.joint,
        empirical_joint: joint.empirical,
        std_error: joint.std_error,
        predicted_joint: predicted,
        z_score: joint.z_score,
        per_state_counts: total.sent,
        per_receiver_success,
    })
}

/// First place where a forwarded state was not the expected pure output.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityViolation {
    pub trial: u64,
    pub stage: usize,
    pub sent: usize,
    pub outcome: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurityReport {
    pub pure: bool,
    /// Number of post-measurement states compared.
    pub checks: u64,
    pub min_fidelity: f64,
    pub first_violation: Option<PurityViolation>,
}

/// Replays sampled trials (each state sent with probability ½) and checks
/// that after every non-final stage both possible post-measurement states
/// coincide with the stage's output for the state actually sent.
pub fn verify_posterior_purity(
    stages: &[MeasurementStage],
    cfg: &SimConfig,
) -> Result<PurityReport> {
    cfg.validate()?;
    let mut report = PurityReport {
        pure: true,
        checks: 0,
        min_fidelity: 1.0,
        first_violation: None,
    };
    if stages.len() < 2 {
        return Ok(report);
    }
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(&base, trial);
        let sent = usize::from(rng.gen::<f64>() >= 0.5);
        let mut cur = stages[0].inputs[sent];
        for (k, stage) in stages[..stages.len() - 1].iter().enumerate() {
            let expected = &stage.outputs[sent];
            let mut next = None;
            let q0 = norm_sqr(&stage.detectors[0].apply(cur.amplitudes()));
            let outcome = usize::from(rng.gen::<f64>() >= q0);
            for (j, detector) in stage.detectors.iter().enumerate() {
                let image = detector.apply(cur.amplitudes());
                if norm_sqr(&image) <= NEGLIGIBLE_PROBABILITY {
                    continue;
                }
                let Some(post) = QubitState::from_unnormalized(image) else {
                    continue;
                };
                let fidelity = post.fidelity(expected);
                report.checks += 1;
                report.min_fidelity = report.min_fidelity.min(fidelity);
                if fidelity < PURITY_THRESHOLD && report.first_violation.is_none() {
                    report.pure = false;
                    report.first_violation = Some(PurityViolation {
                        trial,
                        stage: k,
                        sent,
                        outcome: j,
                        fidelity,
                    });
                }
                if j == outcome {
                    next = Some(post);
                }
            }
            cur = next.unwrap_or(*expected);
        }
    }
    Ok(report)
}
