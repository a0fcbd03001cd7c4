use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The requested success probabilities do not fit the overlap budget of the stage.
    #[error("infeasible stage{}: {detail}", stage_suffix(*.stage))]
    InfeasibleStage {
        stage: Option<usize>,
        detail: String,
    },

    /// Identical input states cannot be mapped onto distinct outputs.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("full-chain search supports 2 or 3 receivers, got {0}")]
    UnsupportedReceivers(usize),

    #[error("negative outcome probability {value} at stage {stage}")]
    NumericalUnderflow { stage: usize, value: f64 },

    #[error("outcome probabilities at stage {stage} sum to {sum}, expected 1")]
    IncompleteMeasurement { stage: usize, sum: f64 },
}

fn stage_suffix(stage: Option<usize>) -> String {
    match stage {
        Some(k) => format!(" at stage {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn at_stage(self, index: usize) -> Self {
        match self {
            Error::InfeasibleStage { detail, .. } => Error::InfeasibleStage {
                stage: Some(index),
                detail,
            },
            other => other,
        }
    }
}

/// Slack allowed on probability arguments before they are rejected.
pub(crate) const PROB_SLACK: f64 = 1e-12;

/// Checks that `value` is a probability (with [`PROB_SLACK`]) and clamps it into `[0, 1]`.
pub(crate) fn unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&value) {
        return Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        });
    }
    Ok(value.clamp(0.0, 1.0))
}
