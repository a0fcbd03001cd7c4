//! Joint best guess strategies for sequential minimum-error discrimination
//! of two pure qubit states by a chain of receivers.

pub mod cli;
pub mod core_math;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod povm;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{DiscriminationInstance, Strategy, StrategyResult, SuccessPair};
