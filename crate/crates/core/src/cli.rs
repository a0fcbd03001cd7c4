//! Command-line front end.
//!
//! Exit codes: 0 success, 1 statistical acceptance failure (`simulate`),
//! 2 usage error, 3 I/O error. JSON goes to stdout as a single object with
//! `"schema_version": 1`; diagnostics go to stderr.
//!
//! `sweep` writes a CSV whose header names the swept variables (`overlap_s`,
//! `prior_1`) followed by `<STRATEGY>_joint_success,<STRATEGY>_p1,<STRATEGY>_p2`
//! for each requested strategy, and `abs_diff_JBG_OPTIMAL_INDIVIDUAL_GREEDY`
//! when both of those strategies are requested. Rows are in row-major sweep
//! order (overlap outer, prior inner). Numbers use the shortest decimal
//! representation that round-trips to the same 64-bit float.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::core_math::{boundary_solution, individual_greedy, symmetric_analytic};
use crate::error::Error;
use crate::model::{DiscriminationInstance, Strategy, StrategyResult};
use crate::optimizer::{find_sb, optimize_reduced, OptimizerConfig};
use crate::povm::{build_chain, MeasurementStage};
use crate::simulator::{run_chain_simulation, SimConfig, SimReport};

pub const SCHEMA_VERSION: u32 = 1;
/// `simulate` exits with status 1 when any `|z|` exceeds this.
pub const Z_THRESHOLD: f64 = 4.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_STATISTICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "jbg",
    version,
    about = "Joint best guess strategies for sequential discrimination of two qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and print the strategy as JSON.
    Optimize(OptimizeArgs),
    /// Evaluate strategies over a parameter grid and write a CSV file.
    Sweep(SweepArgs),
    /// Build the measurement chain and check it by Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Locate the overlap above which the symmetric equal-prior solution stops being optimal.
    FindSb(FindSbArgs),
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Overlap s = ⟨ψ₁|ψ₂⟩ in [0, 1].
    #[arg(long)]
    pub overlap: f64,
    /// Prior η₁ of the first state; η₂ = 1 - η₁.
    #[arg(long)]
    pub prior: f64,
    /// Number of receivers N ≥ 1.
    #[arg(long)]
    pub receivers: usize,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "JBG_OPTIMAL", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Include the detection operators of every receiver.
    #[arg(long)]
    pub emit_stages: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SweepVariable {
    Overlap,
    Prior,
    Both,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub variable: SweepVariable,
    /// Start of the swept range (overlap range when sweeping both).
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stop: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Prior range when sweeping both variables.
    #[arg(long, default_value_t = 0.0)]
    pub prior_start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prior_stop: f64,
    /// Defaults to --points.
    #[arg(long)]
    pub prior_points: Option<usize>,
    /// Fixed overlap when only the prior is swept.
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    /// Fixed prior η₁ when only the overlap is swept.
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
    #[arg(long, default_value_t = 2)]
    pub receivers: usize,
    #[arg(long, value_delimiter = ',', default_value = "JBG_OPTIMAL", value_parser = parse_strategy)]
    pub strategies: Vec<Strategy>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Mandatory; the same seed always reproduces the same report.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "JBG_OPTIMAL", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Also report every receiver's conditional success rates.
    #[arg(long)]
    pub per_receiver: bool,
}

#[derive(Debug, Args)]
pub struct FindSbArgs {
    #[arg(long)]
    pub receivers: usize,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Evaluates `strategy` on `inst`.
pub fn solve(inst: &DiscriminationInstance, strategy: Strategy) -> crate::Result<StrategyResult> {
    match strategy {
        Strategy::JbgOptimal => optimize_reduced(inst, &OptimizerConfig::default()),
        Strategy::JbgSymmetricAnalytic => symmetric_analytic(inst),
        Strategy::IndividualGreedy => individual_greedy(inst),
        Strategy::Boundary => boundary_solution(inst),
    }
}

#[derive(Debug, Serialize)]
struct OptimizeOutput<'a> {
    schema_version: u32,
    instance: &'a DiscriminationInstance,
    result: &'a StrategyResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    measurement_stages: Option<&'a [MeasurementStage]>,
}

#[derive(Debug, Serialize)]
struct SimulateOutput<'a> {
    schema_version: u32,
    instance: &'a DiscriminationInstance,
    strategy: Strategy,
    #[serde(flatten)]
    report: &'a SimReport,
}

#[derive(Debug, Serialize)]
struct FindSbOutput {
    schema_version: u32,
    n: usize,
    s_b: f64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let outcome = match &cli.command {
        Command::Optimize(a) => cmd_optimize(a, stdout),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::FindSb(a) => cmd_find_sb(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Io(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_IO
        }
    }
}

fn instance_from(args: &InstanceArgs) -> CliResult<DiscriminationInstance> {
    Ok(DiscriminationInstance::with_prior(
        args.overlap,
        args.prior,
        args.receivers,
    )?)
}

fn emit_json<T: Serialize>(value: &T, stdout: &mut dyn Write) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let inst = instance_from(&args.instance)?;
    let result = solve(&inst, args.strategy)?;
    let stages = if args.emit_stages {
        Some(build_chain(&inst, &result)?)
    } else {
        None
    };
    emit_json(
        &OptimizeOutput {
            schema_version: SCHEMA_VERSION,
            instance: &inst,
            result: &result,
            measurement_stages: stages.as_deref(),
        },
        stdout,
    )?;
    Ok(EXIT_OK)
}

fn cmd_simulate(
    args: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<i32> {
    let inst = instance_from(&args.instance)?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let result = solve(&inst, args.strategy)?;
    let stages = build_chain(&inst, &result)?;
    let cfg = SimConfig {
        trials: args.trials,
        seed: args.seed,
        record_per_receiver: args.per_receiver,
    };
    let report = run_chain_simulation(&inst, &stages, &cfg)?;
    emit_json(
        &SimulateOutput {
            schema_version: SCHEMA_VERSION,
            instance: &inst,
            strategy: args.strategy,
            report: &report,
        },
        stdout,
    )?;
    let code = simulation_exit_code(&report);
    if code == EXIT_STATISTICAL {
        let _ = writeln!(
            stderr,
            "simulation disagrees with prediction: max |z| = {} > {Z_THRESHOLD}",
            report.max_abs_z()
        );
    }
    Ok(code)
}

/// [`EXIT_OK`] when every `|z|` in the report is at most [`Z_THRESHOLD`],
/// otherwise [`EXIT_STATISTICAL`]. A NaN z-score counts as a failure.
pub fn simulation_exit_code(report: &SimReport) -> i32 {
    if report.max_abs_z() <= Z_THRESHOLD {
        EXIT_OK
    } else {
        EXIT_STATISTICAL
    }
}

fn cmd_find_sb(args: &FindSbArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.receivers < 2 {
        return Err(CliError::Usage(format!(
            "the threshold is defined for at least 2 receivers, got {}",
            args.receivers
        )));
    }
    let s_b = find_sb(args.receivers, &OptimizerConfig::default())?;
    emit_json(
        &FindSbOutput {
            schema_version: SCHEMA_VERSION,
            n: args.receivers,
            s_b,
        },
        stdout,
    )?;
    Ok(EXIT_OK)
}

/// A closed range sampled at `points` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepRange {
    fn validate(&self, name: &str) -> crate::Result<()> {
        let unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !unit(self.start) || !unit(self.stop) {
            return Err(Error::InvalidConfig(format!(
                "{name} range [{}, {}] is not within [0, 1]",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidConfig(format!(
                "{name} sweep needs at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    let x = self.start + (self.stop - self.start) * i as f64 / last as f64;
                    x.clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

/// What to sweep, over which ranges, holding what fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Overlap range, or its fixed value as a one-point range.
    pub overlap: SweepRange,
    pub prior: SweepRange,
    pub receivers: usize,
    pub strategies: Vec<Strategy>,
}

impl SweepSpec {
    fn from_args(a: &SweepArgs) -> Self {
        let fixed = |v: f64| SweepRange {
            start: v,
            stop: v,
            points: 1,
        };
        let primary = SweepRange {
            start: a.start,
            stop: a.stop,
            points: a.points,
        };
        let (overlap, prior) = match a.variable {
            SweepVariable::Overlap => (primary, fixed(a.prior)),
            SweepVariable::Prior => (fixed(a.overlap), primary),
            SweepVariable::Both => (
                primary,
                SweepRange {
                    start: a.prior_start,
                    stop: a.prior_stop,
                    points: a.prior_points.unwrap_or(a.points),
                },
            ),
        };
        Self {
            variable: a.variable,
            overlap,
            prior,
            receivers: a.receivers,
            strategies: a.strategies.clone(),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let check = |name: &str, r: &SweepRange, swept: bool| {
            if swept {
                r.validate(name)
            } else {
                // a fixed value only needs to lie in [0, 1]
                SweepRange { points: 2, ..*r }.validate(name)
            }
        };
        check(
            "overlap",
            &self.overlap,
            self.variable != SweepVariable::Prior,
        )?;
        check(
            "prior",
            &self.prior,
            self.variable != SweepVariable::Overlap,
        )?;
        if self.receivers == 0 {
            return Err(Error::InvalidConfig(
                "at least one receiver is required".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies requested".into()));
        }
        Ok(())
    }

    fn with_difference(&self) -> bool {
        self.strategies.contains(&Strategy::JbgOptimal)
            && self.strategies.contains(&Strategy::IndividualGreedy)
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<String> = Vec::new();
        if self.variable != SweepVariable::Prior {
            cols.push("overlap_s".into());
        }
        if self.variable != SweepVariable::Overlap {
            cols.push("prior_1".into());
        }
        for s in &self.strategies {
            for field in ["joint_success", "p1", "p2"] {
                cols.push(format!("{s}_{field}"));
            }
        }
        if self.with_difference() {
            cols.push("abs_diff_JBG_OPTIMAL_INDIVIDUAL_GREEDY".into());
        }
        cols.join(",")
    }

    /// Writes the header and every row, LF-terminated.
    fn write_csv(&self, out: &mut dyn Write) -> CliResult<()> {
        self.validate()?;
        let io = |e: std::io::Error| CliError::Io(e.to_string());
        writeln!(out, "{}", self.header()).map_err(io)?;
        for s in self.overlap.values() {
            for eta1 in self.prior.values() {
                let inst = DiscriminationInstance::with_prior(s, eta1, self.receivers)?;
                let mut line = String::new();
                let mut push = |x: f64| {
                    if !line.is_empty() {
                        line.push(',');
                    }
                    let _ = write!(line, "{}", fmt_float(x));
                };
                if self.variable != SweepVariable::Prior {
                    push(s);
                }
                if self.variable != SweepVariable::Overlap {
                    push(eta1);
                }
                let mut optimal = None;
                let mut greedy = None;
                for &strategy in &self.strategies {
                    let r = solve(&inst, strategy)?;
                    push(r.joint_success);
                    push(r.stages[0].p1);
                    push(r.stages[0].p2);
                    match strategy {
                        Strategy::JbgOptimal => optimal = Some(r.joint_success),
                        Strategy::IndividualGreedy => greedy = Some(r.joint_success),
                        _ => {}
                    }
                }
                if let (Some(a), Some(b)) = (optimal, greedy) {
                    push((a - b).abs());
                }
                writeln!(out, "{line}").map_err(io)?;
            }
        }
        Ok(())
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<i32> {
    let spec = SweepSpec::from_args(args);
    spec.validate()?;
    let mut buffer = Vec::new();
    spec.write_csv(&mut buffer)?;
    std::fs::write(&args.out, buffer)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(EXIT_OK)
}
