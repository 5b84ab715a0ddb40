//! Command-line front end: `simulate`, `ak`, `predict`, `histories` and
//! `verify`. Exit status 2 means the invocation was malformed, 1 means a
//! computation or verification failed.

mod report;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::akrule::{AkConfig, AkError};
use crate::circuits::{dj_circuit, grover_circuit, simon1q_circuit, Circuit, CircuitError};
use crate::histories::{HistoryError, VBranch};
use crate::oracle::{
    build_dj, build_grover, build_simon, load_problem, Family, OracleError, OracleProblem,
};
use crate::qstate::{BitString, QStateError};

/// A problem named on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProblemSelector {
    Grover(u32),
    Dj(u32),
    Simon(u32),
    File(PathBuf),
}

impl FromStr for ProblemSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: selector needs a path".into());
            }
            return Ok(ProblemSelector::File(path.into()));
        }
        let (kind, n) = s.split_once(":n=").ok_or_else(|| {
            format!("expected grover:n=K, dj:n=K, simon:n=K or file:PATH, got {s:?}")
        })?;
        let n: u32 = n.parse().map_err(|_| format!("invalid size in {s:?}"))?;
        match kind {
            "grover" => Ok(ProblemSelector::Grover(n)),
            "dj" => Ok(ProblemSelector::Dj(n)),
            "simon" => Ok(ProblemSelector::Simon(n)),
            other => Err(format!("unknown problem kind {other:?}")),
        }
    }
}

impl fmt::Display for ProblemSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSelector::Grover(n) => write!(f, "grover:n={n}"),
            ProblemSelector::Dj(n) => write!(f, "dj:n={n}"),
            ProblemSelector::Simon(n) => write!(f, "simon:n={n}"),
            ProblemSelector::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl ProblemSelector {
    pub fn problem(&self) -> Result<OracleProblem, CliError> {
        Ok(match self {
            ProblemSelector::Grover(n) => build_grover(*n)?,
            ProblemSelector::Dj(n) => build_dj(*n)?,
            ProblemSelector::Simon(n) => build_simon(*n)?,
            ProblemSelector::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                load_problem(&text)?
            }
        })
    }

    /// The built-in circuit solving this problem, if there is one.
    pub fn circuit(&self) -> Result<Circuit, CliError> {
        match self {
            ProblemSelector::Grover(2) => Ok(grover_circuit()?),
            ProblemSelector::Dj(n) => Ok(dj_circuit(*n)?),
            ProblemSelector::Simon(2) => Ok(simon1q_circuit()?),
            other => Err(CliError::Usage(format!(
                "no built-in circuit for {other} (circuits exist for grover:n=2, dj:n=1..3, simon:n=2)"
            ))),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
    /// The reader closed standard output early (for example `| head`).
    Closed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
            CliError::Closed => 0,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
            CliError::Closed => write!(f, "output closed"),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Schema { .. }
            | OracleError::DuplicateSetting(_)
            | OracleError::UnequalBlocks(_)
            | OracleError::InconsistentOutcome { .. }
            | OracleError::UnknownSetting(_)
            | OracleError::ArgumentOutOfRange { .. }
            | OracleError::SizeOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::SizeOutOfRange { .. }
            | CircuitError::State(QStateError::OutcomeNotPresent(_)) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<AkError> for CliError {
    fn from(e: AkError) -> Self {
        match e {
            AkError::UnknownSetting(_) | AkError::UnsupportedRetroaction { .. } => {
                CliError::Usage(e.to_string())
            }
            AkError::Oracle(inner) => inner.into(),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<HistoryError> for CliError {
    fn from(e: HistoryError) -> Self {
        match e {
            HistoryError::UnknownSetting(_)
            | HistoryError::InvalidVBranch(_)
            | HistoryError::NotInBasis(_) => CliError::Usage(e.to_string()),
            HistoryError::Ak(inner) => inner.into(),
            HistoryError::Circuit(inner) => inner.into(),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<QStateError> for CliError {
    fn from(e: QStateError) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::Closed;
        }
        CliError::Failure(format!("write failed: {e}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Cells,
    Linear,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Cells => Family::Cells,
            FamilyArg::Linear => Family::Linear,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aklab",
    version,
    about = "Extended-representation simulator and advanced-knowledge query counter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// grover:n=K, dj:n=K, simon:n=K or file:PATH
    #[arg(long)]
    problem: ProblemSelector,
    /// Output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct AkArgs {
    /// Measurement family (defaults to the problem's own)
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Restrict pairs to complementary measurements
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    complementary: bool,
    /// Quantum retroaction as a fraction; only 1/2 is supported
    #[arg(long, default_value = "1/2")]
    retroaction: String,
}

impl AkArgs {
    fn config(&self) -> Result<AkConfig, CliError> {
        let (num, den) = self
            .retroaction
            .split_once('/')
            .and_then(|(a, b)| Some((a.trim().parse::<u32>().ok()?, b.trim().parse::<u32>().ok()?)))
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "retroaction {:?} is not a fraction",
                    self.retroaction
                ))
            })?;
        let mut config = AkConfig::with_retroaction(num, den)?;
        config.family = self.family.map(Family::from);
        config.complementary = self.complementary;
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the problem's circuit and report the A-register outcome
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Setting b; omit to run the uniform ensemble over every setting
        #[arg(long)]
        setting: Option<BitString>,
        /// Include the state at every stage boundary
        #[arg(long)]
        stages: bool,
        /// Apply the bitwise-NOT preparation to the setting register first
        #[arg(long)]
        prepare_not: bool,
    },
    /// Occam pairs, advanced-knowledge instances and entropy reductions
    Ak {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        setting: BitString,
        #[command(flatten)]
        ak: AkArgs,
    },
    /// Classical baseline and advanced-knowledge query-count prediction
    Predict {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        ak: AkArgs,
    },
    /// Sum-over-histories enumeration with instance attribution
    Histories {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        setting: BitString,
        /// Initial V basis state: 0, 1 or both
        #[arg(long, default_value = "0")]
        v_branch: VBranch,
        #[command(flatten)]
        ak: AkArgs,
    },
    /// Run the built-in invariant and reproduction checks
    Verify {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn reject_dot(format: Format, command: &str) -> Result<(), CliError> {
    if format == Format::Dot {
        Err(CliError::Usage(format!(
            "--format dot is only available for histories, not {command}"
        )))
    } else {
        Ok(())
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate {
            problem,
            setting,
            stages,
            prepare_not,
        } => {
            reject_dot(problem.format, "simulate")?;
            let circuit = problem.problem.circuit()?;
            report::simulate(
                out,
                &problem.problem,
                &circuit,
                setting,
                stages,
                prepare_not,
                problem.format,
            )?;
        }
        Command::Ak {
            problem,
            setting,
            ak,
        } => {
            reject_dot(problem.format, "ak")?;
            let p = problem.problem.problem()?;
            report::ak(out, &p, &setting, &ak.config()?, problem.format)?;
        }
        Command::Predict { problem, ak } => {
            reject_dot(problem.format, "predict")?;
            let p = problem.problem.problem()?;
            report::predict(out, &p, &ak.config()?, problem.format)?;
        }
        Command::Histories {
            problem,
            setting,
            v_branch,
            ak,
        } => {
            let circuit = problem.problem.circuit()?;
            let p = problem.problem.problem()?;
            report::histories(
                out,
                &circuit,
                &p,
                &setting,
                v_branch,
                &ak.config()?,
                problem.format,
            )?;
        }
        Command::Verify { format } => {
            reject_dot(format, "verify")?;
            let results = verify::run_all();
            report::verify(out, &results, format)?;
            if results.iter().any(|r| r.outcome.is_err()) {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(CliError::Closed) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_parse() {
        assert_eq!(
            "grover:n=4".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Grover(4)
        );
        assert_eq!(
            "dj:n=2".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::Dj(2)
        );
        assert_eq!(
            "file:x.json".parse::<ProblemSelector>().unwrap(),
            ProblemSelector::File("x.json".into())
        );
        assert!("grover".parse::<ProblemSelector>().is_err());
        assert!("shor:n=2".parse::<ProblemSelector>().is_err());
        assert!("simon:n=two".parse::<ProblemSelector>().is_err());
        assert_eq!(ProblemSelector::Simon(2).to_string(), "simon:n=2");
    }

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("aklab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["predict"]).0, 2);
        assert_eq!(run_capture(&["predict", "--problem", "nope"]).0, 2);
        assert_eq!(run_capture(&["predict", "--problem", "grover:n=9"]).0, 2);
        assert_eq!(
            run_capture(&["ak", "--problem", "grover:n=2", "--setting", "0101"]).0,
            2
        );
        assert_eq!(
            run_capture(&["simulate", "--problem", "grover:n=4", "--setting", "0101"]).0,
            2
        );
        assert_eq!(
            run_capture(&["predict", "--problem", "grover:n=2", "--retroaction", "1/3"]).0,
            2
        );
        assert_eq!(
            run_capture(&["predict", "--problem", "file:/nonexistent.json"]).0,
            2
        );
        assert_eq!(
            run_capture(&["predict", "--problem", "grover:n=2", "--format", "dot"]).0,
            2
        );
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }
}
