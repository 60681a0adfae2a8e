//! Batch front-end: reads a command and JSON parameters, writes a
//! deterministic JSON or CSV report, and maps outcomes to exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use optest_core::estimation::{
    estimate_stats, optimal_estimate, optimal_estimate_no_info, unbiased_correction, Estimator,
};
use optest_core::pom::{validate, PomDescriptor};
use optest_core::random::GENERATOR_NAME;
use optest_core::relations::{check_accbound, check_geom, check_ungen, check_varsum};
use optest_core::report::{all_passed, rows_to_csv, ReportRow};
use optest_core::scenarios::{run_scenario, SCENARIO_NAMES};
use optest_core::tolerance::ENV_PREFIX;
use optest_core::{suites, DensityOperator, HermitianOperator, Pom, Tolerances};

pub const EXIT_RELATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "optest", version, about = "Optimal estimates and joint-measurement relation checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Parameter block, inline JSON or `@path`.
    #[arg(long, global = true)]
    pub params: Option<String>,

    /// Report destination; standard output if omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// POM descriptor file.
    #[arg(long, global = true)]
    pub pom: Option<PathBuf>,

    /// Tolerance overrides, inline JSON or `@path`; applied after the
    /// environment overrides.
    #[arg(long, global = true)]
    pub tolerances: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check positivity and completeness of a POM.
    Validate,
    /// Estimate an observable from a POM given a state.
    Estimate,
    /// Run every relation checker on one (A, B, POM, state) instance.
    Relations,
    /// Run a named scenario.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCENARIO_NAMES))]
        name: String,
    },
    /// Run all randomized suites and all scenarios with default parameters.
    Suite,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Estimate => "estimate",
            Command::Relations => "relations",
            Command::Scenario { .. } => "scenario",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failure: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl From<optest_core::Error> for CliError {
    fn from(e: optest_core::Error) -> Self {
        match e {
            optest_core::Error::Json(_) | optest_core::Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Everything written to the report.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub seed: u64,
    pub generator: &'static str,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub results: Value,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            EXIT_RELATION
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => Ok(rows_to_csv(&self.rows)?),
        }
    }
}

/// Reads inline JSON or `@path`, with line and column in parse errors.
pub fn read_json(arg: &str, what: &str) -> Result<Value, CliError> {
    let (text, origin) = match arg.strip_prefix('@') {
        Some(path) => (
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("{what}: cannot read {path}: {e}")))?,
            path.to_string(),
        ),
        None => (arg.to_string(), "inline".to_string()),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{what} ({origin}): {e}")))
}

fn parse_block<T: for<'de> Deserialize<'de>>(value: &Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(value.clone()).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn load_tolerances(cli: &Cli) -> Result<Tolerances, CliError> {
    let base = Tolerances::from_env().map_err(|e| CliError::Config(format!("{ENV_PREFIX}*: {e}")))?;
    match &cli.tolerances {
        None => Ok(base),
        Some(arg) => {
            let mut merged = serde_json::to_value(base).expect("tolerances serialize");
            let overrides = read_json(arg, "--tolerances")?;
            let Value::Object(map) = overrides else {
                return Err(CliError::Config("--tolerances must be a JSON object".into()));
            };
            for (k, v) in map {
                if merged.get(&k).is_none() {
                    return Err(CliError::Config(format!("--tolerances: unknown field `{k}`")));
                }
                merged[k] = v;
            }
            parse_block(&merged, "--tolerances")
        }
    }
}

fn load_pom(cli: &Cli, strict: bool) -> Result<Pom, CliError> {
    let path = cli
        .pom
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --pom PATH".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let desc: PomDescriptor =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Pom::from_descriptor(&desc, strict)?)
}

fn params(cli: &Cli) -> Result<Value, CliError> {
    cli.params.as_deref().map_or(Ok(Value::Null), |p| read_json(p, "--params"))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum EstimateChoice {
    Optimal,
    NoInfo,
    Unbiased,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateParams {
    observable: HermitianOperator,
    state: DensityOperator,
    #[serde(default = "default_choice")]
    estimate: EstimateChoice,
}

fn default_choice() -> EstimateChoice {
    EstimateChoice::Optimal
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationParams {
    a: HermitianOperator,
    b: HermitianOperator,
    state: DensityOperator,
}

fn require_params(value: Value, command: &str) -> Result<Value, CliError> {
    if value.is_null() {
        Err(CliError::Config(format!("{command} needs --params")))
    } else {
        Ok(value)
    }
}

/// Runs one command and assembles its report.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let tol = load_tolerances(cli)?;
    let mut scenario = None;
    let (results, rows) = match &cli.command {
        Command::Validate => {
            let pom = load_pom(cli, false)?;
            let v = validate(&pom, &tol);
            if !v.passed {
                return Err(CliError::Validation(format!("POM `{}`: {}", pom.id(), v.summary())));
            }
            (serde_json::to_value(&v).map_err(optest_core::Error::from)?, Vec::new())
        }
        Command::Estimate => {
            let pom = Arc::new(load_pom(cli, true)?);
            let p: EstimateParams = parse_block(&require_params(params(cli)?, "estimate")?, "--params")?;
            let est: Estimator = match p.estimate {
                EstimateChoice::Optimal => optimal_estimate(&p.observable, &pom, &p.state)?,
                EstimateChoice::NoInfo => optimal_estimate_no_info(&p.observable, &pom)?,
                EstimateChoice::Unbiased => {
                    unbiased_correction(&optimal_estimate_no_info(&p.observable, &pom)?, &p.observable)?
                }
            };
            let stats = estimate_stats(&est, &p.observable, &p.state)?;
            let varsum = check_varsum(&p.observable, &pom, &p.state, &tol)?;
            let rows = vec![ReportRow::from_relation("estimate", &varsum)];
            (json!({ "estimator": est.to_json(), "stats": stats, "varsum": varsum }), rows)
        }
        Command::Relations => {
            let pom = Arc::new(load_pom(cli, true)?);
            let p: RelationParams = parse_block(&require_params(params(cli)?, "relations")?, "--params")?;
            let fa = optimal_estimate(&p.a, &pom, &p.state)?;
            let fb = optimal_estimate(&p.b, &pom, &p.state)?;
            let reports = vec![
                check_varsum(&p.a, &pom, &p.state, &tol)?,
                check_varsum(&p.b, &pom, &p.state, &tol)?,
                check_geom(&p.a, &p.b, &pom, &p.state, &tol)?,
                check_accbound(&p.a, &pom, &p.state, &tol)?,
                check_accbound(&p.b, &pom, &p.state, &tol)?,
                check_ungen(&p.a, &p.b, &fa, &fb, &p.state, &tol)?,
            ];
            let rows = reports.iter().map(|r| ReportRow::from_relation("relations", r)).collect();
            (serde_json::to_value(&reports).map_err(optest_core::Error::from)?, rows)
        }
        Command::Scenario { name } => {
            scenario = Some(name.clone());
            let out = run_scenario(name, &params(cli)?, cli.seed, &tol)?;
            let rows = out.rows.clone();
            (serde_json::to_value(&out).map_err(optest_core::Error::from)?, rows)
        }
        Command::Suite => {
            if cli.params.is_some() {
                return Err(CliError::Config("suite takes no --params".into()));
            }
            let summaries = suites::run_all(cli.seed, &tol)?;
            let mut rows: Vec<ReportRow> = summaries.iter().map(ReportRow::from_suite).collect();
            let mut outputs = Vec::new();
            for name in SCENARIO_NAMES {
                let out = run_scenario(name, &Value::Null, cli.seed, &tol)?;
                rows.extend(out.rows.iter().cloned());
                outputs.push(out);
            }
            (json!({ "suites": summaries, "scenarios": outputs }), rows)
        }
    };
    Ok(Report {
        tool: "optest",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        scenario,
        seed: cli.seed,
        generator: GENERATOR_NAME,
        tolerances: tol,
        passed: all_passed(&rows),
        results,
        rows,
    })
}

/// Writes through a temporary file in the destination directory, so readers
/// never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Full pipeline; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let report = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("optest: {e}");
            return e.exit_code();
        }
    };
    let text = match report.render(cli.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("optest: {e}");
            return e.exit_code();
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("optest: {e}");
                return e.exit_code();
            }
        }
        None => print!("{text}"),
    }
    for row in report.rows.iter().filter(|r| !r.passed) {
        eprintln!(
            "optest: {} {} violated: lhs {} rhs {} slack {}",
            row.scenario, row.relation_id, row.lhs, row.rhs, row.slack
        );
    }
    report.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("optest").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn inline_json_errors_carry_position() {
        let err = read_json("{\"a\": 1,\n \"b\": }", "--params").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn unknown_tolerance_rejected() {
        let c = cli(&["suite", "--tolerances", "{\"slak\": 1e-3}"]);
        assert!(matches!(load_tolerances(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn tolerance_override_applies() {
        let c = cli(&["suite", "--tolerances", "{\"slack\": 1e-3}"]);
        assert_eq!(load_tolerances(&c).unwrap().slack, 1e-3);
    }

    #[test]
    fn scenario_name_is_checked_by_parser() {
        assert!(Cli::try_parse_from(["optest", "scenario", "nope"]).is_err());
    }

    #[test]
    fn missing_pom_is_config_error() {
        let c = cli(&["validate"]);
        assert_eq!(run(&c).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn epr_scenario_report() {
        let c = cli(&["scenario", "epr", "--params", "{\"sigma\":0.1,\"tau\":0.1,\"numeric\":false}"]);
        let r = run(&c).unwrap();
        assert!(r.passed);
        assert!((r.rows[0].lhs - 0.5).abs() < 1e-12);
        assert_eq!(r.scenario.as_deref(), Some("epr"));
    }
}
