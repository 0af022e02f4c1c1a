//! Command definitions shared by the flag parser and `run --config`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aderdg_core::SolverKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "aderdg",
    version,
    about = "ADER-DG one-step ODE solver with a local DG predictor"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    /// About 40 significant digits (software float).
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Sub-nodes at `(m + 1/2) / M`.
    #[default]
    Centered,
    /// Sub-nodes at `m / (M - 1)`, element ends included.
    Endpoints,
}

#[derive(Debug, Clone, Subcommand, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum Command {
    /// Print nodes, weights and predictor matrices for degree N.
    Tables(TablesArgs),
    /// Integrate one problem on one mesh and write the node and local solution.
    Solve(SolveArgs),
    /// Sample |R(z)| on a rectangle or along a ray.
    Stability(StabilityArgs),
    /// Fit convergence orders over a ladder of uniform meshes.
    Converge(ConvergeArgs),
    /// List the built-in problems.
    Problems(ProblemsArgs),
    /// Run a command described by a TOML file.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesArgs {
    #[arg(long)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub format: TableFormat,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub precision: Precision,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: String,
    /// Problem parameter as NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    #[serde(skip)]
    pub param: Vec<String>,
    #[arg(skip)]
    #[serde(default, rename = "params")]
    pub param_table: BTreeMap<String, f64>,
    #[arg(long)]
    pub degree: usize,
    /// `uniform:CELLS:a:b` or `graded:CELLS:a:b,CELLS:b:c,...`; defaults to
    /// the finest mesh of the problem's ladder.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long, default_value_t = SolverKind::Auto)]
    #[serde(default)]
    pub solver: SolverKind,
    /// Local-solution samples per element (0 writes nodes only).
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_solve_subnodes")]
    pub subnodes: usize,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub placement: Placement,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub precision: Precision,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityArgs {
    #[arg(long)]
    pub degree: usize,
    /// Raster window `reMin:reMax:imMin:imMax`.
    #[arg(long, conflicts_with = "ray", allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Raster resolution `W:H`.
    #[arg(long, default_value = "201:201")]
    #[serde(default = "default_res")]
    pub res: String,
    /// Ray direction as a multiple of pi (1 is the negative real axis).
    #[arg(long)]
    pub ray: Option<f64>,
    /// Ray radii `log:lo:hi:count` or `lin:lo:hi:count`.
    #[arg(long, default_value = "log:1e-2:1e8:100")]
    #[serde(default = "default_radii")]
    pub radii: String,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub precision: Precision,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long = "param", value_name = "NAME=VALUE")]
    #[serde(skip)]
    pub param: Vec<String>,
    #[arg(skip)]
    #[serde(default, rename = "params")]
    pub param_table: BTreeMap<String, f64>,
    #[arg(long)]
    pub degree: usize,
    /// Comma-separated node counts L of the uniform ladder.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub meshes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "default_converge_subnodes")]
    pub subnodes: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[arg(long, default_value_t = aderdg_core::analysis::DEFAULT_NOISE_FLOOR)]
    #[serde(default = "default_floor")]
    pub noise_floor: f64,
    #[arg(long, default_value_t = SolverKind::Auto)]
    #[serde(default)]
    pub solver: SolverKind,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub precision: Precision,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemsArgs {
    #[arg(value_enum, default_value_t)]
    #[serde(default)]
    pub action: ProblemsAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemsAction {
    #[default]
    List,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn default_solve_subnodes() -> usize {
    10
}
fn default_converge_subnodes() -> usize {
    1000
}
fn default_jobs() -> usize {
    1
}
fn default_floor() -> f64 {
    aderdg_core::analysis::DEFAULT_NOISE_FLOOR
}
fn default_res() -> String {
    "201:201".into()
}
fn default_radii() -> String {
    "log:1e-2:1e8:100".into()
}

/// Parses a TOML run file. A nested `run` is rejected.
pub fn parse_config(text: &str) -> Result<Command, CliError> {
    toml::from_str::<Command>(text)
        .map_err(|e| CliError::Config(format!("config file: {}", e.message())))
}

/// Merges `--param NAME=VALUE` flags over table parameters.
pub fn collect_params(
    flags: &[String],
    table: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = table.clone();
    for p in flags {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--param '{p}': expected NAME=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("--param '{p}': '{v}' is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_merge_and_validate() {
        let mut table = BTreeMap::new();
        table.insert("delta".to_string(), 1e-2);
        let p = collect_params(&["delta=1e-4".into()], &table).unwrap();
        assert_eq!(p["delta"], 1e-4);
        assert!(collect_params(&["delta".into()], &table).is_err());
        assert!(collect_params(&["delta=x".into()], &table).is_err());
    }

    #[test]
    fn toml_config_uses_defaults() {
        let cmd = parse_config(
            r#"
            command = "solve"
            problem = "flame"
            degree = 3
            mesh = "uniform:40:0:200"
            solver = "newton"
            [params]
            delta = 0.01
            "#,
        )
        .unwrap();
        let Command::Solve(s) = cmd else {
            panic!("wrong command")
        };
        assert_eq!(s.solver, SolverKind::Newton);
        assert_eq!(s.subnodes, 10);
        assert_eq!(s.param_table["delta"], 0.01);
        assert_eq!(s.precision, Precision::F64);
    }

    #[test]
    fn toml_config_rejects_unknown_keys_and_run() {
        assert!(parse_config("command = \"tables\"\ndegree = 2\nbogus = 1\n").is_err());
        assert!(parse_config("command = \"run\"\nconfig = \"x.toml\"\n").is_err());
        assert!(parse_config("command = \"tables\"\n").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "aderdg",
            "converge",
            "--problem",
            "harm_osc",
            "--degree",
            "1",
            "--meshes",
            "6,11,16",
        ])
        .unwrap();
        let Command::Converge(c) = cli.command else {
            panic!("wrong command")
        };
        assert_eq!(c.meshes, vec![6, 11, 16]);
        assert_eq!(c.subnodes, 1000);
        assert!(Cli::try_parse_from([
            "aderdg",
            "stability",
            "--degree",
            "1",
            "--window",
            "0:1:0:1",
            "--ray",
            "1"
        ])
        .is_err());
    }
}
