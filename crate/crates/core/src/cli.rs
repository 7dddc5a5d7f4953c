//! Batch front end behind the `seqscreen` binary.
//!
//! Exit codes: 0 success (or a finding that is not a failure), 1 an assumption
//! failed (`check`) or a discrepancy was flagged (`verify`), 2 invalid input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{load_model_file, Environment, LoadedModel};
use crate::propositions::{verify_prop1, verify_prop2, verify_prop3, Claim, Direction};
use crate::regularity::{evaluate_grid, report_from_grid, Quantity};
use crate::transforms::{derived_model_file, instantiate, relabel, RelabelingKind};

#[derive(Debug, Parser)]
#[command(name = "seqscreen", version, about = "Regularity checks for sequential-screening models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Model file (TOML).
    pub model: PathBuf,
    /// Lattice size as `NxM` (signal points x value points).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Absolute slack per adjacent pair in monotonicity scans.
    #[arg(long)]
    pub slack: Option<f64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan A0, A1, A2, FOSD and PSI and write a JSON report.
    Check(Common),
    /// Run a claim-level verification suite and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["1", "2", "3"])]
        prop: String,
        /// Direction for claim 3.
        #[arg(long, default_value = "forward", value_parser = ["forward", "converse"])]
        direction: String,
    },
    /// Relabel the signal space and write the derived model file.
    Transform {
        #[command(flatten)]
        common: Common,
        /// affine, inverse-hazard-integral, integrated-hazard, runningmax-hazard or mean.
        #[arg(long)]
        kind: String,
        /// Comma-separated parameters (affine: slope,intercept).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<f64>,
    },
    /// Export one field on the lattice as CSV with header `v,V,value`.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["H", "h", "dHdv", "gamma", "psi"])]
        what: String,
    },
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (n, m) = (parse(n)?, parse(m)?);
    if n == 0 || m == 0 {
        return Err("grid sizes must be positive".into());
    }
    Ok((n, m))
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (including the program name) and runs the command, writing
/// results without `--out` to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn load(common: &Common) -> Result<LoadedModel> {
    let mut loaded = load_model_file(&common.model)?;
    if let Some((n, m)) = common.grid {
        loaded.settings = loaded.settings.with_grid(n, m);
    }
    if let Some(slack) = common.slack {
        loaded.settings = loaded.settings.with_slack(slack);
    }
    loaded.settings.validate()?;
    Ok(loaded)
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Load(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Check(common) => {
            let loaded = load(common)?;
            let env = instantiate(&loaded)?;
            let eval = evaluate_grid(env.as_ref(), &loaded.settings)?;
            let report = report_from_grid(env.describe(), &eval, &loaded.settings);
            emit(common.out.as_deref(), &to_json(&report)?, out)?;
            for c in &report.checks {
                writeln!(err, "{:<5} {}", c.assumption.name(), if c.pass { "pass" } else { "FAIL" })?;
            }
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Verify {
            common,
            prop,
            direction,
        } => {
            let loaded = load(common)?;
            let env = instantiate(&loaded)?;
            let settings = &loaded.settings;
            let report = match prop.parse::<Claim>()? {
                Claim::HazardNormalization => verify_prop1(env, settings)?,
                Claim::BoundedBelowExclusion => verify_prop2(env, settings)?,
                Claim::AdditiveCharacterization => verify_prop3(env, direction.parse::<Direction>()?, settings)?,
            };
            emit(common.out.as_deref(), &to_json(&report)?, out)?;
            writeln!(err, "claim {}: {}", report.claim.number(), report.verdict)?;
            Ok(report.verdict.exit_code())
        }
        Command::Transform { common, kind, params } => {
            let loaded = load(common)?;
            if loaded.transform.is_some() {
                return Err(Error::Load("the model is already relabeled; transform its base model instead".into()));
            }
            let kind: RelabelingKind = kind.parse()?;
            let base: Arc<dyn Environment> = Arc::new(loaded.model.clone());
            let tm = relabel(base, kind, params, &loaded.settings)?;
            emit(common.out.as_deref(), &derived_model_file(&loaded, &tm)?, out)?;
            writeln!(err, "relabeling {} onto {}", tm.relabeling().label(), tm.relabeling().codomain())?;
            Ok(0)
        }
        Command::Grid { common, what } => {
            let loaded = load(common)?;
            let quantity: Quantity = what.parse()?;
            let env = instantiate(&loaded)?;
            let eval = evaluate_grid(env.as_ref(), &loaded.settings)?;
            let mut csv = String::from("v,V,value\n");
            for (v, x, value) in eval.triples(quantity) {
                csv.push_str(&format!("{v:.16e},{x:.16e},{value:.16e}\n"));
            }
            emit(common.out.as_deref(), &csv, out)?;
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parses() {
        assert_eq!(parse_grid("17x9"), Ok((17, 9)));
        assert!(parse_grid("17").is_err());
        assert!(parse_grid("0x3").is_err());
    }

    #[test]
    fn missing_model_is_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["seqscreen", "check", "/nonexistent/model.toml"], &mut out, &mut err);
        assert_eq!(code, 2);
        assert!(String::from_utf8(err).unwrap().starts_with("error:"));
    }
}
