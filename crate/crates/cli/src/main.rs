use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use charlap_core::casebook::{
    build_witness, compare_symbol, format_json, load_scenario, run_report, verify_with_ops, Check, CheckSet, Status,
    WitnessKind,
};
use charlap_core::charops::build_characteristic_ops;
use charlap_core::{Result, Scenario};

#[derive(Parser)]
#[command(name = "charlap", version, about = "Characteristic Laplacians of Pfaffian systems")]
#[command(after_help = "Set CHARLAP_THREADS to bound the worker threads used for quadrature.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymbolOp {
    Dq,
    Dqstar,
    Lapq,
    Obstruction,
}

impl SymbolOp {
    fn core_name(self) -> &'static str {
        match self {
            SymbolOp::Dq => "d_Q",
            SymbolOp::Dqstar => "d_Q*",
            SymbolOp::Lapq => "laplacian_Q",
            SymbolOp::Obstruction => "obstruction",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Constant-rank audit and bracket generation.
    Audit { scenario: String },
    /// Oracle symbol of an operator against its closed form at one point.
    Symbol {
        scenario: String,
        #[arg(long, value_enum)]
        op: SymbolOp,
        /// Comma-separated real coordinates.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        /// Comma-separated covector components on the coordinate basis.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        xi: Vec<f64>,
    },
    /// Kaehler verdicts; needs the distribution to be the whole tangent space.
    Kaehler { scenario: String },
    /// Residual of the generalized sub-Kaehler identity.
    Identity { scenario: String },
    /// Involutivity verdict and obstruction symbol residuals.
    Obstruct { scenario: String },
    /// Builds a non-smooth witness and verifies weak harmonicity.
    Witness {
        scenario: String,
        /// Defaults to the kind that fits the scenario.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Gauss nodes per axis.
        #[arg(long, default_value_t = 48)]
        nodes: usize,
    },
    /// Every check, as one report.
    Report {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

/// Runs `list` as a report. A single requested check that does not apply
/// to the scenario counts as not passed.
fn checks(s: &Scenario, list: &[Check], seed: Option<u64>, trials: usize) -> (serde_json::Value, bool) {
    let set = CheckSet { checks: list.to_vec(), witness_trials: trials, ..CheckSet::default() };
    let r = run_report(s, &set, seed);
    let skipped = list.len() == 1 && r.checks.iter().any(|c| c.status == Status::Skipped);
    (serde_json::to_value(&r).expect("report serializes"), r.passed && !skipped)
}

fn run(cmd: Command) -> Result<(String, bool, Option<PathBuf>)> {
    let (value, passed, out) = match cmd {
        Command::Audit { scenario } => {
            let (v, ok) = checks(&load_scenario(&scenario)?, &[Check::Audit, Check::Bracket], None, 0);
            (v, ok, None)
        }
        Command::Kaehler { scenario } => {
            let (v, ok) = checks(&load_scenario(&scenario)?, &[Check::Kaehler], None, 0);
            (v, ok, None)
        }
        Command::Identity { scenario } => {
            let (v, ok) = checks(&load_scenario(&scenario)?, &[Check::Identity], None, 0);
            (v, ok, None)
        }
        Command::Obstruct { scenario } => {
            let (v, ok) = checks(&load_scenario(&scenario)?, &[Check::Obstruct], None, 0);
            (v, ok, None)
        }
        Command::Symbol { scenario, op, point, xi } => {
            let s = load_scenario(&scenario)?;
            let ops = build_characteristic_ops(&s)?;
            let c = compare_symbol(&s, &ops, op.core_name(), &point, &xi)?;
            let ok = c.passed();
            (json!({ "scenario": s.name, "point": point, "xi": xi, "symbol": c }), ok, None)
        }
        Command::Witness { scenario, kind, trials, nodes } => {
            let s = load_scenario(&scenario)?;
            let kind = match kind {
                Some(k) => k.parse::<WitnessKind>()?,
                None => WitnessKind::for_scenario(&s),
            };
            let mut w = build_witness(&s, kind)?;
            w.quadrature.nodes = nodes;
            let ops = build_characteristic_ops(&s)?;
            let r = verify_with_ops(&w, &s, &ops, trials)?;
            let ok = r.passed;
            (json!({ "scenario": s.name, "witness": w, "verification": r }), ok, None)
        }
        Command::Report { scenario, seed, out, trials } => {
            let (v, ok) = checks(&load_scenario(&scenario)?, &Check::all(), seed, trials);
            (v, ok, out)
        }
    };
    Ok((format_json(&value), passed, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((text, passed, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
