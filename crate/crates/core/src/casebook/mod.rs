//! Scenario library, nonsmooth witnesses and reports.

mod integrate;
mod library;
pub mod quadrature;
mod report;
mod weak;
mod witness;

pub use integrate::SeparableIntegrator;
pub use library::{builtin_names, builtin_source, load_scenario};
pub use quadrature::{gauss_legendre, AxisRule, TensorGrid};
pub use report::{
    compare_symbol, format_json, SymbolComparison, SYMBOL_OPERATORS,
    has_witness, obstruction_residuals, run_report, sample_pairs, structure_residuals, symbol_residuals, Check,
    CheckResult, CheckSet, ObstructionResiduals, Report, StructureResiduals, Status, SymbolResiduals, ADJOINT_TOL,
    IDENTITY_TOL, OBSTRUCTION_ORDER1_TOL, OBSTRUCTION_ORDER2_TOL, SANDWICH_TOL, SCHEMA, STRUCTURE_TOL, SYMBOL_TOL,
};
pub use weak::{
    l2_adjointness, random_q_form, verify_with_ops, weak_harmonicity_verify, AdjointnessReport, Bump,
    TrialResult, WeakHarmonicReport, CONTROL_MIN, PAIRING_TOL,
};
pub use witness::{build_witness, q_residual, QuadratureConfig, WeakHarmonicWitness, WitnessKind};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CHARLAP_THREADS";

/// Worker pool sized by `CHARLAP_THREADS`, defaulting to rayon's choice.
pub fn thread_pool() -> rayon::ThreadPool {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
}
