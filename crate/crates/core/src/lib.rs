pub mod casebook;
pub mod charops;
pub mod error;
pub mod exterior;
pub mod framedgeom;
pub mod hermitian;
pub mod symexpr;

pub use error::{Error, Result};
pub use casebook::{load_scenario, run_report, Check, CheckSet, Report, Status};
pub use exterior::Form;
pub use framedgeom::Scenario;
pub use symexpr::{CExpr, Expr, Tri};
