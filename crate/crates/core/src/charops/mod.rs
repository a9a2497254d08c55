//! Operators of the characteristic complex and their principal symbols.

mod build;
mod op;
mod symbol;

pub use build::{
    build_characteristic_ops, codifferential, codifferential_via_star, d_of_monomial, dolbeault_split,
    exterior_d, identity, symbolic_projector, CharacteristicOps, ComplexOps, OPERATOR_NAMES,
};
pub use op::{
    mat_add_entry, mat_adjoint, mat_apply, mat_identity, mat_mul, mat_scale, mat_sum, FirstOrderOp,
    FrameMetric, OperatorField, SparseMat,
};
pub use symbol::{
    closed_form_symbols, covector_data, hoermander_applicability, symbol_oracle, Applicability,
    ClosedForms, CovectorData, SymbolMatrix,
};

#[cfg(test)]
mod tests;
