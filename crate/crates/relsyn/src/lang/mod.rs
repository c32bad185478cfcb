//! Relational specifications: formulas, spec files and relaxation.

pub mod formula;
pub mod relax;
pub mod spec;

pub use formula::{
    eval_formula, evaluate_ground, Conn, Formula, GroundFormula, Interpretation, Rel, Symbol, Term,
};
pub use relax::{relax, OccurrenceMap};
pub use spec::{parse_formula, parse_spec, Clause, FunDecl, RelationalSpec, SpecError};
