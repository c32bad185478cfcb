//! DSL framework: grammars, constructor semantics, program trees and costs.

pub mod ast;
pub mod codec;
pub mod compare;
pub mod cost;
pub mod grammar;
pub mod semantics;

pub use ast::{conforms, parse_program, Node, ProgramAst};
pub use cost::CostModel;
pub use grammar::{load_grammar, Grammar, GrammarError, Production, Rhs, SymId};
