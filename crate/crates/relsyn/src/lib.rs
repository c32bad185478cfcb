//! Relational program synthesis.
//!
//! Given grammars for one or more unknown functions and a universally
//! quantified specification relating them, the engine searches for programs
//! that satisfy the specification jointly. Counterexamples collected by a
//! bounded verifier are compiled into a hierarchical tree automaton whose
//! language is the set of program tuples consistent with them; a cost-ordered
//! search over that automaton then enforces that every occurrence of a
//! function receives the same program.

pub mod cegis;
pub mod dsl;
pub mod exec;
pub mod fta;
pub mod hfta;
pub mod lang;
pub mod search;
pub mod syntax;
pub mod values;

pub use values::Value;
