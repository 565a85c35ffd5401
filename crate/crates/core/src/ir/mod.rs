//! Program representation: terms, clauses, modules, programs and diffs.

mod diff;
mod module;
mod normalize;
mod parse;
mod program;
pub mod scc;
mod split;
mod term;

pub use diff::{diff_modules, Diff, ModuleDiff};
pub use module::Module;
pub use normalize::{is_normalized, normalize_clause};
pub use parse::{parse_clause, parse_module};
pub use program::{program_load, program_load_dir, LoadMode, ModuleIndex, Program, ProgramIndex};
pub use split::{pred_scc, split_sources_scc, split_sources_scc_with, submodule_name};
pub use term::{
    clause_hash, is_primitive, sym, Atom, Clause, ClauseId, Literal, PredId, PredSig, Sym, Term, CONS, NIL,
    PRIMITIVES,
};
