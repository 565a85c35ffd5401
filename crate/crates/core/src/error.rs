use crate::ir::{PredId, PredSig, Sym};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("{line}:{col}: duplicate module declaration")]
    DuplicateModuleDecl { line: usize, col: usize },

    #[error("missing `:- module(Name, [...])` declaration")]
    MissingModuleDecl,

    #[error("module `{0}` is defined more than once")]
    DuplicateModule(Sym),

    #[error("module `{module}` imports unknown module `{import}`")]
    UnresolvedImport { module: Sym, import: Sym },

    #[error("module `{module}` exports {pred}, which has no clauses")]
    ExportUndefined { module: Sym, pred: PredSig },

    #[error("module `{module}` calls {pred}, which is neither local nor exported by an imported module")]
    UndefinedCall { module: Sym, pred: PredSig },

    #[error("module `{module}` calls {pred}, exported by several imported modules")]
    AmbiguousCall { module: Sym, pred: PredSig },

    #[error("modules differ: `{0}` vs `{1}`")]
    ModuleMismatch(Sym, Sym),

    #[error("unknown module `{0}`")]
    UnknownModule(Sym),

    #[error("domain mismatch: expected {expected}, found {found}")]
    DomainMismatch { expected: String, found: String },

    #[error("abstract values over different variable sets ({0} vs {1})")]
    ArityMismatch(usize, usize),

    #[error("entry {0} is not an exported predicate of the program")]
    BadEntry(PredId),

    #[error("bad entry `{0}` (expected name/arity or module:name/arity)")]
    EntrySyntax(String),

    #[error("no unique root module: {0}")]
    NoRootModule(String),

    #[error("program fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("invalid diff: {0}")]
    InvalidDiff(String),

    #[error("state file: {0}")]
    State(String),

    #[error("unsupported state version {found} (expected {expected})")]
    StateVersion { found: u64, expected: u64 },

    #[error("verification failed at step {step}: {detail}")]
    Verification { step: usize, detail: String },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
