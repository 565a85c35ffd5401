use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// Functor used for list cells; `[]` is the constant `"[]"`.
pub const CONS: &str = ".";
pub const NIL: &str = "[]";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Sym),
    Int(i64),
    Const(Sym),
    Compound(Sym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Visits variables left to right, repetitions included.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a Sym)) {
        match self {
            Term::Var(v) => f(v),
            Term::Int(_) | Term::Const(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Sym, Sym>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| a.rename(map)).collect())
            }
            other => other.clone(),
        }
    }
}

fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => !chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => name != NIL,
    }
}

fn write_atom_name(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if needs_quotes(name) {
        write!(f, "'{}'", name.replace('\'', "\\'"))
    } else {
        f.write_str(name)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Int(i) => write!(f, "{i}"),
            Term::Const(c) => write_atom_name(f, c),
            Term::Compound(functor, args) if &**functor == CONS && args.len() == 2 => {
                f.write_str("[")?;
                write!(f, "{}", args[0])?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::Compound(g, rest) if &**g == CONS && rest.len() == 2 => {
                            write!(f, ",{}", rest[0])?;
                            tail = &rest[1];
                        }
                        Term::Const(c) if &**c == NIL => break,
                        other => {
                            write!(f, "|{other}")?;
                            break;
                        }
                    }
                }
                f.write_str("]")
            }
            Term::Compound(functor, args) => {
                write_atom_name(f, functor)?;
                write_args(f, args)
            }
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

/// Predicate name and arity, unqualified.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredSig {
    pub name: Sym,
    pub arity: usize,
}

impl PredSig {
    pub fn new(name: &str, arity: usize) -> Self {
        PredSig { name: sym(name), arity }
    }
}

impl fmt::Display for PredSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// A predicate qualified by its defining module.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredId {
    pub module: Sym,
    pub name: Sym,
    pub arity: usize,
}

impl PredId {
    pub fn new(module: &str, name: &str, arity: usize) -> Self {
        PredId { module: sym(module), name: sym(name), arity }
    }

    pub fn sig(&self) -> PredSig {
        PredSig { name: self.name.clone(), arity: self.arity }
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}", self.module, self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: sym(pred), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn sig(&self) -> PredSig {
        PredSig { name: self.pred.clone(), arity: self.args.len() }
    }

    /// True when every argument is a variable and no variable repeats.
    pub fn is_normal_head(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.args.iter().all(|a| matches!(a, Term::Var(v) if seen.insert(v.clone())))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_name(f, &self.pred)?;
        write_args(f, &self.args)
    }
}

/// Constraint symbols handled by the domains rather than resolved as calls.
pub const PRIMITIVES: &[(&str, usize)] = &[("=", 2), ("true", 0), ("fail", 0), ("false", 0)];

pub fn is_primitive(name: &str, arity: usize) -> bool {
    PRIMITIVES.iter().any(|&(n, a)| n == name && a == arity)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Call(Atom),
    Prim { op: Sym, args: Vec<Term> },
}

impl Literal {
    pub fn unify(lhs: Term, rhs: Term) -> Literal {
        Literal::Prim { op: sym("="), args: vec![lhs, rhs] }
    }

    pub fn terms(&self) -> &[Term] {
        match self {
            Literal::Call(a) => &a.args,
            Literal::Prim { args, .. } => args,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Call(a) => write!(f, "{a}"),
            Literal::Prim { op, args } if &**op == "=" && args.len() == 2 => {
                write!(f, "{}={}", args[0], args[1])
            }
            Literal::Prim { op, args } => {
                write_atom_name(f, op)?;
                write_args(f, args)
            }
        }
    }
}

/// Structural clause identity: a hash of the alpha-renamed normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClauseId(pub u64);

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for ClauseId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s.trim(), 16).map(ClauseId)
    }
}

impl Serialize for ClauseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ClauseId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Literal>,
    pub id: ClauseId,
}

impl Clause {
    /// Builds a clause and computes its id.
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        let mut c = Clause { head, body, id: ClauseId(0) };
        c.id = clause_hash(&c);
        c
    }

    pub fn sig(&self) -> PredSig {
        self.head.sig()
    }

    /// Variables in order of first occurrence, head first.
    pub fn vars(&self) -> Vec<Sym> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |v: &Sym| {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        };
        self.head.args.iter().for_each(|t| t.for_each_var(&mut push));
        for lit in &self.body {
            lit.terms().iter().for_each(|t| t.for_each_var(&mut push));
        }
        out
    }

    pub fn calls(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            Literal::Call(a) => Some(a),
            _ => None,
        })
    }

    pub fn rename(&self, map: &BTreeMap<Sym, Sym>) -> Clause {
        let head = Atom {
            pred: self.head.pred.clone(),
            args: self.head.args.iter().map(|t| t.rename(map)).collect(),
        };
        let body = self
            .body
            .iter()
            .map(|l| match l {
                Literal::Call(a) => Literal::Call(Atom {
                    pred: a.pred.clone(),
                    args: a.args.iter().map(|t| t.rename(map)).collect(),
                }),
                Literal::Prim { op, args } => Literal::Prim {
                    op: op.clone(),
                    args: args.iter().map(|t| t.rename(map)).collect(),
                },
            })
            .collect();
        Clause { head, body, id: self.id }
    }

    /// Renames variables to `_0`, `_1`, ... by first occurrence.
    pub fn alpha_normal(&self) -> Clause {
        let map = self
            .vars()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, sym(&format!("_{i}"))))
            .collect();
        self.rename(&map)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

/// Hash of the alpha-normal form of the normalized clause, so variants and
/// unnormalized spellings of the same clause share an id.
pub fn clause_hash(c: &Clause) -> ClauseId {
    let normal = super::normalize::normalize_body_and_head(c);
    let text = normal.alpha_normal().to_string();
    let digest = Sha256::digest(text.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ClauseId(u64::from_be_bytes(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_display() {
        let t = Term::Compound(
            sym(CONS),
            vec![Term::var("C"), Term::Compound(sym(CONS), vec![Term::Int(1), Term::var("Cs")])],
        );
        assert_eq!(t.to_string(), "[C,1|Cs]");
        let closed = Term::Compound(sym(CONS), vec![Term::Int(0), Term::Const(sym(NIL))]);
        assert_eq!(closed.to_string(), "[0]");
    }

    #[test]
    fn quoted_atoms() {
        assert_eq!(Term::Const(sym("Hello")).to_string(), "'Hello'");
        assert_eq!(Term::Const(sym("a_b1")).to_string(), "a_b1");
    }

    #[test]
    fn clause_id_hex_roundtrip() {
        let id = ClauseId(0xdead_beef_0123_4567);
        assert_eq!(id.to_string().parse::<ClauseId>().unwrap(), id);
    }
}
