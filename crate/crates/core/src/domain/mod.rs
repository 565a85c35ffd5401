//! Abstract domains. Values are positional: component `i` describes the
//! `i`-th variable of whatever frame (clause or head) the value annotates.

mod bit;
mod gr;
mod pdb;
mod pointwise;

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ir::Sym;

pub use bit::{Bit, BitDomain};
pub use gr::{Gr, GrDomain};
pub use pdb::PdbDomain;

/// A term inside a clause with variables replaced by frame positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VTerm {
    Var(usize),
    Int(i64),
    Const(Sym),
    Compound(Sym, Vec<VTerm>),
}

impl VTerm {
    pub fn for_each_var(&self, f: &mut impl FnMut(usize)) {
        match self {
            VTerm::Var(i) => f(*i),
            VTerm::Int(_) | VTerm::Const(_) => {}
            VTerm::Compound(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_var(&mut |i| out.push(i));
        out
    }
}

/// An element of one of the shipped lattices.
///
/// `Bot` is shared by all domains; a bit or gr value never holds a bottom
/// component, since one bottom component makes the whole description empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbsValue {
    Bot,
    /// The reachable element of the pdb domain.
    Reach,
    Bit(Vec<Bit>),
    Gr(Vec<Gr>),
}

impl AbsValue {
    pub fn is_bot(&self) -> bool {
        matches!(self, AbsValue::Bot)
    }

    /// Number of components, or `None` for values without a frame.
    pub fn width(&self) -> Option<usize> {
        match self {
            AbsValue::Bit(v) => Some(v.len()),
            AbsValue::Gr(v) => Some(v.len()),
            AbsValue::Bot | AbsValue::Reach => None,
        }
    }

    /// Compact rendering with the given variable names, omitting top
    /// components: `P=b`, `top`, `bot`.
    pub fn show(&self, names: &[impl AsRef<str>]) -> String {
        let parts: Vec<String> = match self {
            AbsValue::Bot => return "bot".into(),
            AbsValue::Reach => return "top".into(),
            AbsValue::Bit(cs) => cs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != Bit::Top)
                .map(|(i, c)| format!("{}={}", var_name(names, i), c))
                .collect(),
            AbsValue::Gr(cs) => cs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != Gr::Any)
                .map(|(i, c)| format!("{}={}", var_name(names, i), c))
                .collect(),
        };
        if parts.is_empty() {
            "top".into()
        } else {
            parts.join(",")
        }
    }

    /// JSON form `{"A": "z", ...}` over positional names, or `"bot"`/`"top"`.
    pub fn to_json(&self) -> Value {
        match self {
            AbsValue::Bot => Value::from("bot"),
            AbsValue::Reach => Value::from("top"),
            AbsValue::Bit(cs) => components_json(cs),
            AbsValue::Gr(cs) => components_json(cs),
        }
    }

    pub fn from_json(kind: DomainKind, width: usize, v: &Value) -> Result<AbsValue> {
        let bad = || Error::State(format!("bad {kind} value {v}"));
        match (kind, v) {
            (_, Value::String(s)) if s == "bot" => Ok(AbsValue::Bot),
            (DomainKind::Pdb, Value::String(s)) if s == "top" => Ok(AbsValue::Reach),
            (DomainKind::Bit, Value::Object(m)) => {
                Ok(AbsValue::Bit(components_from_json(m, width).ok_or_else(bad)?))
            }
            (DomainKind::Gr, Value::Object(m)) => {
                Ok(AbsValue::Gr(components_from_json(m, width).ok_or_else(bad)?))
            }
            _ => Err(bad()),
        }
    }
}

fn var_name(names: &[impl AsRef<str>], i: usize) -> String {
    names.get(i).map(|n| n.as_ref().to_string()).unwrap_or_else(|| position_name(i))
}

/// Canonical name of position `i`: `A`..`Z`, then `V26`, `V27`, ...
pub fn position_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("V{i}")
    }
}

fn components_json<C: fmt::Display>(cs: &[C]) -> Value {
    let mut m = Map::new();
    for (i, c) in cs.iter().enumerate() {
        m.insert(position_name(i), Value::from(c.to_string()));
    }
    Value::Object(m)
}

fn components_from_json<C: FromStr>(m: &Map<String, Value>, width: usize) -> Option<Vec<C>> {
    if m.len() != width {
        return None;
    }
    (0..width).map(|i| m.get(&position_name(i))?.as_str()?.parse().ok()).collect()
}

/// Tag of a shipped domain, as used on the command line and in state files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainKind {
    Bit,
    Pdb,
    Gr,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [DomainKind::Bit, DomainKind::Pdb, DomainKind::Gr];

    pub fn ops(self) -> &'static dyn AbstractDomain {
        match self {
            DomainKind::Bit => &BitDomain,
            DomainKind::Pdb => &PdbDomain,
            DomainKind::Gr => &GrDomain,
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Bit => "bit",
            DomainKind::Pdb => "pdb",
            DomainKind::Gr => "gr",
        })
    }
}

impl FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bit" => Ok(DomainKind::Bit),
            "pdb" => Ok(DomainKind::Pdb),
            "gr" => Ok(DomainKind::Gr),
            other => Err(format!("unknown domain `{other}` (expected bit, pdb or gr)")),
        }
    }
}

/// Operations the analyzer needs from a domain. Every value passed in must
/// belong to this domain; mixing domains or frame widths is a logic error
/// and panics.
pub trait AbstractDomain: Send + Sync {
    fn kind(&self) -> DomainKind;

    fn top(&self, width: usize) -> AbsValue;

    fn leq(&self, a: &AbsValue, b: &AbsValue) -> bool;
    fn lub(&self, a: &AbsValue, b: &AbsValue) -> AbsValue;
    fn glb(&self, a: &AbsValue, b: &AbsValue) -> AbsValue;

    /// Every shipped domain is finite, so widening is the join.
    fn widen(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        self.lub(a, b)
    }

    /// Abstract `lhs = rhs`.
    fn unify(&self, v: &AbsValue, lhs: &VTerm, rhs: &VTerm) -> AbsValue;

    fn transfer_primitive(&self, op: &str, args: &[VTerm], v: &AbsValue) -> AbsValue {
        match (op, args) {
            _ if v.is_bot() => AbsValue::Bot,
            ("=", [l, r]) => self.unify(v, l, r),
            ("fail" | "false", []) => AbsValue::Bot,
            // `true` and anything unknown: identity over-approximates
            _ => v.clone(),
        }
    }

    /// Keeps the listed positions, in the listed order. Also serves as
    /// renaming when `positions` is a permutation.
    fn project(&self, v: &AbsValue, positions: &[usize]) -> AbsValue;

    /// Appends unconstrained components up to `width`.
    fn extend(&self, v: &AbsValue, width: usize) -> AbsValue;

    /// Meets `exit`, a value over the callee head, into `v` through the
    /// call's argument positions.
    fn conjoin_at(&self, v: &AbsValue, positions: &[usize], exit: &AbsValue) -> AbsValue;

    fn call_to_entry(&self, v: &AbsValue, args: &[usize]) -> AbsValue {
        self.project(v, args)
    }

    fn exit_to_success(&self, v: &AbsValue, args: &[usize], exit: &AbsValue) -> AbsValue {
        self.conjoin_at(v, args, exit)
    }

    fn rename(&self, v: &AbsValue, positions: &[usize]) -> AbsValue {
        self.project(v, positions)
    }

    /// Length of the longest strictly ascending chain over `width` positions.
    fn height(&self, width: usize) -> usize;

    /// All values over `width` positions, bottom included.
    fn enumerate(&self, width: usize) -> Vec<AbsValue>;

    /// Checks that `v` is a value of this domain over `width` positions.
    fn check(&self, v: &AbsValue, width: usize) -> Result<()> {
        let ok = match (self.kind(), v) {
            (_, AbsValue::Bot) => true,
            (DomainKind::Pdb, AbsValue::Reach) => true,
            (DomainKind::Bit, AbsValue::Bit(cs)) => cs.len() == width,
            (DomainKind::Gr, AbsValue::Gr(cs)) => cs.len() == width,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainMismatch { expected: format!("{} over {width} vars", self.kind()), found: format!("{v:?}") })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parse_and_display() {
        for k in DomainKind::ALL {
            assert_eq!(k.to_string().parse::<DomainKind>().unwrap(), k);
            assert_eq!(k.ops().kind(), k);
        }
        assert!("bogus".parse::<DomainKind>().is_err());
    }

    #[test]
    fn json_roundtrip_all_small_values() {
        for k in DomainKind::ALL {
            for w in 0..3 {
                for v in k.ops().enumerate(w) {
                    let back = AbsValue::from_json(k, w, &v.to_json()).unwrap();
                    assert_eq!(back, v);
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let v = AbsValue::Bit(vec![Bit::Top, Bit::Z]);
        assert_eq!(v.to_json().to_string(), r#"{"A":"top","B":"z"}"#);
        assert!(AbsValue::from_json(DomainKind::Bit, 3, &v.to_json()).is_err());
        assert!(AbsValue::from_json(DomainKind::Gr, 2, &v.to_json()).is_err());
    }

    #[test]
    fn compact_rendering() {
        let v = AbsValue::Bit(vec![Bit::Top, Bit::Z, Bit::B]);
        assert_eq!(v.show(&["M", "X", "P"]), "X=z,P=b");
        assert_eq!(AbsValue::Bit(vec![Bit::Top; 2]).show(&["M", "P"]), "top");
        assert_eq!(AbsValue::Bot.show(&["M"]), "bot");
        assert_eq!(AbsValue::Gr(vec![Gr::G]).show(&[] as &[&str]), "A=g");
    }

    #[test]
    fn primitive_dispatch() {
        for k in DomainKind::ALL {
            let d = k.ops();
            let top = d.top(1);
            assert_eq!(d.transfer_primitive("true", &[], &top), top);
            assert_eq!(d.transfer_primitive("fail", &[], &top), AbsValue::Bot);
            assert_eq!(d.transfer_primitive("false", &[], &top), AbsValue::Bot);
            assert_eq!(d.transfer_primitive("=", &[VTerm::Var(0), VTerm::Var(0)], &AbsValue::Bot), AbsValue::Bot);
        }
    }
}
