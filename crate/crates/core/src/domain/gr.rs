//! Groundness: each variable is definitely ground (`g`) or unknown (`any`).

use std::fmt;
use std::str::FromStr;

use super::pointwise::{self, Component};
use super::{AbsValue, AbstractDomain, DomainKind, VTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gr {
    G,
    Any,
}

impl Component for Gr {
    const TOP: Gr = Gr::Any;
    const ALL: &'static [Gr] = &[Gr::G, Gr::Any];
    const CHAIN: usize = 1;

    fn leq(self, other: Gr) -> bool {
        self == other || other == Gr::Any
    }

    fn lub(self, other: Gr) -> Gr {
        if self == other {
            self
        } else {
            Gr::Any
        }
    }

    fn glb(self, other: Gr) -> Option<Gr> {
        Some(if self == Gr::G || other == Gr::G { Gr::G } else { Gr::Any })
    }

    fn wrap(cs: Vec<Gr>) -> AbsValue {
        AbsValue::Gr(cs)
    }

    fn unwrap(v: &AbsValue) -> Option<&[Gr]> {
        match v {
            AbsValue::Gr(cs) => Some(cs),
            _ => None,
        }
    }
}

impl fmt::Display for Gr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gr::G => "g",
            Gr::Any => "any",
        })
    }
}

impl FromStr for Gr {
    type Err = ();

    fn from_str(s: &str) -> Result<Gr, ()> {
        match s {
            "g" => Ok(Gr::G),
            "any" => Ok(Gr::Any),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GrDomain;

/// Splits `l = r` into variable bindings, or `None` on a functor clash.
fn bindings<'a>(l: &'a VTerm, r: &'a VTerm, out: &mut Vec<(usize, &'a VTerm)>) -> bool {
    match (l, r) {
        (VTerm::Var(i), t) | (t, VTerm::Var(i)) => {
            out.push((*i, t));
            true
        }
        (VTerm::Compound(f, xs), VTerm::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| bindings(x, y, out))
        }
        (VTerm::Int(a), VTerm::Int(b)) => a == b,
        (VTerm::Const(a), VTerm::Const(b)) => a == b,
        _ => false,
    }
}

impl AbstractDomain for GrDomain {
    fn kind(&self) -> DomainKind {
        DomainKind::Gr
    }

    fn top(&self, width: usize) -> AbsValue {
        pointwise::top::<Gr>(width)
    }

    fn leq(&self, a: &AbsValue, b: &AbsValue) -> bool {
        pointwise::leq::<Gr>(a, b)
    }

    fn lub(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        pointwise::lub::<Gr>(a, b)
    }

    fn glb(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        pointwise::glb::<Gr>(a, b)
    }

    fn unify(&self, v: &AbsValue, lhs: &VTerm, rhs: &VTerm) -> AbsValue {
        let AbsValue::Gr(cs) = v else {
            return AbsValue::Bot;
        };
        let mut eqs = Vec::new();
        if !bindings(lhs, rhs, &mut eqs) {
            return AbsValue::Bot;
        }
        let mut cs = cs.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for (x, t) in &eqs {
                let vars = t.vars();
                if cs[*x] == Gr::G {
                    for y in vars {
                        if cs[y] != Gr::G {
                            cs[y] = Gr::G;
                            changed = true;
                        }
                    }
                } else if vars.iter().all(|y| cs[*y] == Gr::G) {
                    cs[*x] = Gr::G;
                    changed = true;
                }
            }
        }
        AbsValue::Gr(cs)
    }

    fn project(&self, v: &AbsValue, positions: &[usize]) -> AbsValue {
        pointwise::project::<Gr>(v, positions)
    }

    fn extend(&self, v: &AbsValue, width: usize) -> AbsValue {
        pointwise::extend::<Gr>(v, width)
    }

    fn conjoin_at(&self, v: &AbsValue, positions: &[usize], exit: &AbsValue) -> AbsValue {
        pointwise::conjoin_at::<Gr>(v, positions, exit)
    }

    fn height(&self, width: usize) -> usize {
        pointwise::height::<Gr>(width)
    }

    fn enumerate(&self, width: usize) -> Vec<AbsValue> {
        pointwise::enumerate::<Gr>(width)
    }
}
