//! The bit domain: each variable is known to be 0 (`z`), 1 (`o`), either
//! bit (`b`), or anything (`top`).

use std::fmt;
use std::str::FromStr;

use super::pointwise::{self, Component};
use super::{AbsValue, AbstractDomain, DomainKind, VTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bit {
    Z,
    O,
    B,
    Top,
}

impl Component for Bit {
    const TOP: Bit = Bit::Top;
    const ALL: &'static [Bit] = &[Bit::Z, Bit::O, Bit::B, Bit::Top];
    const CHAIN: usize = 2;

    fn leq(self, other: Bit) -> bool {
        self == other || other == Bit::Top || (other == Bit::B && self != Bit::Top)
    }

    fn lub(self, other: Bit) -> Bit {
        match (self, other) {
            (a, b) if a == b => a,
            (Bit::Top, _) | (_, Bit::Top) => Bit::Top,
            _ => Bit::B,
        }
    }

    fn glb(self, other: Bit) -> Option<Bit> {
        match (self, other) {
            (a, b) if a == b => Some(a),
            (Bit::Top, x) | (x, Bit::Top) => Some(x),
            (Bit::B, x) | (x, Bit::B) => Some(x),
            _ => None,
        }
    }

    fn wrap(cs: Vec<Bit>) -> AbsValue {
        AbsValue::Bit(cs)
    }

    fn unwrap(v: &AbsValue) -> Option<&[Bit]> {
        match v {
            AbsValue::Bit(cs) => Some(cs),
            _ => None,
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bit::Z => "z",
            Bit::O => "o",
            Bit::B => "b",
            Bit::Top => "top",
        })
    }
}

impl FromStr for Bit {
    type Err = ();

    fn from_str(s: &str) -> Result<Bit, ()> {
        match s {
            "z" => Ok(Bit::Z),
            "o" => Ok(Bit::O),
            "b" => Ok(Bit::B),
            "top" => Ok(Bit::Top),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BitDomain;

impl BitDomain {
    fn unify_into(cs: &mut [Bit], l: &VTerm, r: &VTerm) -> bool {
        match (l, r) {
            (VTerm::Var(i), VTerm::Var(j)) => match cs[*i].glb(cs[*j]) {
                Some(m) => {
                    cs[*i] = m;
                    cs[*j] = m;
                    true
                }
                None => false,
            },
            (VTerm::Var(i), VTerm::Int(n @ (0 | 1))) | (VTerm::Int(n @ (0 | 1)), VTerm::Var(i)) => {
                let bit = if *n == 0 { Bit::Z } else { Bit::O };
                match cs[*i].glb(bit) {
                    Some(m) => {
                        cs[*i] = m;
                        true
                    }
                    None => false,
                }
            }
            // a non-bit term carries no bit information about the variable
            (VTerm::Var(_), _) | (_, VTerm::Var(_)) => true,
            (VTerm::Compound(f, xs), VTerm::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| Self::unify_into(cs, x, y))
            }
            (VTerm::Int(a), VTerm::Int(b)) => a == b,
            (VTerm::Const(a), VTerm::Const(b)) => a == b,
            _ => false,
        }
    }
}

impl AbstractDomain for BitDomain {
    fn kind(&self) -> DomainKind {
        DomainKind::Bit
    }

    fn top(&self, width: usize) -> AbsValue {
        pointwise::top::<Bit>(width)
    }

    fn leq(&self, a: &AbsValue, b: &AbsValue) -> bool {
        pointwise::leq::<Bit>(a, b)
    }

    fn lub(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        pointwise::lub::<Bit>(a, b)
    }

    fn glb(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        pointwise::glb::<Bit>(a, b)
    }

    fn unify(&self, v: &AbsValue, lhs: &VTerm, rhs: &VTerm) -> AbsValue {
        let AbsValue::Bit(cs) = v else {
            return AbsValue::Bot;
        };
        let mut cs = cs.clone();
        // var-var sharing can tighten a variable seen earlier in the same
        // constraint, so repeat until nothing moves
        loop {
            let before = cs.clone();
            if !Self::unify_into(&mut cs, lhs, rhs) {
                return AbsValue::Bot;
            }
            if cs == before {
                return AbsValue::Bit(cs);
            }
        }
    }

    fn project(&self, v: &AbsValue, positions: &[usize]) -> AbsValue {
        pointwise::project::<Bit>(v, positions)
    }

    fn extend(&self, v: &AbsValue, width: usize) -> AbsValue {
        pointwise::extend::<Bit>(v, width)
    }

    fn conjoin_at(&self, v: &AbsValue, positions: &[usize], exit: &AbsValue) -> AbsValue {
        pointwise::conjoin_at::<Bit>(v, positions, exit)
    }

    fn height(&self, width: usize) -> usize {
        pointwise::height::<Bit>(width)
    }

    fn enumerate(&self, width: usize) -> Vec<AbsValue> {
        pointwise::enumerate::<Bit>(width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::sym;

    const D: BitDomain = BitDomain;

    fn bits(cs: &[Bit]) -> AbsValue {
        AbsValue::Bit(cs.to_vec())
    }

    /// Concrete values used by the soundness checks: the two bits plus a
    /// stand-in for every other term.
    #[derive(Clone, Copy, PartialEq, Debug)]
    enum Val {
        Zero,
        One,
        Other,
    }

    fn gamma(c: Bit, x: Val) -> bool {
        match c {
            Bit::Z => x == Val::Zero,
            Bit::O => x == Val::One,
            Bit::B => x != Val::Other,
            Bit::Top => true,
        }
    }

    fn in_gamma(v: &AbsValue, xs: &[Val]) -> bool {
        match v {
            AbsValue::Bot => false,
            AbsValue::Bit(cs) => cs.iter().zip(xs).all(|(c, x)| gamma(*c, *x)),
            _ => unreachable!(),
        }
    }

    fn eval(t: &VTerm, xs: &[Val]) -> Option<Val> {
        match t {
            VTerm::Var(i) => Some(xs[*i]),
            VTerm::Int(0) => Some(Val::Zero),
            VTerm::Int(1) => Some(Val::One),
            _ => None,
        }
    }

    /// Concrete satisfaction for constraints whose sides are variables or
    /// bit literals.
    fn holds(l: &VTerm, r: &VTerm, xs: &[Val]) -> bool {
        match (eval(l, xs), eval(r, xs)) {
            // two distinct "other" terms may or may not be equal; be generous
            (Some(Val::Other), Some(Val::Other)) => true,
            (Some(a), Some(b)) => a == b,
            _ => unreachable!(),
        }
    }

    fn assignments(n: usize) -> Vec<Vec<Val>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    [Val::Zero, Val::One, Val::Other].into_iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }

    fn raw_tuples(n: usize) -> Vec<Vec<Option<Bit>>> {
        let mut out = vec![vec![]];
        let comps = [None, Some(Bit::Z), Some(Bit::O), Some(Bit::B), Some(Bit::Top)];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    comps.into_iter().map(move |c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn lub_of_zero_and_one_is_b() {
        assert_eq!(D.lub(&bits(&[Bit::Z]), &bits(&[Bit::O])), bits(&[Bit::B]));
        assert_eq!(D.lub(&AbsValue::Bot, &bits(&[Bit::O])), bits(&[Bit::O]));
    }

    #[test]
    fn glb_of_zero_and_one_is_bottom() {
        assert_eq!(D.glb(&bits(&[Bit::Z]), &bits(&[Bit::O])), AbsValue::Bot);
        assert_eq!(D.glb(&bits(&[Bit::B]), &bits(&[Bit::Z])), bits(&[Bit::Z]));
    }

    #[test]
    fn unify_examples() {
        let p0 = D.unify(&bits(&[Bit::Top]), &VTerm::Var(0), &VTerm::Int(0));
        assert_eq!(p0, bits(&[Bit::Z]));
        let xy = D.unify(&bits(&[Bit::Z, Bit::O]), &VTerm::Var(0), &VTerm::Var(1));
        assert_eq!(xy, AbsValue::Bot);
        let nil = D.unify(&bits(&[Bit::Z]), &VTerm::Var(0), &VTerm::Const(sym("[]")));
        assert_eq!(nil, bits(&[Bit::Z]));
        let clash = D.unify(&bits(&[Bit::Top]), &VTerm::Int(0), &VTerm::Int(1));
        assert_eq!(clash, AbsValue::Bot);
    }

    #[test]
    fn struct_unification_is_pairwise() {
        let f = |a, b| VTerm::Compound(sym("f"), vec![a, b]);
        let v = bits(&[Bit::Top, Bit::Top, Bit::O]);
        let out = D.unify(&v, &f(VTerm::Var(0), VTerm::Int(0)), &f(VTerm::Var(2), VTerm::Var(1)));
        assert_eq!(out, bits(&[Bit::O, Bit::Z, Bit::O]));
        let g = VTerm::Compound(sym("g"), vec![VTerm::Var(0)]);
        assert_eq!(D.unify(&v, &g, &f(VTerm::Var(0), VTerm::Var(1))), AbsValue::Bot);
    }

    #[test]
    fn lattice_laws_exhaustive_up_to_three_vars() {
        for n in 0..=3 {
            let all = D.enumerate(n);
            for a in &all {
                assert!(D.leq(a, a));
                for b in &all {
                    let j = D.lub(a, b);
                    let m = D.glb(a, b);
                    assert!(D.leq(a, &j) && D.leq(b, &j));
                    assert!(D.leq(&m, a) && D.leq(&m, b));
                    assert_eq!(j, D.lub(b, a));
                    assert_eq!(m, D.glb(b, a));
                    assert_eq!(D.lub(a, &D.glb(a, b)), *a, "absorption");
                    assert_eq!(D.glb(a, &D.lub(a, b)), *a, "absorption");
                    if D.leq(a, b) && D.leq(b, a) {
                        assert_eq!(a, b, "antisymmetry");
                    }
                    assert_eq!(D.leq(a, b), j == *b);
                    if n <= 2 {
                        for c in &all {
                            if D.leq(a, b) && D.leq(b, c) {
                                assert!(D.leq(a, c), "transitivity");
                            }
                            if D.leq(a, c) && D.leq(b, c) {
                                assert!(D.leq(&j, c), "least upper bound");
                            }
                            if D.leq(c, a) && D.leq(c, b) {
                                assert!(D.leq(c, &m), "greatest lower bound");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bottom_components_collapse() {
        // all 125 raw tuples over three variables map onto valid values
        let raws = raw_tuples(3);
        assert_eq!(raws.len(), 125);
        let values: std::collections::BTreeSet<AbsValue> = raws
            .iter()
            .map(|t| pointwise::collect(t.iter().copied()))
            .collect();
        assert_eq!(values.len(), 4 * 4 * 4 + 1);
    }

    fn constraints(n: usize) -> Vec<(VTerm, VTerm)> {
        let mut out = Vec::new();
        for i in 0..n {
            out.push((VTerm::Var(i), VTerm::Int(0)));
            out.push((VTerm::Int(1), VTerm::Var(i)));
            for j in 0..n {
                out.push((VTerm::Var(i), VTerm::Var(j)));
            }
        }
        out.push((VTerm::Int(0), VTerm::Int(1)));
        out.push((VTerm::Int(1), VTerm::Int(1)));
        out
    }

    #[test]
    fn transfer_is_sound_for_bit_assignments() {
        for n in 1..=3 {
            for v in D.enumerate(n) {
                for (l, r) in constraints(n) {
                    let out = D.unify(&v, &l, &r);
                    for xs in assignments(n) {
                        if in_gamma(&v, &xs) && holds(&l, &r, &xs) {
                            assert!(in_gamma(&out, &xs), "{v:?} {l:?}={r:?} loses {xs:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transfer_and_adapters_are_monotone() {
        for n in 1..=2 {
            let all = D.enumerate(n);
            for a in &all {
                for b in all.iter().filter(|b| D.leq(a, b)) {
                    for (l, r) in constraints(n) {
                        assert!(D.leq(&D.unify(a, &l, &r), &D.unify(b, &l, &r)));
                    }
                    let args: Vec<usize> = (0..n).rev().collect();
                    assert!(D.leq(&D.call_to_entry(a, &args), &D.call_to_entry(b, &args)));
                    for e in D.enumerate(n) {
                        assert!(D.leq(&D.exit_to_success(a, &args, &e), &D.exit_to_success(b, &args, &e)));
                        for e2 in D.enumerate(n).iter().filter(|e2| D.leq(&e, e2)) {
                            assert!(D.leq(&D.exit_to_success(a, &args, &e), &D.exit_to_success(a, &args, e2)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn call_and_exit_adapters() {
        // caller frame (Msg, P, A) after A=0, calling par(Msg, A, P)
        let caller = bits(&[Bit::Top, Bit::Top, Bit::Z]);
        let entry = D.call_to_entry(&caller, &[0, 2, 1]);
        assert_eq!(entry, bits(&[Bit::Top, Bit::Z, Bit::Top]));
        let exit = bits(&[Bit::Top, Bit::Z, Bit::Z]);
        assert_eq!(D.exit_to_success(&caller, &[0, 2, 1], &exit), bits(&[Bit::Top, Bit::Z, Bit::Z]));
        assert_eq!(D.exit_to_success(&caller, &[0, 2, 1], &AbsValue::Bot), AbsValue::Bot);
    }

    #[test]
    fn height_bounds_chains() {
        // longest chain over one var: bot < z < b < top
        assert_eq!(D.height(1), 3);
        let all = D.enumerate(2);
        // longest chain ending at each value, by dynamic programming over the
        // values sorted by the size of their down-set
        let mut sorted = all.clone();
        sorted.sort_by_key(|a| all.iter().filter(|b| D.leq(b, a)).count());
        let mut best = vec![0usize; sorted.len()];
        for i in 0..sorted.len() {
            for j in 0..i {
                if D.leq(&sorted[j], &sorted[i]) && sorted[j] != sorted[i] {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        assert_eq!(best.into_iter().max().unwrap(), D.height(2));
    }
}
