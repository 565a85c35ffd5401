//! Reachability: a call pattern is either unreached (`bot`) or reached.

use super::{AbsValue, AbstractDomain, DomainKind, VTerm};

#[derive(Clone, Copy, Debug, Default)]
pub struct PdbDomain;

fn check(v: &AbsValue) {
    assert!(matches!(v, AbsValue::Bot | AbsValue::Reach), "value {v:?} is not a pdb value");
}

impl AbstractDomain for PdbDomain {
    fn kind(&self) -> DomainKind {
        DomainKind::Pdb
    }

    fn top(&self, _width: usize) -> AbsValue {
        AbsValue::Reach
    }

    fn leq(&self, a: &AbsValue, b: &AbsValue) -> bool {
        check(a);
        check(b);
        a.is_bot() || !b.is_bot()
    }

    fn lub(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        if self.leq(a, b) {
            b.clone()
        } else {
            a.clone()
        }
    }

    fn glb(&self, a: &AbsValue, b: &AbsValue) -> AbsValue {
        if self.leq(a, b) {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn unify(&self, v: &AbsValue, _lhs: &VTerm, _rhs: &VTerm) -> AbsValue {
        check(v);
        v.clone()
    }

    fn project(&self, v: &AbsValue, _positions: &[usize]) -> AbsValue {
        check(v);
        v.clone()
    }

    fn extend(&self, v: &AbsValue, _width: usize) -> AbsValue {
        check(v);
        v.clone()
    }

    fn conjoin_at(&self, v: &AbsValue, _positions: &[usize], exit: &AbsValue) -> AbsValue {
        self.glb(v, exit)
    }

    fn height(&self, _width: usize) -> usize {
        1
    }

    fn enumerate(&self, _width: usize) -> Vec<AbsValue> {
        vec![AbsValue::Bot, AbsValue::Reach]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: PdbDomain = PdbDomain;

    #[test]
    fn two_point_lattice() {
        assert_eq!(D.glb(&AbsValue::Reach, &AbsValue::Reach), AbsValue::Reach);
        assert_eq!(D.lub(&AbsValue::Bot, &AbsValue::Reach), AbsValue::Reach);
        assert_eq!(D.glb(&AbsValue::Bot, &AbsValue::Reach), AbsValue::Bot);
        assert!(!D.leq(&AbsValue::Reach, &AbsValue::Bot));
    }

    #[test]
    fn transfers_are_identity_on_reached() {
        let v = AbsValue::Reach;
        assert_eq!(D.unify(&v, &VTerm::Int(0), &VTerm::Int(1)), v);
        assert_eq!(D.exit_to_success(&v, &[0], &AbsValue::Bot), AbsValue::Bot);
        assert_eq!(D.call_to_entry(&v, &[0, 1]), v);
    }
}
