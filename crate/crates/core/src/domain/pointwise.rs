//! Shared machinery for non-relational domains: a value is a vector of
//! components, and one bottom component collapses it to `AbsValue::Bot`.

use super::AbsValue;

pub(crate) trait Component: Copy + Eq + Ord + 'static {
    const TOP: Self;
    /// Non-bottom components, bottom first in a linear extension.
    const ALL: &'static [Self];

    fn leq(self, other: Self) -> bool;
    fn lub(self, other: Self) -> Self;
    /// `None` is the bottom component.
    fn glb(self, other: Self) -> Option<Self>;

    /// Steps from the least non-bottom component to `TOP` along a chain.
    const CHAIN: usize;

    fn wrap(cs: Vec<Self>) -> AbsValue;
    fn unwrap(v: &AbsValue) -> Option<&[Self]>;
}

fn parts<C: Component>(v: &AbsValue) -> &[C] {
    C::unwrap(v).unwrap_or_else(|| panic!("value {v:?} is not of this domain"))
}

fn same_width<C>(a: &[C], b: &[C]) {
    assert_eq!(a.len(), b.len(), "abstract values over different frames");
}

pub(crate) fn leq<C: Component>(a: &AbsValue, b: &AbsValue) -> bool {
    match (a, b) {
        (AbsValue::Bot, _) => true,
        (_, AbsValue::Bot) => false,
        _ => {
            let (x, y) = (parts::<C>(a), parts::<C>(b));
            same_width(x, y);
            x.iter().zip(y).all(|(p, q)| p.leq(*q))
        }
    }
}

pub(crate) fn lub<C: Component>(a: &AbsValue, b: &AbsValue) -> AbsValue {
    match (a, b) {
        (AbsValue::Bot, x) | (x, AbsValue::Bot) => x.clone(),
        _ => {
            let (x, y) = (parts::<C>(a), parts::<C>(b));
            same_width(x, y);
            C::wrap(x.iter().zip(y).map(|(p, q)| p.lub(*q)).collect())
        }
    }
}

pub(crate) fn glb<C: Component>(a: &AbsValue, b: &AbsValue) -> AbsValue {
    match (a, b) {
        (AbsValue::Bot, _) | (_, AbsValue::Bot) => AbsValue::Bot,
        _ => {
            let (x, y) = (parts::<C>(a), parts::<C>(b));
            same_width(x, y);
            collect(x.iter().zip(y).map(|(p, q)| p.glb(*q)))
        }
    }
}

pub(crate) fn collect<C: Component>(it: impl Iterator<Item = Option<C>>) -> AbsValue {
    match it.collect::<Option<Vec<C>>>() {
        Some(cs) => C::wrap(cs),
        None => AbsValue::Bot,
    }
}

pub(crate) fn top<C: Component>(width: usize) -> AbsValue {
    C::wrap(vec![C::TOP; width])
}

pub(crate) fn project<C: Component>(v: &AbsValue, positions: &[usize]) -> AbsValue {
    if v.is_bot() {
        return AbsValue::Bot;
    }
    let x = parts::<C>(v);
    C::wrap(positions.iter().map(|&i| x[i]).collect())
}

pub(crate) fn extend<C: Component>(v: &AbsValue, width: usize) -> AbsValue {
    if v.is_bot() {
        return AbsValue::Bot;
    }
    let mut x = parts::<C>(v).to_vec();
    assert!(x.len() <= width, "cannot extend to a narrower frame");
    x.resize(width, C::TOP);
    C::wrap(x)
}

pub(crate) fn conjoin_at<C: Component>(v: &AbsValue, positions: &[usize], exit: &AbsValue) -> AbsValue {
    if v.is_bot() || exit.is_bot() {
        return AbsValue::Bot;
    }
    let mut x = parts::<C>(v).to_vec();
    let e = parts::<C>(exit);
    assert_eq!(e.len(), positions.len(), "arity mismatch between call and exit");
    for (&pos, &c) in positions.iter().zip(e) {
        match x[pos].glb(c) {
            Some(m) => x[pos] = m,
            None => return AbsValue::Bot,
        }
    }
    C::wrap(x)
}

pub(crate) fn enumerate<C: Component>(width: usize) -> Vec<AbsValue> {
    let mut out = vec![AbsValue::Bot];
    let mut current = vec![Vec::new()];
    for _ in 0..width {
        current = current
            .into_iter()
            .flat_map(|prefix: Vec<C>| {
                C::ALL.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(*c);
                    p
                })
            })
            .collect();
    }
    out.extend(current.into_iter().map(C::wrap));
    out
}

pub(crate) fn height<C: Component>(width: usize) -> usize {
    width * C::CHAIN + 1
}
