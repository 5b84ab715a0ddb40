//! GF(2) subspaces of small dimension, stored as membership masks: bit `v`
//! of `members` is set iff vector `v` lies in the subspace.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Largest ambient dimension whose vectors fit in a `u64` membership mask.
pub(crate) const MAX_WIDTH: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Subspace {
    pub members: u64,
    pub basis: Vec<u64>,
}

impl Subspace {
    pub fn dim(&self) -> u32 {
        self.basis.len() as u32
    }

    /// True when the only common vector is zero.
    pub fn meets_trivially(&self, other: &Subspace) -> bool {
        self.members & other.members == 1
    }
}

/// Reduced row echelon basis of the span, rows in descending pivot order.
pub(crate) fn rref(vectors: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut rows: Vec<u64> = Vec::new();
    for v in vectors {
        let mut x = v;
        for &r in &rows {
            if x & pivot(r) != 0 {
                x ^= r;
            }
        }
        if x == 0 {
            continue;
        }
        let p = pivot(x);
        for r in rows.iter_mut() {
            if *r & p != 0 {
                *r ^= x;
            }
        }
        rows.push(x);
        rows.sort_unstable_by(|a, b| b.cmp(a));
    }
    rows
}

fn pivot(row: u64) -> u64 {
    1u64 << (63 - row.leading_zeros())
}

fn span_members(basis: &[u64]) -> u64 {
    let mut members = 1u64;
    for &b in basis {
        let mut shifted = 0u64;
        let mut rest = members;
        while rest != 0 {
            let v = rest.trailing_zeros() as u64;
            rest &= rest - 1;
            shifted |= 1u64 << (v ^ b);
        }
        members |= shifted;
    }
    members
}

/// Every subspace of GF(2)^width, ordered by dimension then basis.
pub(crate) fn all_subspaces(width: u32) -> Vec<Subspace> {
    assert!((1..=MAX_WIDTH).contains(&width));
    let size = 1u64 << width;
    let mut seen: HashSet<u64> = HashSet::from([1u64]);
    let mut frontier = vec![1u64];
    while let Some(members) = frontier.pop() {
        for v in 1..size {
            if members >> v & 1 == 1 {
                continue;
            }
            let mut grown = members;
            let mut rest = members;
            while rest != 0 {
                let u = rest.trailing_zeros() as u64;
                rest &= rest - 1;
                grown |= 1u64 << (u ^ v);
            }
            if seen.insert(grown) {
                frontier.push(grown);
            }
        }
    }
    let mut out: Vec<Subspace> = seen
        .into_iter()
        .map(|members| {
            let basis = rref((0..size).filter(|&v| members >> v & 1 == 1));
            debug_assert_eq!(span_members(&basis), members);
            Subspace { members, basis }
        })
        .collect();
    out.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.basis.cmp(&b.basis)));
    out
}

/// The nonzero subspaces of one ambient width together with every pair
/// `(i, j)`, `i < j`, of complementary subspaces (trivial intersection,
/// dimensions summing to the width).
pub(crate) struct Lattice {
    pub subspaces: Vec<Subspace>,
    pub complements: Vec<(usize, usize)>,
}

/// Shared, lazily built lattice for `width`; it does not depend on the problem.
pub(crate) fn lattice(width: u32) -> &'static Lattice {
    static CACHE: [OnceLock<Lattice>; MAX_WIDTH as usize] =
        [const { OnceLock::new() }; MAX_WIDTH as usize];
    CACHE[width as usize - 1].get_or_init(|| {
        let subspaces: Vec<Subspace> = all_subspaces(width)
            .into_iter()
            .filter(|s| s.dim() > 0)
            .collect();
        let mut complements = Vec::new();
        for (i, u) in subspaces.iter().enumerate() {
            for (j, v) in subspaces.iter().enumerate().skip(i + 1) {
                if u.dim() + v.dim() == width && u.meets_trivially(v) {
                    complements.push((i, j));
                }
            }
        }
        Lattice {
            subspaces,
            complements,
        }
    })
}

#[cfg(test)]
/// Membership mask of the span of arbitrary generators.
pub(crate) fn span(generators: &[u64]) -> u64 {
    span_members(&rref(generators.iter().copied()))
}
