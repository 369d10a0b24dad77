//! Canonical forms of monomials under slot symmetries and dummy relabeling.
//!
//! Since a [`Monomial`] stores only its contraction matching, dummy renaming is
//! already quotiented out. The canonical form is the image `g·M`, `g` in the
//! slot symmetry group, whose *closing sequence* is lexicographically least:
//! position `i` reads the partner slot when it is smaller than `i`, and
//! "open" (greater than every partner) otherwise.
//!
//! The search walks the stabilizer chain of the group with base `0, 1, ..`,
//! fixing canonical positions left to right. Partial images that coincide are
//! merged; two coinciding partial images with opposite signs prove that the
//! monomial equals its own negative.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use crate::monomial::{Case, Monomial};
use crate::permgroup::Bsgs;

const OPEN: u8 = u8::MAX;

static GROUPS: Lazy<Mutex<HashMap<Case, Arc<Bsgs>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Slot symmetry group of a case, built once and cached.
pub fn case_group(case: Case) -> Arc<Bsgs> {
    if let Some(g) = GROUPS.lock().unwrap().get(&case) {
        return g.clone();
    }
    let g = Arc::new(
        Bsgs::build(case.slots(), &case.symmetry_generators())
            .expect("case generators act on the case slots"),
    );
    GROUPS.lock().unwrap().entry(case).or_insert(g).clone()
}

/// Canonical representative with the sign relating it to the input:
/// `value(input) = sign · value(monomial)`. A zero sign means the input
/// vanishes identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Canonical {
    pub monomial: Monomial,
    pub sign: i8,
}

impl Canonical {
    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }
}

/// The closing-sequence encoding of a matching (the total order on pairings).
pub fn closing_sequence(pairing: &[u8]) -> Vec<u8> {
    pairing
        .iter()
        .enumerate()
        .map(|(i, &p)| if (p as usize) < i { p } else { OPEN })
        .collect()
}

pub fn canonicalize(m: &Monomial) -> Canonical {
    let group = case_group(m.case());
    match canonical_image(&group, m.pairing()) {
        Some((pairing, negative)) => Canonical {
            monomial: Monomial::from_parts_unchecked(m.case(), pairing),
            sign: if negative { -1 } else { 1 },
        },
        None => Canonical {
            monomial: m.clone(),
            sign: 0,
        },
    }
}

/// Minimal image of `pairing` under `group`; `None` when the monomial is zero.
pub fn canonical_image(group: &Bsgs, pairing: &[u8]) -> Option<(Vec<u8>, bool)> {
    let n = pairing.len();
    let mut nodes: Vec<(Vec<u8>, bool)> = vec![(pairing.to_vec(), false)];
    let mut children: HashMap<Vec<u8>, bool> = HashMap::new();
    for i in 0..n {
        let level = group.level(i);
        let orbit = level.orbit();
        if orbit.len() == 1 {
            // No branching: keep the nodes with the least value at position i.
            let value = |m: &Vec<u8>| if (m[i] as usize) < i { m[i] } else { OPEN };
            let best = nodes.iter().map(|(m, _)| value(m)).min().unwrap();
            nodes.retain(|(m, _)| value(m) == best);
            continue;
        }
        children.clear();
        let mut best = OPEN;
        let mut first = true;
        for (m, negative) in &nodes {
            for &delta in orbit {
                let uinv = level.transversal_inverse(delta).unwrap();
                let p = uinv.apply(m[m_index(delta)]);
                let value = if (p as usize) < i { p } else { OPEN };
                if !first && value > best {
                    continue;
                }
                if first || value < best {
                    best = value;
                    first = false;
                    children.clear();
                }
                let u = level.transversal(delta).unwrap();
                let child: Vec<u8> = u.images().iter().map(|&x| uinv.apply(m[x as usize])).collect();
                let sign = negative ^ u.is_negative();
                match children.entry(child) {
                    Entry::Occupied(e) => {
                        if *e.get() != sign {
                            return None;
                        }
                    }
                    Entry::Vacant(e) => {
                        e.insert(sign);
                    }
                }
            }
        }
        nodes = children.drain().collect();
        if nodes.len() > 1 {
            nodes.sort_unstable();
        }
    }
    debug_assert!(nodes.windows(2).all(|w| w[0].0 == w[1].0));
    // Survivors share the same matching; differing signs were caught above,
    // except at trivial levels where merging happens here.
    let (m, negative) = nodes.swap_remove(0);
    if nodes.iter().any(|(other, s)| *other == m && *s != negative) {
        return None;
    }
    Some((m, negative))
}

#[inline]
fn m_index(x: u8) -> usize {
    x as usize
}

/// A sparse combination of canonical monomials.
pub type MonomialComb = Vec<(BigRational, Monomial)>;

/// Canonicalizes every term, merges equal canonical monomials and drops zeros.
/// Output is ordered by the closing-sequence encoding (case first).
pub fn canonicalize_lincomb(terms: &[(BigRational, Monomial)]) -> MonomialComb {
    let mut acc: HashMap<Monomial, BigRational> = HashMap::new();
    for (c, m) in terms {
        let canon = canonicalize(m);
        if canon.is_zero() || c.is_zero() {
            continue;
        }
        let coeff = if canon.sign < 0 { -c.clone() } else { c.clone() };
        *acc.entry(canon.monomial).or_insert_with(BigRational::zero) += coeff;
    }
    let mut out: MonomialComb = acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (c, m)).collect();
    out.sort_by(|a, b| {
        a.1.case()
            .cmp(&b.1.case())
            .then_with(|| closing_sequence(a.1.pairing()).cmp(&closing_sequence(b.1.pairing())))
    });
    out
}

/// `(1, m)` shorthand.
pub fn unit_term(m: Monomial) -> (BigRational, Monomial) {
    (BigRational::one(), m)
}
