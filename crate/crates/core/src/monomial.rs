//! Scalar Riemann monomials: cases, slot layout, contraction matchings.
//!
//! A monomial of case `{λ1,..,λn}` has `N = 4n + Σλ` slots (plus 4 for the
//! ε factor of a dual case). Factor `i` owns 4 Riemann slots followed by `λi`
//! derivative slots listed innermost-first, so `R_{abcd;ef}` is
//! `∇_f ∇_e R_{abcd}`. The ε slots come last. Index variance is not stored:
//! a scalar monomial is fully described by which slots are contracted.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::permgroup::SignedPerm;

/// Largest supported number of Riemann factors.
pub const MAX_DEGREE: usize = 10;

/// A case `{λ1 ≤ .. ≤ λn}`, optionally dual (one extra ε factor).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Case {
    len: u8,
    lambdas: [u8; MAX_DEGREE],
    dual: bool,
}

impl Case {
    /// Builds a case, sorting the derivative orders ascending.
    pub fn new(lambdas: &[u8], dual: bool) -> Result<Case> {
        if lambdas.is_empty() && !dual {
            return Err(Error::Malformed("a case needs at least one factor".into()));
        }
        if lambdas.len() > MAX_DEGREE {
            return Err(Error::Malformed(format!(
                "degree {} exceeds the maximum of {MAX_DEGREE}",
                lambdas.len()
            )));
        }
        let mut sorted = [0u8; MAX_DEGREE];
        sorted[..lambdas.len()].copy_from_slice(lambdas);
        sorted[..lambdas.len()].sort_unstable();
        let case = Case {
            len: lambdas.len() as u8,
            lambdas: sorted,
            dual,
        };
        if !case.slots().is_multiple_of(2) {
            return Err(Error::Malformed(format!(
                "case {case} has an odd number of indices"
            )));
        }
        if case.slots() > u8::MAX as usize {
            return Err(Error::Malformed(format!("case {case} has too many slots")));
        }
        Ok(case)
    }

    pub fn lambdas(&self) -> &[u8] {
        &self.lambdas[..self.len as usize]
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    /// Number of Riemann factors `n`.
    pub fn degree(&self) -> usize {
        self.len as usize
    }

    /// Number of metric derivatives `Λ = 2n + Σλ`.
    pub fn order(&self) -> usize {
        2 * self.degree() + self.lambdas().iter().map(|&l| l as usize).sum::<usize>()
    }

    /// Number of index slots `N`.
    pub fn slots(&self) -> usize {
        4 * self.degree()
            + self.lambdas().iter().map(|&l| l as usize).sum::<usize>()
            + if self.dual { 4 } else { 0 }
    }

    pub fn factor_offset(&self, factor: usize) -> usize {
        self.lambdas()[..factor]
            .iter()
            .map(|&l| 4 + l as usize)
            .sum()
    }

    pub fn factor_len(&self, factor: usize) -> usize {
        4 + self.lambdas()[factor] as usize
    }

    /// First ε slot; only meaningful for dual cases.
    pub fn eps_offset(&self) -> usize {
        self.slots() - 4
    }

    pub fn with_dual(&self, dual: bool) -> Case {
        Case { dual, ..*self }
    }

    /// Owner of each slot: factor index, or `degree()` for the ε factor.
    pub fn slot_owners(&self) -> Vec<usize> {
        let mut owners = Vec::with_capacity(self.slots());
        for (f, &l) in self.lambdas().iter().enumerate() {
            owners.extend(std::iter::repeat_n(f, 4 + l as usize));
        }
        if self.dual {
            owners.extend(std::iter::repeat_n(self.degree(), 4));
        }
        owners
    }

    /// Generators of the slot symmetry group: pair antisymmetries and pair
    /// exchange per factor, exchange of factors with equal derivative order,
    /// and the alternating symmetry of ε.
    pub fn symmetry_generators(&self) -> Vec<SignedPerm> {
        let m = self.slots();
        let mut gens = Vec::new();
        for f in 0..self.degree() {
            let o = self.factor_offset(f) as u8;
            gens.push(SignedPerm::from_cycles(m, &[&[o, o + 1]], true).unwrap());
            gens.push(SignedPerm::from_cycles(m, &[&[o + 2, o + 3]], true).unwrap());
            gens.push(
                SignedPerm::from_cycles(m, &[&[o, o + 2], &[o + 1, o + 3]], false).unwrap(),
            );
        }
        for f in 1..self.degree() {
            if self.lambdas()[f] == self.lambdas()[f - 1] {
                let a = self.factor_offset(f - 1);
                let b = self.factor_offset(f);
                let mut images: Vec<u8> = (0..m as u8).collect();
                for k in 0..self.factor_len(f) {
                    images[a + k] = (b + k) as u8;
                    images[b + k] = (a + k) as u8;
                }
                gens.push(SignedPerm::from_images(images, false).unwrap());
            }
        }
        if self.dual {
            let e = self.eps_offset() as u8;
            gens.push(SignedPerm::from_cycles(m, &[&[e, e + 1]], true).unwrap());
            gens.push(SignedPerm::from_cycles(m, &[&[e, e + 1, e + 2, e + 3]], true).unwrap());
        }
        gens
    }

    /// All cases of metric-derivative order `order`, sorted by [`Ord`].
    pub fn all_with_order(order: usize, dual: bool) -> Vec<Case> {
        fn rec(remaining: usize, min: u8, n_left: usize, acc: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if n_left == 0 {
                if remaining == 0 {
                    out.push(acc.clone());
                }
                return;
            }
            let mut l = min as usize;
            while l * n_left <= remaining {
                acc.push(l as u8);
                rec(remaining - l, l as u8, n_left - 1, acc, out);
                acc.pop();
                l += 1;
            }
        }
        let mut cases = Vec::new();
        if !order.is_multiple_of(2) {
            return cases;
        }
        for n in 1..=(order / 2).min(MAX_DEGREE) {
            let derivs = order - 2 * n;
            if !derivs.is_multiple_of(2) {
                continue;
            }
            let mut tuples = Vec::new();
            rec(derivs, 0, n, &mut Vec::new(), &mut tuples);
            for t in tuples {
                cases.push(Case::new(&t, dual).unwrap());
            }
        }
        cases.sort();
        cases
    }
}

/// The global order on cases: order `Λ` ascending, nondual before dual,
/// higher degree ranks lower, then derivative tuples lexicographically.
impl Ord for Case {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.dual.cmp(&other.dual))
            .then(other.degree().cmp(&self.degree()))
            .then_with(|| self.lambdas().cmp(other.lambdas()))
    }
}

impl PartialOrd for Case {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.lambdas().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")?;
        if self.dual {
            write!(f, "*")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    /// Accepts `0,1,3`, `{0,1,3}` and a trailing `*` for duals.
    fn from_str(s: &str) -> Result<Case> {
        let s = s.trim();
        let (s, dual) = match s.strip_suffix('*') {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let s = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut lambdas = Vec::new();
        if !s.trim().is_empty() {
            for part in s.split(',') {
                let l: u8 = part
                    .trim()
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad derivative order '{part}'")))?;
                lambdas.push(l);
            }
        }
        Case::new(&lambdas, dual)
    }
}

/// A monomial: a case plus a fixed-point-free involution on its slots.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    case: Case,
    pairing: Vec<u8>,
}

impl Monomial {
    pub fn new(case: Case, pairing: Vec<u8>) -> Result<Monomial> {
        if pairing.len() != case.slots() {
            return Err(Error::Malformed(format!(
                "pairing has {} slots, case {case} needs {}",
                pairing.len(),
                case.slots()
            )));
        }
        for (i, &p) in pairing.iter().enumerate() {
            let p = p as usize;
            if p >= pairing.len() || p == i || pairing[p] as usize != i {
                return Err(Error::Malformed(format!(
                    "pairing {pairing:?} is not a perfect matching"
                )));
            }
        }
        Ok(Monomial { case, pairing })
    }

    /// Builds a monomial from a list of contracted slot pairs.
    pub fn from_pairs(case: Case, pairs: &[(u8, u8)]) -> Result<Monomial> {
        let mut pairing = vec![u8::MAX; case.slots()];
        for &(a, b) in pairs {
            for x in [a, b] {
                if x as usize >= pairing.len() || pairing[x as usize] != u8::MAX {
                    return Err(Error::Malformed(format!("bad slot pair ({a}, {b})")));
                }
            }
            pairing[a as usize] = b;
            pairing[b as usize] = a;
        }
        Monomial::new(case, pairing)
    }

    pub(crate) fn from_parts_unchecked(case: Case, pairing: Vec<u8>) -> Monomial {
        Monomial { case, pairing }
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn pairing(&self) -> &[u8] {
        &self.pairing
    }

    /// Contracted pairs `(a, b)` with `a < b`, ordered by `a`.
    pub fn pairs(&self) -> Vec<(u8, u8)> {
        self.pairing
            .iter()
            .enumerate()
            .filter(|(i, &p)| *i < p as usize)
            .map(|(i, &p)| (i as u8, p))
            .collect()
    }

    /// Factors grouped into connected components of the contraction graph.
    /// The ε factor is reported as index `degree()`.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let owners = self.case.slot_owners();
        let nodes = self.case.degree() + usize::from(self.case.is_dual());
        let mut parent: Vec<usize> = (0..nodes).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut y = x;
            while parent[y] != r {
                let next = parent[y];
                parent[y] = r;
                y = next;
            }
            r
        }
        for (i, &p) in self.pairing.iter().enumerate() {
            let a = find(&mut parent, owners[i]);
            let b = find(&mut parent, owners[p as usize]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_group: HashMap<usize, usize> = HashMap::new();
        for f in 0..nodes {
            let r = find(&mut parent, f);
            let g = *root_group.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(f);
        }
        groups
    }

    pub fn is_product(&self) -> bool {
        self.connected_components().len() > 1
    }

    /// Splits into one monomial per connected component.
    pub fn split(&self) -> Vec<Monomial> {
        let labeled = self.to_labeled();
        let comps = self.connected_components();
        if comps.len() == 1 {
            return vec![self.clone()];
        }
        comps
            .into_iter()
            .map(|group| {
                let mut part = LabeledTerm::default();
                for f in group {
                    if f == self.case.degree() {
                        part.eps = labeled.eps;
                    } else {
                        part.factors.push(labeled.factors[f].clone());
                    }
                }
                part.to_monomial().expect("component of a valid monomial")
            })
            .collect()
    }

    /// Labels each contracted pair by its lower slot.
    pub fn to_labeled(&self) -> LabeledTerm {
        let label = |s: usize| (s.min(self.pairing[s] as usize)) as u16;
        let mut factors = Vec::with_capacity(self.case.degree());
        for f in 0..self.case.degree() {
            let o = self.case.factor_offset(f);
            factors.push((o..o + self.case.factor_len(f)).map(label).collect());
        }
        let eps = if self.case.is_dual() {
            let e = self.case.eps_offset();
            Some([label(e), label(e + 1), label(e + 2), label(e + 3)])
        } else {
            None
        };
        LabeledTerm { factors, eps }
    }

    /// Sorting features of the canonical ordering: counts of (differentiated)
    /// Ricci scalars, Ricci tensors and Laplacian contractions.
    pub fn ricci_features(&self) -> (usize, usize, usize) {
        let mut scalars = 0;
        let mut riccis = 0;
        let mut laplacians = 0;
        for f in 0..self.case.degree() {
            let o = self.case.factor_offset(f);
            let p = |k: usize| self.pairing[o + k] as usize;
            let traced = |a: usize, b: usize| p(a) == o + b;
            let double_trace = (traced(0, 2) && traced(1, 3)) || (traced(0, 3) && traced(1, 2));
            if double_trace {
                scalars += 1;
            } else if traced(0, 2) || traced(0, 3) || traced(1, 2) || traced(1, 3) {
                riccis += 1;
            }
            for k in 4..self.case.factor_len(f).saturating_sub(1) {
                if traced(k, k + 1) {
                    laplacians += 1;
                }
            }
        }
        (scalars, riccis, laplacians)
    }
}

/// A monomial written with explicit index labels; each label occurs exactly
/// twice. Used for rewriting (substitutions, Leibniz expansion) before
/// converting back to a slot matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledTerm {
    /// Per factor: 4 Riemann labels followed by derivative labels, innermost first.
    pub factors: Vec<Vec<u16>>,
    pub eps: Option<[u16; 4]>,
}

impl LabeledTerm {
    pub fn case(&self) -> Result<Case> {
        let lambdas: Vec<u8> = self
            .factors
            .iter()
            .map(|f| {
                f.len()
                    .checked_sub(4)
                    .map(|l| l as u8)
                    .ok_or_else(|| Error::Malformed("factor with fewer than 4 indices".into()))
            })
            .collect::<Result<_>>()?;
        Case::new(&lambdas, self.eps.is_some())
    }

    /// Largest label plus one.
    pub fn label_bound(&self) -> u16 {
        self.factors
            .iter()
            .flatten()
            .chain(self.eps.iter().flatten())
            .map(|&l| l + 1)
            .max()
            .unwrap_or(0)
    }

    /// Lays the factors out by ascending derivative order and pairs equal labels.
    pub fn to_monomial(&self) -> Result<Monomial> {
        let case = self.case()?;
        let mut order: Vec<usize> = (0..self.factors.len()).collect();
        order.sort_by_key(|&f| self.factors[f].len());
        let mut labels: Vec<u16> = Vec::with_capacity(case.slots());
        for f in order {
            labels.extend_from_slice(&self.factors[f]);
        }
        if let Some(e) = self.eps {
            labels.extend_from_slice(&e);
        }
        let mut first: HashMap<u16, usize> = HashMap::with_capacity(labels.len() / 2);
        let mut pairing = vec![u8::MAX; labels.len()];
        for (slot, &l) in labels.iter().enumerate() {
            match first.remove(&l) {
                Some(other) => {
                    pairing[slot] = other as u8;
                    pairing[other] = slot as u8;
                }
                None => {
                    first.insert(l, slot);
                }
            }
        }
        if !first.is_empty() || pairing.contains(&u8::MAX) {
            return Err(Error::Malformed(
                "every index label must appear exactly twice".into(),
            ));
        }
        Ok(Monomial { case, pairing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgroup::Bsgs;
    use num_bigint::BigUint;

    #[test]
    fn case_sizes() {
        let c = Case::new(&[0, 1, 3], false).unwrap();
        assert_eq!((c.slots(), c.order(), c.degree()), (16, 10, 3));
        let c = Case::new(&[0], false).unwrap();
        assert_eq!((c.slots(), c.order()), (4, 2));
        let c = Case::new(&[1, 3], true).unwrap();
        assert_eq!((c.slots(), c.order()), (16, 8));
    }

    #[test]
    fn case_parsing_and_display() {
        let c: Case = "3,1,0".parse().unwrap();
        assert_eq!(c.to_string(), "{0,1,3}");
        let d: Case = "{1,3}*".parse().unwrap();
        assert!(d.is_dual());
        assert_eq!(d.to_string(), "{1,3}*");
        assert!("1".parse::<Case>().is_err());
    }

    #[test]
    fn cases_by_order() {
        let names: Vec<String> = Case::all_with_order(6, false)
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(names, ["{0,0,0}", "{0,2}", "{1,1}", "{4}"]);
        assert_eq!(Case::all_with_order(8, false).len(), 7);
        assert_eq!(Case::all_with_order(10, false).len(), 12);
        assert_eq!(Case::all_with_order(12, false).len(), 21);
    }

    #[test]
    fn symmetry_group_orders() {
        let order = |c: Case| Bsgs::build(c.slots(), &c.symmetry_generators()).unwrap().order();
        assert_eq!(order(Case::new(&[0], false).unwrap()), BigUint::from(8u32));
        assert_eq!(order(Case::new(&[0, 0], false).unwrap()), BigUint::from(128u32));
        assert_eq!(order(Case::new(&[2], false).unwrap()), BigUint::from(8u32));
        assert_eq!(order(Case::new(&[0], true).unwrap()), BigUint::from(8u32 * 24));
    }

    #[test]
    fn components() {
        let c = Case::new(&[0, 0], false).unwrap();
        let product = Monomial::from_pairs(c, &[(0, 2), (1, 3), (4, 6), (5, 7)]).unwrap();
        assert_eq!(product.connected_components().len(), 2);
        assert_eq!(product.split().len(), 2);
        let kretschmann = Monomial::from_pairs(c, &[(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap();
        assert_eq!(kretschmann.connected_components().len(), 1);
    }

    #[test]
    fn labeled_round_trip() {
        let c = Case::new(&[0, 1, 3], false).unwrap();
        let pairs = [(0, 4), (1, 9), (2, 13), (3, 14), (5, 10), (6, 15), (7, 11), (8, 12)];
        let m = Monomial::from_pairs(c, &pairs).unwrap();
        assert_eq!(m.to_labeled().to_monomial().unwrap(), m);
    }

    #[test]
    fn rejects_bad_pairings() {
        let c = Case::new(&[0], false).unwrap();
        assert!(Monomial::new(c, vec![1, 0, 2, 3]).is_err());
        assert!(Monomial::new(c, vec![1, 0]).is_err());
    }
}
