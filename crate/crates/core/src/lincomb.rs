//! Sparse exact-rational combinations of indexed invariants and their products.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::enumerate::InvariantId;
use crate::error::{Error, Result};
use crate::monomial::Case;

/// A variable of a combination. Products rank below every indexed invariant,
/// so elimination never picks a product as pivot.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Var {
    /// Product of two or more connected invariants (sorted multiset).
    Prod(Vec<InvariantId>),
    Inv(InvariantId),
}

impl Var {
    /// Normalizes a multiset of factors: one factor is a plain invariant.
    pub fn product(mut ids: Vec<InvariantId>) -> Var {
        if ids.len() == 1 {
            return Var::Inv(ids[0]);
        }
        ids.sort();
        Var::Prod(ids)
    }

    pub fn factors(&self) -> &[InvariantId] {
        match self {
            Var::Prod(ids) => ids,
            Var::Inv(id) => std::slice::from_ref(id),
        }
    }

    pub fn as_inv(&self) -> Option<InvariantId> {
        match self {
            Var::Inv(id) => Some(*id),
            Var::Prod(_) => None,
        }
    }

    /// Metric-derivative order of the (product) invariant.
    pub fn order(&self) -> usize {
        self.factors().iter().map(|id| id.case.order()).sum()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, id) in self.factors().iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for InvariantId {
    type Err = Error;

    /// Parses `I{0,1,3}#12` or `D{1,3}#5`.
    fn from_str(s: &str) -> Result<InvariantId> {
        let bad = || Error::Malformed(format!("bad invariant id '{s}'"));
        let dual = match s.chars().next() {
            Some('I') => false,
            Some('D') => true,
            _ => return Err(bad()),
        };
        let (case, index) = s[1..].split_once('#').ok_or_else(bad)?;
        let case: Case = case.parse()?;
        let index: u32 = index.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(InvariantId::new(case.with_dual(dual), index))
    }
}

impl std::str::FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Var> {
        let ids = s
            .split('*')
            .map(str::parse)
            .collect::<Result<Vec<InvariantId>>>()?;
        Ok(Var::product(ids))
    }
}

/// `Σ coeff · var`, without zero coefficients.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct LinComb {
    terms: BTreeMap<Var, BigRational>,
}

impl LinComb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_var(v: Var) -> Self {
        let mut c = Self::new();
        c.add(v, BigRational::one());
        c
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (&Var, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, v: &Var) -> Option<&BigRational> {
        self.terms.get(v)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.terms.contains_key(v)
    }

    pub fn add(&mut self, v: Var, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(v) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn remove(&mut self, v: &Var) -> Option<BigRational> {
        self.terms.remove(v)
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, other: &LinComb, factor: &BigRational) {
        for (v, c) in &other.terms {
            self.add(v.clone(), c * factor);
        }
    }

    pub fn scale(&mut self, factor: &BigRational) {
        if factor.is_zero() {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    /// Greatest variable under the global order.
    pub fn leading(&self) -> Option<(&Var, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Greatest indexed (non-product) variable.
    pub fn leading_inv(&self) -> Option<(InvariantId, &BigRational)> {
        self.terms
            .iter()
            .rev()
            .find_map(|(v, c)| v.as_inv().map(|id| (id, c)))
    }

    /// Scales so that the leading coefficient is 1.
    pub fn normalized(mut self) -> Self {
        if let Some((_, c)) = self.leading() {
            let inv = c.recip();
            self.scale(&inv);
        }
        self
    }

    /// Product of two combinations; products of invariants merge into
    /// multiset variables.
    pub fn mul(&self, other: &LinComb) -> LinComb {
        let mut out = LinComb::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut ids = a.factors().to_vec();
                ids.extend_from_slice(b.factors());
                out.add(Var::product(ids), ca * cb);
            }
        }
        out
    }

    /// Variables whose case matches `pred`.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }
}

impl FromIterator<(Var, BigRational)> for LinComb {
    fn from_iter<T: IntoIterator<Item = (Var, BigRational)>>(iter: T) -> Self {
        let mut c = LinComb::new();
        for (v, k) in iter {
            c.add(v, k);
        }
        c
    }
}

/// Writes a rational as `n` or `n/d` with an explicit sign.
pub fn fmt_coeff(c: &BigRational) -> String {
    let sign = if c.is_negative() { "-" } else { "+" };
    let a = c.abs();
    if a.denom().is_one() {
        format!("{sign}{}", a.numer())
    } else {
        format!("{sign}{}/{}", a.numer(), a.denom())
    }
}

pub fn parse_coeff(s: &str) -> Result<BigRational> {
    let bad = || Error::Malformed(format!("bad coefficient '{s}'"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num.trim_start_matches('+').parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// `+c1 v1 +c2 v2 ...` (highest variable first), or `0`.
impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (v, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{} {v}", fmt_coeff(c))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for LinComb {
    type Err = Error;

    fn from_str(s: &str) -> Result<LinComb> {
        let s = s.trim();
        let mut out = LinComb::new();
        if s == "0" || s.is_empty() {
            return Ok(out);
        }
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if !tokens.len().is_multiple_of(2) {
            return Err(Error::Malformed(format!("odd token count in '{s}'")));
        }
        for pair in tokens.chunks(2) {
            out.add(pair[1].parse()?, parse_coeff(pair[0])?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(l: &[u8], i: u32) -> InvariantId {
        InvariantId::new(Case::new(l, false).unwrap(), i)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn products_rank_below_invariants() {
        let p = Var::product(vec![id(&[0], 1), id(&[0], 1)]);
        let i = Var::Inv(id(&[0], 1));
        assert!(p < i);
        // lower-degree case of the same order ranks higher
        assert!(Var::Inv(id(&[4], 1)) > Var::Inv(id(&[0, 0, 0], 12)));
    }

    #[test]
    fn text_round_trip() {
        let mut c = LinComb::new();
        c.add(Var::Inv(id(&[0, 0], 3)), q(1, 1));
        c.add(Var::Inv(id(&[0, 0], 2)), q(-1, 2));
        c.add(Var::product(vec![id(&[0], 1), id(&[0], 1)]), q(3, 1));
        let dual = InvariantId::new(Case::new(&[0, 0], true).unwrap(), 2);
        c.add(Var::product(vec![dual, dual]), q(-24, 1));
        let text = c.to_string();
        assert_eq!(text.parse::<LinComb>().unwrap(), c);
        assert_eq!("0".parse::<LinComb>().unwrap(), LinComb::new());
    }

    #[test]
    fn cancellation_and_mul() {
        let a = Var::Inv(id(&[0], 1));
        let mut c = LinComb::from_var(a.clone());
        c.add(a.clone(), q(-1, 1));
        assert!(c.is_empty());
        let x = LinComb::from_var(a.clone());
        let sq = x.mul(&x);
        assert_eq!(sq.leading().unwrap().0, &Var::Prod(vec![id(&[0], 1), id(&[0], 1)]));
    }
}
