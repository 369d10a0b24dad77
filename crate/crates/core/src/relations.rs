//! Generators for the linear relations between invariants of one case:
//! cyclic identity, differential Bianchi identity, derivative commutation,
//! dimension-dependent identities and products of ε-tensors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_rational::BigRational;

use crate::canon::canonicalize;
use crate::enumerate::CaseTable;
use crate::error::{Error, Result};
use crate::lincomb::{LinComb, Var};
use crate::monomial::{Case, LabeledTerm, Monomial};

/// The elimination stages, in the order they are applied.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Step {
    Cyclic,
    Bianchi,
    Commute,
    DimDep,
    Duals,
}

impl Step {
    pub const ALL: [Step; 5] = [Step::Cyclic, Step::Bianchi, Step::Commute, Step::DimDep, Step::Duals];

    /// File stem used in the database layout.
    pub fn file_stem(self) -> &'static str {
        match self {
            Step::Cyclic => "cyclic",
            Step::Bianchi => "bianchi",
            Step::Commute => "commute",
            Step::DimDep => "dimdep",
            Step::Duals => "duals",
        }
    }

    /// Short column heading.
    pub fn label(self) -> &'static str {
        match self {
            Step::Cyclic => "Cyclic",
            Step::Bianchi => "Bianchi",
            Step::Commute => "Commute",
            Step::DimDep => "4D",
            Step::Duals => "Duals",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

impl std::str::FromStr for Step {
    type Err = Error;

    fn from_str(s: &str) -> Result<Step> {
        let lower = s.to_ascii_lowercase();
        Step::ALL
            .into_iter()
            .find(|st| st.file_stem() == lower || st.label().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Malformed(format!("unknown step '{s}'")))
    }
}

/// An unresolved relation: `Σ coeff · term = 0`.
pub type Expansion = Vec<(i32, LabeledTerm)>;

/// Lookup of the invariant table of a case.
pub trait TableSource {
    fn table(&self, case: Case) -> Option<&CaseTable>;
}

impl TableSource for BTreeMap<Case, CaseTable> {
    fn table(&self, case: Case) -> Option<&CaseTable> {
        self.get(&case)
    }
}

impl TableSource for HashMap<Case, CaseTable> {
    fn table(&self, case: Case) -> Option<&CaseTable> {
        self.get(&case)
    }
}

/// Maps a monomial to its (product) variable and sign; `None` if it vanishes.
pub fn resolve_monomial(m: &Monomial, tables: &impl TableSource) -> Result<Option<(Var, i8)>> {
    let mut sign = 1i8;
    let mut ids = Vec::new();
    for part in m.split() {
        let canon = canonicalize(&part);
        if canon.is_zero() {
            return Ok(None);
        }
        sign *= canon.sign;
        let case = canon.monomial.case();
        let table = tables.table(case).ok_or(Error::MissingCase(case))?;
        ids.push(table.reverse_lookup(&canon.monomial)?);
    }
    Ok(Some((Var::product(ids), sign)))
}

/// Canonicalizes and indexes every term of an expansion.
pub fn resolve(expansion: &[(i32, LabeledTerm)], tables: &impl TableSource) -> Result<LinComb> {
    let mut acc: HashMap<Var, i64> = HashMap::new();
    for (c, term) in expansion {
        let m = term.to_monomial()?;
        if let Some((v, s)) = resolve_monomial(&m, tables)? {
            *acc.entry(v).or_insert(0) += i64::from(*c) * i64::from(s);
        }
    }
    Ok(acc
        .into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|(v, c)| (v, BigRational::from_integer(c.into())))
        .collect())
}

/// Resolves, normalizes and deduplicates a batch of expansions.
pub fn resolve_all(
    expansions: impl IntoIterator<Item = Expansion>,
    tables: &impl TableSource,
) -> Result<Vec<LinComb>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in expansions {
        let comb = resolve(&e, tables)?;
        if comb.is_empty() {
            continue;
        }
        let comb = comb.normalized();
        if seen.insert(comb.clone()) {
            out.push(comb);
        }
    }
    Ok(out)
}

fn replace_factor(base: &LabeledTerm, f: usize, labels: Vec<u16>) -> LabeledTerm {
    let mut t = base.clone();
    t.factors[f] = labels;
    t
}

/// First Bianchi identity `R_{a[bcd]} = 0`, once per factor. All four
/// anchor choices give equivalent relations modulo the pair symmetries.
pub fn cyclic(m: &Monomial) -> Vec<Expansion> {
    let base = m.to_labeled();
    (0..base.factors.len())
        .map(|f| {
            let l = &base.factors[f];
            let rot = |b: usize, c: usize, d: usize| {
                let mut v = l.clone();
                v[1] = l[b];
                v[2] = l[c];
                v[3] = l[d];
                replace_factor(&base, f, v)
            };
            vec![(1, rot(1, 2, 3)), (1, rot(2, 3, 1)), (1, rot(3, 1, 2))]
        })
        .collect()
}

/// Differential Bianchi identity on the innermost derivative: the cyclic sum
/// over `(e, c, d)` and over `(e, a, b)`, per differentiated factor.
pub fn bianchi(m: &Monomial) -> Vec<Expansion> {
    let base = m.to_labeled();
    let mut out = Vec::new();
    for (f, l) in base.factors.iter().enumerate() {
        if l.len() < 5 {
            continue;
        }
        let with = |r: [usize; 5]| {
            let mut v = l.clone();
            for (k, &src) in r.iter().enumerate() {
                v[k] = l[src];
            }
            replace_factor(&base, f, v)
        };
        // R_{ab cd;e} + R_{ab de;c} + R_{ab ec;d}
        out.push(vec![
            (1, with([0, 1, 2, 3, 4])),
            (1, with([0, 1, 3, 4, 2])),
            (1, with([0, 1, 4, 2, 3])),
        ]);
        // R_{ab cd;e} + R_{be cd;a} + R_{ea cd;b}
        out.push(vec![
            (1, with([0, 1, 2, 3, 4])),
            (1, with([1, 4, 2, 3, 0])),
            (1, with([4, 0, 2, 3, 1])),
        ]);
    }
    out
}

/// Commutation of adjacent covariant derivatives:
/// `∇_d∇_c T - ∇_c∇_d T = Σ_s R_{d c t_s}^x T_{..x..}` with any further
/// derivatives distributed over the curvature term by the Leibniz rule.
pub fn commute(m: &Monomial) -> Vec<Expansion> {
    let base = m.to_labeled();
    let fresh = base.label_bound();
    let mut out = Vec::new();
    for (f, l) in base.factors.iter().enumerate() {
        for p in 4..l.len().saturating_sub(1) {
            let (c, d) = (l[p], l[p + 1]);
            let mut swapped = l.clone();
            swapped.swap(p, p + 1);
            let mut e: Expansion = vec![(1, base.clone()), (-1, replace_factor(&base, f, swapped))];
            let inner = &l[..p];
            let outer = &l[p + 2..];
            for s in 0..inner.len() {
                let x = fresh;
                let mut t = inner.to_vec();
                t[s] = x;
                let r = vec![c, d, inner[s], x];
                for mask in 0u32..(1 << outer.len()) {
                    let mut rf = r.clone();
                    let mut tf = t.clone();
                    for (k, &o) in outer.iter().enumerate() {
                        if mask >> k & 1 == 1 {
                            rf.push(o);
                        } else {
                            tf.push(o);
                        }
                    }
                    let mut term = replace_factor(&base, f, tf);
                    term.factors.push(rf);
                    e.push((1, term));
                }
            }
            out.push(e);
        }
    }
    out
}

/// Per factor, the slots among which antisymmetrizing any three already
/// vanishes by the cyclic and Bianchi identities.
fn saturated_blocks(case: Case) -> Vec<(usize, usize)> {
    (0..case.degree())
        .map(|f| {
            let o = case.factor_offset(f);
            (o, o + case.factor_len(f).min(5))
        })
        .collect()
}

/// Identities from antisymmetrizing over `dim + 1` indices, one per choice of
/// `dim + 1` contracted pairs and orientation. Choices with three slots in one
/// saturated block are skipped (already implied by earlier relations).
pub fn dimdep(m: &Monomial, dim: usize) -> Vec<Vec<(i32, Monomial)>> {
    let k = dim + 1;
    let pairs = m.pairs();
    if pairs.len() < k {
        return Vec::new();
    }
    let case = m.case();
    let blocks = saturated_blocks(case);
    let perms = permutations_with_sign(k);
    let mut out = Vec::new();
    for subset in combinations(pairs.len(), k) {
        for orient in 0u32..(1 << (k - 1)) {
            let mut p = Vec::with_capacity(k);
            let mut q = Vec::with_capacity(k);
            for (j, &pi) in subset.iter().enumerate() {
                let (a, b) = pairs[pi];
                if j > 0 && orient >> (j - 1) & 1 == 1 {
                    p.push(b);
                    q.push(a);
                } else {
                    p.push(a);
                    q.push(b);
                }
            }
            let redundant = blocks.iter().any(|&(lo, hi)| {
                p.iter().filter(|&&s| (lo..hi).contains(&(s as usize))).count() >= 3
            });
            if redundant {
                continue;
            }
            let terms = perms
                .iter()
                .map(|(sigma, sign)| {
                    let mut pairing = m.pairing().to_vec();
                    for i in 0..k {
                        let (a, b) = (p[i], q[sigma[i]]);
                        pairing[a as usize] = b;
                        pairing[b as usize] = a;
                    }
                    (*sign, Monomial::new(case, pairing).expect("reconnection keeps a matching"))
                })
                .collect();
            out.push(terms);
        }
    }
    out
}

/// Resolves monomial-level expansions (as produced by [`dimdep`]).
pub fn resolve_monomials(
    expansions: Vec<Vec<(i32, Monomial)>>,
    tables: &impl TableSource,
) -> Result<Vec<LinComb>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in expansions {
        let mut acc: HashMap<Var, i64> = HashMap::new();
        for (c, m) in &e {
            if let Some((v, s)) = resolve_monomial(m, tables)? {
                *acc.entry(v).or_insert(0) += i64::from(*c) * i64::from(s);
            }
        }
        let comb: LinComb = acc
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .map(|(v, c)| (v, BigRational::from_integer(c.into())))
            .collect();
        if comb.is_empty() {
            continue;
        }
        let comb = comb.normalized();
        if seen.insert(comb.clone()) {
            out.push(comb);
        }
    }
    Ok(out)
}

/// Rewrites a product of two dual invariants without ε:
/// `ε_{p1..p4} ε_{q1..q4} = s Σ_σ sgn σ Π δ_{p_i q_σ(i)}`, where `s` is the
/// sign of the metric determinant. Returns the expansion of
/// `A·B - s Σ_σ sgn σ (A B)_σ`, with `A·B` given separately as a variable.
pub fn dual_product(a: &Monomial, b: &Monomial, det_sign: i32) -> Result<Vec<(i32, LabeledTerm)>> {
    let la = a.to_labeled();
    let mut lb = b.to_labeled();
    let (Some(ea), Some(_)) = (la.eps, lb.eps) else {
        return Err(Error::Malformed("dual product needs two dual monomials".into()));
    };
    let shift = la.label_bound();
    for l in lb.factors.iter_mut().flatten() {
        *l += shift;
    }
    let eb = lb.eps.map(|e| e.map(|l| l + shift)).unwrap();
    let mut out = Vec::with_capacity(24);
    for (sigma, sign) in permutations_with_sign(4) {
        let rename: HashMap<u16, u16> = (0..4).map(|i| (eb[sigma[i]], ea[i])).collect();
        let mut t = LabeledTerm {
            factors: la.factors.clone(),
            eps: None,
        };
        for f in &lb.factors {
            t.factors.push(f.iter().map(|l| *rename.get(l).unwrap_or(l)).collect());
        }
        out.push((-det_sign * sign, t));
    }
    Ok(out)
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All permutations of `0..k` with their signs.
pub fn permutations_with_sign(k: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    fn rec(i: usize, p: &mut Vec<usize>, sign: i32, out: &mut Vec<(Vec<usize>, i32)>) {
        if i == p.len() {
            out.push((p.clone(), sign));
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            rec(i + 1, p, if i == j { sign } else { -sign }, out);
            p.swap(i, j);
        }
    }
    rec(0, &mut p, 1, &mut out);
    out
}
