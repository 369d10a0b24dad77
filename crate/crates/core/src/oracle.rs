//! Exact evaluation of invariants on random polynomial metrics at the
//! origin of a 4-dimensional chart. Independent of the symbolic machinery:
//! curvature comes from Christoffel symbols, derivatives are iterated, and
//! contractions are summed component by component.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::database::Database;
use crate::enumerate::InvariantId;
use crate::error::{Error, Result};
use crate::lincomb::{LinComb, Var};
use crate::monomial::Monomial;
use crate::relations::TableSource;

pub mod jet;

use jet::{Jet, JetSpace, DIM};

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Components of a covariant tensor, first index most significant.
#[derive(Clone, Debug)]
pub struct Tensor {
    rank: usize,
    comps: Vec<Jet>,
}

impl Tensor {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[flat(idx)]
    }

    /// Values at the origin in flat order.
    pub fn values(&self) -> Vec<BigRational> {
        self.comps.iter().map(|j| j.value().clone()).collect()
    }
}

fn flat(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * DIM + i)
}

fn unflat(mut k: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in idx.iter_mut().rev() {
        *slot = k % DIM;
        k /= DIM;
    }
    idx
}

/// `g_ab = η_ab + Σ c x^μ`, polynomial of degree `degree`, with `g(0) = η`.
#[derive(Clone, Debug)]
pub struct PolyMetric {
    space: Arc<JetSpace>,
    /// Diagonal of η.
    eta: [i64; DIM],
    g: Vec<Vec<Jet>>,
}

impl PolyMetric {
    /// Seeded random metric; `lorentzian` selects η = diag(-1,1,1,1).
    pub fn random(seed: u64, degree: usize, lorentzian: bool) -> PolyMetric {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = JetSpace::new(degree);
        let mut m = PolyMetric::flat(&space, lorentzian);
        for a in 0..DIM {
            for b in a..DIM {
                let mut comp = m.g[a][b].clone();
                for d in 1..=degree {
                    for &mono in space.monomials(d) {
                        let num: i64 = rng.gen_range(-3..=3);
                        let den: i64 = rng.gen_range(1..=3);
                        comp.set_coeff(mono, BigRational::new(num.into(), den.into()));
                    }
                }
                m.g[a][b] = comp.clone();
                m.g[b][a] = comp;
            }
        }
        m
    }

    /// The constant metric η.
    pub fn flat(space: &Arc<JetSpace>, lorentzian: bool) -> PolyMetric {
        let eta = if lorentzian { [-1, 1, 1, 1] } else { [1, 1, 1, 1] };
        let d = space.max_degree();
        let g = (0..DIM)
            .map(|a| {
                (0..DIM)
                    .map(|b| Jet::constant(space, d, if a == b { q(eta[a]) } else { q(0) }))
                    .collect()
            })
            .collect();
        PolyMetric {
            space: space.clone(),
            eta,
            g,
        }
    }

    /// Sets `g_ab = g_ba` to η_ab plus the given polynomial coefficients.
    pub fn set_component(&mut self, a: usize, b: usize, coeffs: &[([u8; DIM], BigRational)]) {
        let mut comp = self.g[a][b].clone();
        for (mono, c) in coeffs {
            comp.set_coeff(*mono, c.clone());
        }
        self.g[a][b] = comp.clone();
        self.g[b][a] = comp;
    }

    pub fn degree(&self) -> usize {
        self.space.max_degree()
    }

    pub fn eta(&self) -> [i64; DIM] {
        self.eta
    }

    pub fn component(&self, a: usize, b: usize) -> &Jet {
        &self.g[a][b]
    }

    /// `g^{ab}` as a Neumann series around η, known to one degree less than
    /// the metric (all that the Christoffel symbols need).
    pub fn inverse(&self) -> Vec<Vec<Jet>> {
        let d = self.degree() - 1;
        let sp = &self.space;
        let eta_inv = |a: usize| q(self.eta[a]); // η is its own inverse
        // h η, with h = g - η
        let mut h_eta = vec![vec![Jet::zero(sp, d); DIM]; DIM];
        for a in 0..DIM {
            for b in 0..DIM {
                let mut h = self.g[a][b].truncate(d);
                if a == b {
                    h.sub_assign(&Jet::constant(sp, d, q(self.eta[a])));
                }
                h_eta[a][b] = h.scaled(&eta_inv(b));
            }
        }
        let mut term: Vec<Vec<Jet>> = (0..DIM)
            .map(|a| {
                (0..DIM)
                    .map(|b| Jet::constant(sp, d, if a == b { eta_inv(a) } else { q(0) }))
                    .collect()
            })
            .collect();
        let mut sum = term.clone();
        for _ in 0..d {
            let mut next = vec![vec![Jet::zero(sp, d); DIM]; DIM];
            for a in 0..DIM {
                for b in 0..DIM {
                    let mut acc = Jet::zero(sp, d);
                    for c in 0..DIM {
                        acc.sub_assign(&term[a][c].mul(&h_eta[c][b]));
                    }
                    next[a][b] = acc;
                }
            }
            term = next;
            for a in 0..DIM {
                for b in 0..DIM {
                    sum[a][b].add_assign(&term[a][b]);
                }
            }
        }
        sum
    }

    /// Christoffel symbols of the first kind `Γ_{c ab}` and second kind `Γ^c_{ab}`.
    pub fn christoffels(&self) -> (Tensor, Tensor) {
        let half = BigRational::new(1.into(), 2.into());
        let mut first = Vec::with_capacity(DIM * DIM * DIM);
        for k in 0..DIM * DIM * DIM {
            let i = unflat(k, 3);
            let (c, a, b) = (i[0], i[1], i[2]);
            let mut j = self.g[b][c].deriv(a);
            j.add_assign(&self.g[a][c].deriv(b));
            j.sub_assign(&self.g[a][b].deriv(c));
            first.push(j.scaled(&half));
        }
        let first = Tensor { rank: 3, comps: first };
        let ginv = self.inverse();
        let mut second = Vec::with_capacity(DIM * DIM * DIM);
        for k in 0..DIM * DIM * DIM {
            let i = unflat(k, 3);
            let (d, a, b) = (i[0], i[1], i[2]);
            let mut j = Jet::zero(&self.space, self.degree() - 1);
            for c in 0..DIM {
                j.add_assign(&ginv[d][c].mul(first.get(&[c, a, b])));
            }
            second.push(j);
        }
        (first, Tensor { rank: 3, comps: second })
    }

    /// `R_{abcd}` from `R_{abc}^d = ∂_b Γ^d_{ac} - ∂_a Γ^d_{bc} + Γ^e_{ac} Γ^d_{be} - Γ^e_{bc} Γ^d_{ae}`,
    /// lowered on the last index.
    pub fn riemann(&self) -> Tensor {
        self.riemann_from(&self.christoffels().1)
    }

    fn riemann_from(&self, gamma: &Tensor) -> Tensor {
        let deg = self.degree() - 2;
        let mut up = Vec::with_capacity(DIM.pow(4));
        for k in 0..DIM.pow(4) {
            let i = unflat(k, 4);
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut j = gamma.get(&[d, a, c]).deriv(b);
            j.sub_assign(&gamma.get(&[d, b, c]).deriv(a));
            for e in 0..DIM {
                j.add_assign(&gamma.get(&[e, a, c]).mul_to(gamma.get(&[d, b, e]), deg));
                j.sub_assign(&gamma.get(&[e, b, c]).mul_to(gamma.get(&[d, a, e]), deg));
            }
            up.push(j.truncate(deg));
        }
        let mut low = Vec::with_capacity(DIM.pow(4));
        for k in 0..DIM.pow(4) {
            let i = unflat(k, 4);
            let mut j = Jet::zero(&self.space, deg);
            for e in 0..DIM {
                j.add_assign(&up[flat(&[i[0], i[1], i[2], e])].mul_to(&self.g[e][i[3]], deg));
            }
            low.push(j);
        }
        Tensor { rank: 4, comps: low }
    }

    /// Second route to `R_{abcd}`: second metric derivatives plus
    /// `g^{ef}(Γ_{f bc} Γ_{e ad} - Γ_{f ac} Γ_{e bd})`.
    pub fn riemann_closed_form(&self) -> Tensor {
        let (first, _) = self.christoffels();
        let ginv = self.inverse();
        let half = BigRational::new(1.into(), 2.into());
        let deg = self.degree() - 2;
        let dd = |x: usize, y: usize, u: usize, v: usize| self.g[x][y].deriv(u).deriv(v);
        let mut comps = Vec::with_capacity(DIM.pow(4));
        for k in 0..DIM.pow(4) {
            let i = unflat(k, 4);
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut j = dd(a, d, b, c);
            j.add_assign(&dd(b, c, a, d));
            j.sub_assign(&dd(a, c, b, d));
            j.sub_assign(&dd(b, d, a, c));
            let mut j = j.scaled(&half);
            for e in 0..DIM {
                for f in 0..DIM {
                    let mut t = first.get(&[f, b, c]).mul_to(first.get(&[e, a, d]), deg);
                    t.sub_assign(&first.get(&[f, a, c]).mul_to(first.get(&[e, b, d]), deg));
                    j.add_assign(&ginv[e][f].mul_to(&t, deg));
                }
            }
            comps.push(j.truncate(deg));
        }
        Tensor { rank: 4, comps }
    }
}

/// `(∇T)_{i1..ir e} = ∂_e T_{i1..ir} - Σ_k Γ^x_{e ik} T_{..x..}`.
pub fn covariant_derivative(t: &Tensor, gamma: &Tensor) -> Tensor {
    let r = t.rank;
    let mut comps = Vec::with_capacity(t.comps.len() * DIM);
    for k in 0..t.comps.len() * DIM {
        let idx = unflat(k, r + 1);
        let e = idx[r];
        let base = &idx[..r];
        let mut j = t.get(base).deriv(e);
        let deg = j.degree();
        let mut probe = base.to_vec();
        for pos in 0..r {
            let orig = probe[pos];
            for x in 0..DIM {
                let g = gamma.get(&[x, e, orig]);
                if g.is_zero() {
                    continue;
                }
                probe[pos] = x;
                j.sub_assign(&g.mul_to(t.get(&probe), deg));
            }
            probe[pos] = orig;
        }
        comps.push(j);
    }
    Tensor { rank: r + 1, comps }
}

/// Values at the origin of `∇^k R_{abcd}` for `k = 0..=max_deriv`.
#[derive(Clone, Debug)]
pub struct Curvature {
    levels: Vec<Vec<BigRational>>,
    eta: [i64; DIM],
}

impl Curvature {
    pub fn max_deriv(&self) -> usize {
        self.levels.len() - 1
    }

    /// `R_{abcd;e1..ek}` at the origin.
    pub fn component(&self, idx: &[usize]) -> &BigRational {
        &self.levels[idx.len() - 4][flat(idx)]
    }
}

pub fn curvature_jet(g: &PolyMetric, max_deriv: usize) -> Result<Curvature> {
    if g.degree() < max_deriv + 2 {
        return Err(Error::JetDepth {
            needed: max_deriv + 2,
            have: g.degree(),
        });
    }
    let (_, gamma) = g.christoffels();
    let mut t = g.riemann_from(&gamma);
    let mut levels = vec![t.values()];
    for _ in 0..max_deriv {
        t = covariant_derivative(&t, &gamma);
        levels.push(t.values());
    }
    Ok(Curvature { levels, eta: g.eta })
}

/// Sign of the permutation `v` of `0..4`, or 0 if it repeats a value.
fn levi_civita(v: [usize; 4]) -> i64 {
    let mut sign = 1;
    for i in 0..4 {
        for j in i + 1..4 {
            if v[i] == v[j] {
                return 0;
            }
            if v[i] > v[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Evaluates invariants on one metric; values of indexed invariants are cached.
pub struct Evaluator {
    curv: Curvature,
    cache: HashMap<InvariantId, BigRational>,
}

impl Evaluator {
    pub fn new(curv: Curvature) -> Self {
        Evaluator {
            curv,
            cache: HashMap::new(),
        }
    }

    pub fn curvature(&self) -> &Curvature {
        &self.curv
    }

    /// Full contraction with η at the origin; ε has `ε_{0123} = 1`.
    pub fn eval_monomial(&self, m: &Monomial) -> Result<BigRational> {
        let case = m.case();
        let deepest = case.lambdas().iter().copied().max().unwrap_or(0) as usize;
        if deepest > self.curv.max_deriv() {
            return Err(Error::JetDepth {
                needed: deepest + 2,
                have: self.curv.max_deriv() + 2,
            });
        }
        if m.is_product() {
            let mut acc = BigRational::one();
            for part in m.split() {
                acc *= self.eval_monomial(&part)?;
                if acc.is_zero() {
                    break;
                }
            }
            return Ok(acc);
        }
        let pairs = m.pairs();
        let mut pair_of = vec![0usize; case.slots()];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            pair_of[a as usize] = k;
            pair_of[b as usize] = k;
        }
        let factors: Vec<Vec<usize>> = (0..case.degree())
            .map(|f| {
                let o = case.factor_offset(f);
                (o..o + case.factor_len(f)).map(|s| pair_of[s]).collect()
            })
            .collect();
        let eps: Option<Vec<usize>> = case
            .is_dual()
            .then(|| (case.eps_offset()..case.eps_offset() + 4).map(|s| pair_of[s]).collect());
        let np = pairs.len();
        let mut vals = vec![0usize; np];
        let mut total = BigRational::zero();
        let mut idx = Vec::with_capacity(16);
        'outer: loop {
            let mut sign: i64 = vals.iter().map(|&v| self.curv.eta[v]).product();
            if let Some(e) = &eps {
                sign *= levi_civita([vals[e[0]], vals[e[1]], vals[e[2]], vals[e[3]]]);
            }
            if sign != 0 {
                let mut prod = q(sign);
                for f in &factors {
                    idx.clear();
                    idx.extend(f.iter().map(|&p| vals[p]));
                    let c = self.curv.component(&idx);
                    if c.is_zero() {
                        prod = BigRational::zero();
                        break;
                    }
                    prod *= c;
                }
                total += prod;
            }
            for v in vals.iter_mut() {
                *v += 1;
                if *v < DIM {
                    continue 'outer;
                }
                *v = 0;
            }
            break;
        }
        Ok(total)
    }

    pub fn eval_id(&mut self, id: InvariantId, tables: &impl TableSource) -> Result<BigRational> {
        if let Some(v) = self.cache.get(&id) {
            return Ok(v.clone());
        }
        let table = tables.table(id.case).ok_or(Error::MissingCase(id.case))?;
        let v = self.eval_monomial(table.lookup(id)?)?;
        self.cache.insert(id, v.clone());
        Ok(v)
    }

    pub fn eval_var(&mut self, v: &Var, tables: &impl TableSource) -> Result<BigRational> {
        let mut acc = BigRational::one();
        for id in v.factors() {
            acc *= self.eval_id(*id, tables)?;
        }
        Ok(acc)
    }

    pub fn eval_lincomb(&mut self, x: &LinComb, tables: &impl TableSource) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (v, c) in x.iter() {
            acc += c * self.eval_var(v, tables)?;
        }
        Ok(acc)
    }

    /// Value of a combination of raw monomials (products allowed).
    pub fn eval_terms(&self, terms: &[(BigRational, Monomial)]) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (c, m) in terms {
            acc += c * self.eval_monomial(m)?;
        }
        Ok(acc)
    }
}

/// Outcome of checking stored rules on one metric.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleCheck {
    pub checked: usize,
    /// Rules mentioning a factor with more derivatives than the jet carries.
    pub skipped: usize,
    /// Pivots whose rule evaluated to a nonzero residual.
    pub failures: Vec<InvariantId>,
}

/// Evaluates `pivot - rhs` for every stored rule whose deepest factor has at
/// most `max_lambda` derivatives.
pub fn check_rules(eval: &mut Evaluator, db: &Database, max_lambda: usize) -> Result<RuleCheck> {
    let mut out = RuleCheck::default();
    let depth = |v: &Var| v.factors().iter().map(|id| id.case.lambdas().iter().copied().max().unwrap_or(0)).max().unwrap_or(0) as usize;
    for (id, (_, rhs)) in &db.rules.rules {
        let deepest = rhs.vars().map(depth).chain([depth(&Var::Inv(*id))]).max().unwrap_or(0);
        if deepest > max_lambda.min(eval.curvature().max_deriv()) {
            out.skipped += 1;
            continue;
        }
        let residual = eval.eval_id(*id, db)? - eval.eval_lincomb(rhs, db)?;
        out.checked += 1;
        if !residual.is_zero() {
            out.failures.push(*id);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_has_no_curvature() {
        let g = PolyMetric::flat(&JetSpace::new(4), true);
        let c = curvature_jet(&g, 2).unwrap();
        for k in 0..=2 {
            assert!(c.levels[k].iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn two_routes_to_riemann_agree() {
        let g = PolyMetric::random(3, 4, true);
        let a = g.riemann();
        let b = g.riemann_closed_form();
        for (x, y) in a.comps.iter().zip(&b.comps) {
            let mut d = x.clone();
            d.sub_assign(y);
            assert!(d.is_zero());
        }
        // single-coefficient metric g_00 = -1 + x1^2
        let sp = JetSpace::new(2);
        let mut g = PolyMetric::flat(&sp, true);
        g.set_component(0, 0, &[([0, 2, 0, 0], q(1))]);
        let r = g.riemann();
        let r2 = g.riemann_closed_form();
        // R_{0101} = -1/2 (g_{00,11}) = -1
        assert_eq!(r.get(&[0, 1, 0, 1]).value(), &q(-1));
        assert_eq!(r2.get(&[0, 1, 0, 1]).value(), &q(-1));
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let g = PolyMetric::random(11, 3, true);
        let c = curvature_jet(&g, 1).unwrap();
        for k in 0..DIM.pow(5) {
            let i = unflat(k, 5);
            let (a, b, cc, d, e) = (i[0], i[1], i[2], i[3], i[4]);
            let r = |x: [usize; 4]| c.component(&x).clone();
            if k < DIM.pow(4) {
                let i = unflat(k, 4);
                let (a, b, cc, d) = (i[0], i[1], i[2], i[3]);
                assert_eq!(r([a, b, cc, d]), -r([b, a, cc, d]));
                assert_eq!(r([a, b, cc, d]), r([cc, d, a, b]));
                assert!((r([a, b, cc, d]) + r([a, cc, d, b]) + r([a, d, b, cc])).is_zero());
            }
            let rd = |x: [usize; 5]| c.component(&x).clone();
            let s = rd([a, b, cc, d, e]) + rd([a, b, d, e, cc]) + rd([a, b, e, cc, d]);
            assert!(s.is_zero());
        }
    }

    #[test]
    fn commutator_on_a_covector() {
        // (∇_a∇_b - ∇_b∇_a) ω_c = R_{abc}^d ω_d, with ω = dφ + x-dependent part
        let g = PolyMetric::random(5, 3, true);
        let sp = JetSpace::new(3);
        let (_, gamma) = g.christoffels();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let comps: Vec<Jet> = (0..DIM)
            .map(|_| {
                let mut j = Jet::zero(&sp, 3);
                for d in 0..=3 {
                    for &m in sp.monomials(d) {
                        j.set_coeff(m, q(rng.gen_range(-2..=2)));
                    }
                }
                j
            })
            .collect();
        let omega = Tensor { rank: 1, comps };
        let dd = covariant_derivative(&covariant_derivative(&omega, &gamma), &gamma);
        let riem = g.riemann();
        let ginv = g.inverse();
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    // storage [c, b, a] is ∇_a ∇_b ω_c
                    let lhs = dd.get(&[c, b, a]).value() - dd.get(&[c, a, b]).value();
                    let mut rhs = BigRational::zero();
                    for d in 0..DIM {
                        for e in 0..DIM {
                            rhs += riem.get(&[a, b, c, e]).value()
                                * ginv[e][d].value()
                                * omega.get(&[d]).value();
                        }
                    }
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn epsilon_conventions() {
        use crate::monomial::Case;
        let g = PolyMetric::random(1, 2, true);
        let ev = Evaluator::new(curvature_jet(&g, 0).unwrap());
        // ε^{abcd} R_{abcd} vanishes by the cyclic identity
        let d0 = Case::new(&[0], true).unwrap();
        let m = Monomial::from_pairs(d0, &[(0, 4), (1, 5), (2, 6), (3, 7)]).unwrap();
        assert!(ev.eval_monomial(&m).unwrap().is_zero());
        assert_eq!(levi_civita([0, 1, 2, 3]), 1);
        assert_eq!(levi_civita([1, 0, 2, 3]), -1);
        let s: i64 = (0..256)
            .map(|k| {
                let v = unflat(k, 4);
                let e = levi_civita([v[0], v[1], v[2], v[3]]);
                e * e * v.iter().map(|&x| [-1i64, 1, 1, 1][x]).product::<i64>()
            })
            .sum();
        assert_eq!(s, -24);
    }
}
