//! Truncated polynomials in the four chart coordinates with exact rational
//! coefficients.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

pub const DIM: usize = 4;

/// Monomials `x^μ` with `|μ| ≤ max_degree`, ordered by total degree.
#[derive(Debug)]
pub struct JetSpace {
    max_degree: usize,
    monos: Vec<[u8; DIM]>,
    /// `prefix[d]` = number of monomials of degree < d.
    prefix: Vec<usize>,
    index: HashMap<[u8; DIM], usize>,
    /// `sum[i * len + j]` = index of `x^μi x^μj`, or `NONE` beyond the degree bound.
    sum: Vec<u32>,
    /// `shift[i * DIM + e]` = index of `x^μi x^e`, or `NONE`.
    shift: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl JetSpace {
    pub fn new(max_degree: usize) -> Arc<JetSpace> {
        let mut monos = Vec::new();
        let mut prefix = Vec::new();
        for d in 0..=max_degree {
            prefix.push(monos.len());
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    for c in (0..=d - a - b).rev() {
                        monos.push([a as u8, b as u8, c as u8, (d - a - b - c) as u8]);
                    }
                }
            }
        }
        prefix.push(monos.len());
        let index: HashMap<[u8; DIM], usize> =
            monos.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let add = |a: &[u8; DIM], b: &[u8; DIM]| {
            let mut m = *a;
            for (x, y) in m.iter_mut().zip(b) {
                *x += y;
            }
            index.get(&m).map_or(NONE, |&k| k as u32)
        };
        let n = monos.len();
        let mut sum = vec![NONE; n * n];
        let mut shift = vec![NONE; n * DIM];
        for i in 0..n {
            for j in 0..n {
                sum[i * n + j] = add(&monos[i], &monos[j]);
            }
            for e in 0..DIM {
                let mut unit = [0u8; DIM];
                unit[e] = 1;
                shift[i * DIM + e] = add(&monos[i], &unit);
            }
        }
        Arc::new(JetSpace {
            max_degree,
            monos,
            prefix,
            index,
            sum,
            shift,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of monomials of degree ≤ d.
    fn len_to(&self, d: usize) -> usize {
        self.prefix[d + 1]
    }

    pub fn monomials(&self, degree: usize) -> &[[u8; DIM]] {
        &self.monos[self.prefix[degree]..self.prefix[degree + 1]]
    }

    fn degree_of(&self, i: usize) -> usize {
        self.monos[i].iter().map(|&e| e as usize).sum()
    }
}

/// A polynomial known up to (and including) total degree `deg`.
#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    deg: usize,
    c: Vec<BigRational>,
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>, deg: usize) -> Jet {
        Jet {
            space: space.clone(),
            deg,
            c: vec![BigRational::zero(); space.len_to(deg)],
        }
    }

    pub fn constant(space: &Arc<JetSpace>, deg: usize, v: BigRational) -> Jet {
        let mut j = Jet::zero(space, deg);
        j.c[0] = v;
        j
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    /// Value at the origin.
    pub fn value(&self) -> &BigRational {
        &self.c[0]
    }

    pub fn coeff(&self, mono: [u8; DIM]) -> BigRational {
        match self.space.index.get(&mono) {
            Some(&i) if i < self.c.len() => self.c[i].clone(),
            _ => BigRational::zero(),
        }
    }

    pub fn set_coeff(&mut self, mono: [u8; DIM], v: BigRational) {
        let i = self.space.index[&mono];
        if i < self.c.len() {
            self.c[i] = v;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, deg: usize) -> Jet {
        let deg = deg.min(self.deg);
        Jet {
            space: self.space.clone(),
            deg,
            c: self.c[..self.space.len_to(deg)].to_vec(),
        }
    }

    pub fn add_assign(&mut self, other: &Jet) {
        self.combine(other, |a, b| *a += b);
    }

    pub fn sub_assign(&mut self, other: &Jet) {
        self.combine(other, |a, b| *a -= b);
    }

    fn combine(&mut self, other: &Jet, f: impl Fn(&mut BigRational, &BigRational)) {
        if other.deg < self.deg {
            *self = self.truncate(other.deg);
        }
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            if !b.is_zero() {
                f(a, b);
            }
        }
    }

    pub fn scaled(&self, k: &BigRational) -> Jet {
        let mut j = self.clone();
        for c in &mut j.c {
            *c *= k;
        }
        j
    }

    /// Truncated product; the result is known to the lesser degree.
    pub fn mul(&self, other: &Jet) -> Jet {
        self.mul_to(other, self.deg.min(other.deg))
    }

    /// Product truncated at degree `deg` (at most the lesser known degree).
    pub fn mul_to(&self, other: &Jet, deg: usize) -> Jet {
        let deg = deg.min(self.deg).min(other.deg);
        let mut out = Jet::zero(&self.space, deg);
        let sp = &self.space;
        let n = sp.monos.len();
        for (i, a) in self.c[..sp.len_to(deg)].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let di = sp.degree_of(i);
            let row = &sp.sum[i * n..];
            for (j, b) in other.c[..sp.len_to(deg - di)].iter().enumerate() {
                if !b.is_zero() {
                    out.c[row[j] as usize] += a * b;
                }
            }
        }
        out
    }

    /// `∂/∂x^e`; the result is known to one degree less.
    pub fn deriv(&self, e: usize) -> Jet {
        assert!(self.deg >= 1, "derivative of a jet known only at the origin");
        let deg = self.deg - 1;
        let mut out = Jet::zero(&self.space, deg);
        let sp = &self.space;
        for (i, slot) in out.c.iter_mut().enumerate() {
            let src = &self.c[sp.shift[i * DIM + e] as usize];
            if !src.is_zero() {
                *slot = src * BigRational::from_integer((sp.monos[i][e] + 1).into());
            }
        }
        out
    }
}
