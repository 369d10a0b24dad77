//! Signed permutation groups acting on a small set of slots.
//!
//! A [`SignedPerm`] is a bijection on `0..m` together with a sign. Groups are
//! stored as a base and strong generating set ([`Bsgs`]) built with the
//! deterministic Schreier–Sims algorithm over the base `0, 1, .., m-1`.

use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// A permutation of `0..m` carrying an overall sign.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SignedPerm {
    images: Vec<u8>,
    negative: bool,
}

impl SignedPerm {
    pub fn identity(degree: usize) -> Self {
        SignedPerm {
            images: (0..degree as u8).collect(),
            negative: false,
        }
    }

    /// Builds a permutation from its image list. Fails if `images` is not a bijection.
    pub fn from_images(images: Vec<u8>, negative: bool) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &x in &images {
            let x = x as usize;
            if x >= images.len() || seen[x] {
                return Err(Error::Malformed(format!(
                    "image list {images:?} is not a permutation"
                )));
            }
            seen[x] = true;
        }
        Ok(SignedPerm { images, negative })
    }

    /// Builds a permutation from disjoint cycles (0-based points).
    pub fn from_cycles(degree: usize, cycles: &[&[u8]], negative: bool) -> Result<Self> {
        let mut images: Vec<u8> = (0..degree as u8).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                let x = x as usize;
                if x >= degree || touched[x] {
                    return Err(Error::Malformed(format!("bad cycle {cycle:?}")));
                }
                touched[x] = true;
                images[x] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(SignedPerm { images, negative })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn apply(&self, x: u8) -> u8 {
        self.images[x as usize]
    }

    /// Composition `self ∘ rhs`: `rhs` acts first.
    pub fn compose(&self, rhs: &SignedPerm) -> SignedPerm {
        debug_assert_eq!(self.degree(), rhs.degree());
        SignedPerm {
            images: rhs.images.iter().map(|&x| self.images[x as usize]).collect(),
            negative: self.negative ^ rhs.negative,
        }
    }

    pub fn inverse(&self) -> SignedPerm {
        let mut images = vec![0u8; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x as usize] = i as u8;
        }
        SignedPerm {
            images,
            negative: self.negative,
        }
    }

    /// True when the underlying permutation is the identity, whatever the sign.
    pub fn is_unsigned_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    pub fn is_identity(&self) -> bool {
        !self.negative && self.is_unsigned_identity()
    }

    pub fn negated(&self) -> SignedPerm {
        SignedPerm {
            images: self.images.clone(),
            negative: !self.negative,
        }
    }
}

impl fmt::Display for SignedPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        let mut seen = vec![false; self.degree()];
        let mut any = false;
        for start in 0..self.degree() {
            if seen[start] || self.images[start] as usize == start {
                continue;
            }
            any = true;
            write!(f, "(")?;
            let mut x = start;
            let mut first = true;
            while !seen[x] {
                seen[x] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
                first = false;
                x = self.images[x] as usize;
            }
            write!(f, ")")?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// Result of sifting an element through a [`Bsgs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    /// The underlying permutation is not in the group.
    Absent,
    /// The element (with its sign) is in the group.
    Member,
    /// The underlying permutation is in the group, but only with the other sign.
    WrongSign,
    /// The underlying permutation is in the group with both signs; any object
    /// with this symmetry vanishes.
    BothSigns,
}

impl Membership {
    pub fn contains(self) -> bool {
        matches!(self, Membership::Member | Membership::BothSigns)
    }
}

/// One level of the stabilizer chain: the basic orbit of base point `i` under
/// the pointwise stabilizer of `0..i`, with transversal elements.
#[derive(Clone, Debug)]
pub struct Level {
    /// Orbit points in discovery order (the base point first).
    orbit: Vec<u8>,
    /// `transversal[δ]` maps the base point to `δ`.
    transversal: Vec<Option<SignedPerm>>,
    /// Inverses of the transversal elements.
    inverse: Vec<Option<SignedPerm>>,
    /// Indices into `Bsgs::strong_gens` of the generators of this stabilizer.
    gens: Vec<usize>,
}

impl Level {
    pub fn orbit(&self) -> &[u8] {
        &self.orbit
    }

    pub fn transversal(&self, point: u8) -> Option<&SignedPerm> {
        self.transversal[point as usize].as_ref()
    }

    pub fn transversal_inverse(&self, point: u8) -> Option<&SignedPerm> {
        self.inverse[point as usize].as_ref()
    }
}

/// Base and strong generating set of a signed permutation group.
#[derive(Clone, Debug)]
pub struct Bsgs {
    degree: usize,
    strong_gens: Vec<SignedPerm>,
    levels: Vec<Level>,
    negative_identity: bool,
}

impl Bsgs {
    /// Deterministic Schreier–Sims with base `0..m`.
    pub fn build(degree: usize, generators: &[SignedPerm]) -> Result<Bsgs> {
        for g in generators {
            if g.degree() != degree {
                return Err(Error::Malformed(format!(
                    "generator {g} acts on {} points, expected {degree}",
                    g.degree()
                )));
            }
        }
        let mut bsgs = Bsgs {
            degree,
            strong_gens: Vec::new(),
            levels: Vec::with_capacity(degree),
            negative_identity: false,
        };
        for g in generators {
            if g.is_unsigned_identity() {
                if g.is_negative() {
                    bsgs.negative_identity = true;
                }
                continue;
            }
            if !bsgs.strong_gens.contains(g) {
                bsgs.strong_gens.push(g.clone());
            }
        }
        for i in 0..degree {
            let gens = bsgs.gens_fixing_prefix(i);
            bsgs.levels.push(Level {
                orbit: Vec::new(),
                transversal: Vec::new(),
                inverse: Vec::new(),
                gens,
            });
            bsgs.recompute_orbit(i);
        }
        if degree == 0 {
            return Ok(bsgs);
        }

        let mut i = degree as isize - 1;
        while i >= 0 {
            let level = i as usize;
            match bsgs.find_failing_schreier_generator(level) {
                None => i -= 1,
                Some((h, fail_level)) => {
                    let idx = bsgs.strong_gens.len();
                    bsgs.strong_gens.push(h);
                    for l in level + 1..=fail_level {
                        bsgs.levels[l].gens.push(idx);
                        bsgs.recompute_orbit(l);
                    }
                    i = fail_level as isize;
                }
            }
        }
        Ok(bsgs)
    }

    fn gens_fixing_prefix(&self, i: usize) -> Vec<usize> {
        self.strong_gens
            .iter()
            .enumerate()
            .filter(|(_, g)| (0..i).all(|p| g.apply(p as u8) as usize == p))
            .map(|(k, _)| k)
            .collect()
    }

    fn recompute_orbit(&mut self, i: usize) {
        let m = self.degree;
        let mut transversal: Vec<Option<SignedPerm>> = vec![None; m];
        let mut orbit = vec![i as u8];
        transversal[i] = Some(SignedPerm::identity(m));
        let mut head = 0;
        while head < orbit.len() {
            let y = orbit[head];
            head += 1;
            for &gi in &self.levels[i].gens {
                let g = &self.strong_gens[gi];
                let z = g.apply(y);
                if transversal[z as usize].is_none() {
                    let u = g.compose(transversal[y as usize].as_ref().unwrap());
                    transversal[z as usize] = Some(u);
                    orbit.push(z);
                }
            }
        }
        let inverse = transversal
            .iter()
            .map(|u| u.as_ref().map(SignedPerm::inverse))
            .collect();
        let level = &mut self.levels[i];
        level.orbit = orbit;
        level.transversal = transversal;
        level.inverse = inverse;
    }

    /// Looks for a Schreier generator of `level` that does not sift through the
    /// deeper levels. Returns the residue and the level where sifting stopped.
    fn find_failing_schreier_generator(&mut self, level: usize) -> Option<(SignedPerm, usize)> {
        let orbit = self.levels[level].orbit.clone();
        let gens = self.levels[level].gens.clone();
        for &delta in &orbit {
            for &gi in &gens {
                let s = &self.strong_gens[gi];
                let u_delta = self.levels[level].transversal[delta as usize].as_ref().unwrap();
                let image = s.apply(delta);
                let u_image_inv = self.levels[level].inverse[image as usize].as_ref().unwrap();
                let g = u_image_inv.compose(&s.compose(u_delta));
                if g.is_identity() {
                    continue;
                }
                let (h, stop) = self.strip(g, level + 1);
                if stop < self.degree {
                    return Some((h, stop));
                }
                if h.is_negative() {
                    // Residue is -identity: the group contains both signs.
                    self.negative_identity = true;
                }
            }
        }
        None
    }

    /// Sifts `g` from level `start`. Returns the residue and the index of the
    /// level where it left the stabilizer chain (`degree` when it passed all).
    fn strip(&self, mut g: SignedPerm, start: usize) -> (SignedPerm, usize) {
        for l in start..self.degree {
            let delta = g.apply(l as u8);
            match &self.levels[l].inverse[delta as usize] {
                Some(inv) => g = inv.compose(&g),
                None => return (g, l),
            }
        }
        (g, self.degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn strong_generators(&self) -> &[SignedPerm] {
        &self.strong_gens
    }

    /// Base points with non-trivial basic orbits, ascending.
    pub fn base(&self) -> Vec<u8> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.orbit.len() > 1)
            .map(|(i, _)| i as u8)
            .collect()
    }

    /// Stabilizer chain level for base point `i` (every point is a base point).
    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i]
    }

    pub fn contains_negative_identity(&self) -> bool {
        self.negative_identity
    }

    pub fn membership(&self, g: &SignedPerm) -> Result<Membership> {
        if g.degree() != self.degree {
            return Err(Error::Malformed(format!(
                "element acts on {} points, group on {}",
                g.degree(),
                self.degree
            )));
        }
        let (h, stop) = self.strip(g.clone(), 0);
        if stop < self.degree {
            return Ok(Membership::Absent);
        }
        Ok(match (self.negative_identity, h.is_negative()) {
            (true, _) => Membership::BothSigns,
            (false, false) => Membership::Member,
            (false, true) => Membership::WrongSign,
        })
    }

    pub fn is_member(&self, g: &SignedPerm) -> Result<bool> {
        Ok(self.membership(g)?.contains())
    }

    /// Exact group order, counting signed elements.
    pub fn order(&self) -> BigUint {
        let mut order = BigUint::from(1u32);
        for l in &self.levels {
            order *= BigUint::from(l.orbit.len());
        }
        if self.negative_identity {
            order *= BigUint::from(2u32);
        }
        order
    }
}
