//! Enumeration and indexing of all canonical invariants of a case.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::canon::{canonical_image, case_group, closing_sequence};
use crate::error::{Error, Result};
use crate::monomial::{Case, Monomial};

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// Default slot bound for enumeration (all Λ ≤ 8 nondual and Λ ≤ 6 dual cases fit).
pub const DEFAULT_SLOT_LIMIT: usize = 20;

/// One canonical invariant `I_{case,index}` (index is 1-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct InvariantId {
    pub case: Case,
    pub index: u32,
}

impl InvariantId {
    pub fn new(case: Case, index: u32) -> Self {
        InvariantId { case, index }
    }
}

impl std::fmt::Display for InvariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.case.is_dual() { "D" } else { "I" };
        write!(f, "{tag}{}#{}", self.case.with_dual(false), self.index)
    }
}

/// All non-product canonical invariants of a case, in index order.
#[derive(Clone, Debug)]
pub struct CaseTable {
    case: Case,
    entries: Vec<Monomial>,
    canon: usize,
    index: HashMap<Vec<u8>, u32>,
}

impl CaseTable {
    /// Assembles a table from canonical monomials: deduplicates, sorts by the
    /// Ricci priorities and assigns indices.
    pub fn from_canonical(case: Case, monomials: Vec<Monomial>, canon: usize) -> CaseTable {
        let mut seen = HashSet::new();
        let mut entries: Vec<Monomial> = monomials
            .into_iter()
            .filter(|m| seen.insert(m.pairing().to_vec()))
            .collect();
        sort_entries(&mut entries);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, m)| (m.pairing().to_vec(), i as u32 + 1))
            .collect();
        CaseTable {
            case,
            entries,
            canon,
            index,
        }
    }

    pub fn case(&self) -> Case {
        self.case
    }

    /// Number of distinct nonzero canonical forms, products included.
    pub fn canon_count(&self) -> usize {
        self.canon
    }

    /// Number of indexed (connected) invariants.
    pub fn invars_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = InvariantId> + '_ {
        (1..=self.entries.len() as u32).map(move |i| InvariantId::new(self.case, i))
    }

    pub fn lookup(&self, id: InvariantId) -> Result<&Monomial> {
        if id.case != self.case || id.index == 0 || id.index as usize > self.entries.len() {
            return Err(Error::UnknownInvariant(id.to_string()));
        }
        Ok(&self.entries[id.index as usize - 1])
    }

    /// Id of a canonical monomial of this case.
    pub fn reverse_lookup(&self, m: &Monomial) -> Result<InvariantId> {
        if m.case() != self.case {
            return Err(Error::Malformed(format!(
                "monomial of case {} looked up in table {}",
                m.case(),
                self.case
            )));
        }
        match self.index.get(m.pairing()) {
            Some(&i) => Ok(InvariantId::new(self.case, i)),
            None if m.is_product() => Err(Error::ProductNotIndexed),
            None => Err(Error::UnknownInvariant(format!("{:?}", m.pairs()))),
        }
    }

    /// Plain-text serialization: a header followed by one line per invariant.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "curvinv-table {TABLE_FORMAT_VERSION}").unwrap();
        writeln!(s, "case {}", self.case).unwrap();
        writeln!(s, "slots {}", self.case.slots()).unwrap();
        writeln!(s, "canon {}", self.canon).unwrap();
        writeln!(s, "invars {}", self.entries.len()).unwrap();
        for (i, m) in self.entries.iter().enumerate() {
            write!(s, "{}", i + 1).unwrap();
            for (a, b) in m.pairs() {
                write!(s, " {a}-{b}").unwrap();
            }
            writeln!(s, " +1").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<CaseTable> {
        let bad = |msg: &str| Error::Database(format!("table: {msg}"));
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            line.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(&format!("expected '{key}', found '{line}'")))
        };
        let version: u32 = header("curvinv-table")?.parse().map_err(|_| bad("version"))?;
        if version != TABLE_FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let case: Case = header("case")?.parse()?;
        let slots: usize = header("slots")?.parse().map_err(|_| bad("slots"))?;
        if slots != case.slots() {
            return Err(bad("slot count does not match case"));
        }
        let canon: usize = header("canon")?.parse().map_err(|_| bad("canon"))?;
        let invars: usize = header("invars")?.parse().map_err(|_| bad("invars"))?;
        let mut entries = Vec::with_capacity(invars);
        for (k, line) in lines.enumerate() {
            let mut fields = line.split_whitespace();
            let idx: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad("missing index"))?;
            if idx != k + 1 {
                return Err(bad("indices are not consecutive"));
            }
            let mut pairs = Vec::new();
            for f in fields {
                if f == "+1" {
                    continue;
                }
                let (a, b) = f.split_once('-').ok_or_else(|| bad("bad slot pair"))?;
                let a: u8 = a.parse().map_err(|_| bad("bad slot"))?;
                let b: u8 = b.parse().map_err(|_| bad("bad slot"))?;
                pairs.push((a, b));
            }
            entries.push(Monomial::from_pairs(case, &pairs)?);
        }
        if entries.len() != invars {
            return Err(bad("entry count does not match header"));
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, m)| (m.pairing().to_vec(), i as u32 + 1))
            .collect();
        Ok(CaseTable {
            case,
            entries,
            canon,
            index,
        })
    }
}

/// Priority order: more Ricci scalars, more Ricci tensors, more Laplacians,
/// then the closing-sequence encoding.
pub fn sort_entries(entries: &mut [Monomial]) {
    entries.sort_by_cached_key(|m| {
        let (s, r, l) = m.ricci_features();
        (
            std::cmp::Reverse(s),
            std::cmp::Reverse(r),
            std::cmp::Reverse(l),
            closing_sequence(m.pairing()),
        )
    });
}

/// Enumerates every nonzero canonical monomial of `case` by walking all
/// perfect matchings of its slots.
pub fn enumerate_case(case: Case, slot_limit: usize) -> Result<CaseTable> {
    if case.slots() > slot_limit {
        return Err(Error::ResourceLimit(case, slot_limit));
    }
    let n = case.slots();
    let group = case_group(case);
    let forbidden = forbidden_pairs(case);
    let mut found: HashSet<Vec<u8>> = HashSet::new();
    let mut pairing = vec![u8::MAX; n];

    fn rec(
        pairing: &mut Vec<u8>,
        forbidden: &[Vec<bool>],
        visit: &mut dyn FnMut(&[u8]),
    ) {
        let Some(i) = pairing.iter().position(|&x| x == u8::MAX) else {
            visit(pairing);
            return;
        };
        for j in i + 1..pairing.len() {
            if pairing[j] == u8::MAX && !forbidden[i][j] {
                pairing[i] = j as u8;
                pairing[j] = i as u8;
                rec(pairing, forbidden, visit);
                pairing[i] = u8::MAX;
                pairing[j] = u8::MAX;
            }
        }
    }

    rec(&mut pairing, &forbidden, &mut |p: &[u8]| {
        if let Some((image, _)) = canonical_image(&group, p) {
            found.insert(image);
        }
    });

    let canon = found.len();
    let connected: Vec<Monomial> = found
        .into_iter()
        .map(|p| Monomial::from_parts_unchecked(case, p))
        .filter(|m| !m.is_product())
        .collect();
    Ok(CaseTable::from_canonical(case, connected, canon))
}

/// Slot pairs whose contraction always vanishes: the antisymmetric pairs of
/// each Riemann factor and any two ε slots.
fn forbidden_pairs(case: Case) -> Vec<Vec<bool>> {
    let n = case.slots();
    let mut forbidden = vec![vec![false; n]; n];
    let mut set = |a: usize, b: usize| {
        forbidden[a][b] = true;
        forbidden[b][a] = true;
    };
    for f in 0..case.degree() {
        let o = case.factor_offset(f);
        set(o, o + 1);
        set(o + 2, o + 3);
    }
    if case.is_dual() {
        let e = case.eps_offset();
        for a in e..e + 4 {
            for b in a + 1..e + 4 {
                set(a, b);
            }
        }
    }
    forbidden
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(l: &[u8], dual: bool) -> Case {
        Case::new(l, dual).unwrap()
    }

    #[test]
    fn small_counts() {
        let t = enumerate_case(case(&[0], false), 20).unwrap();
        assert_eq!((t.canon_count(), t.invars_count()), (1, 1));
        let t = enumerate_case(case(&[0, 0], false), 20).unwrap();
        assert_eq!((t.canon_count(), t.invars_count()), (4, 3));
        let t = enumerate_case(case(&[2], false), 20).unwrap();
        assert_eq!((t.canon_count(), t.invars_count()), (2, 2));
        let t = enumerate_case(case(&[2], true), 20).unwrap();
        assert_eq!((t.canon_count(), t.invars_count()), (3, 3));
    }

    #[test]
    fn ricci_squared_sorts_before_kretschmann() {
        let t = enumerate_case(case(&[0, 0], false), 20).unwrap();
        let first = t.lookup(InvariantId::new(t.case(), 1)).unwrap();
        assert_eq!(first.ricci_features().1, 2);
    }

    #[test]
    fn lookup_round_trip_and_products() {
        let c = case(&[0, 0], false);
        let t = enumerate_case(c, 20).unwrap();
        for id in t.ids() {
            assert_eq!(t.reverse_lookup(t.lookup(id).unwrap()).unwrap(), id);
        }
        let product = Monomial::from_pairs(c, &[(0, 2), (1, 3), (4, 6), (5, 7)]).unwrap();
        assert!(matches!(t.reverse_lookup(&product), Err(Error::ProductNotIndexed)));
        assert!(t.lookup(InvariantId::new(c, 99)).is_err());
    }

    #[test]
    fn resource_limit() {
        assert!(matches!(
            enumerate_case(case(&[0, 0, 0, 0], false), 12),
            Err(Error::ResourceLimit(..))
        ));
    }

    #[test]
    fn text_round_trip() {
        let t = enumerate_case(case(&[0, 2], false), 20).unwrap();
        let back = CaseTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back.entries(), t.entries());
        assert_eq!(back.canon_count(), t.canon_count());
        assert!(CaseTable::from_text(&t.to_text().replace("curvinv-table 1", "curvinv-table 9")).is_err());
    }
}
