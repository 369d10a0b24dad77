//! Incremental elimination of relations into rewrite rules
//! `pivot -> Σ c · lower variables`, and application of rule sets.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::One;

use crate::enumerate::InvariantId;
use crate::lincomb::{LinComb, Var};
use crate::monomial::Case;
use crate::relations::Step;

#[derive(Clone, Debug)]
struct RuleData {
    step: Step,
    /// Right-hand side when the rule was created (may mention later pivots).
    stored: LinComb,
    /// Right-hand side free of pivots (products left unexpanded).
    current: LinComb,
}

/// Gaussian elimination keyed by the global variable order: the greatest
/// indexed variable of each independent relation becomes a pivot.
#[derive(Clone, Debug, Default)]
pub struct Reducer {
    rules: BTreeMap<InvariantId, RuleData>,
    by_order: HashMap<usize, Vec<InvariantId>>,
    new_pivots: BTreeMap<(Case, Step), usize>,
}

impl Reducer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_pivot(&self, id: InvariantId) -> bool {
        self.rules.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Pivots created for `case` at `step`.
    pub fn pivots_at(&self, case: Case, step: Step) -> usize {
        self.new_pivots.get(&(case, step)).copied().unwrap_or(0)
    }

    /// Substitutes every pivot by its pivot-free right-hand side.
    pub fn reduce_row(&self, row: &LinComb) -> LinComb {
        let mut out = row.clone();
        let pivots: Vec<InvariantId> = row
            .vars()
            .filter_map(Var::as_inv)
            .filter(|id| self.rules.contains_key(id))
            .collect();
        for id in pivots {
            let v = Var::Inv(id);
            if let Some(c) = out.remove(&v) {
                out.add_scaled(&self.rules[&id].current, &c);
            }
        }
        out
    }

    /// Eliminates one relation. Returns the new pivot, if any. Rows that
    /// reduce to products only are dropped.
    pub fn insert(&mut self, row: &LinComb, step: Step) -> Option<InvariantId> {
        let mut r = self.reduce_row(row);
        let (pivot, c) = r.leading_inv().map(|(id, c)| (id, c.clone()))?;
        r.remove(&Var::Inv(pivot));
        r.scale(&(-c.recip()));
        let pv = Var::Inv(pivot);
        let order = pivot.case.order();
        let peers = self.by_order.entry(order).or_default();
        for other in peers.iter() {
            let data = self.rules.get_mut(other).unwrap();
            if let Some(k) = data.current.remove(&pv) {
                data.current.add_scaled(&r, &k);
            }
        }
        peers.push(pivot);
        self.rules.insert(
            pivot,
            RuleData {
                step,
                stored: r.clone(),
                current: r,
            },
        );
        *self.new_pivots.entry((pivot.case, step)).or_insert(0) += 1;
        Some(pivot)
    }

    pub fn insert_all(&mut self, rows: &[LinComb], step: Step) -> usize {
        rows.iter().filter(|r| self.insert(r, step).is_some()).count()
    }

    /// Rules in non-expanded form (as created).
    pub fn stored_rules(&self) -> RuleSet {
        RuleSet {
            rules: self
                .rules
                .iter()
                .map(|(id, d)| (*id, (d.step, d.stored.clone())))
                .collect(),
        }
    }

    /// Rules whose right-hand sides mention only basis invariants and
    /// products of basis invariants.
    pub fn expanded_rules(&self) -> RuleSet {
        let partial = RuleSet {
            rules: self
                .rules
                .iter()
                .map(|(id, d)| (*id, (d.step, d.current.clone())))
                .collect(),
        };
        let rules = partial
            .rules
            .iter()
            .map(|(id, (step, rhs))| (*id, (*step, partial.apply(rhs).0)))
            .collect();
        RuleSet { rules }
    }
}

/// A set of rewrite rules `pivot -> rhs`, tagged by the step that made them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleSet {
    pub rules: BTreeMap<InvariantId, (Step, LinComb)>,
}

impl RuleSet {
    pub fn get(&self, id: InvariantId) -> Option<&LinComb> {
        self.rules.get(&id).map(|(_, r)| r)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    fn needs_rewrite(&self, v: &Var) -> bool {
        v.factors().iter().any(|id| self.rules.contains_key(id))
    }

    /// One substitution pass over the current terms.
    fn pass(&self, x: &LinComb) -> Option<LinComb> {
        if !x.vars().any(|v| self.needs_rewrite(v)) {
            return None;
        }
        let mut out = LinComb::new();
        for (v, c) in x.iter() {
            if !self.needs_rewrite(v) {
                out.add(v.clone(), c.clone());
                continue;
            }
            // the empty product is the multiplicative unit
            let mut acc = LinComb::from_var(Var::Prod(Vec::new()));
            for id in v.factors() {
                let f = match self.get(*id) {
                    Some(rhs) => rhs.clone(),
                    None => LinComb::from_var(Var::Inv(*id)),
                };
                acc = acc.mul(&f);
            }
            out.add_scaled(&acc, c);
        }
        Some(out)
    }

    /// Rewrites to a fixed point. Returns the result and the number of passes
    /// that changed something.
    pub fn apply(&self, x: &LinComb) -> (LinComb, usize) {
        let mut cur = x.clone();
        let mut passes = 0;
        while let Some(next) = self.pass(&cur) {
            cur = next;
            passes += 1;
        }
        (cur, passes)
    }

    /// Whether every right-hand side is already in normal form.
    pub fn is_expanded(&self) -> bool {
        self.rules.values().all(|(_, rhs)| !rhs.vars().any(|v| self.needs_rewrite(v)))
    }
}

/// Coefficient-one combination of a single variable.
pub fn unit(v: Var) -> LinComb {
    let mut c = LinComb::new();
    c.add(v, BigRational::one());
    c
}
