//! Build orchestration: tables and rule bases for every case up to an order
//! bound, per-step counts, persistence.

use std::collections::BTreeMap;
use std::time::Instant;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::enumerate::{enumerate_case, CaseTable, InvariantId, DEFAULT_SLOT_LIMIT};
use crate::error::{Error, Result};
use crate::exprio;
use crate::lincomb::{LinComb, Var};
use crate::monomial::{Case, Monomial};
use crate::reducer::{Reducer, RuleSet};
use crate::relations::{self, Step, TableSource};

pub mod store;

pub use store::{build_into, load, save};

/// Storage form of rule right-hand sides.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleMode {
    /// Right-hand sides over basis invariants only.
    Expanded,
    /// Right-hand sides as produced by elimination; may need repeated application.
    Nonexpanded,
}

impl std::str::FromStr for RuleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleMode> {
        match s {
            "expanded" => Ok(RuleMode::Expanded),
            "nonexpanded" | "non-expanded" => Ok(RuleMode::Nonexpanded),
            _ => Err(Error::Malformed(format!("unknown rule mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Largest nondual order Λ.
    pub max_order: usize,
    /// Largest dual order built; `None` means only what the ε-product step
    /// needs (`max_order - 2`).
    pub dual_max_order: Option<usize>,
    pub dimension: usize,
    /// Sign of the metric determinant: -1 Lorentzian, +1 Riemannian.
    pub signature: i32,
    pub mode: RuleMode,
    pub slot_limit: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            max_order: 6,
            dual_max_order: None,
            dimension: 4,
            signature: -1,
            mode: RuleMode::Expanded,
            slot_limit: DEFAULT_SLOT_LIMIT,
        }
    }
}

impl BuildConfig {
    /// Checks the parameters without building anything.
    pub fn validate(&self) -> Result<()> {
        if self.max_order < 2 || !self.max_order.is_multiple_of(2) {
            return Err(Error::Unsupported(format!(
                "order bound must be even and at least 2, got {}",
                self.max_order
            )));
        }
        if self.dual_max_order.is_some_and(|d| d % 2 != 0) {
            return Err(Error::Unsupported("dual order bound must be even".into()));
        }
        if ![-1, 1].contains(&self.signature) {
            return Err(Error::Unsupported("signature sign must be +1 or -1".into()));
        }
        if self.dimension < 2 {
            return Err(Error::Unsupported(format!("dimension {} is below 2", self.dimension)));
        }
        Ok(())
    }

    /// Cases a build with these parameters enumerates, in build order.
    pub fn planned_cases(&self) -> Vec<Case> {
        let top = self.max_order.max(self.dual_bound());
        let mut out = Vec::new();
        for order in (2..=top).step_by(2) {
            if order <= self.max_order {
                out.extend(Case::all_with_order(order, false));
            }
            if self.has_duals() && order <= self.dual_bound() {
                out.extend(Case::all_with_order(order, true));
            }
        }
        out
    }

    fn has_duals(&self) -> bool {
        self.dimension == 4
    }

    fn dual_bound(&self) -> usize {
        if !self.has_duals() {
            return 0;
        }
        self.dual_max_order
            .unwrap_or(0)
            .max(self.max_order.saturating_sub(2))
    }
}

/// Independent-invariant counts of one case after each step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub case: String,
    pub canon: usize,
    pub invars: usize,
    pub cyclic: usize,
    pub bianchi: usize,
    pub commute: usize,
    pub dimdep: usize,
    /// Absent for dual cases.
    pub duals: Option<usize>,
}

impl CaseCounts {
    pub fn after(&self, step: Step) -> Option<usize> {
        match step {
            Step::Cyclic => Some(self.cyclic),
            Step::Bianchi => Some(self.bianchi),
            Step::Commute => Some(self.commute),
            Step::DimDep => Some(self.dimdep),
            Step::Duals => self.duals,
        }
    }
}

/// Tables, rules and counts for all cases up to the configured bounds.
#[derive(Clone, Debug)]
pub struct Database {
    pub config: BuildConfig,
    pub tables: BTreeMap<Case, CaseTable>,
    pub rules: RuleSet,
    pub counts: BTreeMap<Case, CaseCounts>,
}

impl Database {
    /// Independent count of `case` after `step`.
    pub fn count(&self, case: Case, step: Step) -> Result<usize> {
        let c = self.counts.get(&case).ok_or(Error::MissingCase(case))?;
        c.after(step)
            .ok_or_else(|| Error::Unsupported(format!("step {step} does not apply to {case}")))
    }

    /// Rewrites a combination to the basis of independent invariants.
    pub fn apply(&self, x: &LinComb) -> Result<LinComb> {
        for v in x.vars() {
            for id in v.factors() {
                let ok = self
                    .tables
                    .get(&id.case)
                    .is_some_and(|t| id.index as usize <= t.invars_count());
                if !ok {
                    return Err(Error::UnknownInvariant(id.to_string()));
                }
            }
        }
        Ok(self.rules.apply(x).0)
    }
}

impl Database {
    /// Canonicalizes, indexes and simplifies raw terms. Returns the result
    /// over independent invariants and the number of rule passes used.
    pub fn simplify(&self, terms: &[(BigRational, Monomial)]) -> Result<(LinComb, usize)> {
        let mut x = LinComb::new();
        for (c, m) in terms {
            for part in m.split() {
                let case = part.case();
                if !self.tables.contains_key(&case) {
                    let max = self.tables.keys().filter(|k| k.is_dual() == case.is_dual()).map(|k| k.order()).max();
                    return Err(Error::Unsupported(format!(
                        "case {case} is not covered by the database (built to order {})",
                        max.unwrap_or(0)
                    )));
                }
            }
            if let Some((v, sign)) = relations::resolve_monomial(m, self)? {
                x.add(v, if sign < 0 { -c.clone() } else { c.clone() });
            }
        }
        Ok(self.rules.apply(&x))
    }

    /// Text form of a variable: its monomials printed and multiplied.
    pub fn print_var(&self, v: &Var) -> Result<String> {
        let parts = v
            .factors()
            .iter()
            .map(|id| Ok(exprio::print_monomial(self.tables[&id.case].lookup(*id)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(if parts.is_empty() { "1".into() } else { parts.join("*") })
    }

    /// Text form of a combination.
    pub fn print(&self, x: &LinComb) -> Result<String> {
        let terms = x
            .iter()
            .rev()
            .map(|(v, c)| Ok((c.clone(), self.print_var(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(exprio::print_terms(terms))
    }
}

impl TableSource for Database {
    fn table(&self, case: Case) -> Option<&CaseTable> {
        self.tables.get(&case)
    }
}

/// Receives one progress line per completed unit of work.
pub type Progress<'a> = &'a mut dyn FnMut(&str);

/// Where [`build`] gets previously enumerated tables from and reports new ones to.
pub trait TableCache {
    /// A table built earlier for `case`, if any.
    fn get(&mut self, case: Case) -> Option<CaseTable>;
    /// Called once per freshly enumerated table.
    fn put(&mut self, table: &CaseTable) -> Result<()>;
}

/// Cache that remembers nothing.
pub struct NoCache;

impl TableCache for NoCache {
    fn get(&mut self, _: Case) -> Option<CaseTable> {
        None
    }

    fn put(&mut self, _: &CaseTable) -> Result<()> {
        Ok(())
    }
}

/// Builds tables and rules in memory. Tables found in `cache` are taken
/// as-is instead of being enumerated again.
pub fn build(config: &BuildConfig, cache: &mut dyn TableCache, progress: Progress<'_>) -> Result<Database> {
    config.validate()?;
    let mut tables: BTreeMap<Case, CaseTable> = BTreeMap::new();
    let mut reducer = Reducer::new();
    let top = config.max_order.max(config.dual_bound());
    for order in (2..=top).step_by(2) {
        if order <= config.max_order {
            build_stratum(config, order, false, &mut tables, &mut reducer, cache, progress)?;
            if config.has_duals() && order >= 4 {
                let t = Instant::now();
                let rows = dual_relations(config, order, &tables, &reducer)?;
                let n = reducer.insert_all(&rows, Step::Duals);
                progress(&format!(
                    "order {order}: {} ε-product relations, {n} pivots ({:.1?})",
                    rows.len(),
                    t.elapsed()
                ));
            }
        }
        if config.has_duals() && order <= config.dual_bound() {
            build_stratum(config, order, true, &mut tables, &mut reducer, cache, progress)?;
        }
    }
    let counts = tables
        .iter()
        .map(|(case, t)| (*case, case_counts(t, &reducer)))
        .collect();
    let rules = match config.mode {
        RuleMode::Expanded => reducer.expanded_rules(),
        RuleMode::Nonexpanded => reducer.stored_rules(),
    };
    Ok(Database {
        config: config.clone(),
        tables,
        rules,
        counts,
    })
}

fn case_counts(table: &CaseTable, reducer: &Reducer) -> CaseCounts {
    let case = table.case();
    let mut left = table.invars_count();
    let mut after = [0usize; 5];
    for (k, step) in Step::ALL.into_iter().enumerate() {
        left -= reducer.pivots_at(case, step);
        after[k] = left;
    }
    CaseCounts {
        case: case.to_string(),
        canon: table.canon_count(),
        invars: table.invars_count(),
        cyclic: after[0],
        bianchi: after[1],
        commute: after[2],
        dimdep: after[3],
        duals: (!case.is_dual()).then_some(after[4]),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_stratum(
    config: &BuildConfig,
    order: usize,
    dual: bool,
    tables: &mut BTreeMap<Case, CaseTable>,
    reducer: &mut Reducer,
    cache: &mut dyn TableCache,
    progress: Progress<'_>,
) -> Result<()> {
    let cases = Case::all_with_order(order, dual);
    for &case in &cases {
        let t = Instant::now();
        let (table, origin) = match cache.get(case) {
            Some(t) => (t, "cached"),
            None => {
                let t = enumerate_case(case, config.slot_limit)?;
                cache.put(&t)?;
                (t, "enumerated")
            }
        };
        progress(&format!(
            "case {case}: {} canonical, {} connected, {origin} ({:.1?})",
            table.canon_count(),
            table.invars_count(),
            t.elapsed()
        ));
        tables.insert(case, table);
    }
    let steps: &[Step] = if config.dimension >= 2 {
        &[Step::Cyclic, Step::Bianchi, Step::Commute, Step::DimDep]
    } else {
        &[Step::Cyclic, Step::Bianchi, Step::Commute]
    };
    for &step in steps {
        let t = Instant::now();
        // higher-degree cases first; their relations only mention ids of
        // this stratum, so the order here affects nothing but bookkeeping
        let mut total = 0;
        for &case in cases.iter() {
            let rows = case_relations(case, step, config.dimension, tables)?;
            total += rows.len();
            reducer.insert_all(&rows, step);
        }
        let left: usize = cases
            .iter()
            .map(|c| {
                tables[c].invars_count()
                    - Step::ALL
                        .iter()
                        .take_while(|s| **s <= step)
                        .map(|s| reducer.pivots_at(*c, *s))
                        .sum::<usize>()
            })
            .sum();
        progress(&format!(
            "order {order}{}: {step} {total} relations, {left} independent ({:.1?})",
            if dual { " dual" } else { "" },
            t.elapsed()
        ));
    }
    Ok(())
}

/// Relations of one step generated from every invariant of `case`.
pub fn case_relations(
    case: Case,
    step: Step,
    dimension: usize,
    tables: &impl TableSource,
) -> Result<Vec<LinComb>> {
    let table = tables.table(case).ok_or(Error::MissingCase(case))?;
    let entries = table.entries();
    match step {
        Step::Cyclic => relations::resolve_all(entries.iter().flat_map(relations::cyclic), tables),
        Step::Bianchi => relations::resolve_all(entries.iter().flat_map(relations::bianchi), tables),
        Step::Commute => relations::resolve_all(entries.iter().flat_map(relations::commute), tables),
        Step::DimDep => relations::resolve_monomials(
            entries.iter().flat_map(|m| relations::dimdep(m, dimension)).collect(),
            tables,
        ),
        Step::Duals => Ok(Vec::new()),
    }
}

/// `D_a · D_b = s Σ ...` for every pair of independent dual invariants whose
/// orders add up to `order`.
fn dual_relations(
    config: &BuildConfig,
    order: usize,
    tables: &BTreeMap<Case, CaseTable>,
    reducer: &Reducer,
) -> Result<Vec<LinComb>> {
    let basis: Vec<InvariantId> = tables
        .values()
        .filter(|t| t.case().is_dual() && t.case().order() < order)
        .flat_map(|t| t.ids())
        .filter(|id| !reducer.is_pivot(*id))
        .collect();
    let mut expansions = Vec::new();
    let mut heads = Vec::new();
    for (i, &a) in basis.iter().enumerate() {
        for &b in &basis[i..] {
            if a.case.order() + b.case.order() != order {
                continue;
            }
            let ma = tables[&a.case].lookup(a)?;
            let mb = tables[&b.case].lookup(b)?;
            expansions.push(relations::dual_product(ma, mb, config.signature)?);
            heads.push(Var::product(vec![a, b]));
        }
    }
    let mut rows = Vec::with_capacity(expansions.len());
    for (e, head) in expansions.iter().zip(heads) {
        let mut comb = relations::resolve(e, tables)?;
        comb.add(head, BigRational::from_integer(1.into()));
        if !comb.is_empty() {
            rows.push(comb.normalized());
        }
    }
    Ok(rows)
}
