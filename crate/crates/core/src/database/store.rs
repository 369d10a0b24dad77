//! On-disk layout:
//!
//! ```text
//! <root>/manifest                       JSON: version, parameters, checksums, counts
//! <root>/nondual/<case>/table.inv       invariant table
//! <root>/nondual/<case>/<step>.rules    rules whose pivot lies in <case>
//! <root>/dual/<case>/...                same for dual cases
//! ```
//!
//! `<case>` is the derivative tuple joined by `_` (`0_1_3`). A rules file:
//!
//! ```text
//! curvinv-rules 1
//! case {0,2}
//! step bianchi
//! mode expanded
//! rules 2
//! I{0,2}#12 = +1 I{0,2}#3 -1/2 I{0}#1*I{0}#1
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{build, BuildConfig, CaseCounts, Database, Progress, RuleMode, TableCache};
use crate::enumerate::{CaseTable, InvariantId};
use crate::error::{Error, Result};
use crate::lincomb::LinComb;
use crate::monomial::Case;
use crate::reducer::RuleSet;
use crate::relations::Step;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: BuildConfig,
    /// Relative path → sha256 of the file contents.
    pub files: BTreeMap<String, String>,
    pub counts: Vec<CaseCounts>,
}

/// Relative directory of a case.
pub fn case_dir(case: Case) -> PathBuf {
    let name: Vec<String> = case.lambdas().iter().map(u8::to_string).collect();
    let name = if name.is_empty() { "eps".to_string() } else { name.join("_") };
    Path::new(if case.is_dual() { "dual" } else { "nondual" }).join(name)
}

fn rel_string(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Text of the rules of one (case, step) unit.
pub fn rules_to_text(case: Case, step: Step, mode: RuleMode, rules: &[(InvariantId, &LinComb)]) -> String {
    let mut s = String::new();
    writeln!(s, "curvinv-rules {FORMAT_VERSION}").unwrap();
    writeln!(s, "case {case}").unwrap();
    writeln!(s, "step {step}").unwrap();
    let mode = match mode {
        RuleMode::Expanded => "expanded",
        RuleMode::Nonexpanded => "nonexpanded",
    };
    writeln!(s, "mode {mode}").unwrap();
    writeln!(s, "rules {}", rules.len()).unwrap();
    for (id, rhs) in rules {
        writeln!(s, "{id} = {rhs}").unwrap();
    }
    s
}

/// Parses a rules file; returns its step and rules.
pub fn rules_from_text(text: &str) -> Result<(Case, Step, Vec<(InvariantId, LinComb)>)> {
    let bad = |msg: String| Error::Database(format!("rules: {msg}"));
    let mut lines = text.lines();
    let mut header = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad("truncated header".into()))?;
        line.strip_prefix(key)
            .map(|v| v.trim().to_string())
            .ok_or_else(|| bad(format!("expected '{key}', found '{line}'")))
    };
    let version: u32 = header("curvinv-rules")?
        .parse()
        .map_err(|_| bad("version".into()))?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let case: Case = header("case")?.parse()?;
    let step: Step = header("step")?.parse()?;
    let _mode: RuleMode = header("mode")?.parse()?;
    let n: usize = header("rules")?.parse().map_err(|_| bad("count".into()))?;
    let mut out = Vec::with_capacity(n);
    for line in lines {
        let (lhs, rhs) = line
            .split_once(" = ")
            .ok_or_else(|| bad(format!("bad rule line '{line}'")))?;
        let id: InvariantId = lhs.trim().parse()?;
        if id.case != case {
            return Err(bad(format!("pivot {id} outside case {case}")));
        }
        out.push((id, rhs.parse()?));
    }
    if out.len() != n {
        return Err(bad("rule count does not match header".into()));
    }
    Ok((case, step, out))
}

/// Every file of the database as (relative path, contents), in a fixed order.
pub fn render(db: &Database) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (case, table) in &db.tables {
        let dir = case_dir(*case);
        files.push((rel_string(&dir.join("table.inv")), table.to_text()));
        for step in Step::ALL {
            if case.is_dual() && step == Step::Duals {
                continue;
            }
            let rules: Vec<(InvariantId, &LinComb)> = db
                .rules
                .rules
                .range(InvariantId::new(*case, 0)..=InvariantId::new(*case, u32::MAX))
                .filter(|(_, (s, _))| *s == step)
                .map(|(id, (_, rhs))| (*id, rhs))
                .collect();
            let name = format!("{}.rules", step.file_stem());
            files.push((
                rel_string(&dir.join(name)),
                rules_to_text(*case, step, db.config.mode, &rules),
            ));
        }
    }
    files
}

/// Writes the database below `root` (created if needed) with its manifest.
pub fn save(db: &Database, root: &Path) -> Result<Manifest> {
    let mut checksums = BTreeMap::new();
    for (rel, text) in render(db) {
        let path = root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text.as_bytes())?;
        checksums.insert(rel, sha256_hex(text.as_bytes()));
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        config: db.config.clone(),
        files: checksums,
        counts: db.counts.values().cloned().collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Database(format!("manifest: {e}")))?;
    fs::write(root.join(MANIFEST), json + "\n")?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(root.join(MANIFEST))
        .map_err(|e| Error::Database(format!("cannot read manifest in {}: {e}", root.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Database(format!("manifest: {e}")))?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::Database(format!(
            "unsupported database version {} (expected {FORMAT_VERSION})",
            manifest.version
        )));
    }
    Ok(manifest)
}

/// Loads and validates a database written by [`save`].
pub fn load(root: &Path) -> Result<Database> {
    let manifest = read_manifest(root)?;
    let mut tables = BTreeMap::new();
    let mut rules = RuleSet::default();
    for (rel, sum) in &manifest.files {
        let bytes = fs::read(root.join(rel))
            .map_err(|e| Error::Database(format!("missing file {rel}: {e}")))?;
        if sha256_hex(&bytes) != *sum {
            return Err(Error::Database(format!("checksum mismatch for {rel}")));
        }
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Database(format!("{rel} is not valid UTF-8")))?;
        if rel.ends_with("table.inv") {
            let t = CaseTable::from_text(&text)?;
            tables.insert(t.case(), t);
        } else {
            let (_, step, list) = rules_from_text(&text)?;
            for (id, rhs) in list {
                rules.rules.insert(id, (step, rhs));
            }
        }
    }
    // every referenced id must resolve
    for (id, (_, rhs)) in &rules.rules {
        let ids = std::iter::once(id).chain(rhs.vars().flat_map(|v| v.factors()));
        for x in ids {
            let known = tables
                .get(&x.case)
                .is_some_and(|t| x.index as usize <= t.invars_count());
            if !known {
                return Err(Error::Database(format!("rule for {id} references unknown {x}")));
            }
        }
    }
    let counts = manifest
        .counts
        .iter()
        .map(|c| Ok((c.case.parse::<Case>()?, c.clone())))
        .collect::<Result<_>>()?;
    Ok(Database {
        config: manifest.config,
        tables,
        rules,
        counts,
    })
}

/// Checksums of tables written by an unfinished build, one `path sha256` per line.
pub const JOURNAL: &str = "tables.journal";

/// Reads tables vouched for by the manifest or the journal; writes new ones
/// straight to disk so an aborted build keeps its finished enumerations.
struct DiskCache<'a> {
    root: &'a Path,
    known: BTreeMap<String, String>,
}

impl DiskCache<'_> {
    fn open(root: &Path) -> DiskCache<'_> {
        let mut known = read_manifest(root).map(|m| m.files).unwrap_or_default();
        if let Ok(text) = fs::read_to_string(root.join(JOURNAL)) {
            for line in text.lines() {
                if let Some((rel, sum)) = line.split_once(' ') {
                    known.insert(rel.to_string(), sum.to_string());
                }
            }
        }
        DiskCache { root, known }
    }
}

impl TableCache for DiskCache<'_> {
    fn get(&mut self, case: Case) -> Option<CaseTable> {
        let rel = rel_string(&case_dir(case).join("table.inv"));
        let bytes = fs::read(self.root.join(&rel)).ok()?;
        if self.known.get(&rel) != Some(&sha256_hex(&bytes)) {
            return None;
        }
        let text = String::from_utf8(bytes).ok()?;
        CaseTable::from_text(&text).ok().filter(|t| t.case() == case)
    }

    fn put(&mut self, table: &CaseTable) -> Result<()> {
        let rel = rel_string(&case_dir(table.case()).join("table.inv"));
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let text = table.to_text();
        fs::write(&path, text.as_bytes())?;
        let sum = sha256_hex(text.as_bytes());
        let mut journal = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join(JOURNAL))?;
        writeln!(journal, "{rel} {sum}")?;
        self.known.insert(rel, sum);
        Ok(())
    }
}

/// Builds into `root`, reusing any table a previous (possibly aborted) build
/// left there, and writes the result.
pub fn build_into(config: &BuildConfig, root: &Path, progress: Progress<'_>) -> Result<Database> {
    fs::create_dir_all(root)?;
    let mut cache = DiskCache::open(root);
    let db = build(config, &mut cache, progress)?;
    save(&db, root)?;
    match fs::remove_file(root.join(JOURNAL)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
        _ => Ok(db),
    }
}
