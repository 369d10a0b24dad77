use std::fs;
use std::path::Path;

use curvinv::database::store::{read_manifest, render, JOURNAL, MANIFEST};
use curvinv::database::{build, build_into, load, BuildConfig, NoCache, RuleMode};
use curvinv::lincomb::{LinComb, Var};
use curvinv::monomial::Case;
use curvinv::Error;

fn config(max_order: usize) -> BuildConfig {
    BuildConfig {
        max_order,
        ..BuildConfig::default()
    }
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let built = build_into(&config(4), dir.path(), &mut |_| {}).unwrap();
    let loaded = load(dir.path()).unwrap();
    assert_eq!(loaded.config, built.config);
    assert_eq!(loaded.counts, built.counts);
    assert_eq!(loaded.rules.rules, built.rules.rules);
    assert_eq!(loaded.tables.keys().collect::<Vec<_>>(), built.tables.keys().collect::<Vec<_>>());
    for (case, t) in &built.tables {
        assert_eq!(loaded.tables[case].entries(), t.entries());
    }
    assert!(!dir.path().join(JOURNAL).exists());
}

#[test]
fn rebuilds_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    build_into(&config(4), a.path(), &mut |_| {}).unwrap();
    build_into(&config(4), b.path(), &mut |_| {}).unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    // a second build over existing output reuses tables and changes nothing
    let before = files(a.path());
    let mut log = Vec::new();
    build_into(&config(4), a.path(), &mut |s| log.push(s.to_string())).unwrap();
    assert_eq!(files(a.path()), before);
    let cases: Vec<_> = log.iter().filter(|l| l.starts_with("case ")).collect();
    assert!(!cases.is_empty());
    assert!(cases.iter().all(|l| l.contains("cached")), "{cases:?}");
}

#[test]
fn aborted_build_resumes_from_journal() {
    let dir = tempfile::tempdir().unwrap();
    build_into(&config(4), dir.path(), &mut |_| {}).unwrap();
    let manifest = read_manifest(dir.path()).unwrap();
    // simulate an abort after the tables were written: journal but no manifest
    let journal: String = manifest
        .files
        .iter()
        .filter(|(rel, _)| rel.ends_with("table.inv"))
        .map(|(rel, sum)| format!("{rel} {sum}\n"))
        .collect();
    fs::write(dir.path().join(JOURNAL), journal).unwrap();
    fs::remove_file(dir.path().join(MANIFEST)).unwrap();
    let mut log = Vec::new();
    build_into(&config(4), dir.path(), &mut |s| log.push(s.to_string())).unwrap();
    assert!(log.iter().filter(|l| l.starts_with("case ")).all(|l| l.contains("cached")));
    assert_eq!(read_manifest(dir.path()).unwrap(), manifest);
}

#[test]
fn tampered_table_is_not_reused() {
    let dir = tempfile::tempdir().unwrap();
    build_into(&config(2), dir.path(), &mut |_| {}).unwrap();
    let path = dir.path().join("nondual/0/table.inv");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, format!("{text}\n")).unwrap();
    let mut log = Vec::new();
    build_into(&config(2), dir.path(), &mut |s| log.push(s.to_string())).unwrap();
    assert!(log.iter().any(|l| l.starts_with("case {0}") && l.contains("enumerated")));
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn load_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    build_into(&config(4), dir.path(), &mut |_| {}).unwrap();
    let rules = dir.path().join("nondual/0_0/cyclic.rules");
    let original = fs::read_to_string(&rules).unwrap();
    fs::write(&rules, original.replace("+1", "+2")).unwrap();
    let e = load(dir.path()).unwrap_err();
    assert!(matches!(&e, Error::Database(m) if m.contains("checksum")), "{e}");
    fs::write(&rules, &original).unwrap();
    load(dir.path()).unwrap();
}

#[test]
fn load_rejects_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    build_into(&config(2), dir.path(), &mut |_| {}).unwrap();
    let path = dir.path().join(MANIFEST);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("\"version\": 1", "\"version\": 99", 1)).unwrap();
    let e = load(dir.path()).unwrap_err();
    assert!(matches!(&e, Error::Database(m) if m.contains("version")), "{e}");
}

#[test]
fn load_rejects_missing_dependency() {
    let dir = tempfile::tempdir().unwrap();
    build_into(&config(4), dir.path(), &mut |_| {}).unwrap();
    let path = dir.path().join(MANIFEST);
    let mut manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let files = manifest["files"].as_object_mut().unwrap();
    // the {0,0} cyclic rule has its pivot in the dropped table
    assert!(files.remove("nondual/0_0/table.inv").is_some());
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let e = load(dir.path()).unwrap_err();
    assert!(matches!(&e, Error::Database(m) if m.contains("unknown")), "{e}");
}

#[test]
fn small_database_matches_golden_files() {
    let db = build(&config(4), &mut NoCache, &mut |_| {}).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/order4");
    let rendered = render(&db);
    let mut names: Vec<&str> = rendered.iter().map(|(rel, _)| rel.as_str()).collect();
    names.sort();
    assert_eq!(
        names,
        files(&golden)
            .iter()
            .map(|(rel, _)| rel.as_str())
            .filter(|rel| *rel != MANIFEST)
            .collect::<Vec<_>>()
    );
    for (rel, text) in &rendered {
        let want = fs::read_to_string(golden.join(rel)).unwrap();
        assert_eq!(text, &want, "{rel}");
    }
}

#[test]
fn rule_modes_agree() {
    let mut cfg = config(6);
    let expanded = build(&cfg, &mut NoCache, &mut |_| {}).unwrap();
    cfg.mode = RuleMode::Nonexpanded;
    let stored = build(&cfg, &mut NoCache, &mut |_| {}).unwrap();
    assert_eq!(expanded.counts, stored.counts);

    let mut checked = 0;
    for t in expanded.tables.values() {
        for id in t.ids() {
            let x = LinComb::from_var(Var::Inv(id));
            let (a, passes_a) = expanded.rules.apply(&x);
            let (b, _) = stored.rules.apply(&x);
            assert_eq!(a, b, "{id}");
            assert!(passes_a <= 2);
            checked += 1;
        }
    }
    // products are expanded factor by factor in both modes
    let ids: Vec<_> = expanded.tables.values().filter(|t| t.case().order() <= 2).flat_map(|t| t.ids()).collect();
    let big: Vec<_> = expanded.tables.values().filter(|t| t.case().order() == 4).flat_map(|t| t.ids()).collect();
    for a in &ids {
        for b in &big {
            let x = LinComb::from_var(Var::product(vec![*a, *b]));
            assert_eq!(expanded.rules.apply(&x).0, stored.rules.apply(&x).0);
            checked += 1;
        }
    }
    assert!(checked > 50);
    let r0 = Case::new(&[0], false).unwrap();
    assert_eq!(expanded.count(r0, curvinv::relations::Step::Duals).unwrap(), 1);
}
