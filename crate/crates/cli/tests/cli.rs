use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvinv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn build(max: &str, dir: &Path) -> String {
    let db = dir.join("db");
    ok(&["build", max, "--quiet", "--out", db.to_str().unwrap()]);
    db.to_str().unwrap().to_string()
}

#[test]
fn canon_examples() {
    assert_eq!(ok(&["canon", "R[a,b,-a,-b]"]), "R");
    assert_eq!(ok(&["canon", "R[a,-a,b,c]*R[-b,-c,d,-d]"]), "0");
    assert_eq!(
        ok(&["canon", "R[-a,-b,-c,-d] * CD[-e]@R[e,c,f,g] * CD[a]@CD[-f]@CD[-h]@R[b,d,h,-g]"]),
        "-R[a,b,c,d]*R[-a,e,f,g;-e]*R[-b,-c,-f,h;-h,-g,-d]"
    );
    assert_eq!(ok(&["canon", "R[a,b,c,d]*R[-a,-b,-c,-d] + R[-c,-d,-a,-b]*R[a,b,c,d]"]), "2*R[a,b,c,d]*R[-a,-b,-c,-d]");
    let v: serde_json::Value = serde_json::from_str(&ok(&["--json", "canon", "-1/3*RicciScalar"])).unwrap();
    assert_eq!(v["result"], "-1/3*R");
    assert_eq!(v["terms"][0]["case"], "{0}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["canon", "R[a,b"]).status.code(), Some(2));
    assert_eq!(run(&["canon", "R[a,b,c,d]"]).status.code(), Some(2));
    assert_eq!(run(&["canon", "eps[a,b,c,d]*eps[-a,-b,-c,-d]*R"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let db = build("4", dir.path());
    let o = run(&["simplify", "--db", &db, "R[a,b,c,d;e,f]*R[-a,-b,-c,-d;-e,-f]"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not covered"));
    assert_eq!(run(&["counts", "--db", &db, "--case", "0,0", "--step", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["counts", "--db", &db, "--case", "0,0,0", "--step", "4d"]).status.code(), Some(3));
    let missing = dir.path().join("none");
    assert_eq!(run(&["simplify", "--db", missing.to_str().unwrap(), "R"]).status.code(), Some(1));
}

#[test]
fn simplify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let db = build("6", dir.path());
    assert_eq!(
        ok(&["simplify", "--db", &db, "R[a,b,c,d]*R[-a,-c,-b,-d] - 1/2*R[a,b,c,d]*R[-a,-b,-c,-d]"]),
        "0"
    );
    let basis = "R[a,b,c,d]*R[-a,-b,-c,-d]";
    assert_eq!(ok(&["simplify", "--db", &db, basis]), basis);
    // ∇_e∇^e R_{abcd} R^{abcd} reduces to basis invariants
    let lap = "R[a,b,c,d;e,-e]*R[-a,-b,-c,-d]";
    let v: serde_json::Value = serde_json::from_str(&ok(&["--json", "simplify", "--db", &db, lap])).unwrap();
    assert_ne!(v["result"], lap);
    assert!(v["iterations"].as_u64().unwrap() >= 1);
    let text = v["result"].as_str().unwrap();
    // the reduced form is a fixed point
    assert_eq!(ok(&["simplify", "--db", &db, text]), text);
}

#[test]
fn storage_modes_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = build("6", dir.path());
    let b = dir.path().join("stored");
    ok(&["build", "6", "--quiet", "--mode", "nonexpanded", "--out", b.to_str().unwrap()]);
    for expr in [
        "R[a,b,c,d;e,-e]*R[-a,-b,-c,-d]",
        "R[a,b,c,d;e]*R[-a,-b,-e,-c;-d]",
        "R[a,b,c,d]*R[-a,-c,e,f]*R[-b,-d,-e,-f] + 1/3*R*R*R",
        "R[a,b,-a,c;d,-d,-c,-b]",
    ] {
        let x = ok(&["simplify", "--db", &a, expr]);
        let y = ok(&["simplify", "--db", b.to_str().unwrap(), expr]);
        assert_eq!(x, y, "{expr}");
    }
}

#[test]
fn verify_detects_a_corrupted_rule() {
    let dir = tempfile::tempdir().unwrap();
    let db = build("4", dir.path());
    let out = ok(&["verify", "--db", &db, "--seeds", "1,2", "--max-deriv", "2"]);
    assert!(out.contains("0 nonzero"), "{out}");
    // flip a coefficient and re-seal the checksum so only the oracle can notice
    let rel = "nondual/0_0/cyclic.rules";
    let path = Path::new(&db).join(rel);
    let text = fs::read_to_string(&path).unwrap().replace("+1/2", "+1/3");
    fs::write(&path, &text).unwrap();
    let manifest_path = Path::new(&db).join("manifest");
    let mut manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    manifest["files"][rel] = hex::encode(Sha256::digest(text.as_bytes())).into();
    fs::write(&manifest_path, manifest.to_string()).unwrap();
    let o = run(&["verify", "--db", &db, "--seeds", "1", "--max-deriv", "2"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn counts_at_order_eight() {
    let dir = tempfile::tempdir().unwrap();
    let db = build("8", dir.path());
    assert_eq!(ok(&["counts", "--db", &db, "--case", "0,0,0", "--step", "4D"]), "3");
    assert_eq!(ok(&["counts", "--db", &db, "--case", "6", "--step", "Commute"]), "1");
    assert_eq!(ok(&["counts", "--db", &db, "--case", "0,2", "--step", "Commute"]), "3");
    assert_eq!(ok(&["counts", "--db", &db, "--case", "1,1", "--step", "bianchi"]), "4");
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["--json", "counts", "--db", &db, "--case", "{0,1,1}", "--step", "canon"])).unwrap();
    assert_eq!(v["count"], 137);
}
