use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

fn spanview(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spanview"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

/// A database under `dir/db` with alphabet {a, c}.
fn setup(docs: &[(&str, &str)]) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let db = dir.path().join("db");
    fs::create_dir_all(db.join("docs")).unwrap();
    fs::write(db.join("alphabet.json"), r#"{"symbols": ["a", "c"]}"#).unwrap();
    for (id, content) in docs {
        fs::write(db.join("docs").join(format!("{id}.txt")), content).unwrap();
    }
    (dir, db)
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn update_file(dir: &Path, formula: &str, replacement: &str) {
    write(
        dir,
        "u.upd",
        &format!("replacement: {replacement:?}\n{formula}\n"),
    );
}

#[test]
fn extract_phone_numbers() {
    let dir = TempDir::new().unwrap();
    let db = dir.path().join("db");
    fs::create_dir_all(db.join("docs")).unwrap();
    fs::copy(
        format!("{FIXTURES}/alphabet.json"),
        db.join("alphabet.json"),
    )
    .unwrap();
    fs::copy(format!("{FIXTURES}/notice.txt"), db.join("docs/d1.txt")).unwrap();
    fs::copy(format!("{FIXTURES}/phone.sp"), dir.path().join("phone.sp")).unwrap();
    let o = spanview(
        &["extract", "--db", "db", "--extractor", "phone.sp"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let expected = "doc_id,ac.start,ac.end,sc.start,sc.end,tn.start,tn.end\n\
                    d1,44,47,52,56,42,56\n\
                    d1,91,94,99,103,88,103\n";
    assert_eq!(String::from_utf8_lossy(&o.stdout), expected);
    assert_eq!(
        fs::read_to_string(db.join("views/phone.csv")).unwrap(),
        expected
    );
    assert!(db.join("views/phone.meta.json").exists());
}

#[test]
fn missing_file_exits_2() {
    let (dir, _) = setup(&[("d1", "ac")]);
    let o = spanview(
        &["extract", "--db", "db", "--extractor", "absent.sp"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.sp"));
}

#[test]
fn non_functional_exits_3() {
    let (dir, _) = setup(&[("d1", "ac")]);
    write(dir.path(), "e.sp", "X{a} | c\n");
    let o = spanview(
        &["extract", "--db", "db", "--extractor", "e.sp"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("binds X zero times"));
}

#[test]
fn classify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("aa .*", "c .* x{c}", "a", "Irrelevant", 0),
        ("X{cc} c*", ".* x{c} .*", "a", "DeleteAll", 0),
        (".* X{aa} .*", "aa .* x{c}", "cc", "PseudoIrrelevant", 0),
        (".* X{aa} .*", ".* x{c} .*", "cc", "Unknown", 10),
        (
            ".* X{aa} .*",
            ".* x{c.*c} .*",
            "",
            "RejectedOverlappingUpdate",
            20,
        ),
    ];
    for (e, g, a, verdict, exit) in cases {
        write(dir.path(), "e.sp", &format!("alphabet: ac\n{e}\n"));
        update_file(dir.path(), g, a);
        let o = spanview(
            &["classify", "--extractor", "e.sp", "--update", "u.upd"],
            dir.path(),
        );
        assert_eq!(code(&o), exit, "{e} / {g}");
        let report = stdout_json(&o);
        assert_eq!(report["verdict"], verdict);
        assert!(report["stages"].as_array().is_some_and(|s| !s.is_empty()));
    }
}

#[test]
fn classify_without_alphabet_is_an_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "e.sp", "X{a}\n");
    update_file(dir.path(), "x{a}", "c");
    let o = spanview(
        &["classify", "--extractor", "e.sp", "--update", "u.upd"],
        dir.path(),
    );
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alphabet"));
}

fn extract_and_apply(
    docs: &[(&str, &str)],
    e: &str,
    g: &str,
    a: &str,
) -> (TempDir, PathBuf, Value) {
    let (dir, db) = setup(docs);
    write(dir.path(), "v.sp", e);
    assert_eq!(
        code(&spanview(
            &["extract", "--db", "db", "--extractor", "v.sp"],
            dir.path()
        )),
        0
    );
    update_file(dir.path(), g, a);
    let o = spanview(
        &[
            "apply", "--db", "db", "--view", "v", "--update", "u.upd", "--report", "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    (dir, db, report)
}

#[test]
fn apply_pseudo_irrelevant_shifts() {
    let (_dir, db, r) = extract_and_apply(&[("d1", "aacac")], ".* X{aa} .*", "aa .* x{c}", "cc");
    assert_eq!(r["verdict"], "PseudoIrrelevant");
    assert_eq!(r["reextracted"], false);
    assert_eq!(
        fs::read_to_string(db.join("docs/d1.txt")).unwrap(),
        "aacacc"
    );
    assert_eq!(
        fs::read_to_string(db.join("views/v.csv")).unwrap(),
        "doc_id,X.start,X.end\nd1,1,3\n"
    );
}

#[test]
fn apply_delete_all() {
    let (_dir, db, r) = extract_and_apply(
        &[("d1", "ccc"), ("d2", "aa")],
        "X{cc} c*",
        ".* x{c} .*",
        "a",
    );
    assert_eq!(r["verdict"], "DeleteAll");
    assert_eq!(r["rows_deleted"], 1);
    assert_eq!(fs::read_to_string(db.join("docs/d1.txt")).unwrap(), "aaa");
    assert_eq!(
        fs::read_to_string(db.join("views/v.csv")).unwrap(),
        "doc_id,X.start,X.end\n"
    );
}

#[test]
fn apply_irrelevant_keeps_rows() {
    let docs = [("d1", "aacc"), ("d2", "cac")];
    let (_dir, db, r) = extract_and_apply(&docs, "aa X{.*}", "c .* x{c}", "a");
    assert_eq!(r["verdict"], "Irrelevant");
    assert_eq!(fs::read_to_string(db.join("docs/d2.txt")).unwrap(), "caa");
    assert_eq!(
        fs::read_to_string(db.join("views/v.csv")).unwrap(),
        "doc_id,X.start,X.end\nd1,3,5\n"
    );
}

#[test]
fn apply_refuses_rejected_update() {
    let (dir, db) = setup(&[("d1", "ccc")]);
    write(dir.path(), "v.sp", ".* X{c} .*");
    spanview(
        &["extract", "--db", "db", "--extractor", "v.sp"],
        dir.path(),
    );
    update_file(dir.path(), ".* x{c.*c} .*", "");
    let o = spanview(
        &["apply", "--db", "db", "--view", "v", "--update", "u.upd"],
        dir.path(),
    );
    assert_ne!(code(&o), 0);
    assert_eq!(fs::read_to_string(db.join("docs/d1.txt")).unwrap(), "ccc");
}

fn oracle(dir: &Path) -> (i32, Value) {
    let o = spanview(
        &["oracle", "--db", "db", "--view", "v", "--update", "u.upd"],
        dir,
    );
    (code(&o), stdout_json(&o))
}

#[test]
fn oracle_reports_empty_diff_for_sound_verdicts() {
    let cases = [
        (".* X{aa} .*", "aa .* x{c}", "cc", "PseudoIrrelevant"),
        ("X{cc} c*", ".* x{c} .*", "a", "DeleteAll"),
    ];
    for (e, g, a, verdict) in cases {
        let (dir, _) = setup(&[("d1", "aacac"), ("d2", "ccc"), ("d3", "aaaa")]);
        write(dir.path(), "v.sp", e);
        spanview(
            &["extract", "--db", "db", "--extractor", "v.sp"],
            dir.path(),
        );
        update_file(dir.path(), g, a);
        let (exit, r) = oracle(dir.path());
        assert_eq!(exit, 0);
        assert_eq!(r["verdict"], verdict);
        assert_eq!(r["consistent"], true);
        assert_eq!(r["after_update"]["missing"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn oracle_detects_corrupted_view() {
    let (dir, db) = setup(&[("d1", "aacaa")]);
    write(dir.path(), "v.sp", ".* X{aa} .*");
    spanview(
        &["extract", "--db", "db", "--extractor", "v.sp"],
        dir.path(),
    );
    let csv = db.join("views/v.csv");
    let corrupted = fs::read_to_string(&csv)
        .unwrap()
        .replace("d1,4,6", "d1,3,5");
    fs::write(&csv, corrupted).unwrap();
    update_file(dir.path(), "aa .* x{c}", "cc");
    let (exit, r) = oracle(dir.path());
    assert_eq!(exit, 1);
    assert_eq!(r["consistent"], false);
    assert_eq!(r["stored_view"]["missing"].as_array().unwrap().len(), 1);
    assert_eq!(r["stored_view"]["unexpected"].as_array().unwrap().len(), 1);
}

#[test]
fn fuzz_small_campaign() {
    let dir = TempDir::new().unwrap();
    let args = [
        "fuzz",
        "--seed",
        "7",
        "--instances",
        "30",
        "--max-doc-len",
        "4",
        "--report",
        "f.json",
    ];
    let o = spanview(&args, dir.path());
    assert_eq!(code(&o), 0);
    let r: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 7);
    assert_eq!(r["instances"], 30);
    assert_eq!(r["soundness_violations"].as_array().unwrap().len(), 0);
    let counted: u64 = r["verdicts"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(counted, 30);
}
