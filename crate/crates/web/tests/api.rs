use serde_json::Value;
use spanview_web::{apply_json, classify_json, extract_json};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

fn sample_symbols() -> String {
    let config: Value = serde_json::from_str(&fixture("alphabet.json")).unwrap();
    config["symbols"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect()
}

#[test]
fn extract_reports_span_text() {
    let r: Value = serde_json::from_str(
        &extract_json(
            &sample_symbols(),
            &fixture("phone.sp"),
            &fixture("notice.txt"),
        )
        .unwrap(),
    )
    .unwrap();
    let tuples = r["tuples"].as_array().unwrap();
    assert_eq!(tuples.len(), 2);
    assert_eq!(tuples[0]["tn"]["text"], "1-833-784-4397");
    assert_eq!(tuples[1]["ac"]["start"], 91);
}

#[test]
fn classify_returns_stages() {
    let r: Value =
        serde_json::from_str(&classify_json("ac", ".* X{aa} .*", "aa .* x{c}", "cc").unwrap())
            .unwrap();
    assert_eq!(r["verdict"], "PseudoIrrelevant");
}

#[test]
fn apply_maintains_view() {
    let r: Value = serde_json::from_str(
        &apply_json("ac", ".* X{aa} .*", "aa .* x{c}", "cc", "aacac").unwrap(),
    )
    .unwrap();
    assert_eq!(r["updated"], "aacacc");
    assert_eq!(r["consistent"], true);
    assert_eq!(r["maintained"]["tuples"][0]["X"]["text"], "aa");
}

#[test]
fn errors_are_messages() {
    assert!(extract_json("ac", "X{a} | c", "a")
        .unwrap_err()
        .contains("not functional"));
    assert!(extract_json("ac", "X{a}", "ab")
        .unwrap_err()
        .starts_with("document"));
    assert!(classify_json("ac", "X{a}", "x{", "")
        .unwrap_err()
        .starts_with("update"));
}
