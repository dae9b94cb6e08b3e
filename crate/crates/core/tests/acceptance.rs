//! Acceptance criteria. Prints one line per criterion and exits nonzero if
//! any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spanview::alphabet::Alphabet;
use spanview::eval::oracle::brute_force_spanner;
use spanview::eval::{apply_update, evaluate_spanner, evaluate_update_relation, Span, SpanTuple};
use spanview::formula::{
    check_functional, disjunct_bound, normalize, parse_formula, parse_formula_file, Grammar,
    UpdateExpression,
};
use spanview::fuzz::{run_campaign, FuzzConfig, FuzzReport, Generator};
use spanview::verifier::{classify, Verdict};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).expect("fixture")
}

fn sample_alphabet() -> Alphabet {
    Alphabet::from_json(&fixture("alphabet.json")).expect("alphabet fixture")
}

type Check = Result<String, String>;

fn tuple(items: &[(&str, usize, usize)]) -> SpanTuple {
    items
        .iter()
        .map(|&(x, i, j)| (x.to_string(), Span::new(i, j)))
        .collect()
}

fn phone_extraction() -> Check {
    let al = sample_alphabet();
    let (phone, al) = parse_formula_file(&fixture("phone.sp"), &al, Grammar::Extraction)
        .map_err(|e| e.to_string())?;
    let doc = fixture("notice.txt");
    al.validate(&doc).map_err(|e| e.to_string())?;
    let rel = evaluate_spanner(&phone, &doc).map_err(|e| e.to_string())?;
    let expected = [
        tuple(&[("tn", 42, 56), ("ac", 44, 47), ("sc", 52, 56)]),
        tuple(&[("tn", 88, 103), ("ac", 91, 94), ("sc", 99, 103)]),
    ];
    let got: Vec<&SpanTuple> = rel.tuples.iter().collect();
    if got == expected.iter().collect::<Vec<_>>() {
        Ok("2 tuples with the expected offsets".into())
    } else {
        Err(format!("got {got:?}"))
    }
}

fn insertion_example() -> Check {
    let al = sample_alphabet();
    let (g, al) = parse_formula_file(&fixture("insert_free.sp"), &al, Grammar::Update)
        .map_err(|e| e.to_string())?;
    let u = UpdateExpression::new(g, "free ".to_string(), &al).map_err(|e| e.to_string())?;
    let doc = fixture("notice.txt");
    let spans: Vec<Span> = evaluate_update_relation(&u, &doc)
        .spans
        .into_iter()
        .collect();
    let updated = apply_update(&u, &doc).map_err(|e| e.to_string())?;
    if spans != [Span::new(39, 39)] {
        return Err(format!("update relation {spans:?}"));
    }
    if !updated.contains("call us free at") {
        return Err(format!("updated document {updated:?}"));
    }
    Ok("update relation {[39,39⟩}, document contains \"call us free at\"".into())
}

fn normalization_example() -> Check {
    let al = Alphabet::new("ab".chars()).unwrap();
    let parse = |s: &str| parse_formula(s, &al, Grammar::Extraction).unwrap();
    let e = parse("(a|b)* X{(Y{a}|Y{ab})a} Z{b|ba}");
    let n = normalize(&e).map_err(|e| e.to_string())?;
    let expected = vec![
        parse("(a|b)* X{Y{a}a} Z{b|ba}"),
        parse("(a|b)* X{Y{ab}a} Z{b|ba}"),
    ];
    if n.disjuncts != expected {
        return Err(format!(
            "disjuncts {:?}",
            n.disjuncts
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
        ));
    }
    let delta = n.to_formula();
    let docs = al.strings_up_to(6);
    for d in &docs {
        if brute_force_spanner(&e, d) != evaluate_spanner(&delta, d).map_err(|e| e.to_string())? {
            return Err(format!("relations differ on {d:?}"));
        }
    }
    Ok(format!(
        "2 disjuncts, equal relations on {} documents",
        docs.len()
    ))
}

fn disjunct_bound_check() -> Check {
    let al = Alphabet::new("ac".chars()).unwrap();
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(7),
        alphabet: &al,
        max_depth: 2,
    };
    let var_sets: [&[&str]; 3] = [&["X"], &["X", "Y"], &["X", "Y", "Z"]];
    let mut max_seen = 0;
    for k in 0..200 {
        let f = g.functional(var_sets[k % 3], 4);
        check_functional(&f).map_err(|_| format!("generated formula {f} is not functional"))?;
        let n = normalize(&f).map_err(|e| e.to_string())?;
        let bound = disjunct_bound(&f);
        if n.len() > bound {
            return Err(format!("{f}: {} disjuncts, bound {bound}", n.len()));
        }
        max_seen = max_seen.max(n.len());
    }
    Ok(format!(
        "200 formulas within bound, largest Δ has {max_seen} disjuncts"
    ))
}

fn classification_table() -> Check {
    let al = Alphabet::new("ac".chars()).unwrap();
    let rows = [
        ("aa .*", "c .* x{c}", "a", Verdict::Irrelevant),
        ("X{cc} c*", ".* x{c} .*", "a", Verdict::DeleteAll),
        (".* X{aa} .*", "aa .* x{c}", "cc", Verdict::PseudoIrrelevant),
        (".* X{aa} .*", ".* x{c} .*", "cc", Verdict::Unknown),
    ];
    for (e, g, a, expected) in rows {
        let e = parse_formula(e, &al, Grammar::Extraction).map_err(|e| e.to_string())?;
        let u = UpdateExpression::parse(g, a, &al).map_err(|e| e.to_string())?;
        let got = classify(&u, &e, &al).map_err(|e| e.to_string())?.verdict;
        if got != expected {
            return Err(format!(
                "E = {e}, g = {g}, A = {a:?}: {got}, expected {expected}"
            ));
        }
    }
    Ok("4 of 4 verdicts as expected".into())
}

fn listed(failures: &[String]) -> String {
    let shown: Vec<&str> = failures.iter().take(3).map(String::as_str).collect();
    format!("{} failures, e.g. {}", failures.len(), shown.join("; "))
}

fn soundness(r: &FuzzReport) -> Check {
    if r.instances < 1000 {
        return Err(format!("only {} instances", r.instances));
    }
    if !r.soundness_violations.is_empty() {
        return Err(listed(&r.soundness_violations));
    }
    Ok(format!(
        "{} instances, {} documents each, verdicts {:?}",
        r.instances, r.documents_per_instance, r.verdicts
    ))
}

fn oracle(r: &FuzzReport) -> Check {
    if !r.oracle_mismatches.is_empty() {
        return Err(listed(&r.oracle_mismatches));
    }
    Ok(format!(
        "{} (formula, document) pairs agree",
        r.oracle_pairs
    ))
}

fn overlap_machines(r: &FuzzReport) -> Check {
    let mut failures = r.overlap_disagreements.clone();
    failures.extend(r.witness_failures.iter().cloned());
    if !failures.is_empty() {
        return Err(listed(&failures));
    }
    Ok(format!(
        "all instances agree, {} rejections confirmed by evaluation",
        r.rejected_confirmed_at_runtime
    ))
}

fn shift_content(r: &FuzzReport) -> Check {
    if !r.shift_content_failures.is_empty() {
        return Err(listed(&r.shift_content_failures));
    }
    Ok(format!(
        "{} disjoint instances, {} shifted spans preserved",
        r.disjoint_instances, r.shifted_spans_checked
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: BTreeMap<u32, (&str, Check)> = BTreeMap::new();
    results.insert(
        1,
        ("phone numbers on the sample document", phone_extraction()),
    );
    results.insert(2, ("insertion via empty capture", insertion_example()));
    results.insert(
        3,
        (
            "normalized form of the nested example",
            normalization_example(),
        ),
    );
    results.insert(4, ("disjunct count bound", disjunct_bound_check()));
    results.insert(5, ("classification table", classification_table()));
    let report = run_campaign(&FuzzConfig::default());
    results.insert(6, ("maintenance matches re-extraction", soundness(&report)));
    results.insert(
        7,
        ("memoized evaluation matches brute force", oracle(&report)),
    );
    results.insert(
        8,
        (
            "overlap automata match exhaustive search",
            overlap_machines(&report),
        ),
    );
    results.insert(
        9,
        ("shifted spans keep their content", shift_content(&report)),
    );

    let mut failed = 0;
    for (n, (title, check)) in &results {
        match check {
            Ok(detail) => println!("criterion {n}: PASS  {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {title}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1?}",
        results.len() - failed,
        results.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
