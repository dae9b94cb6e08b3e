//! Differential testing campaign: random extractors and updates, checked
//! against exhaustive evaluation on every short document.

mod gen;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::automata::{build_cross_overlap, build_self_overlap};
use crate::eval::oracle::brute_force_spanner;
use crate::eval::{
    apply_update, evaluate_spanner, evaluate_update_relation, shift_span, Span, SpanRelation,
};
use crate::formula::{
    check_functional, normalize, proxy, Formula, NormalizedFormula, UpdateExpression,
};
use crate::verifier::{classify_with, ClassifyOptions, Verdict};
use crate::viewstore::{maintain, materialize, DocumentDb};

pub use gen::Generator;

#[derive(Clone, Debug, Serialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub instances: usize,
    pub alphabet: String,
    pub max_doc_len: usize,
    pub max_formula_depth: usize,
    pub state_limit: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 42,
            instances: 1000,
            alphabet: "ac".to_string(),
            max_doc_len: 6,
            max_formula_depth: 2,
            state_limit: ClassifyOptions::default().state_limit,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub index: usize,
    pub extractor: Formula,
    pub update: Formula,
    pub replacement: String,
}

impl Instance {
    pub fn describe(&self) -> String {
        format!(
            "#{} E = {}  g = {}  A = {:?}",
            self.index, self.extractor, self.update, self.replacement
        )
    }
}

/// Generates `config.instances` instances with functional extractors, a
/// pure function of the config. Also returns how many non-functional
/// extractors were drawn and discarded.
pub fn instances(config: &FuzzConfig) -> (Vec<Instance>, usize) {
    let alphabet = Alphabet::new(config.alphabet.chars()).expect("fuzz alphabet");
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        alphabet: &alphabet,
        max_depth: config.max_formula_depth,
    };
    let mut items = Vec::with_capacity(config.instances);
    let mut discarded = 0;
    while items.len() < config.instances {
        let extractor = g.extractor();
        let update = g.update();
        let replacement = g.replacement();
        if check_functional(&extractor).is_err() {
            discarded += 1;
            continue;
        }
        items.push(Instance {
            index: items.len(),
            extractor,
            update,
            replacement,
        });
    }
    (items, discarded)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub instances: usize,
    /// Non-functional extractors drawn and replaced by fresh draws.
    pub discarded_nonfunctional: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub documents_per_instance: usize,
    pub oracle_pairs: usize,
    pub disjoint_instances: usize,
    pub shifted_spans_checked: usize,
    pub rejected_confirmed_at_runtime: usize,
    /// Total time per classification stage, plus the oracle comparison.
    pub stage_millis: BTreeMap<String, u64>,
    /// Criterion: maintenance licensed by a verdict differs from
    /// re-extraction.
    pub soundness_violations: Vec<String>,
    /// Memoized evaluation differs from the brute-force oracle.
    pub oracle_mismatches: Vec<String>,
    /// Static self-overlap or cross-overlap answer contradicted by
    /// exhaustive evaluation.
    pub overlap_disagreements: Vec<String>,
    /// A witness that direct evaluation does not confirm.
    pub witness_failures: Vec<String>,
    /// Shifted span whose content differs from the original.
    pub shift_content_failures: Vec<String>,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.soundness_violations.is_empty()
            && self.oracle_mismatches.is_empty()
            && self.overlap_disagreements.is_empty()
            && self.witness_failures.is_empty()
            && self.shift_content_failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Default)]
struct Outcome {
    verdict: Option<Verdict>,
    oracle_pairs: usize,
    disjoint: bool,
    shifted: usize,
    rejected_confirmed: bool,
    micros: BTreeMap<String, u64>,
    soundness: Vec<String>,
    oracle: Vec<String>,
    overlap: Vec<String>,
    witness: Vec<String>,
    shift: Vec<String>,
}

fn overlapping(spans: &[Span], rel: &SpanRelation) -> bool {
    rel.tuples
        .iter()
        .any(|t| t.values().any(|s| spans.iter().any(|m| m.overlaps(s))))
}

fn marked_spans(f: &Formula, doc: &str) -> Vec<Span> {
    let var = f.vars().into_iter().next().expect("one variable");
    evaluate_spanner(f, doc)
        .expect("functional")
        .tuples
        .iter()
        .map(|t| t[&var])
        .collect()
}

fn run_instance(
    inst: &Instance,
    alphabet: &Alphabet,
    docs: &[String],
    options: ClassifyOptions,
) -> Outcome {
    let mut out = Outcome::default();
    let tag = inst.describe();
    let u = UpdateExpression::new(inst.update.clone(), inst.replacement.clone(), alphabet)
        .expect("generated updates are well formed");
    let e = &inst.extractor;
    let n: NormalizedFormula = normalize(e).expect("functional");

    let mut dynamic_overlap = None;
    let clock = std::time::Instant::now();
    for d in docs {
        for f in [e, u.formula()] {
            out.oracle_pairs += 1;
            if evaluate_spanner(f, d).expect("functional") != brute_force_spanner(f, d) {
                out.oracle.push(format!("{tag}: {f} on {d:?}"));
            }
        }
        if dynamic_overlap.is_none() && evaluate_update_relation(&u, d).overlapping_pair().is_some()
        {
            dynamic_overlap = Some(d.clone());
        }
    }

    out.micros
        .insert("oracle".into(), clock.elapsed().as_micros() as u64);
    let max = docs.iter().map(|d| d.len()).max().unwrap_or(0);
    let self_overlap = build_self_overlap(&u, alphabet).nfa.emptiness();
    if let Some(w) = self_overlap.witness() {
        if evaluate_update_relation(&u, &w.document)
            .overlapping_pair()
            .is_none()
        {
            out.witness
                .push(format!("{tag}: self-overlap witness {:?}", w.document));
        }
    }
    let static_short = self_overlap
        .witness()
        .is_some_and(|w| w.document.chars().count() <= max);
    if dynamic_overlap.is_some() != static_short {
        out.overlap.push(format!(
            "{tag}: exhaustive overlap {:?}, automaton {:?}",
            dynamic_overlap,
            self_overlap.witness().map(|w| &w.document)
        ));
    }

    let class = classify_with(&u, e, alphabet, options).expect("valid instance");
    out.verdict = Some(class.verdict);
    for s in &class.stages {
        out.micros.insert(s.name.clone(), s.micros);
    }
    if class.verdict == Verdict::RejectedOverlappingUpdate {
        out.rejected_confirmed = dynamic_overlap.is_some();
        return out;
    }

    let marked = NormalizedFormula {
        disjuncts: u.disjuncts().iter().map(|d| d.to_formula()).collect(),
    };
    let cross = build_cross_overlap(&marked, &n, alphabet)
        .expect("one alphabet")
        .nfa
        .emptiness();
    match cross.witness() {
        Some(w) => {
            let rel = evaluate_spanner(e, &w.document).expect("functional");
            if !overlapping(&marked_spans(u.formula(), &w.document), &rel) {
                out.witness
                    .push(format!("{tag}: cross-overlap witness {:?}", w.document));
            }
        }
        None => {
            for d in docs {
                let rel = evaluate_spanner(e, d).expect("functional");
                if overlapping(&marked_spans(u.formula(), d), &rel) {
                    out.overlap
                        .push(format!("{tag}: cross-overlap missed on {d:?}"));
                    break;
                }
            }
        }
    }
    let p = proxy(&u);
    let proxy_overlap = build_cross_overlap(&p, &n, alphabet)
        .expect("one alphabet")
        .nfa
        .emptiness();
    if let Some(w) = proxy_overlap.witness() {
        let rel = evaluate_spanner(e, &w.document).expect("functional");
        if !overlapping(&marked_spans(&p.to_formula(), &w.document), &rel) {
            out.witness
                .push(format!("{tag}: proxy-overlap witness {:?}", w.document));
        }
    }
    out.disjoint = cross.is_empty() && proxy_overlap.is_empty();

    let mut db = DocumentDb::new(alphabet.clone());
    for (k, d) in docs.iter().enumerate() {
        db.insert(&format!("d{k}"), d).expect("alphabet documents");
    }
    let view = materialize(&db, e, "fuzz").expect("functional");
    match maintain(&db, &view, &u, &class) {
        Ok((new_db, new_view, _)) => {
            if class.verdict != Verdict::Unknown {
                let fresh = materialize(&new_db, e, "fuzz").expect("functional");
                if fresh.rows != new_view.rows {
                    let doc = fresh
                        .rows
                        .symmetric_difference(&new_view.rows)
                        .next()
                        .map(|(id, _)| db.get(id).expect("known").content.clone());
                    out.soundness
                        .push(format!("{tag}: {} wrong on {doc:?}", class.verdict));
                }
            }
        }
        Err(err) => out
            .soundness
            .push(format!("{tag}: maintenance failed: {err}")),
    }

    if out.disjoint {
        let len = u.replacement().chars().count();
        for d in docs {
            let rel = evaluate_update_relation(&u, d);
            let updated: Vec<char> = apply_update(&u, d).expect("unrestricted").chars().collect();
            let original: Vec<char> = d.chars().collect();
            for t in evaluate_spanner(e, d).expect("functional").tuples {
                for s in t.values() {
                    out.shifted += 1;
                    let ok = shift_span(&rel, len, *s).is_ok_and(|m| {
                        m.fits(updated.len()) && m.content(&updated) == s.content(&original)
                    });
                    if !ok {
                        out.shift.push(format!("{tag}: span {s} on {d:?}"));
                    }
                }
            }
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn run_all(items: &[Instance], f: impl Fn(&Instance) -> Outcome + Sync + Send) -> Vec<Outcome> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(items: &[Instance], f: impl Fn(&Instance) -> Outcome) -> Vec<Outcome> {
    items.iter().map(f).collect()
}

pub fn run_campaign(config: &FuzzConfig) -> FuzzReport {
    let alphabet = Alphabet::new(config.alphabet.chars()).expect("fuzz alphabet");
    let docs = alphabet.strings_up_to(config.max_doc_len);
    let options = ClassifyOptions {
        state_limit: config.state_limit,
    };
    let (items, discarded) = instances(config);
    let outcomes = run_all(&items, |inst| run_instance(inst, &alphabet, &docs, options));
    let mut report = FuzzReport {
        seed: config.seed,
        instances: config.instances,
        documents_per_instance: docs.len(),
        discarded_nonfunctional: discarded,
        ..FuzzReport::default()
    };
    for o in outcomes {
        if let Some(v) = o.verdict {
            *report.verdicts.entry(v.name().to_string()).or_default() += 1;
        }
        report.oracle_pairs += o.oracle_pairs;
        report.disjoint_instances += o.disjoint as usize;
        report.shifted_spans_checked += o.shifted;
        report.rejected_confirmed_at_runtime += o.rejected_confirmed as usize;
        for (k, v) in o.micros {
            *report.stage_millis.entry(k).or_default() += v;
        }
        report.soundness_violations.extend(o.soundness);
        report.oracle_mismatches.extend(o.oracle);
        report.overlap_disagreements.extend(o.overlap);
        report.witness_failures.extend(o.witness);
        report.shift_content_failures.extend(o.shift);
    }
    for v in report.stage_millis.values_mut() {
        *v /= 1000;
    }
    report
}
