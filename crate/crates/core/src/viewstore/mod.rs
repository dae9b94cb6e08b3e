//! Documents, materialized extracted views, and their maintenance under
//! classified updates.

mod persist;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};
use crate::eval::{
    evaluate_spanner, evaluate_update_relation, replace_spans, shift_tuple, Document, EvalError,
    Span, SpanTuple, UpdateRelation,
};
use crate::formula::{Formula, FormulaError, UpdateExpression};
use crate::verifier::{UpdateClass, Verdict};

pub use persist::{load_db, load_view, save_db, save_view, view_to_csv};

#[derive(Debug, Error)]
pub enum ViewError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("document {doc}: span {span} exceeds document length {len}")]
    OffsetOutOfRange { doc: String, span: Span, len: usize },
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("invalid document id `{0}`")]
    InvalidId(String),
    #[error("document {doc}: {source}")]
    Alphabet {
        doc: String,
        #[source]
        source: AlphabetError,
    },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("document {doc}: {source}")]
    Eval {
        doc: String,
        #[source]
        source: EvalError,
    },
    #[error("update rejected: it marks overlapping spans (witness {0:?})")]
    Rejected(Option<String>),
}

/// A collection of documents over one alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentDb {
    pub alphabet: Alphabet,
    pub documents: BTreeMap<String, Document>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl DocumentDb {
    pub fn new(alphabet: Alphabet) -> DocumentDb {
        DocumentDb {
            alphabet,
            documents: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: &str, content: &str) -> Result<(), ViewError> {
        if !valid_id(id) {
            return Err(ViewError::InvalidId(id.to_string()));
        }
        self.alphabet
            .validate(content)
            .map_err(|source| ViewError::Alphabet {
                doc: id.to_string(),
                source,
            })?;
        self.documents
            .insert(id.to_string(), Document::new(id, content));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.get(id)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

pub type ViewRow = (String, SpanTuple);

/// An extractor's output over a whole database, tagged by document id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterializedView {
    pub name: String,
    pub formula: Formula,
    pub schema: Vec<String>,
    pub rows: BTreeSet<ViewRow>,
}

impl MaterializedView {
    pub fn rows_for<'a>(&'a self, doc: &'a str) -> impl Iterator<Item = &'a SpanTuple> + 'a {
        self.rows
            .iter()
            .filter(move |(d, _)| d == doc)
            .map(|(_, t)| t)
    }

    /// Rows missing from the view and rows the view should not have,
    /// relative to extracting from `db` from scratch.
    pub fn diff(&self, db: &DocumentDb) -> Result<ViewDiff, ViewError> {
        let fresh = materialize(db, &self.formula, &self.name)?;
        Ok(ViewDiff {
            missing: fresh.rows.difference(&self.rows).cloned().collect(),
            unexpected: self.rows.difference(&fresh.rows).cloned().collect(),
        })
    }

    pub fn is_consistent(&self, db: &DocumentDb) -> Result<bool, ViewError> {
        Ok(self.diff(db)?.is_empty())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ViewDiff {
    pub missing: Vec<ViewRow>,
    pub unexpected: Vec<ViewRow>,
}

impl ViewDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

fn extract(e: &Formula, doc: &Document) -> Result<BTreeSet<SpanTuple>, ViewError> {
    evaluate_spanner(e, &doc.content)
        .map(|r| r.tuples)
        .map_err(|source| ViewError::Eval {
            doc: doc.id.clone(),
            source,
        })
}

pub fn materialize(
    db: &DocumentDb,
    e: &Formula,
    name: &str,
) -> Result<MaterializedView, ViewError> {
    e.validate_symbols(&db.alphabet)?;
    let mut rows = BTreeSet::new();
    for doc in db.documents.values() {
        for t in extract(e, doc)? {
            rows.insert((doc.id.clone(), t));
        }
    }
    Ok(MaterializedView {
        name: name.to_string(),
        formula: e.clone(),
        schema: e.vars().into_iter().collect(),
        rows,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MaintenanceReport {
    pub verdict: String,
    pub affected_docs: Vec<String>,
    pub rows_inserted: usize,
    pub rows_deleted: usize,
    pub rows_shifted: usize,
    pub reextracted: bool,
    pub reextracted_docs: usize,
}

/// Applies `u` to every document and brings `v` up to date using the
/// action `c` licenses. Every document is checked before anything is
/// changed, so a failure leaves no partial result.
pub fn maintain(
    db: &DocumentDb,
    v: &MaterializedView,
    u: &UpdateExpression,
    c: &UpdateClass,
) -> Result<(DocumentDb, MaterializedView, MaintenanceReport), ViewError> {
    if c.verdict == Verdict::RejectedOverlappingUpdate {
        let witness = c.stages.first().and_then(|s| s.witness.clone());
        return Err(ViewError::Rejected(witness));
    }
    let mut relations: BTreeMap<&str, (UpdateRelation, String)> = BTreeMap::new();
    for doc in db.documents.values() {
        let rel = evaluate_update_relation(u, &doc.content);
        if rel.is_empty() {
            continue;
        }
        let updated = replace_spans(&rel, u.replacement(), &doc.content).map_err(|source| {
            ViewError::Eval {
                doc: doc.id.clone(),
                source,
            }
        })?;
        relations.insert(doc.id.as_str(), (rel, updated));
    }

    let mut new_db = db.clone();
    for (id, (_, updated)) in &relations {
        new_db
            .documents
            .insert(id.to_string(), Document::new(*id, updated.clone()));
    }
    let mut report = MaintenanceReport {
        verdict: c.verdict.name().to_string(),
        affected_docs: relations.keys().map(|s| s.to_string()).collect(),
        ..MaintenanceReport::default()
    };
    let mut rows = BTreeSet::new();
    let len = u.replacement().chars().count();
    for (doc, tuple) in &v.rows {
        let Some((rel, _)) = relations.get(doc.as_str()) else {
            rows.insert((doc.clone(), tuple.clone()));
            continue;
        };
        match c.verdict {
            Verdict::Irrelevant => {
                rows.insert((doc.clone(), tuple.clone()));
            }
            Verdict::DeleteAll | Verdict::Unknown => report.rows_deleted += 1,
            Verdict::PseudoIrrelevant => {
                let shifted = shift_tuple(rel, len, tuple).map_err(|source| ViewError::Eval {
                    doc: doc.clone(),
                    source,
                })?;
                if &shifted != tuple {
                    report.rows_shifted += 1;
                }
                rows.insert((doc.clone(), shifted));
            }
            Verdict::RejectedOverlappingUpdate => unreachable!(),
        }
    }
    if c.verdict == Verdict::Unknown {
        report.reextracted = true;
        for id in relations.keys() {
            let doc = &new_db.documents[*id];
            for t in extract(&v.formula, doc)? {
                rows.insert((id.to_string(), t));
                report.rows_inserted += 1;
            }
            report.reextracted_docs += 1;
        }
    }
    let view = MaterializedView { rows, ..v.clone() };
    Ok((new_db, view, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Grammar};
    use crate::verifier::classify;

    fn ac() -> Alphabet {
        Alphabet::new("ac".chars()).unwrap()
    }

    fn setup(docs: &[(&str, &str)], e: &str) -> (DocumentDb, MaterializedView) {
        let mut db = DocumentDb::new(ac());
        for (id, text) in docs {
            db.insert(id, text).unwrap();
        }
        let e = parse_formula(e, &ac(), Grammar::Extraction).unwrap();
        let v = materialize(&db, &e, "v").unwrap();
        (db, v)
    }

    fn spans(v: &MaterializedView) -> Vec<(String, usize, usize)> {
        v.rows
            .iter()
            .map(|(d, t)| (d.clone(), t["X"].start, t["X"].end))
            .collect()
    }

    fn run(
        docs: &[(&str, &str)],
        e: &str,
        g: &str,
        a: &str,
    ) -> (DocumentDb, MaterializedView, MaintenanceReport) {
        let (db, v) = setup(docs, e);
        let u = UpdateExpression::parse(g, a, &ac()).unwrap();
        let c = classify(&u, &v.formula, &ac()).unwrap();
        let out = maintain(&db, &v, &u, &c).unwrap();
        assert!(out.1.is_consistent(&out.0).unwrap());
        out
    }

    #[test]
    fn materialize_overlapping_matches() {
        let (_, v) = setup(&[("d1", "aaa")], "(a|c)* X{aa} (a|c)*");
        assert_eq!(spans(&v), vec![("d1".into(), 1, 3), ("d1".into(), 2, 4)]);
        let (_, empty) = setup(&[], "X{a}");
        assert!(empty.rows.is_empty());
    }

    #[test]
    fn pseudo_irrelevant_shift() {
        let (db, v, r) = run(&[("d", "aacac")], ".* X{aa} .*", "aa .* x{c}", "cc");
        assert_eq!(r.verdict, "PseudoIrrelevant");
        assert_eq!(db.get("d").unwrap().content, "aacacc");
        assert_eq!(spans(&v), vec![("d".into(), 1, 3)]);
        assert!(!r.reextracted);
    }

    #[test]
    fn delete_all() {
        let (db, v, r) = run(&[("d", "ccc"), ("e", "aa")], "X{cc} c*", ".* x{c} .*", "a");
        assert_eq!(r.verdict, "DeleteAll");
        assert_eq!(db.get("d").unwrap().content, "aaa");
        assert!(v.rows.is_empty());
        assert_eq!(r.rows_deleted, 1);
        assert_eq!(r.affected_docs, vec!["d".to_string()]);
    }

    #[test]
    fn irrelevant_keeps_rows() {
        let (db0, v0) = setup(&[("d", "aac"), ("e", "cac")], "aa .* X{c}");
        let u = UpdateExpression::parse("c .* x{c}", "a", &ac()).unwrap();
        let c = classify(&u, &v0.formula, &ac()).unwrap();
        assert_eq!(c.verdict, Verdict::Irrelevant);
        let (db, v, _) = maintain(&db0, &v0, &u, &c).unwrap();
        assert_eq!(db.get("e").unwrap().content, "caa");
        assert_eq!(v.rows, v0.rows);
    }

    #[test]
    fn unknown_reextracts_affected() {
        let (_, _, r) = run(
            &[("d", "aac"), ("e", "aa")],
            ".* X{aa} .*",
            ".* x{c} .*",
            "cc",
        );
        assert_eq!(r.verdict, "Unknown");
        assert!(r.reextracted);
        assert_eq!(r.reextracted_docs, 1);
    }

    #[test]
    fn rejected_update_changes_nothing() {
        let (db, v) = setup(&[("d", "ccc")], ".* X{aa} .*");
        let u = UpdateExpression::parse(".* x{c.*c} .*", "", &ac()).unwrap();
        let c = classify(&u, &v.formula, &ac()).unwrap();
        assert!(matches!(
            maintain(&db, &v, &u, &c),
            Err(ViewError::Rejected(_))
        ));
    }

    #[test]
    fn runtime_overlap_guard_is_atomic() {
        let (db, v) = setup(&[("a1", "a"), ("z", "ccc")], ".* X{aa} .*");
        let u = UpdateExpression::parse(".* x{c.*c} .*", "", &ac()).unwrap();
        let forged = UpdateClass {
            verdict: Verdict::Unknown,
            stages: vec![],
        };
        let err = maintain(&db, &v, &u, &forged).unwrap_err();
        assert!(matches!(err, ViewError::Eval { ref doc, .. } if doc == "z"));
    }

    #[test]
    fn corrupted_view_has_a_diff() {
        let (db, mut v) = setup(&[("d", "aaa")], ".* X{aa} .*");
        let row = v.rows.iter().next().unwrap().clone();
        v.rows.remove(&row);
        let d = v.diff(&db).unwrap();
        assert_eq!(d.missing, vec![row]);
        assert!(d.unexpected.is_empty());
    }

    #[test]
    fn ids_are_checked() {
        let mut db = DocumentDb::new(ac());
        assert!(matches!(
            db.insert("../x", "a"),
            Err(ViewError::InvalidId(_))
        ));
        assert!(matches!(
            db.insert("d", "ab"),
            Err(ViewError::Alphabet { .. })
        ));
    }
}
