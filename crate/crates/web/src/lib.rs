//! Browser bindings: extract spans, classify an update, apply it with view
//! maintenance. Every function returns a JSON string.

use serde_json::{json, Value};
use spanview::alphabet::Alphabet;
use spanview::eval::{evaluate_spanner, SpanRelation};
use spanview::formula::{check_functional, parse_formula, Formula, Grammar, UpdateExpression};
use spanview::verifier::classify;
use spanview::viewstore::{maintain, materialize, DocumentDb};
use wasm_bindgen::prelude::*;

fn alphabet(symbols: &str) -> Result<Alphabet, String> {
    Alphabet::new(symbols.chars().filter(|c| *c == ' ' || !c.is_whitespace()))
        .map_err(|e| e.to_string())
}

fn extractor(text: &str, al: &Alphabet) -> Result<Formula, String> {
    let e = parse_formula(text, al, Grammar::Extraction).map_err(|e| format!("extractor: {e}"))?;
    check_functional(&e).map_err(|c| format!("extractor is not functional: {c}"))?;
    Ok(e)
}

fn update(text: &str, replacement: &str, al: &Alphabet) -> Result<UpdateExpression, String> {
    UpdateExpression::parse(text, replacement, al).map_err(|e| format!("update: {e}"))
}

fn tuples_json(rel: &SpanRelation, doc: &str) -> Value {
    let chars: Vec<char> = doc.chars().collect();
    rel.tuples
        .iter()
        .map(|t| -> Value {
            t.iter()
                .map(|(x, s)| {
                    let text = s.content(&chars);
                    (
                        x.clone(),
                        json!({ "start": s.start, "end": s.end, "text": text }),
                    )
                })
                .collect::<serde_json::Map<_, _>>()
                .into()
        })
        .collect::<Vec<Value>>()
        .into()
}

fn relation_json(e: &Formula, doc: &str) -> Result<Value, String> {
    let rel = evaluate_spanner(e, doc).map_err(|e| e.to_string())?;
    Ok(json!({ "schema": rel.schema, "tuples": tuples_json(&rel, doc) }))
}

pub fn extract_json(symbols: &str, formula: &str, doc: &str) -> Result<String, String> {
    let al = alphabet(symbols)?;
    al.validate(doc).map_err(|e| format!("document: {e}"))?;
    let e = extractor(formula, &al)?;
    Ok(relation_json(&e, doc)?.to_string())
}

pub fn classify_json(
    symbols: &str,
    formula: &str,
    update_formula: &str,
    replacement: &str,
) -> Result<String, String> {
    let al = alphabet(symbols)?;
    let e = extractor(formula, &al)?;
    let u = update(update_formula, replacement, &al)?;
    classify(&u, &e, &al)
        .map(|c| c.to_json())
        .map_err(|e| e.to_string())
}

/// Classifies, then applies the update to `doc` and maintains the
/// one-document view the way the verdict allows. Reports the updated text,
/// the maintained rows and whether they match extraction from scratch.
pub fn apply_json(
    symbols: &str,
    formula: &str,
    update_formula: &str,
    replacement: &str,
    doc: &str,
) -> Result<String, String> {
    let al = alphabet(symbols)?;
    let e = extractor(formula, &al)?;
    let u = update(update_formula, replacement, &al)?;
    let c = classify(&u, &e, &al).map_err(|e| e.to_string())?;
    let mut db = DocumentDb::new(al);
    db.insert("doc", doc).map_err(|e| e.to_string())?;
    let view = materialize(&db, &e, "view").map_err(|e| e.to_string())?;
    let (new_db, new_view, report) = maintain(&db, &view, &u, &c).map_err(|e| e.to_string())?;
    let updated = new_db.get("doc").expect("inserted").content.clone();
    let maintained = SpanRelation {
        schema: new_view.schema.clone(),
        tuples: new_view.rows.iter().map(|(_, t)| t.clone()).collect(),
    };
    let consistent = new_view.is_consistent(&new_db).map_err(|e| e.to_string())?;
    Ok(json!({
        "verdict": c.verdict.name(),
        "updated": updated,
        "before": relation_json(&e, doc)?,
        "maintained": { "schema": maintained.schema, "tuples": tuples_json(&maintained, &updated) },
        "consistent": consistent,
        "report": report,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn extract(symbols: &str, formula: &str, doc: &str) -> Result<String, JsError> {
    extract_json(symbols, formula, doc).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = classifyUpdate)]
pub fn classify_update(
    symbols: &str,
    formula: &str,
    update_formula: &str,
    replacement: &str,
) -> Result<String, JsError> {
    classify_json(symbols, formula, update_formula, replacement).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = applyUpdate)]
pub fn apply_update(
    symbols: &str,
    formula: &str,
    update_formula: &str,
    replacement: &str,
    doc: &str,
) -> Result<String, JsError> {
    apply_json(symbols, formula, update_formula, replacement, doc).map_err(|e| JsError::new(&e))
}
