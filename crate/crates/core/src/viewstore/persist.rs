//! On-disk layout: `alphabet.json`, `docs/<id>.txt`, `views/<name>.csv`
//! and `views/<name>.meta.json` under one root directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DocumentDb, MaterializedView, ViewError, ViewRow};
use crate::alphabet::Alphabet;
use crate::eval::{Span, SpanTuple};
use crate::formula::{parse_formula, Grammar};

#[derive(Serialize, Deserialize)]
struct ViewMeta {
    name: String,
    extractor: String,
    variables: Vec<String>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ViewError + '_ {
    move |source| ViewError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn malformed(path: &Path, message: impl std::fmt::Display) -> ViewError {
    ViewError::Malformed {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), ViewError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, contents).map_err(io(path))
}

fn read(path: &Path) -> Result<String, ViewError> {
    fs::read_to_string(path).map_err(io(path))
}

pub fn save_db(db: &DocumentDb, root: &Path) -> Result<(), ViewError> {
    write(&root.join("alphabet.json"), &db.alphabet.to_json())?;
    let docs = root.join("docs");
    fs::create_dir_all(&docs).map_err(io(&docs))?;
    for doc in db.documents.values() {
        write(&docs.join(format!("{}.txt", doc.id)), &doc.content)?;
    }
    Ok(())
}

pub fn load_db(root: &Path) -> Result<DocumentDb, ViewError> {
    let path = root.join("alphabet.json");
    let alphabet = Alphabet::from_json(&read(&path)?).map_err(|e| malformed(&path, e))?;
    let mut db = DocumentDb::new(alphabet);
    let docs = root.join("docs");
    if !docs.exists() {
        return Ok(db);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(&docs)
        .map_err(io(&docs))?
        .map(|e| e.map(|e| e.path()).map_err(io(&docs)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| malformed(&path, "document name is not UTF-8"))?
            .to_string();
        db.insert(&id, &read(&path)?)?;
    }
    Ok(db)
}

fn view_paths(root: &Path, name: &str) -> (PathBuf, PathBuf) {
    let dir = root.join("views");
    (
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}.meta.json")),
    )
}

pub fn save_view(view: &MaterializedView, root: &Path) -> Result<(), ViewError> {
    let (csv_path, meta_path) = view_paths(root, &view.name);
    let meta = ViewMeta {
        name: view.name.clone(),
        extractor: view.formula.to_string(),
        variables: view.schema.clone(),
    };
    write(
        &meta_path,
        &serde_json::to_string_pretty(&meta).expect("serializable"),
    )?;
    write(&csv_path, &view_to_csv(view))
}

/// The view as CSV: `doc_id,<var>.start,<var>.end,...`, 1-based offsets.
pub fn view_to_csv(view: &MaterializedView) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["doc_id".to_string()];
    for x in &view.schema {
        header.push(format!("{x}.start"));
        header.push(format!("{x}.end"));
    }
    w.write_record(&header).expect("in-memory write");
    for (doc, tuple) in &view.rows {
        let mut record = vec![doc.clone()];
        for x in &view.schema {
            record.push(tuple[x].start.to_string());
            record.push(tuple[x].end.to_string());
        }
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

pub fn load_view(root: &Path, name: &str, db: &DocumentDb) -> Result<MaterializedView, ViewError> {
    let (csv_path, meta_path) = view_paths(root, name);
    let meta: ViewMeta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| malformed(&meta_path, e))?;
    let formula = parse_formula(&meta.extractor, &db.alphabet, Grammar::Extraction)?;
    let schema: Vec<String> = formula.vars().into_iter().collect();
    if schema != meta.variables {
        return Err(malformed(
            &meta_path,
            "variables do not match the extractor",
        ));
    }
    let text = read(&csv_path)?;
    let rows = parse_rows(&text, &schema, db).map_err(|e| match e {
        RowError::View(v) => v,
        RowError::Message(m) => malformed(&csv_path, m),
    })?;
    Ok(MaterializedView {
        name: name.to_string(),
        formula,
        schema,
        rows,
    })
}

enum RowError {
    View(ViewError),
    Message(String),
}

fn parse_rows(
    text: &str,
    schema: &[String],
    db: &DocumentDb,
) -> Result<BTreeSet<ViewRow>, RowError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| RowError::Message(e.to_string()))?;
    let mut expected = vec!["doc_id".to_string()];
    for x in schema {
        expected.push(format!("{x}.start"));
        expected.push(format!("{x}.end"));
    }
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(RowError::Message(format!(
            "header must be {}",
            expected.join(",")
        )));
    }
    let mut rows = BTreeSet::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| RowError::Message(e.to_string()))?;
        let doc = &record[0];
        let len = db
            .get(doc)
            .ok_or_else(|| RowError::View(super::ViewError::UnknownDocument(doc.to_string())))?
            .content
            .chars()
            .count();
        let mut tuple = SpanTuple::new();
        for (k, x) in schema.iter().enumerate() {
            let num = |i: usize| {
                record[i].trim().parse::<usize>().map_err(|_| {
                    RowError::Message(format!("row {}: bad offset {:?}", line + 2, &record[i]))
                })
            };
            let (start, end) = (num(1 + 2 * k)?, num(2 + 2 * k)?);
            let span = Span { start, end };
            if !span.fits(len) {
                return Err(RowError::View(ViewError::OffsetOutOfRange {
                    doc: doc.to_string(),
                    span,
                    len,
                }));
            }
            tuple.insert(x.clone(), span);
        }
        rows.insert((doc.to_string(), tuple));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::viewstore::materialize;

    fn db() -> DocumentDb {
        let mut db = DocumentDb::new(Alphabet::new("ac".chars()).unwrap());
        db.insert("d1", "aaca").unwrap();
        db.insert("d2", "").unwrap();
        db
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let db = db();
        let e = parse_formula(".* X{a} Y{c*} .*", &db.alphabet, Grammar::Extraction).unwrap();
        let v = materialize(&db, &e, "v").unwrap();
        save_db(&db, dir.path()).unwrap();
        save_view(&v, dir.path()).unwrap();
        let db2 = load_db(dir.path()).unwrap();
        assert_eq!(db2, db);
        assert_eq!(load_view(dir.path(), "v", &db2).unwrap(), v);
    }

    #[test]
    fn offsets_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let db = db();
        let e = parse_formula(".* X{a} .*", &db.alphabet, Grammar::Extraction).unwrap();
        let v = materialize(&db, &e, "v").unwrap();
        save_view(&v, dir.path()).unwrap();
        let (csv_path, _) = view_paths(dir.path(), "v");
        fs::write(&csv_path, "doc_id,X.start,X.end\nd1,4,6\n").unwrap();
        assert!(matches!(
            load_view(dir.path(), "v", &db),
            Err(ViewError::OffsetOutOfRange { .. })
        ));
        fs::write(&csv_path, "doc_id,X.start,X.end\n").unwrap();
        assert!(load_view(dir.path(), "v", &db).unwrap().rows.is_empty());
        fs::write(&csv_path, "doc_id,X.start,X.end\nd9,1,2\n").unwrap();
        assert!(matches!(
            load_view(dir.path(), "v", &db),
            Err(ViewError::UnknownDocument(_))
        ));
    }
}
