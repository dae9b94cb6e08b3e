use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use spanview::alphabet::Alphabet;
use spanview::formula::{
    check_functional, parse_formula_file, Formula, FormulaError, Grammar, UpdateExpression,
};
use spanview::fuzz::{run_campaign, FuzzConfig};
use spanview::verifier::{classify, UpdateClass, Verdict};
use spanview::viewstore::{
    load_db, load_view, maintain, materialize, save_db, save_view, view_to_csv, DocumentDb,
    MaterializedView, ViewError,
};

#[derive(Parser)]
#[command(
    name = "spanview",
    version,
    about = "Classify document updates against span extractors and maintain views"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an extractor over every document and store the view.
    Extract {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        extractor: PathBuf,
        /// View name; defaults to the extractor file's stem.
        #[arg(long)]
        view: Option<String>,
    },
    /// Classify an update against an extractor. Exit code 0 for a verdict
    /// that avoids re-extraction, 10 for Unknown, 20 for a rejected update.
    Classify {
        #[arg(long)]
        extractor: PathBuf,
        #[arg(long)]
        update: PathBuf,
        /// Database whose alphabet to use when the extractor file has none.
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Apply an update to the database and maintain a stored view.
    Apply {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        view: String,
        #[arg(long)]
        update: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a stored view and its maintenance under an update against
    /// re-extraction, without writing anything. Exit code 1 on any difference.
    Oracle {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        view: String,
        #[arg(long)]
        update: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Random differential testing campaign. Exit code 1 on any violation.
    Fuzz {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 6)]
        max_doc_len: usize,
        #[arg(long, default_value = "ac")]
        alphabet: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl fmt::Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<FormulaError> for Failure {
    fn from(e: FormulaError) -> Self {
        match e {
            FormulaError::NotFunctional(_) => Failure::new(3, e),
            _ => Failure::new(4, e),
        }
    }
}

impl From<ViewError> for Failure {
    fn from(e: ViewError) -> Self {
        match e {
            ViewError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                Failure::new(2, e)
            }
            ViewError::Formula(f) => f.into(),
            _ => Failure::new(1, e),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        let code = if e.kind() == std::io::ErrorKind::NotFound {
            2
        } else {
            1
        };
        Failure::new(code, format!("{}: {e}", path.display()))
    })
}

fn emit(report: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, format!("{report}\n"))
            .map_err(|e| Failure::new(1, format!("{}: {e}", p.display()))),
        None => {
            println!("{report}");
            Ok(())
        }
    }
}

fn with_path(path: &Path, e: FormulaError) -> Failure {
    let f = Failure::from(e);
    Failure::new(f.code, format!("{}: {}", path.display(), f.message))
}

fn read_extractor(path: &Path, default: Option<&Alphabet>) -> Result<(Formula, Alphabet), Failure> {
    let text = read(path)?;
    let default = match default {
        Some(al) => al.clone(),
        None if text.trim_start().starts_with("alphabet:") => {
            Alphabet::new(['a']).expect("nonempty")
        }
        None => {
            return Err(Failure::new(
                4,
                format!(
                    "{}: no alphabet; add an `alphabet:` first line or pass --db",
                    path.display()
                ),
            ))
        }
    };
    let (e, al) =
        parse_formula_file(&text, &default, Grammar::Extraction).map_err(|e| with_path(path, e))?;
    check_functional(&e).map_err(|c| with_path(path, FormulaError::NotFunctional(c)))?;
    Ok((e, al))
}

/// Update file: an optional `alphabet:` line, a `replacement: "<json string>"`
/// line, then the update formula.
fn read_update(path: &Path, default: &Alphabet) -> Result<(UpdateExpression, Alphabet), Failure> {
    let text = read(path)?;
    let mut header = Vec::new();
    let mut replacement = None;
    let mut body = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        if replacement.is_none() && body.is_empty() {
            if let Some(rest) = trimmed.strip_prefix("replacement:") {
                let value: String = serde_json::from_str(rest.trim()).map_err(|e| {
                    Failure::new(
                        4,
                        format!(
                            "{}: replacement must be a quoted string: {e}",
                            path.display()
                        ),
                    )
                })?;
                replacement = Some(value);
                continue;
            }
            if trimmed.starts_with("alphabet:") {
                header.push(line);
                continue;
            }
        }
        body.push(line);
    }
    let replacement = replacement.ok_or_else(|| {
        Failure::new(
            4,
            format!("{}: missing `replacement:` line", path.display()),
        )
    })?;
    let source = header
        .into_iter()
        .chain(body)
        .collect::<Vec<_>>()
        .join("\n");
    let (g, al) =
        parse_formula_file(&source, default, Grammar::Update).map_err(|e| with_path(path, e))?;
    let u = UpdateExpression::new(g, replacement, &al).map_err(|e| with_path(path, e))?;
    Ok((u, al))
}

fn classify_or_fail(
    u: &UpdateExpression,
    e: &Formula,
    al: &Alphabet,
) -> Result<UpdateClass, Failure> {
    classify(u, e, al).map_err(|e| Failure::new(4, e))
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Irrelevant | Verdict::DeleteAll | Verdict::PseudoIrrelevant => 0,
        Verdict::Unknown => 10,
        Verdict::RejectedOverlappingUpdate => 20,
    }
}

fn extract(db_path: &Path, extractor: &Path, view: Option<String>) -> Outcome {
    let db = load_db(db_path)?;
    let (e, _) = read_extractor(extractor, Some(&db.alphabet))?;
    let name = match view {
        Some(v) => v,
        None => extractor
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Failure::new(1, "cannot derive a view name; pass --view"))?
            .to_string(),
    };
    let v = materialize(&db, &e, &name)?;
    save_view(&v, db_path)?;
    print!("{}", view_to_csv(&v));
    Ok(0)
}

fn cmd_classify(
    extractor: &Path,
    update: &Path,
    db: Option<&Path>,
    report: Option<&Path>,
) -> Outcome {
    let default = db.map(load_db).transpose()?.map(|d| d.alphabet);
    let (e, al) = read_extractor(extractor, default.as_ref())?;
    let (u, _) = read_update(update, &al)?;
    let c = classify_or_fail(&u, &e, &al)?;
    emit(&c.to_json(), report)?;
    Ok(verdict_code(c.verdict))
}

fn load_case(
    db_path: &Path,
    view: &str,
    update: &Path,
) -> Result<(DocumentDb, MaterializedView, UpdateExpression), Failure> {
    let db = load_db(db_path)?;
    let v = load_view(db_path, view, &db)?;
    let (u, _) = read_update(update, &db.alphabet)?;
    Ok((db, v, u))
}

fn apply(db_path: &Path, view: &str, update: &Path, report: Option<&Path>) -> Outcome {
    let (db, v, u) = load_case(db_path, view, update)?;
    let c = classify_or_fail(&u, &v.formula, &db.alphabet)?;
    let (new_db, new_view, r) = maintain(&db, &v, &u, &c)?;
    save_db(&new_db, db_path)?;
    save_view(&new_view, db_path)?;
    emit(
        &serde_json::to_string_pretty(&r).expect("serializable"),
        report,
    )?;
    Ok(0)
}

fn oracle(db_path: &Path, view: &str, update: &Path, report: Option<&Path>) -> Outcome {
    let (db, v, u) = load_case(db_path, view, update)?;
    let stored = v.diff(&db)?;
    let c = classify_or_fail(&u, &v.formula, &db.alphabet)?;
    let (after, maintained) = match maintain(&db, &v, &u, &c) {
        Ok((new_db, new_view, r)) => (Some(new_view.diff(&new_db)?), Some(r)),
        Err(ViewError::Rejected(_)) => (None, None),
        Err(e) => return Err(e.into()),
    };
    let clean = stored.is_empty() && after.as_ref().is_none_or(|d| d.is_empty());
    let out = json!({
        "verdict": c.verdict.name(),
        "stored_view": stored,
        "after_update": after,
        "maintenance": maintained,
        "consistent": clean,
    });
    emit(
        &serde_json::to_string_pretty(&out).expect("serializable"),
        report,
    )?;
    Ok(if clean { 0 } else { 1 })
}

fn fuzz(config: FuzzConfig, report: Option<&Path>) -> Outcome {
    Alphabet::new(config.alphabet.chars()).map_err(|e| Failure::new(4, e))?;
    let r = run_campaign(&config);
    emit(&r.to_json(), report)?;
    Ok(if r.is_clean() { 0 } else { 1 })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Extract {
            db,
            extractor,
            view,
        } => extract(&db, &extractor, view),
        Command::Classify {
            extractor,
            update,
            db,
            report,
        } => cmd_classify(&extractor, &update, db.as_deref(), report.as_deref()),
        Command::Apply {
            db,
            view,
            update,
            report,
        } => apply(&db, &view, &update, report.as_deref()),
        Command::Oracle {
            db,
            view,
            update,
            report,
        } => oracle(&db, &view, &update, report.as_deref()),
        Command::Fuzz {
            seed,
            instances,
            max_doc_len,
            alphabet,
            report,
        } => {
            let config = FuzzConfig {
                seed,
                instances,
                max_doc_len,
                alphabet,
                ..FuzzConfig::default()
            };
            fuzz(config, report.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("spanview: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
