//! Static classification of an update against an extractor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::automata::alignment::{
    image_intersection, shift_violation, AlignmentOutcome, AlignmentWitness, DEFAULT_STATE_LIMIT,
};
use crate::automata::pseudo::OverlapKind;
use crate::automata::{
    build_pseudo_recognizer, compile, DisjointUpdate, Emptiness, PseudoError, UnrestrictedUpdate,
    Witness,
};
use crate::eval::apply_update;
use crate::formula::{normalize, Formula, FormulaError, UpdateExpression};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifierError {
    #[error("extractor: {0}")]
    Extractor(#[from] FormulaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Irrelevant,
    DeleteAll,
    PseudoIrrelevant,
    Unknown,
    RejectedOverlappingUpdate,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Irrelevant => "Irrelevant",
            Verdict::DeleteAll => "DeleteAll",
            Verdict::PseudoIrrelevant => "PseudoIrrelevant",
            Verdict::Unknown => "Unknown",
            Verdict::RejectedOverlappingUpdate => "RejectedOverlappingUpdate",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// The stage's language was certified empty.
    pub empty: bool,
    pub witness: Option<String>,
    pub micros: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateClass {
    pub verdict: Verdict,
    pub stages: Vec<Stage>,
}

impl UpdateClass {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    /// Bound on product states explored by each exact alignment search.
    /// Hitting it makes the stage inconclusive, which counts as nonempty.
    pub state_limit: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            state_limit: DEFAULT_STATE_LIMIT,
        }
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Timer(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Timer {
    fn start() -> Timer {
        Timer(std::time::Instant::now())
    }

    fn micros(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }
}

#[cfg(target_arch = "wasm32")]
struct Timer;

#[cfg(target_arch = "wasm32")]
impl Timer {
    fn start() -> Timer {
        Timer
    }

    fn micros(&self) -> u64 {
        0
    }
}

fn stage(name: &str, timer: Timer, witness: Option<String>, empty: bool) -> Stage {
    Stage {
        name: name.to_string(),
        empty,
        witness,
        micros: timer.micros(),
    }
}

fn from_emptiness(name: &str, timer: Timer, e: &Emptiness) -> Stage {
    stage(
        name,
        timer,
        e.witness().map(|w| w.document.clone()),
        e.is_empty(),
    )
}

fn from_alignment(name: &str, timer: Timer, o: &AlignmentOutcome) -> Stage {
    match o {
        AlignmentOutcome::None => stage(name, timer, None, true),
        AlignmentOutcome::Found(w) => stage(name, timer, Some(w.document.clone()), false),
        AlignmentOutcome::Inconclusive { .. } => stage(name, timer, None, false),
    }
}

/// `Ok` iff the update never marks two different overlapping spans.
pub fn certify_unrestricted(u: &UpdateExpression, alphabet: &Alphabet) -> Result<(), Witness> {
    match UnrestrictedUpdate::certify(u, alphabet) {
        Ok(_) => Ok(()),
        Err(PseudoError::Overlapping(w)) => Err(w),
        Err(other) => unreachable!("{other}"),
    }
}

/// `Ok` iff neither marked spans nor replacement text ever overlap an
/// extracted span. Assumes the update is unrestricted.
pub fn certify_disjoint(
    u: &UpdateExpression,
    e: &Formula,
    alphabet: &Alphabet,
) -> Result<Result<(), (OverlapKind, Witness)>, VerifierError> {
    let n = normalize(e)?;
    let unr = match UnrestrictedUpdate::certify(u, alphabet) {
        Ok(c) => c,
        Err(PseudoError::Overlapping(w)) => return Ok(Err((OverlapKind::Update, w))),
        Err(other) => unreachable!("{other}"),
    };
    Ok(match DisjointUpdate::certify(unr, &n, alphabet) {
        Ok(_) => Ok(()),
        Err(PseudoError::NotDisjoint { kind, witness }) => Err((kind, witness)),
        Err(other) => unreachable!("{other}"),
    })
}

pub fn classify(
    u: &UpdateExpression,
    e: &Formula,
    alphabet: &Alphabet,
) -> Result<UpdateClass, VerifierError> {
    classify_with(u, e, alphabet, ClassifyOptions::default())
}

pub fn classify_with(
    u: &UpdateExpression,
    e: &Formula,
    alphabet: &Alphabet,
    options: ClassifyOptions,
) -> Result<UpdateClass, VerifierError> {
    e.validate_symbols(alphabet)?;
    let n = normalize(e)?;
    let mut stages = Vec::new();
    let done = |verdict, stages| Ok(UpdateClass { verdict, stages });

    let t = Timer::start();
    let unr = match UnrestrictedUpdate::certify(u, alphabet) {
        Ok(c) => {
            stages.push(stage("unrestricted", t, None, true));
            c
        }
        Err(PseudoError::Overlapping(w)) => {
            stages.push(stage("unrestricted", t, Some(w.document), false));
            return done(Verdict::RejectedOverlappingUpdate, stages);
        }
        Err(other) => unreachable!("{other}"),
    };

    let t = Timer::start();
    let be = compile(&e.boolean_projection(), alphabet);
    let bg = compile(&u.formula().boolean_projection(), alphabet);
    let meet = be.intersect(&bg).expect("one alphabet").emptiness();
    stages.push(from_emptiness("boolean-intersection", t, &meet));

    // Updating the boolean-intersection witness often lands in B(E) already,
    // which settles the question without the alignment search.
    let t = Timer::start();
    let probe = meet.witness().and_then(|w| {
        let updated = apply_update(u, &w.document).ok()?;
        be.accepts(&updated).then(|| AlignmentWitness {
            document: w.document.clone(),
            updated,
            joint: String::new(),
        })
    });
    let image = match probe {
        Some(w) => AlignmentOutcome::Found(w),
        None => image_intersection(&unr, e, alphabet, options.state_limit),
    };
    stages.push(from_alignment("image-intersection", t, &image));
    if image.is_none() {
        let verdict = if meet.is_empty() {
            Verdict::Irrelevant
        } else {
            Verdict::DeleteAll
        };
        return done(verdict, stages);
    }

    let t = Timer::start();
    let cert = match DisjointUpdate::certify(unr, &n, alphabet) {
        Ok(c) => {
            stages.push(stage("cross-overlap", t, None, true));
            stages.push(stage("proxy-overlap", Timer::start(), None, true));
            c
        }
        Err(PseudoError::NotDisjoint { kind, witness }) => {
            if kind == OverlapKind::Proxy {
                stages.push(stage("cross-overlap", Timer::start(), None, true));
            }
            let name = match kind {
                OverlapKind::Update => "cross-overlap",
                OverlapKind::Proxy => "proxy-overlap",
            };
            stages.push(stage(name, t, Some(witness.document), false));
            return done(Verdict::Unknown, stages);
        }
        Err(other) => unreachable!("{other}"),
    };

    let t = Timer::start();
    let recognizer = build_pseudo_recognizer(&cert, alphabet).emptiness();
    stages.push(from_emptiness("pseudo-recognizer", t, &recognizer));
    if !recognizer.is_empty() {
        return done(Verdict::Unknown, stages);
    }

    let t = Timer::start();
    let shift = shift_violation(&cert, alphabet, options.state_limit);
    stages.push(from_alignment("shift-exact", t, &shift));
    if shift.is_none() {
        done(Verdict::PseudoIrrelevant, stages)
    } else {
        done(Verdict::Unknown, stages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Grammar};

    fn ac() -> Alphabet {
        Alphabet::new("ac".chars()).unwrap()
    }

    fn run(e: &str, g: &str, a: &str) -> UpdateClass {
        let al = ac();
        let u = UpdateExpression::parse(g, a, &al).unwrap();
        let e = parse_formula(e, &al, Grammar::Extraction).unwrap();
        classify(&u, &e, &al).unwrap()
    }

    #[test]
    fn classification_table() {
        assert_eq!(run("aa.*", "c .* x{c}", "a").verdict, Verdict::Irrelevant);
        assert_eq!(
            run("X{cc} c*", ".* x{c} .*", "a").verdict,
            Verdict::DeleteAll
        );
        assert_eq!(
            run(".* X{aa} .*", "aa .* x{c}", "cc").verdict,
            Verdict::PseudoIrrelevant
        );
        let unknown = run(".* X{aa} .*", ".* x{c} .*", "cc");
        assert_eq!(unknown.verdict, Verdict::Unknown);
        assert!(!unknown.stage("pseudo-recognizer").unwrap().empty);
    }

    #[test]
    fn overlapping_update_is_rejected() {
        let c = run(".* X{aa} .*", ".* x{c.*c} .*", "");
        assert_eq!(c.verdict, Verdict::RejectedOverlappingUpdate);
        assert_eq!(c.stages[0].witness.as_deref(), Some("ccc"));
    }

    #[test]
    fn certificates() {
        let al = ac();
        let g = |s: &str, a: &str| UpdateExpression::parse(s, a, &al).unwrap();
        let e = |s: &str| parse_formula(s, &al, Grammar::Extraction).unwrap();
        assert!(certify_unrestricted(&g(".* x{c} .*", ""), &al).is_ok());
        assert!(certify_unrestricted(&g("x{a}", ""), &al).is_ok());
        assert_eq!(
            certify_unrestricted(&g(".* x{c.*c} .*", ""), &al)
                .unwrap_err()
                .document,
            "ccc"
        );
        assert!(
            certify_disjoint(&g(".* x{c} .*", "cc"), &e(".* X{aa} .*"), &al)
                .unwrap()
                .is_ok()
        );
        let (kind, w) = certify_disjoint(&g(".* x{ac} .*", ""), &e(".* X{aa} .*"), &al)
            .unwrap()
            .unwrap_err();
        assert_eq!((kind, w.document.as_str()), (OverlapKind::Update, "aac"));
        let (kind, _) = certify_disjoint(&g(".* x{a} .*", "cc"), &e(".* X{cc} .*"), &al)
            .unwrap()
            .unwrap_err();
        assert_eq!(kind, OverlapKind::Proxy);
    }

    #[test]
    fn non_functional_extractor_is_an_error() {
        let al = ac();
        let u = UpdateExpression::parse(".* x{c} .*", "", &al).unwrap();
        let e = parse_formula("X{a} | c", &al, Grammar::Extraction).unwrap();
        assert!(classify(&u, &e, &al).is_err());
    }

    #[test]
    fn report_json_shape() {
        let json = run("aa.*", "c .* x{c}", "a").to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["verdict"], "Irrelevant");
        let s = &v["stages"][0];
        assert!(s["name"].is_string() && s["empty"].is_boolean() && s["micros"].is_u64());
        assert!(s.get("witness").is_some());
    }
}
