//! Spanner semantics on concrete documents: span relations, update
//! relations, `Repl(g, A)` and the shift of untouched spans.

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{check_functional, Counterexample, Formula, UpdateExpression};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("formula is not functional: {0}")]
    NotFunctional(Counterexample),
    #[error("overlapping update spans {0} and {1}")]
    OverlappingUpdateSpans(Span, Span),
    #[error("span {span} overlaps update span {update}")]
    ShiftOverlap { span: Span, update: Span },
}

/// Half-open, 1-based interval `[start, end⟩` of a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        debug_assert!(1 <= start && start <= end);
        Span { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    /// `i1 ≤ i2 < j1` or `i2 ≤ i1 < j2`.
    pub fn overlaps(&self, other: &Span) -> bool {
        (self.start <= other.start && other.start < self.end)
            || (other.start <= self.start && self.start < other.end)
    }

    /// True if the span fits a document of `len` symbols.
    pub fn fits(&self, len: usize) -> bool {
        1 <= self.start && self.start <= self.end && self.end <= len + 1
    }

    /// The covered substring of `doc`.
    pub fn content(&self, doc: &[char]) -> String {
        doc[self.start - 1..self.end - 1].iter().collect()
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}⟩", self.start, self.end)
    }
}

/// One row of a span relation: a span for every variable.
pub type SpanTuple = BTreeMap<String, Span>;

/// `⟦E⟧(D)` with set semantics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpanRelation {
    pub schema: Vec<String>,
    pub tuples: BTreeSet<SpanTuple>,
}

impl SpanRelation {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// A document of the database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub content: String,
}

impl Document {
    pub fn new(id: impl Into<String>, content: impl Into<String>) -> Document {
        Document {
            id: id.into(),
            content: content.into(),
        }
    }
}

type Binding = Vec<(u16, u32, u32)>;

#[derive(Clone, Copy)]
enum Node {
    Empty,
    Epsilon,
    Symbol(char),
    Or(usize, usize),
    Concat(usize, usize),
    Star(usize),
    Capture(u16, usize),
}

/// Every reachable end offset with the bindings that reach it.
type Ends = Rc<Vec<(usize, Binding)>>;

/// Memoized matcher over `(sub-formula, start offset)` collecting every
/// reachable end offset with its variable bindings.
struct Matcher<'a> {
    doc: &'a [char],
    nodes: Vec<Node>,
    var_free: Vec<bool>,
    rows: HashMap<(usize, usize), Rc<Vec<bool>>>,
    results: HashMap<(usize, usize), Ends>,
}

impl<'a> Matcher<'a> {
    fn new(f: &Formula, vars: &[String], doc: &'a [char]) -> (Self, usize) {
        let mut m = Matcher {
            doc,
            nodes: Vec::new(),
            var_free: Vec::new(),
            rows: HashMap::new(),
            results: HashMap::new(),
        };
        let root = m.add(f, vars);
        (m, root)
    }

    fn add(&mut self, f: &Formula, vars: &[String]) -> usize {
        let node = match f {
            Formula::Empty => Node::Empty,
            Formula::Epsilon => Node::Epsilon,
            Formula::Symbol(c) => Node::Symbol(*c),
            Formula::Or(l, r) => Node::Or(self.add(l, vars), self.add(r, vars)),
            Formula::Concat(l, r) => Node::Concat(self.add(l, vars), self.add(r, vars)),
            Formula::Star(inner) => Node::Star(self.add(inner, vars)),
            Formula::Capture(x, inner) => {
                let idx = vars.iter().position(|v| v == x).expect("var in schema") as u16;
                Node::Capture(idx, self.add(inner, vars))
            }
        };
        self.nodes.push(node);
        self.var_free.push(!f.has_vars());
        self.nodes.len() - 1
    }

    /// End offsets `j` such that the variable-free node matches `doc[i..j]`.
    fn row(&mut self, node: usize, i: usize) -> Rc<Vec<bool>> {
        if let Some(r) = self.rows.get(&(node, i)) {
            return r.clone();
        }
        let n = self.doc.len();
        let mut ends = vec![false; n + 1];
        match self.nodes[node] {
            Node::Empty => {}
            Node::Epsilon => ends[i] = true,
            Node::Symbol(c) => {
                if i < n && self.doc[i] == c {
                    ends[i + 1] = true;
                }
            }
            Node::Or(l, r) => {
                let (a, b) = (self.row(l, i), self.row(r, i));
                for j in i..=n {
                    ends[j] = a[j] || b[j];
                }
            }
            Node::Concat(l, r) => {
                let a = self.row(l, i);
                for k in i..=n {
                    if a[k] {
                        let b = self.row(r, k);
                        for j in k..=n {
                            ends[j] |= b[j];
                        }
                    }
                }
            }
            Node::Star(inner) => {
                ends[i] = true;
                let mut stack = vec![i];
                while let Some(k) = stack.pop() {
                    let step = self.row(inner, k);
                    for j in k + 1..=n {
                        if step[j] && !ends[j] {
                            ends[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            Node::Capture(..) => unreachable!("captures are not variable-free"),
        }
        let ends = Rc::new(ends);
        self.rows.insert((node, i), ends.clone());
        ends
    }

    fn results(&mut self, node: usize, i: usize) -> Ends {
        if let Some(r) = self.results.get(&(node, i)) {
            return r.clone();
        }
        let out: Vec<(usize, Binding)> = if self.var_free[node] {
            let row = self.row(node, i);
            (i..row.len())
                .filter(|&j| row[j])
                .map(|j| (j, Vec::new()))
                .collect()
        } else {
            let mut set: BTreeSet<(usize, Binding)> = BTreeSet::new();
            match self.nodes[node] {
                Node::Or(l, r) => {
                    set.extend(self.results(l, i).iter().cloned());
                    set.extend(self.results(r, i).iter().cloned());
                }
                Node::Concat(l, r) => {
                    for (k, b1) in self.results(l, i).iter() {
                        for (j, b2) in self.results(r, *k).iter() {
                            let mut b = b1.clone();
                            b.extend(b2.iter().copied());
                            b.sort_unstable();
                            set.insert((*j, b));
                        }
                    }
                }
                Node::Capture(x, inner) => {
                    for (j, b) in self.results(inner, i).iter() {
                        let mut b = b.clone();
                        b.push((x, i as u32, *j as u32));
                        b.sort_unstable();
                        set.insert((*j, b));
                    }
                }
                Node::Star(_) => unreachable!("functional formulas have no capture under star"),
                _ => unreachable!(),
            }
            set.into_iter().collect()
        };
        let out = Rc::new(out);
        self.results.insert((node, i), out.clone());
        out
    }
}

/// `⟦e⟧(doc)`: all variable assignments under which `e` matches the whole
/// document.
pub fn evaluate_spanner(e: &Formula, doc: &str) -> Result<SpanRelation, EvalError> {
    check_functional(e).map_err(EvalError::NotFunctional)?;
    let chars: Vec<char> = doc.chars().collect();
    let schema: Vec<String> = e.vars().into_iter().collect();
    let (mut m, root) = Matcher::new(e, &schema, &chars);
    let n = chars.len();
    let tuples = m
        .results(root, 0)
        .iter()
        .filter(|(j, _)| *j == n)
        .map(|(_, b)| {
            b.iter()
                .map(|&(x, i, j)| {
                    (
                        schema[x as usize].clone(),
                        Span::new(i as usize + 1, j as usize + 1),
                    )
                })
                .collect()
        })
        .collect();
    Ok(SpanRelation { schema, tuples })
}

/// `⟦g⟧(D)`: the unary relation of spans marked by the update variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateRelation {
    pub spans: BTreeSet<Span>,
}

impl UpdateRelation {
    /// A pair of distinct spans that overlap, if any.
    pub fn overlapping_pair(&self) -> Option<(Span, Span)> {
        let spans: Vec<Span> = self.spans.iter().copied().collect();
        for (k, a) in spans.iter().enumerate() {
            for b in &spans[k + 1..] {
                if a.overlaps(b) {
                    return Some((*a, *b));
                }
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

pub fn evaluate_update_relation(u: &UpdateExpression, doc: &str) -> UpdateRelation {
    let rel = evaluate_spanner(u.formula(), doc).expect("update formulas are functional");
    UpdateRelation {
        spans: rel.tuples.iter().map(|t| t[u.var()]).collect(),
    }
}

/// Replaces every span of `rel` in `doc` by `replacement`, right to left.
pub fn replace_spans(
    rel: &UpdateRelation,
    replacement: &str,
    doc: &str,
) -> Result<String, EvalError> {
    if let Some((a, b)) = rel.overlapping_pair() {
        return Err(EvalError::OverlappingUpdateSpans(a, b));
    }
    let mut chars: Vec<char> = doc.chars().collect();
    for span in rel.spans.iter().rev() {
        chars.splice(span.start - 1..span.end - 1, replacement.chars());
    }
    Ok(chars.into_iter().collect())
}

/// `Repl(g, A)(D)`.
pub fn apply_update(u: &UpdateExpression, doc: &str) -> Result<String, EvalError> {
    let rel = evaluate_update_relation(u, doc);
    replace_spans(&rel, u.replacement(), doc)
}

/// The Shift Algorithm: the location in the updated document of a span
/// that no update span overlaps.
pub fn shift_span(
    rel: &UpdateRelation,
    replacement_len: usize,
    s: Span,
) -> Result<Span, EvalError> {
    if let Some(update) = rel.spans.iter().find(|m| m.overlaps(&s)) {
        return Err(EvalError::ShiftOverlap {
            span: s,
            update: *update,
        });
    }
    let shift: isize = rel
        .spans
        .iter()
        .filter(|m| m.start < s.start)
        .map(|m| m.len() as isize - replacement_len as isize)
        .sum();
    Ok(Span {
        start: (s.start as isize - shift) as usize,
        end: (s.end as isize - shift) as usize,
    })
}

/// Applies `shift_span` to every span of a tuple.
pub fn shift_tuple(
    rel: &UpdateRelation,
    replacement_len: usize,
    tuple: &SpanTuple,
) -> Result<SpanTuple, EvalError> {
    tuple
        .iter()
        .map(|(x, s)| Ok((x.clone(), shift_span(rel, replacement_len, *s)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::formula::{parse_formula, Grammar};

    fn ac() -> Alphabet {
        Alphabet::new("ac".chars()).unwrap()
    }

    fn spans(rel: &UpdateRelation) -> Vec<(usize, usize)> {
        rel.spans.iter().map(|s| (s.start, s.end)).collect()
    }

    #[test]
    fn empty_capture_on_empty_document() {
        let a = ac();
        let f = parse_formula("x{\\e}", &a, Grammar::Extraction).unwrap();
        let rel = evaluate_spanner(&f, "").unwrap();
        assert_eq!(rel.len(), 1);
        assert_eq!(rel.tuples.iter().next().unwrap()["x"], Span::new(1, 1));
    }

    #[test]
    fn overlapping_matches_are_all_reported() {
        let a = Alphabet::new("ab".chars()).unwrap();
        let f = parse_formula("(a|b)* X{aa} (a|b)*", &a, Grammar::Extraction).unwrap();
        let rel = evaluate_spanner(&f, "aaa").unwrap();
        let got: Vec<Span> = rel.tuples.iter().map(|t| t["X"]).collect();
        assert_eq!(got, vec![Span::new(1, 3), Span::new(2, 4)]);
    }

    #[test]
    fn non_functional_is_rejected() {
        let f = parse_formula("x{a}|c", &ac(), Grammar::Extraction).unwrap();
        assert!(matches!(
            evaluate_spanner(&f, "a"),
            Err(EvalError::NotFunctional(_))
        ));
    }

    #[test]
    fn update_relations() {
        let a = ac();
        let u = UpdateExpression::parse(".* x{c} .*", "", &a).unwrap();
        assert_eq!(
            spans(&evaluate_update_relation(&u, "ccc")),
            vec![(1, 2), (2, 3), (3, 4)]
        );
        let last = UpdateExpression::parse("aa .* x{c}", "cc", &a).unwrap();
        assert_eq!(
            spans(&evaluate_update_relation(&last, "aacac")),
            vec![(5, 6)]
        );
        assert!(evaluate_update_relation(&last, "caca").is_empty());
    }

    #[test]
    fn apply_replaces_deletes_inserts() {
        let a = ac();
        let del = UpdateExpression::parse("a* x{c} a*", "", &a).unwrap();
        assert_eq!(apply_update(&del, "aca").unwrap(), "aa");
        let grow = UpdateExpression::parse("aa .* x{c}", "cc", &a).unwrap();
        assert_eq!(apply_update(&grow, "aacac").unwrap(), "aacacc");
        assert_eq!(apply_update(&grow, "caca").unwrap(), "caca");
        let ins = UpdateExpression::parse(".* a x{\\e} .*", "c", &a).unwrap();
        assert_eq!(apply_update(&ins, "aa").unwrap(), "acac");
    }

    #[test]
    fn apply_refuses_overlapping_spans() {
        let u = UpdateExpression::parse(".* x{c.*c} .*", "a", &ac()).unwrap();
        assert!(matches!(
            apply_update(&u, "ccc"),
            Err(EvalError::OverlappingUpdateSpans(..))
        ));
    }

    #[test]
    fn shift_examples() {
        let none = UpdateRelation::default();
        assert_eq!(
            shift_span(&none, 3, Span::new(5, 9)).unwrap(),
            Span::new(5, 9)
        );
        let late = UpdateRelation {
            spans: [Span::new(5, 6)].into(),
        };
        assert_eq!(
            shift_span(&late, 2, Span::new(1, 3)).unwrap(),
            Span::new(1, 3)
        );
        let early = UpdateRelation {
            spans: [Span::new(1, 3)].into(),
        };
        let shifted = shift_span(&early, 1, Span::new(5, 7)).unwrap();
        assert_eq!(shifted, Span::new(4, 6));
        let before: Vec<char> = "aacaca".chars().collect();
        let after: Vec<char> = replace_spans(&early, "c", "aacaca")
            .unwrap()
            .chars()
            .collect();
        assert_eq!(Span::new(5, 7).content(&before), shifted.content(&after));
    }

    #[test]
    fn shift_rejects_overlap() {
        let rel = UpdateRelation {
            spans: [Span::new(2, 4)].into(),
        };
        assert!(shift_span(&rel, 0, Span::new(3, 5)).is_err());
        assert!(shift_span(&rel, 0, Span::new(2, 2)).is_err());
        assert!(shift_span(&rel, 0, Span::new(4, 4)).is_ok());
    }

    #[test]
    fn overlap_predicate() {
        let s = |a, b| Span::new(a, b);
        assert!(s(1, 3).overlaps(&s(2, 4)));
        assert!(s(2, 4).overlaps(&s(1, 3)));
        assert!(!s(1, 2).overlaps(&s(2, 3)));
        assert!(s(1, 3).overlaps(&s(2, 2)));
        assert!(!s(1, 3).overlaps(&s(3, 3)));
        assert!(!s(2, 2).overlaps(&s(2, 2)));
        assert!(s(1, 3).overlaps(&s(1, 3)));
    }
}
