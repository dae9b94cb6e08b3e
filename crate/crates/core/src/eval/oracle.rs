//! Brute-force reference semantics. Enumerates every candidate tuple and
//! checks it by plain recursive descent with the bindings fixed. Shares no
//! code with the memoized matcher.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Span, SpanRelation, SpanTuple};
use crate::formula::Formula;

type Key = (*const Formula, usize, usize);

/// Recursive descent with the bindings `mu` fixed. Results for
/// variable-free subterms do not depend on `mu` and survive across calls.
struct Descent<'a> {
    doc: &'a [char],
    mu: BTreeMap<&'a str, (usize, usize)>,
    free: HashMap<Key, bool>,
    bound: HashMap<Key, bool>,
}

impl<'a> Descent<'a> {
    fn new(doc: &'a [char]) -> Self {
        Descent {
            doc,
            mu: BTreeMap::new(),
            free: HashMap::new(),
            bound: HashMap::new(),
        }
    }

    fn matches(&mut self, f: &Formula, i: usize, j: usize) -> bool {
        let key = (f as *const Formula, i, j);
        let var_free = !f.has_vars();
        let memo = if var_free { &self.free } else { &self.bound };
        if let Some(&known) = memo.get(&key) {
            return known;
        }
        let result = match f {
            Formula::Empty => false,
            Formula::Epsilon => i == j,
            Formula::Symbol(c) => j == i + 1 && self.doc[i] == *c,
            Formula::Or(l, r) => self.matches(l, i, j) || self.matches(r, i, j),
            Formula::Concat(l, r) => {
                (i..=j).any(|k| self.matches(l, i, k) && self.matches(r, k, j))
            }
            Formula::Star(inner) => {
                i == j || (i + 1..=j).any(|k| self.matches(inner, i, k) && self.matches(f, k, j))
            }
            Formula::Capture(x, inner) => {
                self.mu.get(x.as_str()) == Some(&(i, j)) && self.matches(inner, i, j)
            }
        };
        if var_free {
            &mut self.free
        } else {
            &mut self.bound
        }
        .insert(key, result);
        result
    }
}

fn capture_bodies<'f>(f: &'f Formula, out: &mut BTreeMap<String, Vec<&'f Formula>>) {
    match f {
        Formula::Capture(x, inner) => {
            out.entry(x.clone()).or_default().push(inner);
            capture_bodies(inner, out);
        }
        Formula::Or(l, r) | Formula::Concat(l, r) => {
            capture_bodies(l, out);
            capture_bodies(r, out);
        }
        Formula::Star(inner) => capture_bodies(inner, out),
        _ => {}
    }
}

/// `⟦f⟧(doc)` by trying every assignment of spans to variables. A span is
/// only tried for `x` when the variable-ignored body of some `x{..}` in `f`
/// matches its content.
pub fn brute_force_spanner(f: &Formula, doc: &str) -> SpanRelation {
    let chars: Vec<char> = doc.chars().collect();
    let n = chars.len();
    let schema: Vec<String> = f.vars().into_iter().collect();
    let mut tuples = BTreeSet::new();
    let relation = |tuples| SpanRelation {
        schema: schema.clone(),
        tuples,
    };
    // Memo keys are node addresses, so every projected term must outlive
    // `plain`.
    let mut bodies = BTreeMap::new();
    capture_bodies(f, &mut bodies);
    let whole = f.boolean_projection();
    let projected: Vec<Vec<Formula>> = schema
        .iter()
        .map(|x| bodies[x].iter().map(|b| b.boolean_projection()).collect())
        .collect();
    let mut plain = Descent::new(&chars);
    if !plain.matches(&whole, 0, n) {
        return relation(tuples);
    }
    let mut candidates: Vec<Vec<(usize, usize)>> = Vec::new();
    for alternatives in &projected {
        let spans: Vec<(usize, usize)> = (0..=n)
            .flat_map(|i| (i..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| alternatives.iter().any(|b| plain.matches(b, i, j)))
            .collect();
        if spans.is_empty() {
            return relation(tuples);
        }
        candidates.push(spans);
    }
    let mut descent = Descent::new(&chars);
    let mut choice = vec![0usize; schema.len()];
    loop {
        descent.mu = schema
            .iter()
            .zip(&choice)
            .zip(&candidates)
            .map(|((x, &c), spans)| (x.as_str(), spans[c]))
            .collect();
        descent.bound.clear();
        if descent.matches(f, 0, n) {
            let tuple: SpanTuple = descent
                .mu
                .iter()
                .map(|(x, &(i, j))| (x.to_string(), Span::new(i + 1, j + 1)))
                .collect();
            tuples.insert(tuple);
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return relation(tuples);
            }
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Membership of `doc` in `L(B(f))` by recursive descent.
pub fn accepts(f: &Formula, doc: &str) -> bool {
    let chars: Vec<char> = doc.chars().collect();
    Descent::new(&chars).matches(&f.boolean_projection(), 0, chars.len())
}
