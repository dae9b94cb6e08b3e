//! Synchronized products that detect overlapping marked spans.

use std::collections::{HashMap, VecDeque};

use super::{compile_normalized, AutomatonError, Region, RegionNfa, Role, Transition};
use crate::alphabet::Alphabet;
use crate::formula::{NormalizedFormula, UpdateExpression};

/// A state of a two-run product with its monotone flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub left: usize,
    pub right: usize,
    /// The two marked spans differ (`M_Ξ`) or overlap (`M_⋍`).
    pub v: bool,
    /// The two marked spans overlap (`M_Ξ` only).
    pub w: bool,
}

#[derive(Clone, Debug)]
pub struct ProductNfa {
    pub nfa: RegionNfa,
    pub states: Vec<ProductState>,
}

impl ProductNfa {
    pub fn is_empty(&self) -> bool {
        self.nfa.is_empty()
    }
}

fn product<F, A>(left: &RegionNfa, right: &RegionNfa, step: F, accept: A) -> ProductNfa
where
    F: Fn(&ProductState, &Transition, bool, &Transition, bool) -> (bool, bool),
    A: Fn(&ProductState) -> bool,
{
    let mut nfa = RegionNfa::with_states(left.alphabet(), Role::Plain);
    let mut states = Vec::new();
    let mut ids: HashMap<ProductState, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: ProductState,
                      nfa: &mut RegionNfa,
                      states: &mut Vec<ProductState>,
                      queue: &mut VecDeque<ProductState>| {
        *ids.entry(s).or_insert_with(|| {
            let fin = left.is_final(s.left) && right.is_final(s.right) && accept(&s);
            states.push(s);
            queue.push_back(s);
            nfa.add_state(Region::Plain, fin)
        })
    };
    for &p in left.initial_states() {
        for &q in right.initial_states() {
            let s = ProductState {
                left: p,
                right: q,
                v: false,
                w: false,
            };
            let id = intern(s, &mut nfa, &mut states, &mut queue);
            if !nfa.initial.contains(&id) {
                nfa.initial.push(id);
            }
        }
    }
    while let Some(s) = queue.pop_front() {
        let from = intern(s, &mut nfa, &mut states, &mut queue);
        for t1 in left.transitions(s.left) {
            let in1 = left.inside(t1);
            for t2 in right.transitions(s.right) {
                if t1.symbol != t2.symbol {
                    continue;
                }
                let (v, w) = step(&s, t1, in1, t2, right.inside(t2));
                let next = ProductState {
                    left: t1.target,
                    right: t2.target,
                    v,
                    w,
                };
                let to = intern(next, &mut nfa, &mut states, &mut queue);
                nfa.add_transition(
                    from,
                    Transition {
                        symbol: t1.symbol,
                        target: to,
                        cross: false,
                    },
                );
            }
        }
    }
    ProductNfa { nfa, states }
}

/// `M_Ξ`: documents on which `⟦g⟧` marks two different, overlapping spans.
pub fn build_self_overlap(u: &UpdateExpression, alphabet: &Alphabet) -> ProductNfa {
    let n = NormalizedFormula {
        disjuncts: u.disjuncts().iter().map(|d| d.to_formula()).collect(),
    };
    let m = compile_normalized(&n, alphabet, Role::Update);
    product(
        &m,
        &m,
        |s, t1, in1, t2, in2| {
            let v = s.v || in1 != in2;
            let w = s.w || (in1 && (in2 || t2.cross)) || (in2 && t1.cross);
            (v, w)
        },
        |s| s.v && s.w,
    )
}

/// `M_⋍`: documents on which some span marked by `u` overlaps some span
/// extracted by `e`. With `u = ∇(g, A)` this is the proxy machine.
pub fn build_cross_overlap(
    u: &NormalizedFormula,
    e: &NormalizedFormula,
    alphabet: &Alphabet,
) -> Result<ProductNfa, AutomatonError> {
    let mu = compile_normalized(u, alphabet, Role::Update);
    let me = compile_normalized(e, alphabet, Role::Extractor);
    mu.same_alphabet(&me)?;
    Ok(product(
        &mu,
        &me,
        |s, tu, inu, te, ine| {
            let v = s.v || (inu && (ine || te.cross)) || (tu.cross && ine);
            (v, false)
        },
        |s| s.v,
    ))
}
