//! Automata over symbols and sets of capture markers. A marker set is
//! read between two symbols and stands for every capture boundary at that
//! offset; open of variable `v` is bit `2v`, close is bit `2v + 1`.

use std::collections::{HashMap, HashSet};

use super::thompson::{thompson, EpsNfa, Label};
use crate::alphabet::Alphabet;
use crate::formula::Formula;

pub(crate) fn open_bit(v: usize) -> u64 {
    1 << (2 * v)
}

pub(crate) fn close_bit(v: usize) -> u64 {
    1 << (2 * v + 1)
}

#[derive(Clone, Debug)]
pub(crate) struct MarkNfa {
    pub vars: Vec<String>,
    pub start: u32,
    sym: Vec<Vec<(u16, u32)>>,
    mark: Vec<Vec<(u64, u32)>>,
    finals: Vec<bool>,
}

impl MarkNfa {
    pub fn new(f: &Formula, alphabet: &Alphabet) -> MarkNfa {
        let nfa = thompson(f, alphabet);
        assert!(nfa.vars.len() <= 32, "at most 32 capture variables");
        let n = nfa.edges.len();
        let mut sym = vec![Vec::new(); n];
        let mut mark = vec![Vec::new(); n];
        let mut finals = vec![false; n];
        for q in 0..n {
            let plain = eps_closure(&nfa, q);
            finals[q] = plain.contains(&nfa.accept);
            let mut ts: Vec<(u16, u32)> = plain
                .iter()
                .flat_map(|&p| nfa.edges[p].iter())
                .filter_map(|&(l, r)| match l {
                    Label::Sym(a) => Some((a, r as u32)),
                    _ => None,
                })
                .collect();
            ts.sort_unstable();
            ts.dedup();
            sym[q] = ts;
            mark[q] = marker_paths(&nfa, q);
        }
        MarkNfa {
            vars: nfa.vars,
            start: nfa.start as u32,
            sym,
            mark,
            finals,
        }
    }

    pub fn marker_bits(&self) -> u64 {
        if self.vars.is_empty() {
            0
        } else {
            (1u64 << (2 * self.vars.len())) - 1
        }
    }
}

fn eps_closure(nfa: &EpsNfa, q: usize) -> Vec<usize> {
    let mut seen = HashSet::from([q]);
    let mut stack = vec![q];
    while let Some(p) = stack.pop() {
        for &(l, r) in &nfa.edges[p] {
            if l == Label::Eps && seen.insert(r) {
                stack.push(r);
            }
        }
    }
    seen.into_iter().collect()
}

/// `(S, r)` for every path of epsilon and marker edges from `q` that ends
/// with a marker edge into `r` and crosses each marker in `S` once.
fn marker_paths(nfa: &EpsNfa, q: usize) -> Vec<(u64, u32)> {
    let mut seen = HashSet::new();
    let mut stack = vec![(q, 0u64)];
    let mut out = HashSet::new();
    while let Some((p, set)) = stack.pop() {
        if !seen.insert((p, set)) {
            continue;
        }
        for &(l, r) in &nfa.edges[p] {
            let bit = match l {
                Label::Eps => {
                    stack.push((r, set));
                    continue;
                }
                Label::Open(v) => open_bit(v as usize),
                Label::Close(v) => close_bit(v as usize),
                Label::Sym(_) => continue,
            };
            if set & bit == 0 {
                out.insert((set | bit, r as u32));
                stack.push((r, set | bit));
            }
        }
    }
    let mut out: Vec<(u64, u32)> = out.into_iter().collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Tok {
    Sym(u16),
    Mark(u64),
}

/// Subset construction over a `MarkNfa`, built on demand.
pub(crate) struct LazyDfa<'a> {
    nfa: &'a MarkNfa,
    sets: Vec<Vec<u32>>,
    ids: HashMap<Vec<u32>, u32>,
    cache: HashMap<(u32, Tok), u32>,
    accepting: Vec<bool>,
}

impl<'a> LazyDfa<'a> {
    pub fn new(nfa: &'a MarkNfa) -> LazyDfa<'a> {
        LazyDfa {
            nfa,
            sets: Vec::new(),
            ids: HashMap::new(),
            cache: HashMap::new(),
            accepting: Vec::new(),
        }
    }

    fn intern(&mut self, mut set: Vec<u32>) -> u32 {
        set.sort_unstable();
        set.dedup();
        if let Some(&id) = self.ids.get(&set) {
            return id;
        }
        let id = self.sets.len() as u32;
        self.accepting
            .push(set.iter().any(|&q| self.nfa.finals[q as usize]));
        self.ids.insert(set.clone(), id);
        self.sets.push(set);
        id
    }

    pub fn start(&mut self) -> u32 {
        self.intern(vec![self.nfa.start])
    }

    pub fn step(&mut self, id: u32, tok: Tok) -> u32 {
        if tok == Tok::Mark(0) {
            return id;
        }
        if let Some(&to) = self.cache.get(&(id, tok)) {
            return to;
        }
        let set = &self.sets[id as usize];
        let next: Vec<u32> = match tok {
            Tok::Sym(a) => set
                .iter()
                .flat_map(|&q| self.nfa.sym[q as usize].iter())
                .filter(|(b, _)| *b == a)
                .map(|&(_, r)| r)
                .collect(),
            Tok::Mark(m) => set
                .iter()
                .flat_map(|&q| self.nfa.mark[q as usize].iter())
                .filter(|(s, _)| *s == m)
                .map(|&(_, r)| r)
                .collect(),
        };
        let to = self.intern(next);
        self.cache.insert((id, tok), to);
        to
    }

    pub fn accepting(&self, id: u32) -> bool {
        self.accepting[id as usize]
    }

    pub fn dead(&self, id: u32) -> bool {
        self.sets[id as usize].is_empty()
    }

    /// Single-state successors, for callers running their own subsets.
    pub fn nfa_step(&self, q: u32, tok: Tok) -> Vec<u32> {
        match tok {
            Tok::Mark(0) => vec![q],
            Tok::Sym(a) => self.nfa.sym[q as usize]
                .iter()
                .filter(|(b, _)| *b == a)
                .map(|&(_, r)| r)
                .collect(),
            Tok::Mark(m) => self.nfa.mark[q as usize]
                .iter()
                .filter(|(s, _)| *s == m)
                .map(|&(_, r)| r)
                .collect(),
        }
    }

    pub fn nfa_final(&self, q: u32) -> bool {
        self.nfa.finals[q as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Grammar};

    /// Runs a ref-word given as symbols and marker sets.
    fn run(nfa: &MarkNfa, toks: &[Tok]) -> bool {
        let mut d = LazyDfa::new(nfa);
        let mut s = d.start();
        for &t in toks {
            s = d.step(s, t);
        }
        d.accepting(s)
    }

    #[test]
    fn ref_words_of_a_capture() {
        let a = Alphabet::new("ac".chars()).unwrap();
        let f = parse_formula("a x{c} a", &a, Grammar::Update).unwrap();
        let nfa = MarkNfa::new(&f, &a);
        let (sa, sc) = (Tok::Sym(0), Tok::Sym(1));
        let (o, c) = (Tok::Mark(open_bit(0)), Tok::Mark(close_bit(0)));
        assert!(run(&nfa, &[sa, o, sc, c, sa]));
        assert!(!run(&nfa, &[sa, sc, sa]));
        assert!(!run(&nfa, &[o, sa, sc, c, sa]));
        let e = parse_formula("a x{\\e} c", &a, Grammar::Update).unwrap();
        let nfa = MarkNfa::new(&e, &a);
        let both = Tok::Mark(open_bit(0) | close_bit(0));
        assert!(run(&nfa, &[sa, both, sc]));
    }
}
