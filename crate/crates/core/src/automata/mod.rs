//! Epsilon-free automata whose states remember the capture region they
//! came from, the Boolean operations on them, and the overlap products.

pub mod alignment;
mod marked;
pub mod product;
pub mod pseudo;
mod thompson;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::formula::{Formula, NormalizedFormula};

pub use product::{build_cross_overlap, build_self_overlap, ProductNfa, ProductState};
pub use pseudo::{build_pseudo_recognizer, DisjointUpdate, PseudoError, UnrestrictedUpdate};

use thompson::{thompson, EpsNfa, Label};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(Alphabet, Alphabet),
}

/// Region of a state: before/after the `k`-th top-level capture of a
/// disjunct, or inside capture `m`. Boolean machines use `Plain`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Plain,
    Outside { disjunct: u16, index: u16 },
    Inside { disjunct: u16, capture: u16 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Plain,
    Extractor,
    Update,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub symbol: u16,
    pub target: usize,
    /// A whole capture was opened and closed on the epsilon path right
    /// before this symbol: an empty marked span sits at this offset.
    pub cross: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub document: String,
    /// States visited by the accepting run, starting at an initial state.
    pub run: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    Witness(Witness),
}

impl Emptiness {
    pub fn is_empty(&self) -> bool {
        matches!(self, Emptiness::Empty)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Emptiness::Empty => None,
            Emptiness::Witness(w) => Some(w),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineKind {
    Union,
    Intersect,
    Concat,
    Complement,
}

#[derive(Clone, Debug)]
pub struct RegionNfa {
    alphabet: Alphabet,
    role: Role,
    regions: Vec<Region>,
    transitions: Vec<Vec<Transition>>,
    initial: Vec<usize>,
    finals: Vec<bool>,
}

impl RegionNfa {
    fn with_states(alphabet: &Alphabet, role: Role) -> RegionNfa {
        RegionNfa {
            alphabet: alphabet.clone(),
            role,
            regions: Vec::new(),
            transitions: Vec::new(),
            initial: Vec::new(),
            finals: Vec::new(),
        }
    }

    pub(crate) fn add_state(&mut self, region: Region, is_final: bool) -> usize {
        self.regions.push(region);
        self.transitions.push(Vec::new());
        self.finals.push(is_final);
        self.regions.len() - 1
    }

    pub(crate) fn add_transition(&mut self, from: usize, t: Transition) {
        self.transitions[from].push(t);
    }

    pub fn with_role(mut self, role: Role) -> RegionNfa {
        self.role = role;
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state_count(&self) -> usize {
        self.regions.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn region(&self, q: usize) -> Region {
        self.regions[q]
    }

    pub fn transitions(&self, q: usize) -> &[Transition] {
        &self.transitions[q]
    }

    /// True if the symbol read by `t` lies inside a marked span.
    pub fn inside(&self, t: &Transition) -> bool {
        matches!(self.regions[t.target], Region::Inside { .. })
    }

    pub fn accepts(&self, word: &str) -> bool {
        let mut current: BTreeSet<usize> = self.initial.iter().copied().collect();
        for c in word.chars() {
            let Some(a) = self.alphabet.index_of(c) else {
                return false;
            };
            current = current
                .iter()
                .flat_map(|&q| self.transitions[q].iter())
                .filter(|t| t.symbol as usize == a)
                .map(|t| t.target)
                .collect();
        }
        current.iter().any(|&q| self.finals[q])
    }

    /// Shortest accepted word, by breadth-first search.
    pub fn emptiness(&self) -> Emptiness {
        let mut parent: HashMap<usize, Option<(usize, u16)>> = HashMap::new();
        let mut queue = VecDeque::new();
        for &q in &self.initial {
            if parent.insert(q, None).is_none() {
                queue.push_back(q);
            }
        }
        while let Some(q) = queue.pop_front() {
            if self.finals[q] {
                let mut run = vec![q];
                let mut symbols = Vec::new();
                let mut cur = q;
                while let Some(Some((p, a))) = parent.get(&cur) {
                    symbols.push(self.alphabet.symbol(*a as usize));
                    run.push(*p);
                    cur = *p;
                }
                run.reverse();
                symbols.reverse();
                return Emptiness::Witness(Witness {
                    document: symbols.into_iter().collect(),
                    run,
                });
            }
            for t in &self.transitions[q] {
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(t.target) {
                    e.insert(Some((q, t.symbol)));
                    queue.push_back(t.target);
                }
            }
        }
        Emptiness::Empty
    }

    pub fn is_empty(&self) -> bool {
        self.emptiness().is_empty()
    }

    /// Drops states that are unreachable or cannot reach a final state.
    pub fn trim(&self) -> RegionNfa {
        let n = self.state_count();
        let mut reach = vec![false; n];
        let mut stack: Vec<usize> = self.initial.clone();
        for &q in &stack {
            reach[q] = true;
        }
        while let Some(q) = stack.pop() {
            for t in &self.transitions[q] {
                if !reach[t.target] {
                    reach[t.target] = true;
                    stack.push(t.target);
                }
            }
        }
        let mut reverse = vec![Vec::new(); n];
        for (q, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                reverse[t.target].push(q);
            }
        }
        let mut live = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&q| self.finals[q]).collect();
        for &q in &stack {
            live[q] = true;
        }
        while let Some(q) = stack.pop() {
            for &p in &reverse[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|q| reach[q] && live[q]).collect();
        self.restrict(&keep)
    }

    fn restrict(&self, keep: &[bool]) -> RegionNfa {
        let mut map = vec![usize::MAX; keep.len()];
        let mut out = RegionNfa::with_states(&self.alphabet, self.role);
        for q in 0..keep.len() {
            if keep[q] {
                map[q] = out.add_state(self.regions[q], self.finals[q]);
            }
        }
        for q in 0..keep.len() {
            if !keep[q] {
                continue;
            }
            for t in &self.transitions[q] {
                if keep[t.target] {
                    out.add_transition(
                        map[q],
                        Transition {
                            target: map[t.target],
                            ..*t
                        },
                    );
                }
            }
        }
        out.initial = self
            .initial
            .iter()
            .filter(|&&q| keep[q])
            .map(|&q| map[q])
            .collect();
        out
    }

    fn plain(&self) -> RegionNfa {
        let mut out = self.clone();
        out.role = Role::Plain;
        out.regions.iter_mut().for_each(|r| *r = Region::Plain);
        for ts in &mut out.transitions {
            for t in ts.iter_mut() {
                t.cross = false;
            }
            ts.sort();
            ts.dedup();
        }
        out
    }

    /// Subset construction; the result is complete over the alphabet.
    pub fn determinize(&self) -> RegionNfa {
        let k = self.alphabet.len();
        let mut out = RegionNfa::with_states(&self.alphabet, Role::Plain);
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut start: Vec<usize> = self.initial.clone();
        start.sort_unstable();
        start.dedup();
        let fin = |s: &[usize]| s.iter().any(|&q| self.finals[q]);
        let id = out.add_state(Region::Plain, fin(&start));
        ids.insert(start.clone(), id);
        out.initial = vec![id];
        queue.push_back(start);
        while let Some(set) = queue.pop_front() {
            let from = ids[&set];
            for a in 0..k as u16 {
                let mut next: Vec<usize> = set
                    .iter()
                    .flat_map(|&q| self.transitions[q].iter())
                    .filter(|t| t.symbol == a)
                    .map(|t| t.target)
                    .collect();
                next.sort_unstable();
                next.dedup();
                let to = match ids.get(&next) {
                    Some(&to) => to,
                    None => {
                        let to = out.add_state(Region::Plain, fin(&next));
                        ids.insert(next.clone(), to);
                        queue.push_back(next);
                        to
                    }
                };
                out.add_transition(
                    from,
                    Transition {
                        symbol: a,
                        target: to,
                        cross: false,
                    },
                );
            }
        }
        out
    }

    pub fn complement(&self) -> RegionNfa {
        let mut d = self.determinize();
        d.finals.iter_mut().for_each(|f| *f = !*f);
        d
    }

    pub fn union(&self, other: &RegionNfa) -> Result<RegionNfa, AutomatonError> {
        self.same_alphabet(other)?;
        let mut out = self.plain();
        let offset = out.state_count();
        let o = other.plain();
        out.regions.extend(o.regions);
        out.finals.extend(o.finals);
        out.transitions.extend(o.transitions.into_iter().map(|ts| {
            ts.into_iter()
                .map(|t| Transition {
                    target: t.target + offset,
                    ..t
                })
                .collect()
        }));
        out.initial.extend(o.initial.iter().map(|q| q + offset));
        Ok(out)
    }

    pub fn intersect(&self, other: &RegionNfa) -> Result<RegionNfa, AutomatonError> {
        self.same_alphabet(other)?;
        let mut out = RegionNfa::with_states(&self.alphabet, Role::Plain);
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        for &p in &self.initial {
            for &q in &other.initial {
                if let std::collections::hash_map::Entry::Vacant(e) = ids.entry((p, q)) {
                    let id = out.add_state(Region::Plain, self.finals[p] && other.finals[q]);
                    e.insert(id);
                    out.initial.push(id);
                    queue.push_back((p, q));
                }
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let from = ids[&(p, q)];
            for t1 in &self.transitions[p] {
                for t2 in other.transitions[q]
                    .iter()
                    .filter(|t| t.symbol == t1.symbol)
                {
                    let key = (t1.target, t2.target);
                    let to = match ids.get(&key) {
                        Some(&to) => to,
                        None => {
                            let to = out.add_state(
                                Region::Plain,
                                self.finals[key.0] && other.finals[key.1],
                            );
                            ids.insert(key, to);
                            queue.push_back(key);
                            to
                        }
                    };
                    out.add_transition(
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
        Ok(out)
    }

    pub fn concat(&self, other: &RegionNfa) -> Result<RegionNfa, AutomatonError> {
        self.same_alphabet(other)?;
        let left = self.plain();
        let right = other.plain();
        let offset = left.state_count();
        let right_nullable = right.initial.iter().any(|&q| right.finals[q]);
        let left_nullable = left.initial.iter().any(|&q| left.finals[q]);
        let mut out = RegionNfa::with_states(&self.alphabet, Role::Plain);
        for q in 0..left.state_count() {
            out.add_state(Region::Plain, left.finals[q] && right_nullable);
        }
        for q in 0..right.state_count() {
            out.add_state(Region::Plain, right.finals[q]);
        }
        let shifted = |t: &Transition| Transition {
            target: t.target + offset,
            ..*t
        };
        for q in 0..left.state_count() {
            for t in &left.transitions[q] {
                out.add_transition(q, *t);
            }
            if left.finals[q] {
                for &i in &right.initial {
                    for t in &right.transitions[i] {
                        out.add_transition(q, shifted(t));
                    }
                }
            }
        }
        for q in 0..right.state_count() {
            for t in &right.transitions[q] {
                out.add_transition(q + offset, shifted(t));
            }
        }
        out.initial = left.initial.clone();
        if left_nullable {
            out.initial.extend(right.initial.iter().map(|q| q + offset));
        }
        Ok(out)
    }

    fn same_alphabet(&self, other: &RegionNfa) -> Result<(), AutomatonError> {
        if self.alphabet == other.alphabet {
            Ok(())
        } else {
            Err(AutomatonError::AlphabetMismatch(
                self.alphabet.clone(),
                other.alphabet.clone(),
            ))
        }
    }

    fn region_name(&self, r: Region) -> String {
        match (self.role, r) {
            (_, Region::Plain) => "-".to_string(),
            (Role::Update, Region::Outside { disjunct, index }) => {
                format!("{}{}", if index == 0 { 'L' } else { 'R' }, disjunct + 1)
            }
            (Role::Update, Region::Inside { disjunct, .. }) => format!("C{}", disjunct + 1),
            (_, Region::Outside { disjunct, index }) => format!("R{index}.{}", disjunct + 1),
            (_, Region::Inside { disjunct, capture }) => {
                format!("g{}.{}", capture + 1, disjunct + 1)
            }
        }
    }

    /// Text dump: one `src -symbol-> dst [region] [cross]` line per
    /// transition, followed by the initial and final state lists.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (q, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                let sym = self.alphabet.symbol(t.symbol as usize);
                let sym = if sym == ' ' {
                    "\\s".to_string()
                } else {
                    sym.to_string()
                };
                let _ = write!(
                    out,
                    "{q} -{sym}-> {} [{}]",
                    t.target,
                    self.region_name(self.regions[t.target])
                );
                if t.cross {
                    out.push_str(" [cross]");
                }
                out.push('\n');
            }
        }
        let list = |v: Vec<usize>| {
            v.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "initial: {}", list(self.initial.clone()));
        let finals = (0..self.state_count())
            .filter(|&q| self.finals[q])
            .collect();
        let _ = writeln!(out, "final: {}", list(finals));
        out
    }
}

impl fmt::Display for RegionNfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// `combine(kind, m1, m2)`. Complement ignores `m2`.
pub fn combine(
    kind: CombineKind,
    m1: &RegionNfa,
    m2: Option<&RegionNfa>,
) -> Result<RegionNfa, AutomatonError> {
    match (kind, m2) {
        (CombineKind::Complement, _) => Ok(m1.complement()),
        (CombineKind::Union, Some(m2)) => m1.union(m2),
        (CombineKind::Intersect, Some(m2)) => m1.intersect(m2),
        (CombineKind::Concat, Some(m2)) => m1.concat(m2),
        (_, None) => panic!("{kind:?} takes two operands"),
    }
}

/// Epsilon closure of `q` over epsilon and capture edges. Yields each
/// reachable state with whether some capture was both opened and closed
/// on the way, plus whether the accepting state is reachable.
fn closure(nfa: &EpsNfa, q: usize) -> (Vec<(usize, bool)>, bool) {
    let mut seen: HashSet<(usize, u64, bool)> = HashSet::new();
    let mut stack = vec![(q, 0u64, false)];
    let mut out: BTreeSet<(usize, bool)> = BTreeSet::new();
    let mut accepts = false;
    while let Some((p, opened, crossed)) = stack.pop() {
        if !seen.insert((p, opened, crossed)) {
            continue;
        }
        out.insert((p, crossed));
        accepts |= p == nfa.accept;
        for &(label, r) in &nfa.edges[p] {
            let next = match label {
                Label::Eps => (r, opened, crossed),
                Label::Open(v) => (r, opened | 1 << v, crossed),
                Label::Close(v) => (r, opened, crossed || opened & (1 << v) != 0),
                Label::Sym(_) => continue,
            };
            stack.push(next);
        }
    }
    (out.into_iter().collect(), accepts)
}

fn eliminate(nfa: &EpsNfa, out: &mut RegionNfa, disjunct: u16) {
    assert!(nfa.vars.len() <= 64, "at most 64 capture variables");
    let plain = nfa.vars.is_empty();
    let region_of = |q: usize| {
        let p = nfa.place[q];
        match (plain, p.inside) {
            (true, _) => Region::Plain,
            (false, Some(capture)) => Region::Inside { disjunct, capture },
            (false, None) => Region::Outside {
                disjunct,
                index: p.closed,
            },
        }
    };
    let targets: BTreeSet<usize> = nfa
        .edges
        .iter()
        .flatten()
        .filter(|(l, _)| matches!(l, Label::Sym(_)))
        .map(|&(_, r)| r)
        .collect();
    let mut map = HashMap::new();
    let mut order = vec![nfa.start];
    order.extend(targets.iter().copied().filter(|&r| r != nfa.start));
    for &q in &order {
        let (_, accepts) = closure(nfa, q);
        map.insert(q, out.add_state(region_of(q), accepts));
    }
    for &q in &order {
        let (reach, _) = closure(nfa, q);
        let mut ts = BTreeSet::new();
        for (p, cross) in reach {
            for &(label, r) in &nfa.edges[p] {
                if let Label::Sym(a) = label {
                    ts.insert(Transition {
                        symbol: a,
                        target: map[&r],
                        cross,
                    });
                }
            }
        }
        for t in ts {
            out.add_transition(map[&q], t);
        }
    }
    out.initial.push(map[&nfa.start]);
}

/// Epsilon-free automaton for `L(B(f))` with region labels.
pub fn compile(f: &Formula, alphabet: &Alphabet) -> RegionNfa {
    let role = if f.has_vars() {
        Role::Extractor
    } else {
        Role::Plain
    };
    let mut out = RegionNfa::with_states(alphabet, role);
    eliminate(&thompson(f, alphabet), &mut out, 0);
    out.trim_keep_initial()
}

/// Union of the per-disjunct automata of a normalized formula, each
/// disjunct labeled with its own regions.
pub fn compile_normalized(n: &NormalizedFormula, alphabet: &Alphabet, role: Role) -> RegionNfa {
    let mut out = RegionNfa::with_states(alphabet, role);
    for (k, d) in n.disjuncts.iter().enumerate() {
        eliminate(&thompson(d, alphabet), &mut out, k as u16);
    }
    out.trim_keep_initial()
}

impl RegionNfa {
    /// `trim`, but an automaton for the empty language keeps one initial
    /// state so that it still has a well-defined start.
    fn trim_keep_initial(&self) -> RegionNfa {
        let t = self.trim();
        if t.state_count() > 0 {
            return t;
        }
        let mut empty = RegionNfa::with_states(&self.alphabet, self.role);
        let q = empty.add_state(Region::Plain, false);
        empty.initial.push(q);
        empty
    }
}
