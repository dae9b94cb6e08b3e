//! Exact checks over aligned pairs `(D, Repl(g, A)(D))`.
//!
//! A joint word spells `D` and the updated document at once. Symbols kept
//! by the update appear as themselves; every marked span of `g` appears as
//! a block `⟨ deleted… inserted… ⟩` whose inserted part spells `A`. The
//! search walks joint words and simulates, in lockstep:
//!
//! * a well-formedness automaton for the block structure,
//! * two subset automata over `g` that reject the word unless its blocks
//!   are exactly the spans of `⟦g⟧(D)`,
//! * the extractor on `D` and on the updated document.
//!
//! Capture markers of the extractor are placed only at offsets kept by the
//! update, which is where the shift function sends untouched spans. A
//! marker for the updated document alone may also sit inside inserted
//! text, or right after text inserted at an empty span.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;

use super::marked::{close_bit, open_bit, LazyDfa, MarkNfa, Tok};
use super::pseudo::{DisjointUpdate, UnrestrictedUpdate};
use crate::alphabet::Alphabet;
use crate::formula::Formula;

/// Default bound on explored product states.
pub const DEFAULT_STATE_LIMIT: usize = 400_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentWitness {
    /// The original document.
    pub document: String,
    /// `Repl(g, A)(document)`.
    pub updated: String,
    /// Rendering of the joint word, e.g. `a{+X}a{-X}⟨c|cc⟩`; empty when the
    /// pair was found by direct evaluation.
    pub joint: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlignmentOutcome {
    /// No aligned pair has the searched property.
    None,
    Found(AlignmentWitness),
    /// The state bound was hit before the search finished.
    Inconclusive {
        explored: usize,
    },
}

impl AlignmentOutcome {
    pub fn is_none(&self) -> bool {
        matches!(self, AlignmentOutcome::None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum JTok {
    Keep(u16),
    Del(u16),
    Ins,
    Open,
    Close,
    Mark(u64),
    Mark2(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
struct Flat {
    in_block: bool,
    dels: bool,
    ins: u16,
    /// A marker may be placed here for both documents.
    canonical: bool,
    /// A nonempty block closed in the current gap.
    closed: bool,
    /// An empty block occurred in the current gap.
    empty: bool,
    mark2_here: bool,
    blocks: bool,
    used_mark2: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct State {
    flat: Flat,
    bad1: u32,
    bad2: u32,
    e1: u32,
    p1: u64,
    e2: u32,
    p2: u64,
}

struct Interner<T> {
    items: Vec<Vec<T>>,
    ids: HashMap<Vec<T>, u32>,
}

impl<T: Hash + Eq + Clone + Ord> Interner<T> {
    fn new() -> Self {
        Interner {
            items: Vec::new(),
            ids: HashMap::new(),
        }
    }

    fn intern(&mut self, mut v: Vec<T>) -> u32 {
        v.sort_unstable();
        v.dedup();
        if let Some(&id) = self.ids.get(&v) {
            return id;
        }
        let id = self.items.len() as u32;
        self.ids.insert(v.clone(), id);
        self.items.push(v);
        id
    }

    fn get(&self, id: u32) -> &[T] {
        &self.items[id as usize]
    }
}

const OPEN: u64 = 1;
const CLOSE: u64 = 2;
const BOTH: u64 = 3;

/// Events of one gap between document symbols.
#[derive(Clone, Copy)]
struct Gap {
    closed: bool,
    empty: bool,
    opened: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Some updated document of an affected document is in `L(B(E))`.
    Image,
    /// Some tuple is not preserved up to shifting.
    Shift,
}

struct Search<'a> {
    mode: Mode,
    replacement: Vec<u16>,
    sigma: u16,
    g: LazyDfa<'a>,
    bad1: Interner<(u8, u32)>,
    bad2: Interner<(u8, u32)>,
    e: LazyDfa<'a>,
    markers: Vec<u64>,
    mark2: bool,
}

impl<'a> Search<'a> {
    fn flush_bad(&mut self, b1: u32, b2: u32, gap: Gap, sym: Option<u16>) -> (u32, u32) {
        let mut next1 = Vec::new();
        for &(phase, d) in self.bad1.get(b1).to_vec().iter() {
            match phase {
                0 => {
                    next1.push((0, d));
                    if gap.empty {
                        next1.push((2, self.g.step(d, Tok::Mark(BOTH))));
                    }
                    if gap.opened {
                        next1.push((1, self.g.step(d, Tok::Mark(OPEN))));
                    }
                }
                1 if gap.closed => next1.push((2, self.g.step(d, Tok::Mark(CLOSE)))),
                _ => next1.push((phase, d)),
            }
        }
        if let Some(a) = sym {
            for item in next1.iter_mut() {
                item.1 = self.g.step(item.1, Tok::Sym(a));
            }
        }
        let mut next2 = Vec::new();
        for &(code, q) in self.bad2.get(b2).to_vec().iter() {
            match code {
                0 => {
                    next2.push((0, q));
                    for r in self.g.nfa_step(q, Tok::Mark(BOTH)) {
                        next2.push((if gap.empty { 3 } else { 4 }, r));
                    }
                    for r in self.g.nfa_step(q, Tok::Mark(OPEN)) {
                        next2.push((if gap.opened { 1 } else { 2 }, r));
                    }
                }
                1 | 2 => {
                    let sync = code == 1;
                    next2.push((if sync && !gap.closed { 1 } else { 2 }, q));
                    for r in self.g.nfa_step(q, Tok::Mark(CLOSE)) {
                        next2.push((if sync && gap.closed { 3 } else { 4 }, r));
                    }
                }
                _ => next2.push((code, q)),
            }
        }
        if let Some(a) = sym {
            next2 = next2
                .into_iter()
                .flat_map(|(code, q)| {
                    self.g
                        .nfa_step(q, Tok::Sym(a))
                        .into_iter()
                        .map(move |r| (code, r))
                })
                .collect();
        }
        (self.bad1.intern(next1), self.bad2.intern(next2))
    }

    fn e_read(&mut self, id: u32, pending: u64, sym: Option<u16>) -> u32 {
        let id = self.e.step(id, Tok::Mark(pending));
        match sym {
            Some(a) => self.e.step(id, Tok::Sym(a)),
            None => id,
        }
    }

    fn dead(&mut self, s: &State) -> bool {
        let e2 = self.e.step(s.e2, Tok::Mark(s.p2));
        match self.mode {
            Mode::Image => self.e.dead(e2),
            Mode::Shift => {
                let e1 = self.e.step(s.e1, Tok::Mark(s.p1));
                self.e.dead(e1) && self.e.dead(e2)
            }
        }
    }

    fn successors(&mut self, s: &State) -> Vec<(JTok, State)> {
        let f = s.flat;
        let mut out = Vec::new();
        let gap = Gap {
            closed: f.closed,
            empty: f.empty,
            opened: false,
        };
        if !f.in_block {
            for a in 0..self.sigma {
                let (bad1, bad2) = self.flush_bad(s.bad1, s.bad2, gap, Some(a));
                let flat = Flat {
                    canonical: true,
                    closed: false,
                    empty: false,
                    mark2_here: false,
                    ..f
                };
                out.push((
                    JTok::Keep(a),
                    State {
                        flat,
                        bad1,
                        bad2,
                        e1: self.e_read(s.e1, s.p1, Some(a)),
                        p1: 0,
                        e2: self.e_read(s.e2, s.p2, Some(a)),
                        p2: 0,
                    },
                ));
            }
            if !f.empty {
                let flat = Flat {
                    in_block: true,
                    dels: false,
                    ins: 0,
                    canonical: false,
                    ..f
                };
                out.push((JTok::Open, State { flat, ..*s }));
            }
            if self.mode == Mode::Shift && f.canonical {
                for &m in &self.markers.clone() {
                    if m & (s.p1 | s.p2) == 0 {
                        let flat = Flat {
                            canonical: false,
                            ..f
                        };
                        out.push((
                            JTok::Mark(m),
                            State {
                                flat,
                                p1: s.p1 | m,
                                p2: s.p2 | m,
                                ..*s
                            },
                        ));
                    }
                }
            }
            if self.mark2 && f.empty && !f.mark2_here {
                self.push_mark2(s, &mut out);
            }
        } else {
            let len = self.replacement.len() as u16;
            if f.ins == 0 {
                for a in 0..self.sigma {
                    let gap = Gap {
                        opened: !f.dels,
                        ..gap
                    };
                    let (bad1, bad2) = self.flush_bad(s.bad1, s.bad2, gap, Some(a));
                    let flat = Flat {
                        dels: true,
                        closed: false,
                        empty: false,
                        mark2_here: false,
                        ..f
                    };
                    out.push((
                        JTok::Del(a),
                        State {
                            flat,
                            bad1,
                            bad2,
                            e1: self.e_read(s.e1, s.p1, Some(a)),
                            p1: 0,
                            ..*s
                        },
                    ));
                }
            }
            if f.ins < len {
                let a = self.replacement[f.ins as usize];
                let flat = Flat {
                    ins: f.ins + 1,
                    mark2_here: false,
                    ..f
                };
                out.push((
                    JTok::Ins,
                    State {
                        flat,
                        e2: self.e_read(s.e2, s.p2, Some(a)),
                        p2: 0,
                        ..*s
                    },
                ));
                if self.mark2 && f.ins > 0 && !f.mark2_here {
                    self.push_mark2(s, &mut out);
                }
            } else {
                let flat = Flat {
                    in_block: false,
                    blocks: true,
                    canonical: f.dels,
                    closed: f.closed || f.dels,
                    empty: f.empty || !f.dels,
                    ..f
                };
                out.push((JTok::Close, State { flat, ..*s }));
            }
        }
        out
    }

    fn push_mark2(&mut self, s: &State, out: &mut Vec<(JTok, State)>) {
        for &m in &self.markers.clone() {
            if m & s.p2 == 0 {
                let flat = Flat {
                    mark2_here: true,
                    used_mark2: true,
                    ..s.flat
                };
                out.push((
                    JTok::Mark2(m),
                    State {
                        flat,
                        p2: s.p2 | m,
                        ..*s
                    },
                ));
            }
        }
    }

    fn accepting(&mut self, s: &State) -> bool {
        let f = s.flat;
        if f.in_block {
            return false;
        }
        let gap = Gap {
            closed: f.closed,
            empty: f.empty,
            opened: false,
        };
        let (b1, b2) = self.flush_bad(s.bad1, s.bad2, gap, None);
        let bad1 = self
            .bad1
            .get(b1)
            .iter()
            .any(|&(phase, d)| phase == 2 && !self.g.accepting(d));
        let bad2 = self
            .bad2
            .get(b2)
            .iter()
            .any(|&(code, q)| code == 4 && self.g.nfa_final(q));
        if bad1 || bad2 {
            return false;
        }
        let e2 = self.e_read(s.e2, s.p2, None);
        let acc2 = self.e.accepting(e2);
        match self.mode {
            Mode::Image => f.blocks && acc2,
            Mode::Shift => {
                let e1 = self.e_read(s.e1, s.p1, None);
                let acc1 = self.e.accepting(e1);
                if f.used_mark2 {
                    acc2
                } else {
                    acc1 != acc2
                }
            }
        }
    }
}

fn render(
    tokens: &[JTok],
    alphabet: &Alphabet,
    replacement: &[u16],
    vars: &[String],
) -> AlignmentWitness {
    let sym = |a: u16| alphabet.symbol(a as usize);
    let marks = |m: u64| {
        let mut parts = Vec::new();
        for (v, name) in vars.iter().enumerate() {
            if m & open_bit(v) != 0 {
                parts.push(format!("+{name}"));
            }
            if m & close_bit(v) != 0 {
                parts.push(format!("-{name}"));
            }
        }
        parts.join(" ")
    };
    let (mut doc, mut upd, mut joint) = (String::new(), String::new(), String::new());
    let mut ins = 0;
    let mut deleting = false;
    for &t in tokens {
        match t {
            JTok::Keep(a) => {
                doc.push(sym(a));
                upd.push(sym(a));
                joint.push(sym(a));
            }
            JTok::Del(a) => {
                doc.push(sym(a));
                joint.push(sym(a));
            }
            JTok::Ins => {
                if deleting {
                    joint.push('|');
                    deleting = false;
                }
                upd.push(sym(replacement[ins]));
                joint.push(sym(replacement[ins]));
                ins += 1;
            }
            JTok::Open => {
                joint.push('⟨');
                deleting = true;
                ins = 0;
            }
            JTok::Close => {
                if deleting {
                    joint.push('|');
                    deleting = false;
                }
                joint.push('⟩');
            }
            JTok::Mark(m) => {
                let _ = write!(joint, "{{{}}}", marks(m));
            }
            JTok::Mark2(m) => {
                let _ = write!(joint, "'{{{}}}", marks(m));
            }
        }
    }
    AlignmentWitness {
        document: doc,
        updated: upd,
        joint,
    }
}

fn run(
    mode: Mode,
    g: &Formula,
    replacement: &str,
    e: &Formula,
    alphabet: &Alphabet,
    limit: usize,
) -> AlignmentOutcome {
    let g_nfa = MarkNfa::new(g, alphabet);
    let e_nfa = MarkNfa::new(e, alphabet);
    let replacement: Vec<u16> = replacement
        .chars()
        .map(|c| alphabet.index_of(c).expect("replacement within alphabet") as u16)
        .collect();
    let bits = e_nfa.marker_bits();
    let markers: Vec<u64> = (1..=bits).filter(|m| m & !bits == 0).collect();
    let mut search = Search {
        mode,
        mark2: mode == Mode::Shift && !replacement.is_empty() && bits != 0,
        replacement,
        sigma: alphabet.len() as u16,
        g: LazyDfa::new(&g_nfa),
        bad1: Interner::new(),
        bad2: Interner::new(),
        e: LazyDfa::new(&e_nfa),
        markers,
    };
    let gd = search.g.start();
    let ed = search.e.start();
    let start = State {
        flat: Flat {
            canonical: true,
            ..Flat::default()
        },
        bad1: search.bad1.intern(vec![(0, gd)]),
        bad2: search.bad2.intern(vec![(0, g_nfa.start)]),
        e1: ed,
        p1: 0,
        e2: ed,
        p2: 0,
    };
    let mut ids: HashMap<State, usize> = HashMap::from([(start, 0)]);
    let mut parent: Vec<Option<(usize, JTok)>> = vec![None];
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let id = ids[&s];
        if search.accepting(&s) {
            let mut tokens = Vec::new();
            let mut cur = id;
            while let Some((p, t)) = parent[cur] {
                tokens.push(t);
                cur = p;
            }
            tokens.reverse();
            return AlignmentOutcome::Found(render(
                &tokens,
                alphabet,
                &search.replacement,
                &e_nfa.vars,
            ));
        }
        for (tok, next) in search.successors(&s) {
            if ids.contains_key(&next) || search.dead(&next) {
                continue;
            }
            if ids.len() >= limit {
                return AlignmentOutcome::Inconclusive {
                    explored: ids.len(),
                };
            }
            ids.insert(next, parent.len());
            parent.push(Some((id, tok)));
            queue.push_back(next);
        }
    }
    AlignmentOutcome::None
}

/// Searches for a document `D ∈ L(B(g))` whose update lies in `L(B(e))`.
pub fn image_intersection(
    cert: &UnrestrictedUpdate<'_>,
    e: &Formula,
    alphabet: &Alphabet,
    limit: usize,
) -> AlignmentOutcome {
    let u = cert.update();
    run(
        Mode::Image,
        u.formula(),
        u.replacement(),
        &e.boolean_projection(),
        alphabet,
        limit,
    )
}

/// Searches for a document on which the update does not act on
/// `⟦E⟧` as the shift function: either a tuple whose shifted image is not
/// extracted from the updated document, or an extracted tuple of the
/// updated document that is no shifted image.
pub fn shift_violation(
    cert: &DisjointUpdate<'_>,
    alphabet: &Alphabet,
    limit: usize,
) -> AlignmentOutcome {
    let u = cert.update();
    run(
        Mode::Shift,
        u.formula(),
        u.replacement(),
        &cert.extractor().to_formula(),
        alphabet,
        limit,
    )
}
