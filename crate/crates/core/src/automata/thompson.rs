//! Thompson construction with capture boundaries kept as explicit edges.

use crate::alphabet::Alphabet;
use crate::formula::Formula;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Label {
    Eps,
    Sym(u16),
    Open(u16),
    Close(u16),
}

/// Where a state sits relative to the top-level captures of its disjunct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Place {
    /// Top-level captures closed before this state, in construction order.
    pub closed: u16,
    /// The enclosing top-level capture, if any.
    pub inside: Option<u16>,
}

#[derive(Clone, Debug)]
pub(crate) struct EpsNfa {
    pub edges: Vec<Vec<(Label, usize)>>,
    pub place: Vec<Place>,
    pub start: usize,
    pub accept: usize,
    pub vars: Vec<String>,
}

struct Builder<'a> {
    alphabet: &'a Alphabet,
    vars: &'a [String],
    edges: Vec<Vec<(Label, usize)>>,
    place: Vec<Place>,
    closed: u16,
    inside: Option<u16>,
    captures: u16,
}

impl Builder<'_> {
    fn state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.place.push(Place {
            closed: self.closed,
            inside: self.inside,
        });
        self.edges.len() - 1
    }

    fn edge(&mut self, from: usize, label: Label, to: usize) {
        self.edges[from].push((label, to));
    }

    fn build(&mut self, f: &Formula) -> (usize, usize) {
        match f {
            Formula::Empty => (self.state(), self.state()),
            Formula::Epsilon => {
                let s = self.state();
                (s, s)
            }
            Formula::Symbol(c) => {
                let (s, t) = (self.state(), self.state());
                if let Some(i) = self.alphabet.index_of(*c) {
                    self.edge(s, Label::Sym(i as u16), t);
                }
                (s, t)
            }
            Formula::Or(l, r) => {
                let s = self.state();
                let (ls, lt) = self.build(l);
                let (rs, rt) = self.build(r);
                let t = self.state();
                self.edge(s, Label::Eps, ls);
                self.edge(s, Label::Eps, rs);
                self.edge(lt, Label::Eps, t);
                self.edge(rt, Label::Eps, t);
                (s, t)
            }
            Formula::Concat(l, r) => {
                let (ls, lt) = self.build(l);
                let (rs, rt) = self.build(r);
                self.edge(lt, Label::Eps, rs);
                (ls, rt)
            }
            Formula::Star(inner) => {
                let s = self.state();
                let (is, it) = self.build(inner);
                let t = self.state();
                self.edge(s, Label::Eps, is);
                self.edge(s, Label::Eps, t);
                self.edge(it, Label::Eps, is);
                self.edge(it, Label::Eps, t);
                (s, t)
            }
            Formula::Capture(x, inner) => {
                let var = self
                    .vars
                    .iter()
                    .position(|v| v == x)
                    .expect("known variable") as u16;
                let s = self.state();
                let top = self.inside.is_none();
                if top {
                    self.inside = Some(self.captures);
                    self.captures += 1;
                }
                let is = self.state();
                let (bs, bt) = self.build(inner);
                let it = self.state();
                if top {
                    self.inside = None;
                    self.closed += 1;
                }
                let t = self.state();
                self.edge(s, Label::Open(var), is);
                self.edge(is, Label::Eps, bs);
                self.edge(bt, Label::Eps, it);
                self.edge(it, Label::Close(var), t);
                (s, t)
            }
        }
    }
}

pub(crate) fn thompson(f: &Formula, alphabet: &Alphabet) -> EpsNfa {
    let vars: Vec<String> = f.vars().into_iter().collect();
    let mut b = Builder {
        alphabet,
        vars: &vars,
        edges: Vec::new(),
        place: Vec::new(),
        closed: 0,
        inside: None,
        captures: 0,
    };
    let (start, accept) = b.build(f);
    EpsNfa {
        edges: b.edges,
        place: b.place,
        start,
        accept,
        vars,
    }
}
