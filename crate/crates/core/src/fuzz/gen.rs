//! Seeded random formulas in the shapes extractors and updates usually
//! take: variable-free context around one or two captures, mostly padded
//! with `Σ*`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::alphabet::Alphabet;
use crate::formula::Formula;

pub struct Generator<'a, R: Rng> {
    pub rng: R,
    pub alphabet: &'a Alphabet,
    pub max_depth: usize,
}

impl<R: Rng> Generator<'_, R> {
    fn symbol(&mut self) -> Formula {
        Formula::Symbol(
            *self
                .alphabet
                .symbols()
                .choose(&mut self.rng)
                .expect("nonempty"),
        )
    }

    fn any_star(&self) -> Formula {
        Formula::star(Formula::any_symbol(self.alphabet))
    }

    /// Variable-free formula, at most `depth` operators deep.
    pub fn plain(&mut self, depth: usize) -> Formula {
        let roll = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..10)
        };
        match roll {
            0..=3 => self.symbol(),
            4 => {
                if self.rng.gen_bool(0.5) {
                    Formula::Epsilon
                } else {
                    Formula::any_symbol(self.alphabet)
                }
            }
            5 | 6 => Formula::concat(self.plain(depth - 1), self.plain(depth - 1)),
            7 | 8 => Formula::or(self.plain(depth - 1), self.plain(depth - 1)),
            _ => Formula::star(self.plain(depth - 1)),
        }
    }

    fn body(&mut self) -> Formula {
        let d = self.rng.gen_range(0..=self.max_depth);
        let f = self.plain(d);
        if self.rng.gen_bool(0.15) {
            Formula::concat(f, self.plain(1))
        } else {
            f
        }
    }

    fn context(&mut self) -> Formula {
        match self.rng.gen_range(0..10) {
            0..=5 => self.any_star(),
            6 | 7 => Formula::Epsilon,
            _ => {
                let d = self.rng.gen_range(0..=self.max_depth);
                self.plain(d)
            }
        }
    }

    fn segment(&mut self, vars: &[&str]) -> Formula {
        let mut items = vec![self.context()];
        for (k, x) in vars.iter().enumerate() {
            if k > 0 && self.rng.gen_bool(0.5) {
                items.push(self.plain(1));
            }
            let body = self.body();
            items.push(Formula::capture(*x, body));
        }
        items.push(self.context());
        Formula::concat_all(items.into_iter().filter(|f| *f != Formula::Epsilon))
    }

    /// An extraction formula; occasionally not functional.
    pub fn extractor(&mut self) -> Formula {
        let vars: &[&str] = if self.rng.gen_bool(0.7) {
            &["X"]
        } else {
            &["X", "Y"]
        };
        match self.rng.gen_range(0..20) {
            0..=13 => self.segment(vars),
            14..=16 => Formula::or(self.segment(vars), self.segment(vars)),
            17 | 18 => {
                let inner = Formula::concat_all([
                    self.plain(1),
                    Formula::capture("Y", self.body()),
                    self.plain(1),
                ]);
                Formula::concat_all([self.context(), Formula::capture("X", inner), self.context()])
            }
            _ => Formula::or(self.segment(vars), self.plain(1)),
        }
    }

    pub fn update(&mut self) -> Formula {
        if self.rng.gen_bool(0.2) {
            Formula::or(self.segment(&["x"]), self.segment(&["x"]))
        } else {
            self.segment(&["x"])
        }
    }

    pub fn replacement(&mut self) -> String {
        let len = self.rng.gen_range(0..=2);
        (0..len)
            .map(|_| {
                *self
                    .alphabet
                    .symbols()
                    .choose(&mut self.rng)
                    .expect("nonempty")
            })
            .collect()
    }

    /// A functional formula over exactly `vars`, with disjunctions of
    /// captures at any level, `depth` operators deep at most.
    pub fn functional(&mut self, vars: &[&str], depth: usize) -> Formula {
        if vars.is_empty() {
            return self.plain(depth.min(2));
        }
        if depth == 0 {
            let items: Vec<Formula> = vars
                .iter()
                .map(|x| Formula::capture(*x, self.plain(1)))
                .collect();
            return Formula::concat_all(items);
        }
        match self.rng.gen_range(0..3) {
            0 => {
                let k = self.rng.gen_range(0..=vars.len());
                Formula::concat(
                    self.functional(&vars[..k], depth - 1),
                    self.functional(&vars[k..], depth - 1),
                )
            }
            1 => Formula::or(
                self.functional(vars, depth - 1),
                self.functional(vars, depth - 1),
            ),
            _ => {
                let k = self.rng.gen_range(0..vars.len());
                let rest: Vec<&str> = vars
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, x)| *x)
                    .collect();
                Formula::capture(vars[k], self.functional(&rest, depth - 1))
            }
        }
    }
}
