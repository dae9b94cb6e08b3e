use std::collections::BTreeSet;
use std::fmt;

use super::Formula;

/// A path through the formula's variable-bearing disjunctions that binds
/// `variable` other than exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub path: Formula,
    pub variable: String,
    pub times: usize,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let times = match self.times {
            0 => "zero times".to_string(),
            1 => "once".to_string(),
            n => format!("{n} times"),
        };
        write!(f, "path `{}` binds {} {times}", self.path, self.variable)
    }
}

struct Path {
    vars: BTreeSet<String>,
    formula: Formula,
}

/// Enumerates the distinct variable sets bound along disjunct paths.
/// Variable-free subtrees are a single path and are not expanded.
fn paths(f: &Formula) -> Result<Vec<Path>, Counterexample> {
    if !f.has_vars() {
        return Ok(vec![Path {
            vars: BTreeSet::new(),
            formula: f.clone(),
        }]);
    }
    match f {
        Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => unreachable!(),
        Formula::Or(l, r) => {
            let mut out = paths(l)?;
            for p in paths(r)? {
                if !out.iter().any(|q| q.vars == p.vars) {
                    out.push(p);
                }
            }
            Ok(out)
        }
        Formula::Concat(l, r) => {
            let (left, right) = (paths(l)?, paths(r)?);
            let mut out: Vec<Path> = Vec::new();
            for pl in &left {
                for pr in &right {
                    let formula = Formula::concat(pl.formula.clone(), pr.formula.clone());
                    if let Some(x) = pl.vars.intersection(&pr.vars).next() {
                        return Err(Counterexample {
                            path: formula,
                            variable: x.clone(),
                            times: 2,
                        });
                    }
                    let vars: BTreeSet<String> = pl.vars.union(&pr.vars).cloned().collect();
                    if !out.iter().any(|q| q.vars == vars) {
                        out.push(Path { vars, formula });
                    }
                }
            }
            Ok(out)
        }
        Formula::Star(inner) => {
            let x = inner.vars().into_iter().next().unwrap();
            Err(Counterexample {
                path: f.clone(),
                variable: x,
                times: 0,
            })
        }
        Formula::Capture(x, inner) => {
            let mut out = Vec::new();
            for mut p in paths(inner)? {
                let formula = Formula::capture(x.clone(), p.formula);
                if p.vars.contains(x) {
                    return Err(Counterexample {
                        path: formula,
                        variable: x.clone(),
                        times: 2,
                    });
                }
                p.vars.insert(x.clone());
                out.push(Path {
                    vars: p.vars,
                    formula,
                });
            }
            Ok(out)
        }
    }
}

/// Syntactic functionality check: every disjunct path must bind every
/// variable of `SVars(f)` exactly once.
pub fn check_functional(f: &Formula) -> Result<(), Counterexample> {
    let all = f.vars();
    for p in paths(f)? {
        if let Some(missing) = all.difference(&p.vars).next() {
            return Err(Counterexample {
                path: p.formula,
                variable: missing.clone(),
                times: 0,
            });
        }
    }
    Ok(())
}
