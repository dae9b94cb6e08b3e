//! Normal form `Δ(E)`: disjunctions binding variables are pulled up to
//! the top level, so that inside each disjunct every `Or` and `Star`
//! operand is variable-free.

use std::collections::HashSet;
use std::fmt;

use super::{check_functional, Formula, FormulaError, UpdateExpression};

/// `Δ(f)` as an ordered, duplicate-free list of disjuncts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedFormula {
    pub disjuncts: Vec<Formula>,
}

/// One disjunct of a normalized update formula: `γ′_L · x{γ′_C} · γ′_R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateDisjunct {
    pub var: String,
    pub left: Formula,
    pub center: Formula,
    pub right: Formula,
}

impl UpdateDisjunct {
    pub fn to_formula(&self) -> Formula {
        Formula::concat_all(
            [
                self.left.clone(),
                Formula::capture(self.var.clone(), self.center.clone()),
                self.right.clone(),
            ]
            .into_iter()
            .filter(|f| *f != Formula::Epsilon),
        )
    }
}

impl NormalizedFormula {
    /// The disjunction of all disjuncts (∅ when there are none).
    pub fn to_formula(&self) -> Formula {
        Formula::or_all(self.disjuncts.iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// Splits each single-capture disjunct into its left, captured and
    /// right parts. Fails if a disjunct does not have exactly one
    /// top-level capture.
    pub fn update_parts(&self) -> Result<Vec<UpdateDisjunct>, FormulaError> {
        self.disjuncts
            .iter()
            .map(|d| {
                let items = d.concat_items();
                let captures: Vec<usize> = items
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.has_vars())
                    .map(|(i, _)| i)
                    .collect();
                let [at] = captures[..] else {
                    return Err(FormulaError::UpdateShape(format!(
                        "disjunct `{d}` does not bind exactly one variable"
                    )));
                };
                let Formula::Capture(var, center) = items[at] else {
                    return Err(FormulaError::UpdateShape(format!(
                        "disjunct `{d}` is not in normal form"
                    )));
                };
                if center.has_vars() {
                    return Err(FormulaError::UpdateShape(format!(
                        "capture `{var}` in `{d}` encloses another capture"
                    )));
                }
                Ok(UpdateDisjunct {
                    var: var.clone(),
                    left: Formula::concat_all(items[..at].iter().map(|f| (*f).clone())),
                    center: (**center).clone(),
                    right: Formula::concat_all(items[at + 1..].iter().map(|f| (*f).clone())),
                })
            })
            .collect()
    }
}

impl fmt::Display for NormalizedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.disjuncts.is_empty() {
            return f.write_str("\\0");
        }
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∨ ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

fn disjuncts(f: &Formula) -> Vec<Formula> {
    if !f.has_vars() {
        return vec![f.clone()];
    }
    match f {
        Formula::Or(l, r) => {
            let mut out = disjuncts(l);
            out.extend(disjuncts(r));
            out
        }
        Formula::Concat(l, r) => {
            let right = disjuncts(r);
            disjuncts(l)
                .into_iter()
                .flat_map(|a| {
                    right
                        .iter()
                        .map(move |b| Formula::concat(a.clone(), b.clone()))
                })
                .collect()
        }
        Formula::Capture(x, inner) => disjuncts(inner)
            .into_iter()
            .map(|d| Formula::capture(x.clone(), d))
            .collect(),
        Formula::Star(_) | Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => {
            unreachable!("functional formulas have no variable under star")
        }
    }
}

/// Computes `Δ(f)`. Structurally equal disjuncts are merged.
pub fn normalize(f: &Formula) -> Result<NormalizedFormula, FormulaError> {
    check_functional(f).map_err(FormulaError::NotFunctional)?;
    let mut seen = HashSet::new();
    let disjuncts = disjuncts(f)
        .into_iter()
        .filter(|d| seen.insert(d.clone()))
        .collect();
    Ok(NormalizedFormula { disjuncts })
}

/// True if every `Or` and `Star` operand inside `d` is variable-free.
pub fn is_normal_disjunct(d: &Formula) -> bool {
    match d {
        Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => true,
        Formula::Or(l, r) => !l.has_vars() && !r.has_vars(),
        Formula::Star(inner) => !inner.has_vars(),
        Formula::Concat(l, r) => is_normal_disjunct(l) && is_normal_disjunct(r),
        Formula::Capture(_, inner) => is_normal_disjunct(inner),
    }
}

/// `d^v`, where `v = |SVars(f)|` and `d` is the largest number of capture
/// occurrences of any single variable. Each disjunct of `Δ(f)` picks one
/// occurrence per variable, so this bounds the disjunct count.
pub fn disjunct_bound(f: &Formula) -> usize {
    let vars = f.vars();
    let d = vars
        .iter()
        .map(|x| f.capture_occurrences(x))
        .max()
        .unwrap_or(1);
    d.saturating_pow(vars.len() as u32)
}

/// `∇(g, A)`: each disjunct of `Δ(g)` with its captured subexpression
/// replaced by the literal `A`.
pub fn proxy(u: &UpdateExpression) -> NormalizedFormula {
    let mut seen = HashSet::new();
    let disjuncts = u
        .disjuncts()
        .into_iter()
        .map(|d| {
            UpdateDisjunct {
                center: Formula::literal(u.replacement()),
                ..d
            }
            .to_formula()
        })
        .filter(|d| seen.insert(d.clone()))
        .collect();
    NormalizedFormula { disjuncts }
}

/// `v(E)`: the capture names and braces of a disjunct, in source order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariableProfile(pub String);

impl fmt::Display for VariableProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn variable_profile(d: &Formula) -> VariableProfile {
    fn go(f: &Formula, out: &mut String) {
        match f {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => {}
            Formula::Or(l, r) | Formula::Concat(l, r) => {
                go(l, out);
                go(r, out);
            }
            Formula::Star(inner) => go(inner, out),
            Formula::Capture(x, inner) => {
                out.push_str(x);
                out.push('{');
                go(inner, out);
                out.push('}');
            }
        }
    }
    let mut out = String::new();
    go(d, &mut out);
    VariableProfile(out)
}

/// One block `φ_E(E_i)` of the profile partition, with its union `Φ_E(E_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileGroup {
    pub profile: VariableProfile,
    /// Indices into the normalized formula's disjuncts.
    pub members: Vec<usize>,
    pub union: Formula,
}

/// Groups disjuncts by variable profile, in order of first appearance.
pub fn partition_profiles(n: &NormalizedFormula) -> Vec<ProfileGroup> {
    let mut groups: Vec<ProfileGroup> = Vec::new();
    for (i, d) in n.disjuncts.iter().enumerate() {
        let profile = variable_profile(d);
        match groups.iter_mut().find(|g| g.profile == profile) {
            Some(g) => {
                g.members.push(i);
                g.union = Formula::or(g.union.clone(), d.clone());
            }
            None => groups.push(ProfileGroup {
                profile,
                members: vec![i],
                union: d.clone(),
            }),
        }
    }
    groups
}
