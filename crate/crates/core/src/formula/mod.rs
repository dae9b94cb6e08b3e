//! Regular expressions with capture variables, and the syntactic
//! transformations the classifier is built on.

mod functional;
mod normalize;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};

pub use functional::{check_functional, Counterexample};
pub use normalize::{
    disjunct_bound, is_normal_disjunct, normalize, partition_profiles, proxy, variable_profile,
    NormalizedFormula, ProfileGroup, UpdateDisjunct, VariableProfile,
};
pub use parse::{parse_formula, parse_formula_file, Grammar};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable under star: capture `{0}` occurs inside a Kleene closure")]
    VariableUnderStar(String),
    #[error("update formula must use exactly one variable (found {0})")]
    UpdateVariableCount(usize),
    #[error("update formula shape: {0}")]
    UpdateShape(String),
    #[error("variable-free formula expected, found capture `{0}`")]
    UnexpectedCapture(String),
    #[error("symbol {symbol:?} at offset {offset} is not in the alphabet {alphabet}")]
    SymbolOutsideAlphabet {
        symbol: char,
        offset: usize,
        alphabet: Alphabet,
    },
    #[error("formula is not functional: {0}")]
    NotFunctional(Counterexample),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// Abstract syntax of a regular expression with capture variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// ∅
    Empty,
    /// ε
    Epsilon,
    Symbol(char),
    Or(Box<Formula>, Box<Formula>),
    Concat(Box<Formula>, Box<Formula>),
    Star(Box<Formula>),
    Capture(String, Box<Formula>),
}

impl Formula {
    pub fn or(left: Formula, right: Formula) -> Formula {
        Formula::Or(Box::new(left), Box::new(right))
    }

    pub fn concat(left: Formula, right: Formula) -> Formula {
        Formula::Concat(Box::new(left), Box::new(right))
    }

    pub fn star(inner: Formula) -> Formula {
        Formula::Star(Box::new(inner))
    }

    pub fn capture(var: impl Into<String>, inner: Formula) -> Formula {
        Formula::Capture(var.into(), Box::new(inner))
    }

    /// Concatenation of the symbols of `text`; ε for the empty string.
    pub fn literal(text: &str) -> Formula {
        Formula::concat_all(text.chars().map(Formula::Symbol))
    }

    /// Left-nested concatenation; ε for an empty sequence.
    pub fn concat_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::concat)
            .unwrap_or(Formula::Epsilon)
    }

    /// Left-nested disjunction; ∅ for an empty sequence.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Empty)
    }

    /// The disjunction of every alphabet symbol (the `.` sugar).
    pub fn any_symbol(alphabet: &Alphabet) -> Formula {
        Formula::or_all(alphabet.symbols().iter().map(|&c| Formula::Symbol(c)))
    }

    /// `SVars(f)`.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => {}
            Formula::Or(l, r) | Formula::Concat(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Star(inner) => inner.collect_vars(out),
            Formula::Capture(x, inner) => {
                out.insert(x.clone());
                inner.collect_vars(out);
            }
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => false,
            Formula::Or(l, r) | Formula::Concat(l, r) => l.has_vars() || r.has_vars(),
            Formula::Star(inner) => inner.has_vars(),
            Formula::Capture(..) => true,
        }
    }

    /// `B(f)`: the same expression with every capture replaced by its body.
    pub fn boolean_projection(&self) -> Formula {
        match self {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => self.clone(),
            Formula::Or(l, r) => Formula::or(l.boolean_projection(), r.boolean_projection()),
            Formula::Concat(l, r) => {
                Formula::concat(l.boolean_projection(), r.boolean_projection())
            }
            Formula::Star(inner) => Formula::star(inner.boolean_projection()),
            Formula::Capture(_, inner) => inner.boolean_projection(),
        }
    }

    /// Number of `Capture` nodes binding `var`.
    pub fn capture_occurrences(&self, var: &str) -> usize {
        match self {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => 0,
            Formula::Or(l, r) | Formula::Concat(l, r) => {
                l.capture_occurrences(var) + r.capture_occurrences(var)
            }
            Formula::Star(inner) => inner.capture_occurrences(var),
            Formula::Capture(x, inner) => (x == var) as usize + inner.capture_occurrences(var),
        }
    }

    /// All symbols mentioned by the formula.
    pub fn symbols(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Symbol(c) = f {
                out.insert(*c);
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    fn walk<F: FnMut(&Formula)>(&self, visit: &mut F) {
        visit(self);
        match self {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => {}
            Formula::Or(l, r) | Formula::Concat(l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            Formula::Star(inner) | Formula::Capture(_, inner) => inner.walk(visit),
        }
    }

    /// Checks every symbol against `alphabet`.
    pub fn validate_symbols(&self, alphabet: &Alphabet) -> Result<(), FormulaError> {
        match self.symbols().into_iter().find(|c| !alphabet.contains(*c)) {
            Some(symbol) => Err(FormulaError::SymbolOutsideAlphabet {
                symbol,
                offset: 0,
                alphabet: alphabet.clone(),
            }),
            None => Ok(()),
        }
    }

    /// Leaves of the top-level concatenation chain, in order.
    pub fn concat_items(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::Concat(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

const META: &[char] = &['|', '*', '(', ')', '{', '}', '\\', '.', 'Σ'];

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn render(f: &Formula, prec: u8, out: &mut String) {
    match f {
        Formula::Empty => out.push_str("\\0"),
        Formula::Epsilon => out.push_str("\\e"),
        Formula::Symbol(c) => {
            if *c == ' ' {
                out.push_str("\\s");
            } else if META.contains(c) {
                out.push('\\');
                out.push(*c);
            } else {
                out.push(*c);
            }
        }
        Formula::Or(l, r) => {
            if prec > 0 {
                out.push('(');
            }
            render(l, 0, out);
            out.push('|');
            render(r, 0, out);
            if prec > 0 {
                out.push(')');
            }
        }
        Formula::Concat(l, r) => {
            if prec > 1 {
                out.push('(');
            }
            render(l, 1, out);
            render(r, 1, out);
            if prec > 1 {
                out.push(')');
            }
        }
        Formula::Star(inner) => {
            render(inner, 2, out);
            out.push('*');
        }
        Formula::Capture(x, inner) => {
            if out.chars().last().is_some_and(is_ident) {
                out.push(' ');
            }
            out.push_str(x);
            out.push('{');
            render(inner, 0, out);
            out.push('}');
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        render(self, 0, &mut out);
        f.write_str(&out)
    }
}

/// `Repl(g, A)`: an update formula with its single variable and the
/// replacement string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateExpression {
    formula: Formula,
    var: String,
    replacement: String,
}

impl UpdateExpression {
    /// Validates the update grammar and the replacement against `alphabet`.
    pub fn new(
        formula: Formula,
        replacement: impl Into<String>,
        alphabet: &Alphabet,
    ) -> Result<Self, FormulaError> {
        let replacement = replacement.into();
        let var = parse::check_update_shape(&formula)?;
        formula.validate_symbols(alphabet)?;
        alphabet.validate(&replacement)?;
        Ok(UpdateExpression {
            formula,
            var,
            replacement,
        })
    }

    /// Parses the formula in update mode.
    pub fn parse(
        text: &str,
        replacement: impl Into<String>,
        alphabet: &Alphabet,
    ) -> Result<Self, FormulaError> {
        let formula = parse_formula(text, alphabet, Grammar::Update)?;
        UpdateExpression::new(formula, replacement, alphabet)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn replacement(&self) -> &str {
        &self.replacement
    }

    /// `Δ(g)` split into `γ′_L · x{γ′_C} · γ′_R` parts.
    pub fn disjuncts(&self) -> Vec<UpdateDisjunct> {
        normalize(&self.formula)
            .expect("update formulas are functional")
            .update_parts()
            .expect("update disjuncts have one capture")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ac() -> Alphabet {
        Alphabet::new("ac".chars()).unwrap()
    }

    #[test]
    fn boolean_projection_strips_captures() {
        let a = Alphabet::new("abc".chars()).unwrap();
        let f = parse_formula("X{Y{a}a}Z{b}", &a, Grammar::Extraction).unwrap();
        assert_eq!(f.boolean_projection(), Formula::literal("aab"));
        let g = parse_formula("a*x{c}a*", &a, Grammar::Extraction).unwrap();
        assert_eq!(g.boolean_projection().to_string(), "a*ca*");
        let plain = parse_formula("(a|b)*c", &a, Grammar::VariableFree).unwrap();
        assert_eq!(plain.boolean_projection(), plain);
    }

    #[test]
    fn display_reparses() {
        let a = Alphabet::new("abc ".chars()).unwrap();
        for text in [
            "(a|b)* X{aa} (a|b)*",
            "a x{\\e} c",
            "\\0|\\s*",
            "x{a|b}c",
            "ab x{c}",
        ] {
            let f = parse_formula(text, &a, Grammar::Extraction).unwrap();
            let again = parse_formula(&f.to_string(), &a, Grammar::Extraction).unwrap();
            assert_eq!(f, again, "{text} -> {f}");
        }
    }

    #[test]
    fn update_expression_validates_replacement() {
        assert!(UpdateExpression::parse("a*x{c}a*", "b", &ac()).is_err());
        let u = UpdateExpression::parse("a*x{c}a*", "", &ac()).unwrap();
        assert_eq!(u.var(), "x");
        assert_eq!(u.disjuncts().len(), 1);
    }
}
