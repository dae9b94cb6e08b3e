//! Concrete syntax: implicit concatenation, `|`, postfix `*`, parentheses,
//! `name{...}` captures, `\e` (ε), `\0` (∅), `\s` (space), `.` or `Σ` for
//! any alphabet symbol, and a backslash before any punctuation
//! symbol for that literal symbol.
//! Whitespace between tokens is ignored.

use super::{is_ident, Formula, FormulaError};
use crate::alphabet::Alphabet;

/// Which grammar a formula must conform to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grammar {
    /// Regular expressions with capture variables; no capture under `*`.
    Extraction,
    /// Single-variable update formulas.
    Update,
    VariableFree,
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            offset: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn alt(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.seq()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let right = self.seq()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn seq(&mut self) -> Result<Formula, FormulaError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if matches!(c, '|' | ')' | '}') {
                break;
            }
            items.push(self.postfix()?);
        }
        Ok(Formula::concat_all(items))
    }

    fn postfix(&mut self) -> Result<Formula, FormulaError> {
        let mut atom = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            atom = Formula::star(atom);
        }
        Ok(atom)
    }

    fn symbol(&self, c: char) -> Result<Formula, FormulaError> {
        if !self.alphabet.contains(c) {
            return Err(FormulaError::SymbolOutsideAlphabet {
                symbol: c,
                offset: self.pos,
                alphabet: self.alphabet.clone(),
            });
        }
        Ok(Formula::Symbol(c))
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return self.error("unexpected end of formula"),
        };
        match c {
            '(' => {
                self.pos += 1;
                let inner = self.alt()?;
                if self.peek() != Some(')') {
                    return self.error("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            '*' => self.error("`*` without operand"),
            '{' => self.error("`{` must follow a variable name"),
            '.' | 'Σ' => {
                self.pos += 1;
                Ok(Formula::any_symbol(self.alphabet))
            }
            '\\' => {
                self.pos += 1;
                let Some(&e) = self.chars.get(self.pos) else {
                    return self.error("dangling backslash");
                };
                self.pos += 1;
                match e {
                    'e' => Ok(Formula::Epsilon),
                    '0' => Ok(Formula::Empty),
                    's' => self.symbol(' '),
                    'Σ' => self.symbol(e),
                    other if !other.is_alphanumeric() && !other.is_whitespace() => {
                        self.symbol(other)
                    }
                    other => {
                        self.pos -= 1;
                        self.error(format!("unknown escape `\\{other}`"))
                    }
                }
            }
            c if is_ident(c) => {
                let start = self.pos;
                let mut end = start;
                while end < self.chars.len() && is_ident(self.chars[end]) {
                    end += 1;
                }
                if self.chars.get(end) == Some(&'{') {
                    let name: String = self.chars[start..end].iter().collect();
                    self.pos = end + 1;
                    let inner = self.alt()?;
                    if self.peek() != Some('}') {
                        return self.error(format!("expected `}}` closing capture `{name}`"));
                    }
                    self.pos += 1;
                    Ok(Formula::capture(name, inner))
                } else {
                    self.pos += 1;
                    self.symbol(c)
                }
            }
            c => {
                self.pos += 1;
                self.symbol(c)
            }
        }
    }
}

/// Parses `text` and enforces the requested grammar.
pub fn parse_formula(
    text: &str,
    alphabet: &Alphabet,
    grammar: Grammar,
) -> Result<Formula, FormulaError> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        alphabet,
    };
    let formula = parser.alt()?;
    if parser.peek().is_some() {
        return parser.error(format!("unexpected `{}`", parser.chars[parser.pos]));
    }
    match grammar {
        Grammar::Extraction => check_no_capture_under_star(&formula, false)?,
        Grammar::Update => {
            check_update_shape(&formula)?;
        }
        Grammar::VariableFree => {
            if let Some(x) = formula.vars().into_iter().next() {
                return Err(FormulaError::UnexpectedCapture(x));
            }
        }
    }
    Ok(formula)
}

/// Parses a formula file: an optional first line `alphabet: <chars>`
/// overriding `default`, then the formula (lines are joined).
pub fn parse_formula_file(
    text: &str,
    default: &Alphabet,
    grammar: Grammar,
) -> Result<(Formula, Alphabet), FormulaError> {
    let mut body = text;
    let mut alphabet = default.clone();
    if let Some(first) = text.lines().next() {
        if let Some(spec) = first.trim_start().strip_prefix("alphabet:") {
            let spec = spec.trim().replace("\\s", " ");
            alphabet = Alphabet::new(spec.chars().filter(|c| *c == ' ' || !c.is_whitespace()))?;
            body = &text[first.len()..];
        }
    }
    let formula = parse_formula(body, &alphabet, grammar)?;
    Ok((formula, alphabet))
}

fn check_no_capture_under_star(f: &Formula, under_star: bool) -> Result<(), FormulaError> {
    match f {
        Formula::Empty | Formula::Epsilon | Formula::Symbol(_) => Ok(()),
        Formula::Or(l, r) | Formula::Concat(l, r) => {
            check_no_capture_under_star(l, under_star)?;
            check_no_capture_under_star(r, under_star)
        }
        Formula::Star(inner) => check_no_capture_under_star(inner, true),
        Formula::Capture(x, inner) => {
            if under_star {
                return Err(FormulaError::VariableUnderStar(x.clone()));
            }
            check_no_capture_under_star(inner, false)
        }
    }
}

/// Checks the update grammar: `γ := (γ ∨ γ) | (γ′ • γ) | (γ • γ′) | x{γ′}`.
/// Returns the variable name.
pub(crate) fn check_update_shape(f: &Formula) -> Result<String, FormulaError> {
    check_no_capture_under_star(f, false)?;
    let vars = f.vars();
    if vars.len() != 1 {
        return Err(FormulaError::UpdateVariableCount(vars.len()));
    }
    fn walk(f: &Formula) -> Result<bool, FormulaError> {
        match f {
            Formula::Empty | Formula::Epsilon | Formula::Symbol(_) | Formula::Star(_) => Ok(false),
            Formula::Capture(x, inner) => {
                if inner.has_vars() {
                    return Err(FormulaError::UpdateShape(format!(
                        "capture `{x}` must enclose a variable-free expression"
                    )));
                }
                Ok(true)
            }
            Formula::Or(l, r) => {
                let (cl, cr) = (walk(l)?, walk(r)?);
                if cl != cr {
                    return Err(FormulaError::UpdateShape(format!(
                        "every disjunct must bind the variable: `{}`",
                        if cl { r } else { l }
                    )));
                }
                Ok(cl)
            }
            Formula::Concat(l, r) => {
                let (cl, cr) = (walk(l)?, walk(r)?);
                if cl && cr {
                    return Err(FormulaError::UpdateShape(format!(
                        "the variable is bound more than once in `{f}`"
                    )));
                }
                Ok(cl || cr)
            }
        }
    }
    walk(f)?;
    Ok(vars.into_iter().next().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new("abc".chars()).unwrap()
    }

    #[test]
    fn parses_extraction_formula() {
        let f = parse_formula("(a|b)*X{aa}(a|b)*", &abc(), Grammar::Extraction).unwrap();
        let ab = Formula::or(Formula::Symbol('a'), Formula::Symbol('b'));
        let expected = Formula::concat(
            Formula::concat(
                Formula::star(ab.clone()),
                Formula::capture("X", Formula::literal("aa")),
            ),
            Formula::star(ab),
        );
        assert_eq!(f, expected);
        assert_eq!(f.vars().into_iter().collect::<Vec<_>>(), vec!["X"]);
    }

    #[test]
    fn update_mode_accepts_gu() {
        let f = parse_formula("a*x{c}a*", &abc(), Grammar::Update).unwrap();
        assert_eq!(check_update_shape(&f).unwrap(), "x");
        assert!(parse_formula("x{a}b | c x{a}", &abc(), Grammar::Update).is_ok());
    }

    #[test]
    fn update_mode_rejects_star_capture() {
        assert_eq!(
            parse_formula("(x{a})*", &abc(), Grammar::Update),
            Err(FormulaError::VariableUnderStar("x".into()))
        );
    }

    #[test]
    fn update_mode_rejects_bad_shapes() {
        let a = abc();
        assert_eq!(
            parse_formula("x{a}y{b}", &a, Grammar::Update),
            Err(FormulaError::UpdateVariableCount(2))
        );
        assert_eq!(
            parse_formula("abc", &a, Grammar::Update),
            Err(FormulaError::UpdateVariableCount(0))
        );
        assert!(matches!(
            parse_formula("x{a}|b", &a, Grammar::Update),
            Err(FormulaError::UpdateShape(_))
        ));
        assert!(matches!(
            parse_formula("x{a}x{b}", &a, Grammar::Update),
            Err(FormulaError::UpdateShape(_))
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let a = abc();
        assert!(matches!(
            parse_formula("(ab", &a, Grammar::Extraction),
            Err(FormulaError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse_formula("a)", &a, Grammar::Extraction),
            Err(FormulaError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("ad", &a, Grammar::Extraction),
            Err(FormulaError::SymbolOutsideAlphabet {
                symbol: 'd',
                offset: 2,
                ..
            })
        ));
    }

    #[test]
    fn escapes_and_sugar() {
        let a = Alphabet::new("ac .".chars()).unwrap();
        let f = parse_formula("\\e|\\0|\\s|\\.|.", &a, Grammar::VariableFree).unwrap();
        assert_eq!(f.symbols().len(), 4);
        assert!(matches!(
            parse_formula("x{a}", &a, Grammar::VariableFree),
            Err(FormulaError::UnexpectedCapture(_))
        ));
    }

    #[test]
    fn file_alphabet_override() {
        let (f, a) =
            parse_formula_file("alphabet: ac\n.* X{aa}\n .*\n", &abc(), Grammar::Extraction)
                .unwrap();
        assert_eq!(a.symbols(), &['a', 'c']);
        assert_eq!(f.vars().len(), 1);
        let (_, same) = parse_formula_file("a b", &abc(), Grammar::Extraction).unwrap();
        assert_eq!(same, abc());
    }
}
