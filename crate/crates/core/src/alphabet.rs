//! The closed input alphabet Σ shared by documents, formulas and automata.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet entry {0:?} is not a single character")]
    NotASymbol(String),
    #[error("alphabet is empty")]
    Empty,
    #[error("symbol {symbol:?} at offset {offset} is not in the alphabet {alphabet}")]
    OutsideAlphabet {
        symbol: char,
        offset: usize,
        alphabet: Alphabet,
    },
    #[error("invalid alphabet config: {0}")]
    Json(String),
}

/// A finite, ordered set of symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

#[derive(Serialize, Deserialize)]
struct AlphabetConfig {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(symbols: I) -> Result<Self, AlphabetError> {
        let mut symbols: Vec<char> = symbols.into_iter().collect();
        symbols.sort_unstable();
        symbols.dedup();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        Ok(Alphabet { symbols })
    }

    /// Parses `{ "symbols": ["a", "b", ...] }`.
    pub fn from_json(text: &str) -> Result<Self, AlphabetError> {
        let config: AlphabetConfig =
            serde_json::from_str(text).map_err(|e| AlphabetError::Json(e.to_string()))?;
        let mut chars = Vec::with_capacity(config.symbols.len());
        for entry in config.symbols {
            let mut it = entry.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(AlphabetError::NotASymbol(entry)),
            }
        }
        Alphabet::new(chars)
    }

    pub fn to_json(&self) -> String {
        let config = AlphabetConfig {
            symbols: self.symbols.iter().map(|c| c.to_string()).collect(),
        };
        serde_json::to_string_pretty(&config).expect("alphabet serializes")
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.binary_search(&c).is_ok()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.symbols.binary_search(&c).ok()
    }

    pub fn symbol(&self, index: usize) -> char {
        self.symbols[index]
    }

    /// Checks that every character of `text` is a member of the alphabet.
    pub fn validate(&self, text: &str) -> Result<(), AlphabetError> {
        for (offset, c) in text.chars().enumerate() {
            if !self.contains(c) {
                return Err(AlphabetError::OutsideAlphabet {
                    symbol: c,
                    offset: offset + 1,
                    alphabet: self.clone(),
                });
            }
        }
        Ok(())
    }

    /// Every string over the alphabet of length `0..=max_len`, shortest first.
    pub fn strings_up_to(&self, max_len: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut layer = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.len());
            for s in &layer {
                for &c in &self.symbols {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if *c == ' ' {
                f.write_str("\\s")?;
            } else {
                write!(f, "{c}")?;
            }
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let a = Alphabet::from_json(r#"{ "symbols": ["c", "a", " "] }"#).unwrap();
        assert_eq!(a.symbols(), &[' ', 'a', 'c']);
        assert_eq!(Alphabet::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn rejects_multi_char_entries() {
        assert_eq!(
            Alphabet::from_json(r#"{ "symbols": ["ab"] }"#),
            Err(AlphabetError::NotASymbol("ab".into()))
        );
    }

    #[test]
    fn validate_reports_offset() {
        let a = Alphabet::new("ac".chars()).unwrap();
        match a.validate("acb") {
            Err(AlphabetError::OutsideAlphabet { symbol, offset, .. }) => {
                assert_eq!((symbol, offset), ('b', 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumerates_all_strings() {
        let a = Alphabet::new("ac".chars()).unwrap();
        assert_eq!(a.strings_up_to(6).len(), 127);
    }
}
