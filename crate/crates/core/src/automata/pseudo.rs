//! Certificates for the preconditions of the pseudo-irrelevance
//! recognizer, and the recognizer `M_R` itself.

use thiserror::Error;

use super::{build_cross_overlap, build_self_overlap, compile, RegionNfa, Witness};
use crate::alphabet::Alphabet;
use crate::formula::{partition_profiles, proxy, Formula, NormalizedFormula, UpdateExpression};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapKind {
    /// A span marked by `g` overlaps an extracted span.
    Update,
    /// A span of replacement text overlaps an extracted span.
    Proxy,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PseudoError {
    #[error("update marks overlapping spans on {:?}", .0.document)]
    Overlapping(Witness),
    #[error("{kind:?} spans overlap extracted spans on {:?}", .witness.document)]
    NotDisjoint { kind: OverlapKind, witness: Witness },
}

/// An update whose marked spans are pairwise identical or disjoint on
/// every document.
#[derive(Clone, Copy, Debug)]
pub struct UnrestrictedUpdate<'a> {
    update: &'a UpdateExpression,
}

impl<'a> UnrestrictedUpdate<'a> {
    pub fn certify(
        update: &'a UpdateExpression,
        alphabet: &Alphabet,
    ) -> Result<UnrestrictedUpdate<'a>, PseudoError> {
        match build_self_overlap(update, alphabet)
            .nfa
            .emptiness()
            .witness()
        {
            None => Ok(UnrestrictedUpdate { update }),
            Some(w) => Err(PseudoError::Overlapping(w.clone())),
        }
    }

    pub fn update(&self) -> &'a UpdateExpression {
        self.update
    }
}

/// An unrestricted update none of whose marked or replacement spans ever
/// overlaps a span extracted by `extractor`.
#[derive(Clone, Copy, Debug)]
pub struct DisjointUpdate<'a> {
    update: UnrestrictedUpdate<'a>,
    extractor: &'a NormalizedFormula,
}

impl<'a> DisjointUpdate<'a> {
    pub fn certify(
        update: UnrestrictedUpdate<'a>,
        extractor: &'a NormalizedFormula,
        alphabet: &Alphabet,
    ) -> Result<DisjointUpdate<'a>, PseudoError> {
        let u = update.update;
        let marked = NormalizedFormula {
            disjuncts: u.disjuncts().iter().map(|d| d.to_formula()).collect(),
        };
        let machines = [
            (OverlapKind::Update, marked),
            (OverlapKind::Proxy, proxy(u)),
        ];
        for (kind, n) in machines {
            let m = build_cross_overlap(&n, extractor, alphabet).expect("one alphabet");
            if let Some(w) = m.nfa.emptiness().witness() {
                return Err(PseudoError::NotDisjoint {
                    kind,
                    witness: w.clone(),
                });
            }
        }
        Ok(DisjointUpdate { update, extractor })
    }

    pub fn update(&self) -> &'a UpdateExpression {
        self.update.update
    }

    pub fn extractor(&self) -> &'a NormalizedFormula {
        self.extractor
    }
}

/// `M_R`: the union over profile groups `i` and update disjuncts `j` of
/// `(M^j ∩ M^i_φ)·(M^j_∇ ∩ ¬M^i_φ)` and `(M^j ∩ ¬M^i_φ)·(M^j_∇ ∩ M^i_φ)`.
pub fn build_pseudo_recognizer(cert: &DisjointUpdate<'_>, alphabet: &Alphabet) -> RegionNfa {
    let u = cert.update();
    let parts = u.disjuncts();
    let machines: Vec<(RegionNfa, RegionNfa)> = parts
        .iter()
        .map(|d| {
            let marked = compile(&d.to_formula().boolean_projection(), alphabet);
            let mut replaced = d.clone();
            replaced.center = Formula::literal(u.replacement());
            let proxied = compile(&replaced.to_formula().boolean_projection(), alphabet);
            (marked, proxied)
        })
        .collect();
    let mut result = compile(&Formula::Empty, alphabet);
    for group in partition_profiles(cert.extractor()) {
        let phi = compile(&group.union.boolean_projection(), alphabet);
        let not_phi = phi.complement();
        for (mj, mv) in &machines {
            let terms = [
                mj.intersect(&phi)
                    .and_then(|l| l.concat(&mv.intersect(&not_phi)?)),
                mj.intersect(&not_phi)
                    .and_then(|l| l.concat(&mv.intersect(&phi)?)),
            ];
            for term in terms {
                let term = term.expect("one alphabet").trim();
                if term.state_count() > 0 {
                    result = result.union(&term).expect("one alphabet");
                }
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{normalize, parse_formula, Grammar};

    fn ac() -> Alphabet {
        Alphabet::new("ac".chars()).unwrap()
    }

    fn recognizer(e: &str, g: &str, a: &str) -> Result<RegionNfa, PseudoError> {
        let al = ac();
        let u = UpdateExpression::parse(g, a, &al).unwrap();
        let n = normalize(&parse_formula(e, &al, Grammar::Extraction).unwrap()).unwrap();
        let unr = UnrestrictedUpdate::certify(&u, &al)?;
        let cert = DisjointUpdate::certify(unr, &n, &al)?;
        Ok(build_pseudo_recognizer(&cert, &al))
    }

    #[test]
    fn recognizer_examples() {
        assert!(recognizer(".* X{aa} .*", "aa .* x{c}", "cc")
            .unwrap()
            .is_empty());
        let m = recognizer(".* X{aa} .*", ".* x{c} .*", "cc").unwrap();
        assert!(!m.is_empty());
        assert!(m.accepts("aaccc"));
        assert!(recognizer("\\0 X{a}", ".* x{c} .*", "cc")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn preconditions_are_reported() {
        assert!(matches!(
            recognizer(".* X{aa} .*", ".* x{c.*c} .*", ""),
            Err(PseudoError::Overlapping(_))
        ));
        assert!(matches!(
            recognizer(".* X{aa} .*", ".* x{ac} .*", ""),
            Err(PseudoError::NotDisjoint {
                kind: OverlapKind::Update,
                ..
            })
        ));
        assert!(matches!(
            recognizer(".* X{cc} .*", ".* x{a} .*", "cc"),
            Err(PseudoError::NotDisjoint {
                kind: OverlapKind::Proxy,
                ..
            })
        ));
    }
}
