use num_rational::Rational64;
use serde::Serialize;

use super::BohrSet;
use crate::error::{Error, Result};
use crate::group::{bounded_span, Character, GroupElement};

#[derive(Clone, Debug, Serialize)]
pub struct BohrSumCheck {
    pub holds: bool,
    /// `|Λ|` for `Λ = ⟨Γ₁⟩_R ∩ ⟨Γ₂⟩_R`.
    pub frequencies: usize,
    pub lhs_size: usize,
    pub rhs_size: usize,
}

/// Tests `B(⟨Γ₁⟩_R ∩ ⟨Γ₂⟩_R; 1/4) ⊆ B(Γ₁; ρ₁) + B(Γ₂; ρ₂)`.
pub fn verify_bohr_sum(b1: &BohrSet, b2: &BohrSet, r: u64) -> Result<BohrSumCheck> {
    let g = b1.group();
    if g != b2.group() {
        return Err(Error::GroupMismatch);
    }
    let dual = g.dual();
    let span = |b: &BohrSet| {
        let gens: Vec<GroupElement> = b.frequencies().iter().map(Character::as_element).collect();
        bounded_span(&dual, &gens, r)
    };
    let lambda = span(b1).intersection(&span(b2));
    let freqs: Vec<Character> = lambda.indices().map(|i| dual.character_at(i)).collect();
    let lhs = BohrSet::new(g, freqs, Rational64::new(1, 4))?.enumerate();
    let rhs = b1.enumerate().sumset(&b2.enumerate());
    Ok(BohrSumCheck {
        holds: lhs.is_subset(&rhs),
        frequencies: lambda.len(),
        lhs_size: lhs.len(),
        rhs_size: rhs.len(),
    })
}

/// Smallest `R ∈ {1, 2, 4, …}` for which the sum containment holds. Stops
/// once `R` reaches the exponent, where both spans are full subgroups.
pub fn find_min_r(b1: &BohrSet, b2: &BohrSet) -> Result<Option<u64>> {
    let exponent = b1.group().exponent();
    let mut r = 1;
    loop {
        if verify_bohr_sum(b1, b2, r)?.holds {
            return Ok(Some(r));
        }
        if r >= exponent {
            return Ok(None);
        }
        r *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    #[test]
    fn cyclic_example_and_negative_control() {
        let g = make_group(&[16]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 8)).unwrap();
        assert!(verify_bohr_sum(&b, &b, 1).unwrap().holds);
        assert_eq!(find_min_r(&b, &b).unwrap(), Some(1));
        assert!(!verify_bohr_sum(&b, &b, 0).unwrap().holds);
    }
}
