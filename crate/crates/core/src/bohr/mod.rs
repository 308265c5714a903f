//! Bohr sets `B(Γ; ρ) = {x : ‖γ(x)‖ ≤ ρ for all γ ∈ Γ}` with exact rational
//! radii, their size bounds, regular radii and sum and difference covers.

mod estimate;
mod progression;
mod sum;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupSubset};

pub use estimate::{bohr_size_estimate, formula_coefficients, large_spectrum_certify, SizeEstimate, SpectrumCertificate};
pub use progression::{bohr_in_progression, BohrInProgression, BohrSource};
pub use sum::{find_min_r, verify_bohr_sum, BohrSumCheck};

/// Serializes a rational as `"p/q"`.
pub fn serialize_ratio<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// `m / E ≤ ρ` without rounding.
pub(crate) fn within(m: u64, exponent: u64, rho: Rational64) -> bool {
    (m as i128) * (*rho.denom() as i128) <= (*rho.numer() as i128) * (exponent as i128)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BohrSet {
    #[serde(skip)]
    group: FiniteAbelianGroup,
    frequencies: Vec<Character>,
    #[serde(serialize_with = "serialize_ratio")]
    radius: Rational64,
}

impl BohrSet {
    pub fn new(group: &FiniteAbelianGroup, frequencies: Vec<Character>, radius: Rational64) -> Result<Self> {
        if radius < Rational64::zero() || radius > Rational64::new(1, 2) {
            return Err(Error::Precondition(format!("radius {radius} outside [0, 1/2]")));
        }
        if let Some(c) = frequencies.iter().find(|c| !group.is_valid(&c.0)) {
            return Err(Error::Precondition(format!("character {:?} not in the dual of {group}", c.0)));
        }
        Ok(BohrSet { group: group.clone(), frequencies, radius })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn frequencies(&self) -> &[Character] {
        &self.frequencies
    }

    pub fn radius(&self) -> Rational64 {
        self.radius
    }

    /// The same frequencies at another radius.
    pub fn with_radius(&self, radius: Rational64) -> Result<Self> {
        BohrSet::new(&self.group, self.frequencies.clone(), radius)
    }

    pub fn contains_idx(&self, x: usize) -> bool {
        let g = &self.group;
        let mut coords = vec![0u64; g.rank()];
        g.coords_into(x, &mut coords);
        let e = g.exponent();
        self.frequencies.iter().all(|chi| {
            let v = g.eval_scaled(&chi.0, &coords);
            within(v.min(e - v), e, self.radius)
        })
    }

    pub fn enumerate(&self) -> GroupSubset {
        let prof = max_distances(&self.group, &self.frequencies);
        let e = self.group.exponent();
        GroupSubset::from_fn(&self.group, |i| within(prof[i], e, self.radius))
    }

    pub fn size(&self) -> usize {
        self.enumerate().len()
    }
}

/// `E · max_{γ ∈ Γ} ‖γ(x)‖` for every `x`, where `E` is the exponent.
pub fn max_distances(group: &FiniteAbelianGroup, freqs: &[Character]) -> Vec<u64> {
    let mut out = vec![0u64; group.size()];
    for chi in freqs {
        for (o, d) in out.iter_mut().zip(group.scaled_distances(chi)) {
            *o = (*o).max(d);
        }
    }
    out
}

/// Sorted scaled distances, answering `|B(Γ; ρ)|` for any `ρ` by bisection.
#[derive(Clone, Debug)]
pub struct BohrProfile {
    exponent: u64,
    sorted: Vec<u64>,
}

impl BohrProfile {
    pub fn new(group: &FiniteAbelianGroup, freqs: &[Character]) -> Self {
        let mut sorted = max_distances(group, freqs);
        sorted.sort_unstable();
        BohrProfile { exponent: group.exponent(), sorted }
    }

    pub fn size(&self, rho: Rational64) -> usize {
        self.sorted.partition_point(|&m| within(m, self.exponent, rho))
    }
}

/// Sizes checked against `|B(ρ)| ≥ ρ^k |G|` and, when `2ρ ≤ 1/2`,
/// `|B(2ρ)| ≤ 4^k |B(ρ)|`.
#[derive(Clone, Debug, Serialize)]
pub struct SizeBounds {
    pub size: usize,
    pub lower_bound: f64,
    pub doubled_size: Option<usize>,
}

pub fn size_bounds(bohr: &BohrSet) -> Result<SizeBounds> {
    let g = bohr.group();
    let k = bohr.frequencies().len() as u32;
    let rho = bohr.radius();
    let prof = BohrProfile::new(g, bohr.frequencies());
    let size = prof.size(rho);
    let lhs = BigInt::from(size) * BigInt::from(*rho.denom()).pow(k);
    let rhs = BigInt::from(*rho.numer()).pow(k) * BigInt::from(g.order());
    if lhs < rhs {
        return Err(Error::BoundViolation(format!("|B| = {size} below ρ^k |G|")));
    }
    let doubled = rho * 2;
    let doubled_size = if doubled <= Rational64::new(1, 2) {
        let d = prof.size(doubled);
        if (d as u128) > 4u128.pow(k) * size as u128 {
            return Err(Error::BoundViolation(format!("|B(2ρ)| = {d} above 4^k |B(ρ)|")));
        }
        Some(d)
    } else {
        None
    };
    let lower_bound = (*rho.numer() as f64 / *rho.denom() as f64).powi(k as i32) * g.order() as f64;
    Ok(SizeBounds { size, lower_bound, doubled_size })
}

/// Whether `|B(ρ + η) \ B(ρ)| ≤ ε |G|`.
pub fn is_weakly_regular(profile: &BohrProfile, order: u64, rho: Rational64, eta: Rational64, eps: Rational64) -> bool {
    let annulus = profile.size(rho + eta) - profile.size(rho);
    (annulus as i128) * (*eps.denom() as i128) <= (*eps.numer() as i128) * order as i128
}

/// First `ρ` on the grid `ρ_lo + j (ρ_hi - ρ_lo)/⌈2/ε⌉` with a thin annulus.
pub fn weak_regular_radius_search(
    group: &FiniteAbelianGroup,
    freqs: &[Character],
    rho_lo: Rational64,
    rho_hi: Rational64,
    eta: Rational64,
    eps: Rational64,
) -> Result<Rational64> {
    if eps <= Rational64::zero() || eta <= Rational64::zero() || rho_hi < rho_lo {
        return Err(Error::Precondition("need ε, η > 0 and ρ_lo ≤ ρ_hi".into()));
    }
    let steps = (Rational64::from_integer(2) / eps).ceil().to_integer();
    let step = (rho_hi - rho_lo) / steps;
    let profile = BohrProfile::new(group, freqs);
    (0..=steps)
        .map(|j| rho_lo + step * j)
        .find(|&rho| is_weakly_regular(&profile, group.order(), rho, eta, eps))
        .ok_or(Error::NoWeaklyRegularRadius)
}

/// Outcome of the dense-subset difference cover check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DenseCover {
    /// The precondition held and `A - A ⊇ B(ρ/2)` was tested.
    Checked { holds: bool },
    /// `|A|` falls short of `(1 - 4^{-k-1}) |B(ρ)|` by this many elements.
    NotApplicable { shortfall: f64 },
}

/// If `A ⊆ B(Γ; ρ)` has `|A| ≥ (1 - 4^{-k-1}) |B(Γ; ρ)|` then `A - A ⊇ B(Γ; ρ/2)`.
pub fn dense_difference_cover(a: &GroupSubset, bohr: &BohrSet) -> Result<DenseCover> {
    if a.group() != bohr.group() {
        return Err(Error::GroupMismatch);
    }
    let b = bohr.enumerate();
    if !a.is_subset(&b) {
        return Err(Error::Precondition("A is not inside B(Γ; ρ)".into()));
    }
    let k = bohr.frequencies().len() as i32;
    let need = (1.0 - 4f64.powi(-k - 1)) * b.len() as f64;
    if (a.len() as f64) < need {
        return Ok(DenseCover::NotApplicable { shortfall: need - a.len() as f64 });
    }
    let half = bohr.with_radius(bohr.radius() / 2)?.enumerate();
    Ok(DenseCover::Checked { holds: half.is_subset(&a.diffset(a)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{char_eval, make_group};

    fn brute(bohr: &BohrSet) -> GroupSubset {
        let g = bohr.group();
        GroupSubset::from_fn(g, |i| {
            let x = g.element_at(i);
            bohr.frequencies().iter().all(|c| char_eval(g, c, &x).dist() <= bohr.radius())
        })
    }

    #[test]
    fn membership_examples() {
        let g = make_group(&[5]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 5)).unwrap();
        assert_eq!(b.enumerate().indices().collect::<Vec<_>>(), vec![0, 1, 4]);
        assert_eq!(b.enumerate(), brute(&b));
        let b = BohrSet::new(&g, vec![], Rational64::new(1, 10)).unwrap();
        assert!(b.enumerate().is_full());
        let g = make_group(&[4]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 4)).unwrap();
        assert_eq!(b.enumerate().indices().collect::<Vec<_>>(), vec![0, 1, 3]);
    }

    #[test]
    fn enumeration_matches_definition() {
        let g = make_group(&[6, 10]).unwrap();
        let freqs = vec![g.character(&[1, 3]).unwrap(), g.character(&[5, 2]).unwrap()];
        for (n, d) in [(0, 1), (1, 30), (1, 7), (1, 4), (1, 3), (1, 2)] {
            let b = BohrSet::new(&g, freqs.clone(), Rational64::new(n, d)).unwrap();
            assert_eq!(b.enumerate(), brute(&b));
            assert_eq!(b.size(), BohrProfile::new(&g, &freqs).size(b.radius()));
        }
    }

    #[test]
    fn size_bound_examples() {
        let g = make_group(&[5]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 5)).unwrap();
        let s = size_bounds(&b).unwrap();
        assert_eq!(s.size, 3);
        assert!((s.lower_bound - 1.0).abs() < 1e-12);
        let g = make_group(&[8]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 8)).unwrap();
        let s = size_bounds(&b).unwrap();
        assert_eq!((s.size, s.doubled_size), (3, Some(5)));
    }

    #[test]
    fn weak_regular_search_example() {
        let g = make_group(&[101]).unwrap();
        let freqs = vec![g.character(&[1]).unwrap()];
        let eps = Rational64::new(1, 10);
        let rho = weak_regular_radius_search(&g, &freqs, Rational64::new(1, 10), Rational64::new(1, 5), Rational64::new(1, 100), eps)
            .unwrap();
        let prof = BohrProfile::new(&g, &freqs);
        assert!(is_weakly_regular(&prof, 101, rho, Rational64::new(1, 100), eps));
    }

    #[test]
    fn dense_cover_full_bohr_set() {
        let g = make_group(&[16]).unwrap();
        let b = BohrSet::new(&g, vec![g.character(&[1]).unwrap()], Rational64::new(1, 4)).unwrap();
        let a = b.enumerate();
        assert_eq!(dense_difference_cover(&a, &b).unwrap(), DenseCover::Checked { holds: true });
        let sparse = GroupSubset::singleton(&g, 0);
        assert!(matches!(dense_difference_cover(&sparse, &b).unwrap(), DenseCover::NotApplicable { .. }));
    }
}
