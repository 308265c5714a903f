use std::f64::consts::{E, PI};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

use super::BohrSet;
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupElement};
use crate::lattice::for_each_annihilator_point;

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Fourier coefficients `c_a`, `|a| ≤ K`, of `η⁻¹ 1_I * 1_J` where
/// `I = [-ρ - η/2, ρ + η/2]` and `J = [-η/2, η/2]`. Entry `a + K` holds `c_a`.
///
/// `c_0 = 2ρ + η` and `c_a = sin(2πa(ρ + η/2)) sin(πaη) / (π² a² η)`.
pub fn formula_coefficients(rho: Rational64, eta: Rational64, bound: u64) -> Result<Vec<f64>> {
    if eta <= Rational64::zero() || rho < Rational64::zero() {
        return Err(Error::Precondition("need η > 0 and ρ ≥ 0".into()));
    }
    let (r, h) = (to_f64(rho), to_f64(eta));
    let k = bound as i64;
    Ok((-k..=k)
        .map(|a| {
            if a == 0 {
                2.0 * r + h
            } else {
                let a = a as f64;
                (2.0 * PI * a * (r + h / 2.0)).sin() * (PI * a * h).sin() / (PI * PI * a * a * h)
            }
        })
        .collect())
}

fn dedup(freqs: &[Character]) -> Vec<Character> {
    let mut out: Vec<Character> = Vec::new();
    for c in freqs {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Fourier estimate of `|B(Γ; ρ)|` from annihilator points of `Γ`.
#[derive(Clone, Debug, Serialize)]
pub struct SizeEstimate {
    pub estimate: f64,
    /// Box half-width `K = ⌈2ek/(ηε)⌉`.
    pub bound: u64,
    /// Number of annihilator points summed.
    pub points: usize,
    /// `|Γ|` after removing repeats.
    pub k: usize,
}

/// `|G| Σ_{a ∈ [-K, K]^k, Σ a_i γ_i = 0} Π c_{a_i}`.
pub fn bohr_size_estimate(
    group: &FiniteAbelianGroup,
    freqs: &[Character],
    rho: Rational64,
    eta: Rational64,
    eps: Rational64,
) -> Result<SizeEstimate> {
    if eps <= Rational64::zero() || eta <= Rational64::zero() {
        return Err(Error::Precondition("need ε, η > 0".into()));
    }
    if rho + eta > Rational64::new(1, 2) {
        return Err(Error::Precondition("need ρ + η ≤ 1/2".into()));
    }
    let gamma = dedup(freqs);
    let k = gamma.len();
    if k == 0 {
        return Ok(SizeEstimate { estimate: group.order() as f64, bound: 0, points: 1, k });
    }
    let bound = (2.0 * E * k as f64 / (to_f64(eta) * to_f64(eps))).ceil() as u64;
    let coeffs = formula_coefficients(rho, eta, bound)?;
    let elems: Vec<GroupElement> = gamma.iter().map(Character::as_element).collect();
    let mut total = 0.0;
    let mut points = 0usize;
    let off = bound as i64;
    for_each_annihilator_point(&group.dual(), &elems, bound, |a| {
        total += a.iter().map(|&ai| coeffs[(ai + off) as usize]).product::<f64>();
        points += 1;
    })?;
    Ok(SizeEstimate { estimate: total * group.order() as f64, bound, points, k })
}

/// A large Fourier coefficient of a Bohr set and its bounded representation.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumCertificate {
    /// `|1̂_B(χ)|`.
    pub coefficient: f64,
    /// Box half-width `K = ⌈8ek/(ηε)⌉`.
    pub bound: u64,
    /// `a ∈ [-K, K]^k` with `χ = Σ a_i γ_i`, if one exists.
    pub representation: Option<Vec<i64>>,
}

/// Searches for `χ = Σ a_i γ_i` with `|a_i| ≤ K`, preferring small `|a_i|`.
pub fn large_spectrum_certify(
    group: &FiniteAbelianGroup,
    freqs: &[Character],
    rho: Rational64,
    eta: Rational64,
    eps: Rational64,
    chi: &Character,
) -> Result<SpectrumCertificate> {
    if eps <= Rational64::zero() || eta <= Rational64::zero() {
        return Err(Error::Precondition("need ε, η > 0".into()));
    }
    let gamma = dedup(freqs);
    let k = gamma.len();
    let bohr = BohrSet::new(group, gamma.clone(), rho)?;
    let set = bohr.enumerate();
    let e = group.exponent();
    let mut coords = vec![0u64; group.rank()];
    let mut sum = Complex64::new(0.0, 0.0);
    for x in set.indices() {
        group.coords_into(x, &mut coords);
        let v = group.eval_scaled(&chi.0, &coords);
        sum += Complex64::from_polar(1.0, -2.0 * PI * v as f64 / e as f64);
    }
    let coefficient = sum.norm() / group.order() as f64;
    let bound = (8.0 * E * k.max(1) as f64 / (to_f64(eta) * to_f64(eps))).ceil() as u64;

    let dual = group.dual();
    let n = dual.size();
    // back[i][x] = (previous sum, a_i) for the first way to reach x.
    let mut back: Vec<Vec<Option<(usize, i64)>>> = Vec::with_capacity(k);
    let mut reach = vec![false; n];
    reach[0] = true;
    for g in &gamma {
        let gi = dual.index_of(&g.as_element());
        let ord = dual.order_of(&g.as_element()) as i64;
        let lim = (bound as i64).min(ord);
        let mut steps: Vec<(usize, i64)> = Vec::new();
        let mut seen = vec![false; n];
        for a in std::iter::once(0).chain((1..=lim).flat_map(|t| [t, -t])) {
            let v = dual.scale_idx(gi, a);
            if !seen[v] {
                seen[v] = true;
                steps.push((v, a));
            }
        }
        let mut next = vec![false; n];
        let mut layer = vec![None; n];
        for x in (0..n).filter(|&x| reach[x]) {
            for &(v, a) in &steps {
                let y = dual.add_idx(x, v);
                if !next[y] {
                    next[y] = true;
                    layer[y] = Some((x, a));
                }
            }
        }
        back.push(layer);
        reach = next;
    }
    let target = dual.index_of(&chi.as_element());
    let representation = reach[target].then(|| {
        let mut a = vec![0i64; k];
        let mut cur = target;
        for i in (0..k).rev() {
            let (prev, ai) = back[i][cur].expect("reachable state has a parent");
            a[i] = ai;
            cur = prev;
        }
        a
    });
    if let Some(a) = &representation {
        let elems: Vec<GroupElement> = gamma.iter().map(Character::as_element).collect();
        if dual.combination(a, &elems) != chi.as_element() {
            return Err(Error::BoundViolation("spectrum representation mismatch".into()));
        }
    }
    Ok(SpectrumCertificate { coefficient, bound, representation })
}
