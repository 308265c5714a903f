//! Discrete Fourier analysis on `⊕ ℤ/q_i`.
//!
//! Conventions: `f̂(χ) = E_x f(x) e(-χ(x))`, `f(x) = Σ_χ f̂(χ) e(χ(x))` and
//! `(f * g)(x) = E_y f(y) g(x - y)`. The transform factors as a tensor product
//! of one-dimensional transforms, one per cyclic factor.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::Serialize;

use crate::bohr::BohrSet;
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupSubset};

/// Tolerance used for threshold and equality comparisons of coefficients.
pub const TOLERANCE: f64 = 1e-9;

/// A complex-valued function on a group, indexed by element.
#[derive(Clone, Debug)]
pub struct GroupFunction {
    pub group: FiniteAbelianGroup,
    pub values: Vec<Complex64>,
}

/// Fourier coefficients indexed by character.
#[derive(Clone, Debug)]
pub struct FourierTransform {
    pub group: FiniteAbelianGroup,
    pub coeffs: Vec<Complex64>,
}

impl GroupFunction {
    pub fn new(group: &FiniteAbelianGroup, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.size() {
            return Err(Error::RankMismatch { expected: group.size(), got: values.len() });
        }
        Ok(GroupFunction { group: group.clone(), values })
    }

    pub fn from_real(group: &FiniteAbelianGroup, values: &[f64]) -> Result<Self> {
        Self::new(group, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn indicator(set: &GroupSubset) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); set.group().size()];
        for i in set.indices() {
            values[i] = Complex64::new(1.0, 0.0);
        }
        GroupFunction { group: set.group().clone(), values }
    }
}

impl FourierTransform {
    pub fn coefficient(&self, chi: &Character) -> Complex64 {
        self.coeffs[self.group.index_of(&chi.as_element())]
    }
}

/// Applies a naive transform of length `q_i` along each axis in place.
fn transform_axes(group: &FiniteAbelianGroup, data: &mut [Complex64], sign: f64) {
    let mut stride = 1usize;
    for &q in group.moduli() {
        let q = q as usize;
        if q > 1 {
            let roots: Vec<Complex64> =
                (0..q).map(|k| Complex64::from_polar(1.0, sign * TAU * k as f64 / q as f64)).collect();
            let block = stride * q;
            let mut line = vec![Complex64::new(0.0, 0.0); q];
            let mut out = vec![Complex64::new(0.0, 0.0); q];
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    for (t, l) in line.iter_mut().enumerate() {
                        *l = data[base + off + t * stride];
                    }
                    for (c, o) in out.iter_mut().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let mut k = 0usize;
                        for l in &line {
                            acc += l * roots[k];
                            k += c;
                            if k >= q {
                                k -= q;
                            }
                        }
                        *o = acc;
                    }
                    for (t, o) in out.iter().enumerate() {
                        data[base + off + t * stride] = *o;
                    }
                }
            }
        }
        stride *= q;
    }
}

pub fn dft(f: &GroupFunction) -> FourierTransform {
    let mut coeffs = f.values.clone();
    transform_axes(&f.group, &mut coeffs, -1.0);
    let n = f.group.size() as f64;
    for c in coeffs.iter_mut() {
        *c /= n;
    }
    FourierTransform { group: f.group.dual(), coeffs }
}

pub fn inverse_dft(t: &FourierTransform) -> GroupFunction {
    let mut values = t.coeffs.clone();
    transform_axes(&t.group, &mut values, 1.0);
    GroupFunction { group: t.group.clone(), values }
}

pub fn convolve(f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    if f.group != g.group {
        return Err(Error::GroupMismatch);
    }
    let (a, b) = (dft(f), dft(g));
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).collect();
    Ok(inverse_dft(&FourierTransform { group: a.group, coeffs }))
}

/// `#{(a, b, c, d) ∈ A⁴ : a + b - c - d = x}` for every `x`, via `|1̂_A|⁴`.
pub fn quadruple_counts(a: &GroupSubset) -> Vec<u64> {
    let t = dft(&GroupFunction::indicator(a));
    let coeffs = t.coeffs.iter().map(|c| Complex64::new(c.norm_sqr().powi(2), 0.0)).collect();
    let f = inverse_dft(&FourierTransform { group: t.group, coeffs });
    let n3 = (a.group().order() as f64).powi(3);
    f.values.iter().map(|v| (v.re * n3).round().max(0.0) as u64).collect()
}

/// `|G|³ (1_A * 1_A * 1_{-A} * 1_{-A})(x)`.
pub fn quadruple_count(a: &GroupSubset, x: usize) -> u64 {
    quadruple_counts(a)[x]
}

/// Characters with `|f̂(χ)| ≥ threshold`, up to [`TOLERANCE`], in index order.
pub fn spectrum(f: &GroupFunction, threshold: f64) -> Vec<Character> {
    spectrum_of(&dft(f), threshold)
}

pub fn spectrum_of(t: &FourierTransform, threshold: f64) -> Vec<Character> {
    t.coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= threshold - TOLERANCE)
        .map(|(i, _)| t.group.character_at(i))
        .collect()
}

/// A Bohr set inside `2A - 2A` with the spectral threshold that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct BogolyubovWitness {
    pub bohr: BohrSet,
    pub threshold: f64,
    pub halvings: u32,
}

/// `B(Spec_θ(1_A); 1/4) ⊆ 2A - 2A`, starting from `θ = α²/2` and halving `θ`
/// until the containment verifies by enumeration.
pub fn bogolyubov_bohr_in_2a2a(a: &GroupSubset) -> Result<BogolyubovWitness> {
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    let group = a.group();
    let alpha = a.density();
    let t = dft(&GroupFunction::indicator(a));
    let two_a = a.sumset(a);
    let target = two_a.diffset(&two_a);
    let quarter = Rational64::new(1, 4);
    let mut threshold = alpha * alpha / 2.0;
    let mut halvings = 0;
    loop {
        let freqs = spectrum_of(&t, threshold);
        let all = freqs.len() == group.size();
        let bohr = BohrSet::new(group, nonzero(freqs), quarter)?;
        if bohr.enumerate().is_subset(&target) {
            return Ok(BogolyubovWitness { bohr, threshold, halvings });
        }
        if all {
            return Err(Error::BoundViolation("B(Ĝ; 1/4) is not inside 2A - 2A".into()));
        }
        threshold /= 2.0;
        halvings += 1;
    }
}

/// Drops the trivial character, which constrains nothing.
pub(crate) fn nonzero(freqs: Vec<Character>) -> Vec<Character> {
    freqs.into_iter().filter(|c| c.0.iter().any(|&v| v != 0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{char_eval, make_group};

    fn naive_dft(f: &GroupFunction) -> Vec<Complex64> {
        let g = &f.group;
        g.characters()
            .map(|chi| {
                let s: Complex64 = g
                    .elements()
                    .enumerate()
                    .map(|(i, x)| f.values[i] * Complex64::from_polar(1.0, -TAU * char_eval(g, &chi, &x).to_f64()))
                    .sum();
                s / g.size() as f64
            })
            .collect()
    }

    #[test]
    fn tensor_transform_matches_definition() {
        let g = make_group(&[3, 4, 2]).unwrap();
        let vals: Vec<f64> = (0..g.size()).map(|i| ((i * 7 + 3) % 5) as f64 - 1.5).collect();
        let f = GroupFunction::from_real(&g, &vals).unwrap();
        let fast = dft(&f);
        for (a, b) in fast.coeffs.iter().zip(naive_dft(&f)) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = inverse_dft(&fast);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_and_delta() {
        let g = make_group(&[5]).unwrap();
        let t = dft(&GroupFunction::from_real(&g, &[1.0; 5]).unwrap());
        assert!((t.coeffs[0].re - 1.0).abs() < 1e-12);
        assert!(t.coeffs[1..].iter().all(|c| c.norm() < 1e-12));
        let t = dft(&GroupFunction::from_real(&g, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(t.coeffs.iter().all(|c| (c.re - 0.2).abs() < 1e-12 && c.im.abs() < 1e-12));
    }

    #[test]
    fn quadruple_example() {
        let g = make_group(&[5]).unwrap();
        let a = GroupSubset::from_indices(&g, [0, 1]);
        assert_eq!(quadruple_count(&a, 0), 6);
    }

    #[test]
    fn spectrum_example() {
        let g = make_group(&[5]).unwrap();
        let f = GroupFunction::indicator(&GroupSubset::from_indices(&g, [0, 1, 4]));
        let spec = spectrum(&f, 0.3);
        let idx: Vec<u64> = spec.iter().map(|c| c.0[0]).collect();
        assert_eq!(idx, vec![0, 1, 4]);
        let c1 = dft(&f).coeffs[1].norm();
        assert!((c1 - (1.0 + 2.0 * (TAU / 5.0).cos()) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn bogolyubov_on_subgroup() {
        let g = make_group(&[8]).unwrap();
        let a = GroupSubset::from_indices(&g, [0, 2, 4, 6]);
        let w = bogolyubov_bohr_in_2a2a(&a).unwrap();
        assert_eq!(w.bohr.enumerate(), a);
    }
}
