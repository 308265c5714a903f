use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{Character, FiniteAbelianGroup, GroupElement};

/// A point of `ℝ/ℤ` with rational representative `num/den ∈ [0, 1)`, reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct TorusValue {
    pub num: u64,
    pub den: u64,
}

impl TorusValue {
    pub fn new(num: u64, den: u64) -> Self {
        let num = num % den;
        let g = num.gcd(&den);
        TorusValue { num: num / g, den: den / g }
    }

    /// `‖t‖ = min(t, 1 - t)`.
    pub fn dist(self) -> Rational64 {
        let n = self.num.min(self.den - self.num);
        Rational64::new(n as i64, self.den as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `χ(x) = Σ (χ_i x_i mod q_i) / q_i mod 1`.
pub fn char_eval(group: &FiniteAbelianGroup, chi: &Character, x: &GroupElement) -> TorusValue {
    TorusValue::new(group.eval_scaled(&chi.0, &x.0), group.exponent())
}

/// Distance to the nearest integer.
pub fn torus_dist(t: TorusValue) -> Rational64 {
    t.dist()
}
