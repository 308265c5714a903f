//! Finite abelian groups presented as products of cyclic groups, their
//! characters, torus arithmetic and element subsets.
//!
//! Elements are indexed in mixed radix with the first factor varying fastest,
//! so `x ↦ Σ x_i · Π_{j<i} q_j`.

mod basis;
mod subset;
mod torus;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{invariant_factors, is_basis, subgroup_basis, SubgroupBasis};
pub use subset::GroupSubset;
pub use torus::{char_eval, torus_dist, TorusValue};

/// Default ceiling on group orders handled by enumeration.
pub const DEFAULT_CEILING: u64 = 1 << 24;

/// Environment variable holding the order ceiling as a power of two.
pub const CEILING_ENV: &str = "BOGO_CEILING";

/// Order ceiling in effect: `2^BOGO_CEILING` if set and valid, else [`DEFAULT_CEILING`].
pub fn order_ceiling() -> u64 {
    std::env::var(CEILING_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .filter(|&bits| bits < 63)
        .map_or(DEFAULT_CEILING, |bits| 1u64 << bits)
}

/// `⊕ ℤ/q_i` with precomputed mixed-radix strides.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    moduli: Arc<[u64]>,
    strides: Arc<[u64]>,
    order: u64,
    exponent: u64,
}

/// An element of a [`FiniteAbelianGroup`], coordinates reduced into `[0, q_i)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<u64>);

/// A character `x ↦ Σ χ_i x_i / q_i mod 1`, identified with an element of the dual.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Character(pub Vec<u64>);

impl GroupElement {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }
}

impl Character {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    /// The same coordinates read as an element of the dual group.
    pub fn as_element(&self) -> GroupElement {
        GroupElement(self.0.clone())
    }

    pub fn from_element(x: &GroupElement) -> Self {
        Character(x.0.clone())
    }
}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.moduli.is_empty() {
            return write!(f, "Z1");
        }
        let parts: Vec<String> = self.moduli.iter().map(|q| format!("Z{q}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Builds `⊕ ℤ/q_i` under the configured ceiling.
pub fn make_group(moduli: &[i64]) -> Result<FiniteAbelianGroup> {
    FiniteAbelianGroup::with_ceiling(moduli, order_ceiling())
}

impl FiniteAbelianGroup {
    pub fn new(moduli: &[i64]) -> Result<Self> {
        make_group(moduli)
    }

    pub fn with_ceiling(moduli: &[i64], ceiling: u64) -> Result<Self> {
        let mut qs = Vec::with_capacity(moduli.len());
        let mut order: u128 = 1;
        for &q in moduli {
            if q < 1 {
                return Err(Error::InvalidModulus(q));
            }
            qs.push(q as u64);
            order = order.saturating_mul(q as u128);
        }
        if order > ceiling as u128 {
            return Err(Error::GroupTooLarge { order, ceiling });
        }
        let mut strides = Vec::with_capacity(qs.len());
        let mut acc = 1u64;
        for &q in &qs {
            strides.push(acc);
            acc *= q;
        }
        let exponent = qs.iter().fold(1u64, |e, &q| num_integer::lcm(e, q));
        Ok(FiniteAbelianGroup {
            moduli: qs.into(),
            strides: strides.into(),
            order: order as u64,
            exponent,
        })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of cyclic factors in the presentation.
    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `|G|` as a `usize`, the length of index-based tables.
    pub fn size(&self) -> usize {
        self.order as usize
    }

    /// Least common multiple of the moduli.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// The dual group, which shares the moduli.
    pub fn dual(&self) -> FiniteAbelianGroup {
        self.clone()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    /// Element with the given coordinates, reduced modulo each `q_i`.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        self.check_len(coords.len())?;
        Ok(GroupElement(
            coords
                .iter()
                .zip(self.moduli.iter())
                .map(|(&c, &q)| c.rem_euclid(q as i64) as u64)
                .collect(),
        ))
    }

    pub fn character(&self, coords: &[i64]) -> Result<Character> {
        self.element(coords).map(|x| Character(x.0))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), got });
        }
        Ok(())
    }

    /// Whether every coordinate lies in range.
    pub fn is_valid(&self, coords: &[u64]) -> bool {
        coords.len() == self.rank() && coords.iter().zip(self.moduli.iter()).all(|(c, q)| c < q)
    }

    pub fn index_of(&self, x: &GroupElement) -> usize {
        self.index_of_coords(&x.0)
    }

    pub fn index_of_coords(&self, coords: &[u64]) -> usize {
        coords
            .iter()
            .zip(self.strides.iter())
            .map(|(c, s)| c * s)
            .sum::<u64>() as usize
    }

    pub fn element_at(&self, idx: usize) -> GroupElement {
        let mut out = vec![0; self.rank()];
        self.coords_into(idx, &mut out);
        GroupElement(out)
    }

    pub fn character_at(&self, idx: usize) -> Character {
        Character(self.element_at(idx).0)
    }

    /// Writes the coordinates of element `idx` into `out`.
    pub fn coords_into(&self, idx: usize, out: &mut [u64]) {
        let mut rest = idx as u64;
        for (o, &q) in out.iter_mut().zip(self.moduli.iter()) {
            *o = rest % q;
            rest /= q;
        }
    }

    pub fn add_idx(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a as u64, b as u64);
        let mut out = 0u64;
        for (&q, &s) in self.moduli.iter().zip(self.strides.iter()) {
            let c = (a % q + b % q) % q;
            out += c * s;
            a /= q;
            b /= q;
        }
        out as usize
    }

    pub fn sub_idx(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a as u64, b as u64);
        let mut out = 0u64;
        for (&q, &s) in self.moduli.iter().zip(self.strides.iter()) {
            let c = (a % q + q - b % q) % q;
            out += c * s;
            a /= q;
            b /= q;
        }
        out as usize
    }

    pub fn neg_idx(&self, a: usize) -> usize {
        self.sub_idx(0, a)
    }

    /// `k · a` for any integer `k`.
    pub fn scale_idx(&self, a: usize, k: i64) -> usize {
        let mut a = a as u64;
        let mut out = 0u64;
        for (&q, &s) in self.moduli.iter().zip(self.strides.iter()) {
            let k = k.rem_euclid(q as i64) as u128;
            let c = ((a % q) as u128 * k % q as u128) as u64;
            out += c * s;
            a /= q;
        }
        out as usize
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(self.moduli.iter())
                .map(|((x, y), q)| (x + y) % q)
                .collect(),
        )
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(self.moduli.iter())
                .map(|((x, y), q)| (x + q - y) % q)
                .collect(),
        )
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        self.sub(&self.zero(), a)
    }

    pub fn scale(&self, a: &GroupElement, k: i64) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(self.moduli.iter())
                .map(|(&x, &q)| {
                    let k = k.rem_euclid(q as i64) as u128;
                    (x as u128 * k % q as u128) as u64
                })
                .collect(),
        )
    }

    /// `Σ λ_i g_i`.
    pub fn combination(&self, coeffs: &[i64], gens: &[GroupElement]) -> GroupElement {
        coeffs
            .iter()
            .zip(gens)
            .fold(self.zero(), |acc, (&c, g)| self.add(&acc, &self.scale(g, c)))
    }

    /// Order of an element: lcm of `q_i / gcd(x_i, q_i)`.
    pub fn order_of(&self, x: &GroupElement) -> u64 {
        x.0.iter()
            .zip(self.moduli.iter())
            .fold(1u64, |acc, (&c, &q)| num_integer::lcm(acc, q / num_integer::gcd(c, q)))
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.size()).map(move |i| self.element_at(i))
    }

    pub fn characters(&self) -> impl Iterator<Item = Character> + '_ {
        (0..self.size()).map(move |i| self.character_at(i))
    }

    /// The standard generator `e_i`.
    pub fn unit(&self, i: usize) -> GroupElement {
        let mut c = vec![0; self.rank()];
        if self.moduli[i] > 1 {
            c[i] = 1;
        }
        GroupElement(c)
    }

    /// Numerator of `χ(x)` over the exponent `E`, in `[0, E)`.
    pub fn eval_scaled(&self, chi: &[u64], x: &[u64]) -> u64 {
        let e = self.exponent;
        let mut acc = 0u64;
        for ((&c, &v), &q) in chi.iter().zip(x).zip(self.moduli.iter()) {
            let t = (c as u128 * v as u128 % q as u128) as u64;
            acc = (acc + t * (e / q)) % e;
        }
        acc
    }

    /// `E · ‖χ(x)‖` for every element, indexed by element.
    pub fn scaled_distances(&self, chi: &Character) -> Vec<u64> {
        let e = self.exponent;
        let mut coords = vec![0u64; self.rank()];
        (0..self.size())
            .map(|i| {
                self.coords_into(i, &mut coords);
                let v = self.eval_scaled(&chi.0, &coords);
                v.min(e - v)
            })
            .collect()
    }
}

/// `{Σ λ_i s_i : |λ_i| ≤ R}`.
///
/// Enumerates coefficient vectors directly when `(2R+1)^k ≤ |G|`, otherwise
/// grows the set one generator at a time.
pub fn bounded_span(group: &FiniteAbelianGroup, gens: &[GroupElement], radius: u64) -> GroupSubset {
    let k = gens.len() as u32;
    let box_size = (2 * radius as u128 + 1).checked_pow(k);
    let mut out = GroupSubset::empty(group);
    if box_size.is_some_and(|b| b <= group.order() as u128) {
        let idx: Vec<usize> = gens.iter().map(|g| group.index_of(g)).collect();
        let r = radius as i64;
        let mut lambda = vec![-r; gens.len()];
        loop {
            let x = lambda
                .iter()
                .zip(&idx)
                .fold(0usize, |acc, (&l, &g)| group.add_idx(acc, group.scale_idx(g, l)));
            out.insert_idx(x);
            let mut pos = 0;
            loop {
                if pos == lambda.len() {
                    return out;
                }
                if lambda[pos] < r {
                    lambda[pos] += 1;
                    break;
                }
                lambda[pos] = -r;
                pos += 1;
            }
        }
    }
    out.insert_idx(0);
    for g in gens {
        let gi = group.index_of(g);
        let ord = group.order_of(g);
        let reach = radius.min(ord / 2) as i64;
        let steps: Vec<usize> = (-reach..=reach).map(|l| group.scale_idx(gi, l)).collect();
        let mut next = GroupSubset::empty(group);
        for x in out.indices() {
            for &s in &steps {
                next.insert_idx(group.add_idx(x, s));
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_index_roundtrip() {
        let g = make_group(&[2, 3, 4]).unwrap();
        assert_eq!(g.order(), 24);
        assert_eq!(g.index_of(&g.element(&[1, 0, 0]).unwrap()), 1);
        assert_eq!(g.index_of(&g.element(&[0, 1, 0]).unwrap()), 2);
        assert_eq!(g.index_of(&g.element(&[0, 0, 1]).unwrap()), 6);
        for i in 0..g.size() {
            assert_eq!(g.index_of(&g.element_at(i)), i);
        }
    }

    #[test]
    fn index_arithmetic_matches_coordinates() {
        let g = make_group(&[6, 4]).unwrap();
        for a in 0..g.size() {
            for b in 0..g.size() {
                let (x, y) = (g.element_at(a), g.element_at(b));
                assert_eq!(g.add_idx(a, b), g.index_of(&g.add(&x, &y)));
                assert_eq!(g.sub_idx(a, b), g.index_of(&g.sub(&x, &y)));
            }
            assert_eq!(g.scale_idx(a, -3), g.index_of(&g.scale(&g.element_at(a), -3)));
        }
    }

    #[test]
    fn rejects_bad_moduli_and_large_orders() {
        assert_eq!(make_group(&[0]).unwrap_err(), Error::InvalidModulus(0));
        assert!(matches!(
            FiniteAbelianGroup::with_ceiling(&[1 << 13, 1 << 12], DEFAULT_CEILING),
            Err(Error::GroupTooLarge { .. })
        ));
        assert!(FiniteAbelianGroup::with_ceiling(&[1 << 12, 1 << 12], DEFAULT_CEILING).is_ok());
    }

    #[test]
    fn bounded_span_examples() {
        let g = make_group(&[8]).unwrap();
        let s = bounded_span(&g, &[g.element(&[2]).unwrap()], 1);
        assert_eq!(s.indices().collect::<Vec<_>>(), vec![0, 2, 6]);
        let g = make_group(&[4]).unwrap();
        assert_eq!(bounded_span(&g, &[g.element(&[1]).unwrap()], 2).len(), 4);
    }

    #[test]
    fn bounded_span_paths_agree() {
        let g = make_group(&[5, 7]).unwrap();
        let gens = [g.element(&[1, 2]).unwrap(), g.element(&[3, 1]).unwrap()];
        // (2R+1)^2 = 25 ≤ 35 uses enumeration, R = 3 uses the sumset path.
        for r in 0..5 {
            let got = bounded_span(&g, &gens, r);
            let mut brute = GroupSubset::empty(&g);
            let r = r as i64;
            for a in -r..=r {
                for b in -r..=r {
                    brute.insert(&g.combination(&[a, b], &gens));
                }
            }
            assert_eq!(got, brute, "R = {r}");
        }
    }
}
