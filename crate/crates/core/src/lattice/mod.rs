//! Integer lattices: annihilators of character tuples, span membership,
//! bounded representations and bounded-span covers.

pub mod matrix;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupElement, GroupSubset};
use matrix::IntMatrix;

/// Largest half-box enumerated by the meet-in-the-middle searches.
pub const HALF_BOX_LIMIT: u128 = 1 << 26;

/// A sublattice of `ℤ^k` given by generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLattice {
    dim: usize,
    generators: Vec<Vec<i64>>,
}

impl IntegerLattice {
    pub fn zero(dim: usize) -> Self {
        IntegerLattice { dim, generators: Vec::new() }
    }

    pub fn new(dim: usize, generators: Vec<Vec<i64>>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.len() != dim) {
            return Err(Error::RankMismatch { expected: dim, got: g.len() });
        }
        Ok(IntegerLattice { dim, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<i64>] {
        &self.generators
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        in_z_span(x, &self.generators)
    }

    /// The lattice generated by `self` and `v`.
    pub fn extend(&self, v: Vec<i64>) -> Result<Self> {
        let mut gens = self.generators.clone();
        gens.push(v);
        IntegerLattice::new(self.dim, gens)
    }

    /// `[ℤ^k : Λ]` for full-rank lattices, `None` otherwise.
    pub fn index(&self) -> Option<BigInt> {
        let ech = matrix::echelon(&matrix::from_i64(&self.generators));
        if ech.rank() < self.dim {
            return None;
        }
        Some(ech.rows.iter().enumerate().map(|(i, r)| r[ech.pivots[i]].clone()).product())
    }
}

fn reduce_against(x: &[i64], ech: &matrix::Echelon) -> Option<Vec<BigInt>> {
    let mut w: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
    let mut coeffs = Vec::with_capacity(ech.rank());
    for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
        if w[..p].iter().any(|v| !v.is_zero()) {
            return None;
        }
        let piv = &row[p];
        if !(&w[p] % piv).is_zero() {
            return None;
        }
        let c = &w[p] / piv;
        for (wv, rv) in w.iter_mut().zip(row) {
            *wv -= &c * rv;
        }
        coeffs.push(c);
    }
    w.iter().all(Zero::is_zero).then_some(coeffs)
}

/// Whether `x` is an integer combination of the generators.
pub fn in_z_span(x: &[i64], generators: &[Vec<i64>]) -> bool {
    if generators.is_empty() {
        return x.iter().all(|&v| v == 0);
    }
    let ech = matrix::echelon(&matrix::from_i64(generators));
    reduce_against(x, &ech).is_some()
}

/// Integer coefficients `μ` with `Σ μ_i z^i = w`, if any.
pub fn z_span_coefficients(w: &[i64], z: &[Vec<i64>]) -> Option<Vec<BigInt>> {
    if z.is_empty() {
        return w.iter().all(|&v| v == 0).then(Vec::new);
    }
    let ech = matrix::echelon(&matrix::from_i64(z));
    let c = reduce_against(w, &ech)?;
    let mut mu = vec![BigInt::zero(); z.len()];
    for (ci, urow) in c.iter().zip(&ech.transform) {
        for (m, u) in mu.iter_mut().zip(urow) {
            *m += ci * u;
        }
    }
    Some(mu)
}

/// Iterates `[-K, K]^k` in lexicographic order, first coordinate most significant.
fn for_each_box(k: usize, bound: i64, mut f: impl FnMut(&[i64])) {
    let mut v = vec![-bound; k];
    loop {
        f(&v);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if v[pos] < bound {
                v[pos] += 1;
                break;
            }
            v[pos] = -bound;
        }
    }
}

fn box_size(k: usize, bound: u64) -> u128 {
    (2 * bound as u128 + 1).checked_pow(k as u32).unwrap_or(u128::MAX)
}

/// Visits every `a ∈ [-K, K]^k` with `Σ a_i s_i = 0`, meeting in the middle.
pub fn for_each_annihilator_point(
    group: &FiniteAbelianGroup,
    s: &[GroupElement],
    bound: u64,
    mut f: impl FnMut(&[i64]),
) -> Result<()> {
    let k = s.len();
    let h = k / 2;
    let half = box_size(k - h, bound);
    if half > HALF_BOX_LIMIT {
        return Err(Error::Infeasible { what: "annihilator half-box", size: half, limit: HALF_BOX_LIMIT });
    }
    let idx: Vec<usize> = s.iter().map(|x| group.index_of(x)).collect();
    let bound = bound as i64;
    let sum = |coeffs: &[i64], gens: &[usize]| {
        coeffs
            .iter()
            .zip(gens)
            .fold(0usize, |acc, (&c, &g)| group.add_idx(acc, group.scale_idx(g, c)))
    };
    let mut left: HashMap<usize, Vec<Vec<i64>>> = HashMap::new();
    for_each_box(h, bound, |a| {
        left.entry(sum(a, &idx[..h])).or_default().push(a.to_vec());
    });
    let mut point = vec![0i64; k];
    for_each_box(k - h, bound, |b| {
        let target = group.neg_idx(sum(b, &idx[h..]));
        if let Some(list) = left.get(&target) {
            point[h..].copy_from_slice(b);
            for a in list {
                point[..h].copy_from_slice(a);
                f(&point);
            }
        }
    });
    Ok(())
}

/// All `a ∈ [-K, K]^k` with `Σ a_i s_i = 0`, sorted lexicographically.
pub fn annihilator_points(group: &FiniteAbelianGroup, s: &[GroupElement], bound: u64) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    for_each_annihilator_point(group, s, bound, |a| out.push(a.to_vec()))?;
    out.sort();
    Ok(out)
}

fn rational_inverse(z: &IntMatrix) -> (BigInt, Vec<Vec<BigRational>>) {
    let m = z.len();
    let mut a: Vec<Vec<BigRational>> = z
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row.iter().map(|v| BigRational::from_integer(v.clone())).collect();
            r.extend((0..m).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    let mut det = BigRational::one();
    for c in 0..m {
        let p = (c..m).find(|&r| !a[r][c].is_zero()).expect("invertible");
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for v in a[c].iter_mut() {
            *v /= &piv;
        }
        for r in 0..m {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..2 * m {
                    let t = &a[c][j] * &f;
                    a[r][j] -= t;
                }
            }
        }
    }
    let inv = a.into_iter().map(|row| row[m..].to_vec()).collect();
    (det.to_integer(), inv)
}

fn factorial(k: usize) -> BigInt {
    (1..=k).map(BigInt::from).product()
}

/// `λ ∈ ℤ^r` with `Σ λ_i z^i = w` and `|λ_i| ≤ k! K₁^{k+1} (K₂ + r)`.
///
/// Picks a maximal independent subfamily, reduces the remaining coefficients
/// modulo the determinant of an invertible minor, and solves for the rest.
pub fn bounded_representation(w: &[i64], z: &[Vec<i64>], k1: u64, k2: u64) -> Result<Vec<i64>> {
    let k = w.len();
    if z.iter().any(|v| v.len() != k) {
        return Err(Error::RankMismatch { expected: k, got: z.iter().map(Vec::len).find(|&l| l != k).unwrap_or(k) });
    }
    if z.iter().flatten().any(|&v| v.unsigned_abs() > k1) || w.iter().any(|&v| v.unsigned_abs() > k2) {
        return Err(Error::Precondition("entries exceed the stated bounds".into()));
    }
    let mu = z_span_coefficients(w, z).ok_or(Error::NotInSpan)?;
    let r = z.len();

    // Maximal independent subfamily I, greedily in index order.
    let mut indep: Vec<usize> = Vec::new();
    for j in 0..r {
        let mut rows: Vec<Vec<i64>> = indep.iter().map(|&i| z[i].clone()).collect();
        rows.push(z[j].clone());
        if matrix::echelon(&matrix::from_i64(&rows)).rank() == rows.len() {
            indep.push(j);
        }
    }
    let m = indep.len();
    let mut lambda = vec![BigInt::zero(); r];
    if m > 0 {
        let rows: Vec<Vec<i64>> = indep.iter().map(|&i| z[i].clone()).collect();
        let coords = matrix::echelon(&matrix::from_i64(&rows)).pivots;
        // Z[a][b] = z^{I_b}[J_a], so Z λ_I = w_J.
        let zmat: IntMatrix = coords
            .iter()
            .map(|&c| indep.iter().map(|&i| BigInt::from(z[i][c])).collect())
            .collect();
        let (det, inv) = rational_inverse(&zmat);
        let modulus = det.abs();
        for j in (0..r).filter(|j| !indep.contains(j)) {
            lambda[j] = ((&mu[j] % &modulus) + &modulus) % &modulus;
        }
        let rhs: Vec<BigInt> = coords
            .iter()
            .map(|&c| {
                let mut v = BigInt::from(w[c]);
                for j in (0..r).filter(|j| !indep.contains(j)) {
                    v -= &lambda[j] * BigInt::from(z[j][c]);
                }
                v
            })
            .collect();
        for (a, &i) in indep.iter().enumerate() {
            let val: BigRational = inv[a]
                .iter()
                .zip(&rhs)
                .map(|(x, y)| x * BigRational::from_integer(y.clone()))
                .fold(BigRational::zero(), |s, t| s + t);
            if !val.is_integer() {
                return Err(Error::BoundViolation("non-integral solve in bounded representation".into()));
            }
            lambda[i] = val.to_integer();
        }
    }
    for c in 0..k {
        let s: BigInt = lambda.iter().zip(z).map(|(l, v)| l * BigInt::from(v[c])).sum();
        if s != BigInt::from(w[c]) {
            return Err(Error::BoundViolation("bounded representation does not reproduce w".into()));
        }
    }
    let limit = factorial(k) * BigInt::from(k1).pow(k as u32 + 1) * BigInt::from(k2 + r as u64);
    if lambda.iter().any(|l| l.abs() > limit) {
        return Err(Error::BoundViolation(format!("coefficient exceeds {limit}")));
    }
    Ok(lambda.iter().map(|l| l.to_i64().expect("bounded coefficient fits")).collect())
}

/// `8 k² (log k + log K)` with each logarithm read as `ln x + 2`.
pub fn chain_monitor_budget(k: usize, bound: u64) -> u64 {
    if k == 0 {
        return 0;
    }
    let k = k as f64;
    let logs = (k.ln() + 2.0) + ((bound.max(1)) as f64).ln() + 2.0;
    (8.0 * k * k * logs).ceil() as u64
}

/// Tracks a strictly increasing chain of lattices in `ℤ^k`, each step
/// witnessed by a vector of `[-K, K]^k` outside the previous lattice.
#[derive(Clone, Debug)]
pub struct ChainMonitor {
    lattice: IntegerLattice,
    bound: u64,
    budget: u64,
    length: u64,
}

impl ChainMonitor {
    pub fn new(dim: usize, bound: u64) -> Self {
        ChainMonitor {
            lattice: IntegerLattice::zero(dim),
            bound,
            budget: chain_monitor_budget(dim, bound),
            length: 0,
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn lattice(&self) -> &IntegerLattice {
        &self.lattice
    }

    /// Adjoins `v`, which must lie in the box and outside the current lattice.
    pub fn push(&mut self, v: Vec<i64>) -> Result<u64> {
        if v.iter().any(|c| c.unsigned_abs() > self.bound) {
            return Err(Error::Precondition("chain witness outside the box".into()));
        }
        if self.lattice.contains(&v) {
            return Err(Error::Precondition("chain step does not enlarge the lattice".into()));
        }
        self.lattice = self.lattice.extend(v)?;
        self.length += 1;
        if self.length > self.budget {
            return Err(Error::BoundViolation(format!(
                "chain length {} exceeds budget {}",
                self.length, self.budget
            )));
        }
        Ok(self.length)
    }
}

/// Output of [`span_cover`].
#[derive(Clone, Debug, Serialize)]
pub struct SpanCover {
    /// The chosen `b_1, …, b_ℓ`.
    pub vectors: Vec<GroupElement>,
    /// Their preimages in `[-R, R]^k`.
    pub preimages: Vec<Vec<i64>>,
    /// Largest coefficient needed, so `B ⊆ ⟨b_1, …, b_ℓ⟩_S`.
    pub coefficient_bound: u64,
    pub chain_budget: u64,
}

/// Greedy cover of `B ⊆ ⟨a_1, …, a_k⟩_R` by a bounded span of few elements of `B`.
pub fn span_cover(
    group: &FiniteAbelianGroup,
    b: &GroupSubset,
    a: &[GroupElement],
    radius: u64,
) -> Result<SpanCover> {
    let k = a.len();
    let size = box_size(k, radius);
    if size > HALF_BOX_LIMIT {
        return Err(Error::Infeasible { what: "span cover box", size, limit: HALF_BOX_LIMIT });
    }
    let idx: Vec<usize> = a.iter().map(|x| group.index_of(x)).collect();
    let mut preimage: Vec<Option<Vec<i64>>> = vec![None; group.size()];
    for_each_box(k, radius as i64, |x| {
        let s = x
            .iter()
            .zip(&idx)
            .fold(0usize, |acc, (&c, &g)| group.add_idx(acc, group.scale_idx(g, c)));
        if preimage[s].is_none() {
            preimage[s] = Some(x.to_vec());
        }
    });
    let mut targets = Vec::new();
    for i in b.indices() {
        let x = preimage[i]
            .clone()
            .ok_or_else(|| Error::Precondition(format!("element {i} is outside the bounded span")))?;
        targets.push((i, x));
    }
    let mut chosen: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, x) in &targets {
        let basis: Vec<Vec<i64>> = chosen.iter().map(|(_, v)| v.clone()).collect();
        if !in_z_span(x, &basis) {
            chosen.push((*i, x.clone()));
        }
    }
    if chosen.is_empty() {
        if let Some(first) = targets.first() {
            chosen.push(first.clone());
        }
    }
    let basis: Vec<Vec<i64>> = chosen.iter().map(|(_, v)| v.clone()).collect();
    let vectors: Vec<GroupElement> = chosen.iter().map(|(i, _)| group.element_at(*i)).collect();
    let mut s_max = 1u64;
    for (i, x) in &targets {
        let lambda = bounded_representation(x, &basis, radius, radius)?;
        if group.combination(&lambda, &vectors) != group.element_at(*i) {
            return Err(Error::BoundViolation("span cover representation mismatch".into()));
        }
        s_max = s_max.max(lambda.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0));
    }
    let chain_budget = chain_monitor_budget(k, radius);
    if chosen.len() as u64 > chain_budget.max(1) {
        return Err(Error::BoundViolation(format!(
            "span cover length {} exceeds chain budget {chain_budget}",
            chosen.len()
        )));
    }
    Ok(SpanCover { vectors, preimages: basis, coefficient_bound: s_max, chain_budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    #[test]
    fn annihilator_example() {
        let g = make_group(&[4]).unwrap();
        let pts = annihilator_points(&g, &[g.element(&[2]).unwrap()], 2).unwrap();
        assert_eq!(pts, vec![vec![-2], vec![0], vec![2]]);
    }

    #[test]
    fn annihilator_matches_brute_force() {
        let g = make_group(&[6, 4]).unwrap();
        let s = [g.element(&[1, 2]).unwrap(), g.element(&[3, 1]).unwrap(), g.element(&[2, 2]).unwrap()];
        let got = annihilator_points(&g, &s, 3).unwrap();
        let mut brute = Vec::new();
        for_each_box(3, 3, |a| {
            if g.combination(a, &s) == g.zero() {
                brute.push(a.to_vec());
            }
        });
        assert_eq!(got, brute);
    }

    #[test]
    fn span_membership() {
        assert!(!in_z_span(&[3], &[vec![2]]));
        assert!(in_z_span(&[4, 3], &[vec![2, 0], vec![0, 3]]));
        assert!(in_z_span(&[0, 0], &[]));
        assert!(in_z_span(&[1], &[vec![6], vec![10], vec![15]]));
    }

    #[test]
    fn bounded_representation_examples() {
        let l = bounded_representation(&[4, 3], &[vec![2, 0], vec![0, 3]], 3, 4).unwrap();
        assert_eq!(l, vec![2, 1]);
        let l = bounded_representation(&[2, 4], &[vec![1, 2], vec![3, 1]], 3, 4).unwrap();
        assert_eq!(l, vec![2, 0]);
        assert_eq!(bounded_representation(&[3], &[vec![2]], 2, 3), Err(Error::NotInSpan));
    }

    #[test]
    fn span_cover_example() {
        let g = make_group(&[100]).unwrap();
        let b = GroupSubset::from_indices(&g, [2, 3]);
        let cover = span_cover(&g, &b, &[g.element(&[1]).unwrap()], 3).unwrap();
        assert_eq!(cover.vectors, vec![g.element(&[2]).unwrap(), g.element(&[3]).unwrap()]);
        assert_eq!(cover.coefficient_bound, 1);
        let single = GroupSubset::from_indices(&g, [7]);
        let cover = span_cover(&g, &single, &[g.element(&[1]).unwrap(), g.element(&[5]).unwrap()], 3).unwrap();
        assert_eq!(cover.vectors, vec![g.element(&[7]).unwrap()]);
        assert_eq!(cover.coefficient_bound, 1);
    }

    #[test]
    fn chain_monitor_tracks_index_two_steps() {
        let mut mon = ChainMonitor::new(2, 2);
        for v in [vec![2, 0], vec![0, 2], vec![1, 0], vec![0, 1]] {
            mon.push(v).unwrap();
        }
        assert_eq!(mon.length(), 4);
        assert!(mon.length() <= mon.budget());
        assert!(mon.push(vec![1, 1]).is_err());
        assert_eq!(mon.lattice().index(), Some(BigInt::one()));
    }
}
