//! Coset progressions `x₀ + Σ [lo_i, hi_i]·v_i + H`, Freiman homomorphisms
//! between them and the structural moves used to find large subprogressions.

mod extract;
mod popular;
mod projectivity;
mod refine;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{is_basis, FiniteAbelianGroup, GroupElement, GroupSubset};

pub use extract::{extract_subprogression, Extraction};
pub use popular::{popular_difference_in_progression, popular_difference_progression, PopularProgression};
pub use projectivity::{
    injectivity_partition, partial_projectivity, InjectivityPartition, PartialProjection, QuotientHom,
};
pub use refine::{intersect_refine, Refinement};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Arm {
    pub generator: GroupElement,
    pub lo: i64,
    pub hi: i64,
}

impl Arm {
    pub fn new(generator: GroupElement, lo: i64, hi: i64) -> Self {
        Arm { generator, lo, hi }
    }

    /// `[-n, n]·v`.
    pub fn symmetric(generator: GroupElement, n: i64) -> Self {
        Arm { generator, lo: -n, hi: n }
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// `base + Σ [lo_i, hi_i]·v_i + H` with `H` an explicit, verified subgroup.
#[derive(Clone, PartialEq, Eq)]
pub struct CosetProgression {
    group: FiniteAbelianGroup,
    base: GroupElement,
    arms: Vec<Arm>,
    subgroup: GroupSubset,
}

impl fmt::Debug for CosetProgression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CosetProgression")
            .field("group", &self.group)
            .field("base", &self.base.0)
            .field("arms", &self.arms)
            .field("subgroup_size", &self.subgroup.len())
            .finish()
    }
}

impl Serialize for CosetProgression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            base: &'a [u64],
            arms: &'a [Arm],
            subgroup_generators: Vec<Vec<u64>>,
            subgroup_size: usize,
            rank: usize,
            size: usize,
        }
        View {
            base: &self.base.0,
            arms: &self.arms,
            subgroup_generators: self.subgroup.generators().into_iter().map(|g| g.0).collect(),
            subgroup_size: self.subgroup.len(),
            rank: self.rank(),
            size: self.enumerate().len(),
        }
        .serialize(s)
    }
}

/// Coefficients of an element of a proper progression: arm coefficients and
/// the subgroup component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coordinates {
    pub coeffs: Vec<i64>,
    pub subgroup: usize,
}

impl CosetProgression {
    pub fn new(group: &FiniteAbelianGroup, base: GroupElement, arms: Vec<Arm>, subgroup: GroupSubset) -> Result<Self> {
        if subgroup.group() != group {
            return Err(Error::GroupMismatch);
        }
        if !group.is_valid(&base.0) || arms.iter().any(|a| !group.is_valid(&a.generator.0)) {
            return Err(Error::Precondition("progression data outside the group".into()));
        }
        if arms.iter().any(Arm::is_empty) {
            return Err(Error::Precondition("arm with hi < lo".into()));
        }
        if !subgroup.is_subgroup() {
            return Err(Error::Precondition("subgroup part is not a subgroup".into()));
        }
        Ok(CosetProgression { group: group.clone(), base, arms, subgroup })
    }

    /// `Σ [-N_i, N_i]·v_i + H`.
    pub fn symmetric(group: &FiniteAbelianGroup, arms: Vec<(GroupElement, i64)>, subgroup: GroupSubset) -> Result<Self> {
        let arms = arms.into_iter().map(|(v, n)| Arm::symmetric(v, n)).collect();
        Self::new(group, group.zero(), arms, subgroup)
    }

    /// The subgroup `H` as a rank-zero progression.
    pub fn from_subgroup(subgroup: GroupSubset) -> Result<Self> {
        let g = subgroup.group().clone();
        Self::new(&g, g.zero(), vec![], subgroup)
    }

    /// The single point `x`.
    pub fn point(group: &FiniteAbelianGroup, x: GroupElement) -> Result<Self> {
        Self::new(group, x, vec![], GroupSubset::singleton(group, 0))
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn base(&self) -> &GroupElement {
        &self.base
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn subgroup(&self) -> &GroupSubset {
        &self.subgroup
    }

    pub fn rank(&self) -> usize {
        self.arms.len()
    }

    /// `|H| Π (hi_i - lo_i + 1)`, saturating.
    pub fn formal_size(&self) -> u128 {
        self.arms
            .iter()
            .fold(self.subgroup.len() as u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    pub fn is_symmetric(&self) -> bool {
        self.base.0.iter().all(|&c| c == 0) && self.arms.iter().all(|a| a.lo == -a.hi)
    }

    pub fn enumerate(&self) -> GroupSubset {
        let g = &self.group;
        let mut set = GroupSubset::singleton(g, g.index_of(&self.base));
        for arm in &self.arms {
            let v = g.index_of(&arm.generator);
            let steps: Vec<usize> = (arm.lo..=arm.hi).map(|c| g.scale_idx(v, c)).collect();
            let mut next = GroupSubset::empty(g);
            for x in set.indices() {
                for &s in &steps {
                    next.insert_idx(g.add_idx(x, s));
                }
            }
            set = next;
        }
        set.sumset(&self.subgroup)
    }

    /// Distinct formal sums give distinct elements.
    pub fn is_proper(&self) -> bool {
        let formal = self.formal_size();
        formal <= self.group.order() as u128 && self.enumerate().len() as u128 == formal
    }

    /// Element index ↦ coordinates, for proper progressions.
    pub fn coordinate_map(&self) -> Result<HashMap<usize, Coordinates>> {
        if !self.is_proper() {
            return Err(Error::Precondition("coordinates need a proper progression".into()));
        }
        let g = &self.group;
        let mut partial: Vec<(usize, Vec<i64>)> = vec![(g.index_of(&self.base), vec![])];
        for arm in &self.arms {
            let v = g.index_of(&arm.generator);
            let mut next = Vec::with_capacity(partial.len() * arm.len() as usize);
            for (x, coeffs) in &partial {
                for c in arm.lo..=arm.hi {
                    let mut cs = coeffs.clone();
                    cs.push(c);
                    next.push((g.add_idx(*x, g.scale_idx(v, c)), cs));
                }
            }
            partial = next;
        }
        let mut out = HashMap::with_capacity(self.formal_size() as usize);
        for (x, coeffs) in partial {
            for h in self.subgroup.indices() {
                out.insert(g.add_idx(x, h), Coordinates { coeffs: coeffs.clone(), subgroup: h });
            }
        }
        Ok(out)
    }

    /// `base + Σ c_i v_i + h`.
    pub fn point_at(&self, coeffs: &[i64], h: usize) -> usize {
        let g = &self.group;
        let arms = coeffs
            .iter()
            .zip(&self.arms)
            .fold(g.index_of(&self.base), |acc, (&c, a)| g.add_idx(acc, g.scale_idx(g.index_of(&a.generator), c)));
        g.add_idx(arms, h)
    }

    /// The same progression moved by `t`.
    pub fn translate(&self, t: &GroupElement) -> CosetProgression {
        let mut out = self.clone();
        out.base = self.group.add(&self.base, t);
        out
    }
}

/// Whether `a, b ∈ A` and `a - b ∈ B` imply `a - b ∈ A`.
pub fn is_freiman_subgroup(a: &GroupSubset, b: &GroupSubset) -> Result<bool> {
    if !a.is_subset(b) {
        return Err(Error::Precondition("A is not a subset of B".into()));
    }
    let g = a.group();
    let elems: Vec<usize> = a.indices().collect();
    Ok(elems.iter().all(|&x| {
        elems.iter().all(|&y| {
            let d = g.sub_idx(x, y);
            !b.contains_idx(d) || a.contains_idx(d)
        })
    }))
}

/// A map from a coset progression into another group, stored as a table.
#[derive(Clone, Debug)]
pub struct FreimanMap {
    domain: CosetProgression,
    domain_set: GroupSubset,
    codomain: FiniteAbelianGroup,
    table: HashMap<usize, usize>,
}

impl FreimanMap {
    /// Builds the map from `f` on every element of the domain.
    pub fn from_fn(
        domain: CosetProgression,
        codomain: &FiniteAbelianGroup,
        mut f: impl FnMut(usize) -> usize,
    ) -> Self {
        let domain_set = domain.enumerate();
        let table = domain_set.indices().map(|x| (x, f(x))).collect();
        FreimanMap { domain, domain_set, codomain: codomain.clone(), table }
    }

    pub fn from_table(
        domain: CosetProgression,
        codomain: &FiniteAbelianGroup,
        table: HashMap<usize, usize>,
    ) -> Result<Self> {
        let domain_set = domain.enumerate();
        if domain_set.len() != table.len() || !domain_set.indices().all(|x| table.contains_key(&x)) {
            return Err(Error::Precondition("table does not cover the domain exactly".into()));
        }
        Ok(FreimanMap { domain, domain_set, codomain: codomain.clone(), table })
    }

    pub fn domain(&self) -> &CosetProgression {
        &self.domain
    }

    pub fn domain_set(&self) -> &GroupSubset {
        &self.domain_set
    }

    pub fn codomain(&self) -> &FiniteAbelianGroup {
        &self.codomain
    }

    pub fn get(&self, x: usize) -> Option<usize> {
        self.table.get(&x).copied()
    }

    pub fn table(&self) -> &HashMap<usize, usize> {
        &self.table
    }

    pub fn image(&self) -> GroupSubset {
        GroupSubset::from_indices(&self.codomain, self.table.values().copied())
    }

    /// Freiman `s`-homomorphism: equal `s`-fold sums in the domain have equal
    /// image sums. Checked exactly by growing the set of `(Σ x, Σ φ(x))` pairs.
    pub fn is_freiman_hom(&self, s: u32) -> bool {
        let g = self.domain.group();
        let h = &self.codomain;
        let base: Vec<(usize, usize)> = self.domain_set.indices().map(|x| (x, self.table[&x])).collect();
        let mut level: HashSet<(usize, usize)> = base.iter().copied().collect();
        for _ in 1..s {
            let mut next = HashSet::with_capacity(level.len());
            for &(a, b) in &level {
                for &(x, y) in &base {
                    next.insert((g.add_idx(a, x), h.add_idx(b, y)));
                }
            }
            level = next;
        }
        let mut seen: HashMap<usize, usize> = HashMap::with_capacity(level.len());
        level.into_iter().all(|(a, b)| *seen.entry(a).or_insert(b) == b)
    }

    /// Whether the map is injective on `set`, which must lie in the domain.
    pub fn is_injective_on(&self, set: &GroupSubset) -> bool {
        let mut seen = HashSet::new();
        set.indices().all(|x| self.table.get(&x).is_some_and(|&y| seen.insert(y)))
    }
}

/// A move on a basis `x_1, …, x_r` with orders `n_1 | … | n_r`.
/// Indices are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisMove {
    /// `x_i ← x_i - λ (n_j / n_i) x_j` for `i < j`.
    Upper { i: usize, j: usize, lambda: i64 },
    /// `x_i ← x_i - λ x_j` for `i > j`.
    Lower { i: usize, j: usize, lambda: i64 },
    /// `x_i ← λ x_i` for `gcd(λ, n_i) = 1`.
    Scale { i: usize, lambda: i64 },
}

/// Applies a basis move, checking the divisibility chain before and the basis
/// property after.
pub fn change_basis(group: &FiniteAbelianGroup, basis: &[GroupElement], mv: BasisMove) -> Result<Vec<GroupElement>> {
    if !is_basis(group, basis) {
        return Err(Error::InvalidMove("input is not a basis".into()));
    }
    let orders: Vec<u64> = basis.iter().map(|x| group.order_of(x)).collect();
    if orders.windows(2).any(|w| w[1] % w[0] != 0) {
        return Err(Error::InvalidMove("orders do not form a divisibility chain".into()));
    }
    let r = basis.len();
    let mut out = basis.to_vec();
    match mv {
        BasisMove::Upper { i, j, lambda } => {
            if !(i < j && j < r) {
                return Err(Error::InvalidMove("upper move needs i < j < r".into()));
            }
            let f = (orders[j] / orders[i]) as i64;
            out[i] = group.sub(&basis[i], &group.scale(&basis[j], lambda.wrapping_mul(f)));
        }
        BasisMove::Lower { i, j, lambda } => {
            if !(j < i && i < r) {
                return Err(Error::InvalidMove("lower move needs j < i < r".into()));
            }
            out[i] = group.sub(&basis[i], &group.scale(&basis[j], lambda));
        }
        BasisMove::Scale { i, lambda } => {
            if i >= r {
                return Err(Error::InvalidMove("index out of range".into()));
            }
            if num_integer::gcd(lambda.rem_euclid(orders[i] as i64) as u64, orders[i]) != 1 {
                return Err(Error::InvalidMove(format!("gcd({lambda}, {}) ≠ 1", orders[i])));
            }
            out[i] = group.scale(&basis[i], lambda);
        }
    }
    if !is_basis(group, &out) {
        return Err(Error::BoundViolation("basis move produced a non-basis".into()));
    }
    Ok(out)
}
