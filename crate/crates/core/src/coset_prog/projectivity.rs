use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::{Arm, CosetProgression, FreimanMap};
use crate::error::{Error, Result};
use crate::group::{invariant_factors, subgroup_basis, FiniteAbelianGroup, GroupElement, GroupSubset, SubgroupBasis};

/// A homomorphism `G → H/K`, given by lifts `h_j ∈ H` of the images of the
/// standard generators `e_j`.
#[derive(Clone, Debug)]
pub struct QuotientHom {
    domain: FiniteAbelianGroup,
    codomain: FiniteAbelianGroup,
    kernel: GroupSubset,
    images: Vec<GroupElement>,
}

impl QuotientHom {
    /// Checks that `q_j h_j ∈ K` for every generator, so the map is well defined.
    pub fn new(
        domain: &FiniteAbelianGroup,
        codomain: &FiniteAbelianGroup,
        kernel: GroupSubset,
        images: Vec<GroupElement>,
    ) -> Result<Self> {
        if kernel.group() != codomain || !kernel.is_subgroup() {
            return Err(Error::Precondition("K must be a subgroup of H".into()));
        }
        if images.len() != domain.rank() || images.iter().any(|h| !codomain.is_valid(&h.0)) {
            return Err(Error::Precondition("one image per generator of G required".into()));
        }
        for (h, &q) in images.iter().zip(domain.moduli()) {
            if !kernel.contains(&codomain.scale(h, q as i64)) {
                return Err(Error::Precondition("generator image violates its order".into()));
            }
        }
        Ok(QuotientHom { domain: domain.clone(), codomain: codomain.clone(), kernel, images })
    }

    pub fn domain(&self) -> &FiniteAbelianGroup {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteAbelianGroup {
        &self.codomain
    }

    pub fn kernel(&self) -> &GroupSubset {
        &self.kernel
    }

    /// `Σ x_j h_j`, a lift of `φ(x)`.
    pub fn lift(&self, x: &GroupElement) -> GroupElement {
        let coeffs: Vec<i64> = x.0.iter().map(|&c| c as i64).collect();
        self.codomain.combination(&coeffs, &self.images)
    }
}

/// `C ⊆ G` and a Freiman `s`-homomorphism `ψ: C → H` with `φ = ψ + K` on `C`.
#[derive(Clone, Debug, Serialize)]
pub struct PartialProjection {
    pub progression: CosetProgression,
    #[serde(skip)]
    pub map: FreimanMap,
    /// Images `k_i` of the arm generators, in arm order.
    pub arm_images: Vec<GroupElement>,
    /// Images of the generators of the subgroup part.
    pub subgroup_images: Vec<GroupElement>,
    pub subgroup_generators: Vec<GroupElement>,
    /// `log₂ |K|`, the bound on the rank.
    pub rank_bound: f64,
    pub size: usize,
}

/// Coefficients `λ` with `Σ λ_j g_j = target`, by breadth-first search over
/// the subgroup generated by `g`.
fn solve_in_span(group: &FiniteAbelianGroup, gens: &[GroupElement], target: usize) -> Option<Vec<i64>> {
    let idx: Vec<usize> = gens.iter().map(|g| group.index_of(g)).collect();
    let mut parent: HashMap<usize, Option<(usize, usize)>> = HashMap::new();
    parent.insert(0, None);
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        if x == target {
            break;
        }
        for (j, &g) in idx.iter().enumerate() {
            let y = group.add_idx(x, g);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(y) {
                e.insert(Some((x, j)));
                queue.push_back(y);
            }
        }
    }
    parent.get(&target)?;
    let mut lambda = vec![0i64; gens.len()];
    let mut cur = target;
    while let Some(Some((prev, j))) = parent.get(&cur) {
        lambda[*j] += 1;
        cur = *prev;
    }
    Some(lambda)
}

/// The construction on an arbitrary basis `x_i` (orders `n_1 | … | n_r`) of
/// a subgroup of `ambient`, with lifts `h_i ∈ H` of the images.
pub(crate) fn project(
    ambient: &FiniteAbelianGroup,
    basis: &SubgroupBasis,
    lifts: &[GroupElement],
    codomain: &FiniteAbelianGroup,
    kernel: &GroupSubset,
    s: u32,
) -> Result<PartialProjection> {
    let r = basis.basis.len();
    let n = &basis.orders;
    let mut y = basis.basis.clone();
    let mut k = lifts.to_vec();
    for i in (0..r).rev() {
        let gens: Vec<GroupElement> = (i + 1..r).map(|j| codomain.scale(&k[j], n[j] as i64)).collect();
        let target = codomain.index_of(&codomain.scale(&lifts[i], n[i] as i64));
        if let Some(lambda) = solve_in_span(codomain, &gens, target) {
            let mut yi = basis.basis[i].clone();
            let mut ki = lifts[i].clone();
            for (off, &l) in lambda.iter().enumerate() {
                let j = i + 1 + off;
                let f = l * (n[j] / n[i]) as i64;
                yi = ambient.sub(&yi, &ambient.scale(&y[j], f));
                ki = codomain.sub(&ki, &codomain.scale(&k[j], f));
            }
            y[i] = yi;
            k[i] = ki;
        }
    }
    let in_i: Vec<bool> = (0..r).map(|i| codomain.scale(&k[i], n[i] as i64) != codomain.zero()).collect();
    let s64 = s as u64;
    let mut arms = Vec::new();
    let mut arm_images = Vec::new();
    let mut sub_gens = Vec::new();
    let mut sub_images = Vec::new();
    for i in 0..r {
        if in_i[i] {
            arms.push(Arm::new(y[i].clone(), 0, n[i].div_ceil(s64) as i64 - 1));
            arm_images.push(k[i].clone());
        } else {
            sub_gens.push(y[i].clone());
            sub_images.push(k[i].clone());
        }
    }
    let subgroup = GroupSubset::generated(ambient, &sub_gens);
    let progression = CosetProgression::new(ambient, ambient.zero(), arms, subgroup)?;

    // ψ(Σ λ_i y_i) = Σ λ_i k_i over arm coefficients and subgroup coordinates.
    let mut table: HashMap<usize, usize> = HashMap::new();
    let mut partial: Vec<(usize, usize)> = vec![(0, 0)];
    for i in 0..r {
        let range = if in_i[i] { n[i].div_ceil(s64) } else { n[i] };
        let (yi, ki) = (ambient.index_of(&y[i]), codomain.index_of(&k[i]));
        let mut next = Vec::with_capacity(partial.len() * range as usize);
        for &(x, v) in &partial {
            for c in 0..range as i64 {
                next.push((ambient.add_idx(x, ambient.scale_idx(yi, c)), codomain.add_idx(v, codomain.scale_idx(ki, c))));
            }
        }
        partial = next;
    }
    for (x, v) in partial {
        if table.insert(x, v).is_some() {
            return Err(Error::BoundViolation("projectivity basis is not independent".into()));
        }
    }
    let size = table.len();
    let map = FreimanMap::from_table(progression.clone(), codomain, table)?;
    Ok(PartialProjection {
        progression,
        map,
        arm_images,
        subgroup_images: sub_images,
        subgroup_generators: sub_gens,
        rank_bound: (kernel.len() as f64).log2(),
        size,
    })
}

fn verify_projection(
    proj: &PartialProjection,
    domain_order: u64,
    kernel: &GroupSubset,
    s: u32,
    lift_of: impl Fn(usize) -> usize,
) -> Result<()> {
    let codomain = proj.map.codomain();
    let k = kernel.len();
    if (1usize << proj.progression.rank()) > k {
        return Err(Error::BoundViolation(format!("rank {} above log₂|K|", proj.progression.rank())));
    }
    let lower = domain_order as f64 * (s as f64).powf(-proj.rank_bound);
    if (proj.size as f64) < lower * (1.0 - 1e-9) {
        return Err(Error::BoundViolation(format!("|C| = {} below s^(-log₂|K|)|G|", proj.size)));
    }
    for (&x, &v) in proj.map.table() {
        if !kernel.contains_idx(codomain.sub_idx(v, lift_of(x))) {
            return Err(Error::BoundViolation("ψ(x) differs from φ(x) modulo K".into()));
        }
    }
    if !proj.map.is_freiman_hom(s) {
        return Err(Error::BoundViolation(format!("ψ is not a Freiman {s}-homomorphism")));
    }
    Ok(())
}

/// Proper `C ⊆ G` of rank at most `log₂|K|` and size at least
/// `s^{-log₂|K|}|G|`, with a Freiman `s`-homomorphism `ψ: C → H` lifting `φ`.
pub fn partial_projectivity(phi: &QuotientHom, s: u32) -> Result<PartialProjection> {
    if s < 1 {
        return Err(Error::Precondition("s must be positive".into()));
    }
    let g = phi.domain();
    let basis = invariant_factors(g);
    let lifts: Vec<GroupElement> = basis.basis.iter().map(|x| phi.lift(x)).collect();
    let proj = project(g, &basis, &lifts, phi.codomain(), phi.kernel(), s)?;
    let h = phi.codomain();
    verify_projection(&proj, g.order(), phi.kernel(), s, |x| h.index_of(&phi.lift(&g.element_at(x))))?;
    Ok(proj)
}

/// `D ⊆ K` and the grid cells `P_i` on which `φ` is injective along every
/// `k + P_i + D`.
#[derive(Clone, Debug, Serialize)]
pub struct InjectivityPartition {
    pub subprogression: CosetProgression,
    pub cells: Vec<CosetProgression>,
    /// Cell side lengths `N'_i = ⌈αN_i/(4r)⌉`.
    pub grid: Vec<u64>,
    pub cell_bound: f64,
}

/// Splits a Freiman homomorphism on `C = P + K` into injective pieces.
pub fn injectivity_partition(phi: &FreimanMap, alpha: f64) -> Result<InjectivityPartition> {
    let c = phi.domain();
    let g = c.group();
    let h = phi.codomain();
    if !c.is_proper() {
        return Err(Error::Precondition("C must be proper".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition("α must lie in (0, 1]".into()));
    }
    if (phi.image().len() as f64) < alpha * phi.domain_set().len() as f64 - 1e-9 {
        return Err(Error::Precondition("|φ(C)| below α|C|".into()));
    }
    if !phi.is_freiman_hom(2) {
        return Err(Error::Precondition("φ is not a Freiman homomorphism".into()));
    }
    let k_set = c.subgroup();
    // Canonical form v_0 + Σ [0, N_i - 1]·v_i + K.
    let lows: Vec<i64> = c.arms().iter().map(|a| a.lo).collect();
    let x0 = c.point_at(&lows, 0);
    let phi0 = phi.get(x0).expect("base point in domain");
    let psi = |kk: usize| h.sub_idx(phi.get(g.add_idx(x0, kk)).expect("x0 + K ⊆ C"), phi0);

    let mut kernel = GroupSubset::empty(g);
    let mut image = GroupSubset::empty(h);
    let mut preimage: HashMap<usize, usize> = HashMap::new();
    for kk in k_set.indices() {
        let v = psi(kk);
        if v == 0 {
            kernel.insert_idx(kk);
        }
        image.insert_idx(v);
        preimage.entry(v).or_insert(kk);
    }
    // ν: ψ(K) → K/S on a basis of ψ(K).
    let basis = subgroup_basis(h, &image.generators());
    let lifts: Vec<GroupElement> = basis.basis.iter().map(|z| g.element_at(preimage[&h.index_of(z)])).collect();
    let proj = project(h, &basis, &lifts, g, &kernel, 2)?;
    verify_projection(&proj, image.len() as u64, &kernel, 2, |z| preimage[&z])?;

    // D = θ(D̃).
    let arms: Vec<Arm> = proj
        .progression
        .arms()
        .iter()
        .zip(&proj.arm_images)
        .map(|(a, k)| Arm::new(k.clone(), a.lo, a.hi))
        .collect();
    let d_sub = GroupSubset::generated(g, &proj.subgroup_images);
    let d = CosetProgression::new(g, g.zero(), arms, d_sub)?;
    let d_set = d.enumerate();
    if d_set != proj.map.image() || !d.is_proper() {
        return Err(Error::BoundViolation("θ(D̃) is not a proper coset progression".into()));
    }
    if !d_set.is_subset(k_set) {
        return Err(Error::BoundViolation("D leaves K".into()));
    }
    if (d_set.len() as f64) < alpha * alpha * k_set.len() as f64 - 1e-9 {
        return Err(Error::BoundViolation("|D| below α²|K|".into()));
    }
    if d.rank() as f64 > (1.0 / alpha).log2() + 1e-9 {
        return Err(Error::BoundViolation("rank(D) above log₂ α⁻¹".into()));
    }

    let r = c.rank();
    let grid: Vec<u64> = c
        .arms()
        .iter()
        .map(|a| ((alpha * a.len() as f64) / (4.0 * r as f64)).ceil().max(1.0) as u64)
        .collect();
    let mut cells = Vec::new();
    let mut starts: Vec<Vec<i64>> = vec![vec![]];
    for (a, &np) in c.arms().iter().zip(&grid) {
        let mut next = Vec::new();
        for st in &starts {
            let mut lo = a.lo;
            while lo <= a.hi {
                let mut v = st.clone();
                v.push(lo);
                next.push(v);
                lo += np as i64;
            }
        }
        starts = next;
    }
    let trivial = GroupSubset::singleton(g, 0);
    for st in &starts {
        let arms: Vec<Arm> = c
            .arms()
            .iter()
            .zip(st.iter().zip(&grid))
            .map(|(a, (&lo, &np))| Arm::new(a.generator.clone(), lo, (lo + np as i64 - 1).min(a.hi)))
            .collect();
        cells.push(CosetProgression::new(g, c.base().clone(), arms, trivial.clone())?);
    }
    let cell_bound = if r == 0 { 1.0 } else { (8.0 * r as f64 / alpha).powi(r as i32) };
    if cells.len() as f64 > cell_bound + 1e-9 {
        return Err(Error::BoundViolation(format!("{} cells above (8r/α)^r", cells.len())));
    }
    for cell in &cells {
        let piece = cell.enumerate().sumset(&d_set);
        for kk in k_set.indices() {
            if !phi.is_injective_on(&piece.translate(kk)) {
                return Err(Error::BoundViolation("φ not injective on k + P_i + D".into()));
            }
        }
    }
    Ok(InjectivityPartition { subprogression: d, cells, grid, cell_bound })
}
