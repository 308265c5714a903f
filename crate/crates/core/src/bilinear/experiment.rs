use std::collections::HashMap;
use std::time::Instant;

use num_rational::Rational64;
use rand::seq::index::sample;
use serde::Serialize;

use super::cover::{global_homs, hom_value};
use super::{iterated_difference, BiSet, BilinearVariety, FreimanLinearMap, DEFAULT_WORD};
use crate::bohr::BohrSet;
use crate::coset_prog::CosetProgression;
use crate::error::{Error, Result};
use crate::fourier::{bogolyubov_bohr_in_2a2a, nonzero, spectrum, GroupFunction};
use crate::group::{order_ceiling, Character, FiniteAbelianGroup, GroupSubset};
use crate::seed::rng_for;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub group_g: Vec<i64>,
    pub group_h: Vec<i64>,
    pub delta: f64,
    pub seed: u64,
    pub word: String,
    /// Candidate varieties evaluated before the search stops.
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn new(group_g: &[i64], group_h: &[i64], delta: f64, seed: u64) -> Self {
        ExperimentConfig {
            group_g: group_g.to_vec(),
            group_h: group_h.to_vec(),
            delta,
            seed,
            word: DEFAULT_WORD.into(),
            budget: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub group_g: String,
    pub group_h: String,
    pub delta: f64,
    pub seed: u64,
    pub word: String,
    pub a_size: usize,
    pub d_size: usize,
    pub variety: BilinearVariety,
    pub variety_size: usize,
    /// Name of the candidate family that produced the variety.
    pub source: String,
    pub verified: bool,
    pub nontrivial: bool,
    pub candidates_tried: u64,
    pub budget_exhausted: bool,
    /// Share of `(y, y')` pairs in the progression whose rows of `A` are both dense.
    pub triple_density: f64,
    pub elapsed_ms: u64,
    #[serde(skip)]
    pub a: BiSet,
    #[serde(skip)]
    pub d: BiSet,
}

/// Characters vanishing on the subgroup generated by `gens`, as generators.
fn annihilator(g: &FiniteAbelianGroup, gens: &[crate::group::GroupElement]) -> Vec<Character> {
    let dual = g.dual();
    let ann = GroupSubset::from_fn(&dual, |i| {
        let chi = dual.element_at(i);
        gens.iter().all(|x| g.eval_scaled(&chi.0, &x.0) == 0)
    });
    ann.generators().iter().map(Character::from_element).collect()
}

/// Frequencies and radius with Bohr set `{0, ±x}`.
fn three_point_bohr(g: &FiniteAbelianGroup, x: usize) -> (Vec<Character>, Rational64) {
    let xe = g.element_at(x);
    let m = g.order_of(&xe);
    let dual = g.dual();
    // Every character killing x, so that nonzero values on other cosets
    // reach distance at least 1/3.
    let mut gamma: Vec<Character> = (0..dual.size())
        .map(|i| dual.character_at(i))
        .filter(|c| g.eval_scaled(&c.0, &xe.0) == 0)
        .collect();
    gamma = nonzero(gamma);
    if m <= 3 {
        return (gamma, Rational64::new(1, 4));
    }
    let target = g.exponent() / m;
    if let Some(chi) = (0..dual.size()).map(|i| dual.character_at(i)).find(|c| g.eval_scaled(&c.0, &xe.0) == target) {
        gamma.push(chi);
    }
    (gamma, Rational64::new(1, m as i64))
}

fn units(g: &FiniteAbelianGroup) -> Vec<Character> {
    (0..g.rank()).map(|i| Character::from_element(&g.unit(i))).collect()
}

fn point_progression(h: &FiniteAbelianGroup, y: usize) -> Result<CosetProgression> {
    CosetProgression::point(h, h.element_at(y))
}

/// `{0, ±y}` as a symmetric progression.
fn three_point_progression(h: &FiniteAbelianGroup, y: usize) -> Result<CosetProgression> {
    let ye = h.element_at(y);
    if h.order_of(&ye) == 2 {
        CosetProgression::from_subgroup(GroupSubset::from_indices(h, [0, y]))
    } else {
        CosetProgression::symmetric(h, vec![(ye, 1)], GroupSubset::singleton(h, 0))
    }
}

/// Proper symmetric progressions of `H` tried as `C`: `H` itself, cyclic
/// subgroups and intervals `[-N, N]·v`.
fn progression_candidates(h: &FiniteAbelianGroup) -> Result<Vec<CosetProgression>> {
    let mut out = vec![CosetProgression::from_subgroup(GroupSubset::full(h))?];
    let mut seen_subgroups = std::collections::HashSet::new();
    for v in 1..h.size() {
        if h.neg_idx(v) < v {
            continue;
        }
        let ve = h.element_at(v);
        let sub = GroupSubset::generated(h, std::slice::from_ref(&ve));
        if seen_subgroups.insert(sub.indices().collect::<Vec<_>>()) && !sub.is_full() {
            out.push(CosetProgression::from_subgroup(sub)?);
        }
        let max = (h.order_of(&ve) as i64 - 1) / 2;
        let mut n = 1;
        while n <= max {
            out.push(CosetProgression::symmetric(h, vec![(ve.clone(), n)], GroupSubset::singleton(h, 0))?);
            n = if n * 2 > max && n < max { max } else { n * 2 };
        }
    }
    Ok(out)
}

/// Largest subgroup inside `r`, built greedily.
fn subgroup_inside(r: &GroupSubset) -> GroupSubset {
    let g = r.group();
    let mut k = GroupSubset::singleton(g, 0);
    let mut gens = Vec::new();
    for x in r.indices() {
        if k.contains_idx(x) {
            continue;
        }
        gens.push(g.element_at(x));
        let next = GroupSubset::generated(g, &gens);
        if next.is_subset(r) {
            k = next;
        } else {
            gens.pop();
        }
    }
    k
}

struct Search<'a> {
    g: &'a FiniteAbelianGroup,
    d: &'a BiSet,
    budget: u64,
    tried: u64,
    best: Option<(usize, BilinearVariety, &'static str)>,
}

impl Search<'_> {
    fn exhausted(&self) -> bool {
        self.tried >= self.budget
    }

    fn offer(&mut self, v: BilinearVariety, source: &'static str) {
        if self.exhausted() {
            return;
        }
        self.tried += 1;
        let set = v.enumerate();
        if !set.is_subset(self.d) {
            return;
        }
        let size = set.len();
        if self.best.as_ref().is_none_or(|(s, ..)| size > *s) {
            self.best = Some((size, v, source));
        }
    }

    fn best_size(&self) -> usize {
        self.best.as_ref().map_or(0, |b| b.0)
    }

    /// Best Bohr set inside `r`: frequencies, radius and size.
    fn bohr_inside(&mut self, r: &GroupSubset, extra: &[Vec<Character>]) -> Option<(Vec<Character>, Rational64, usize)> {
        let g = self.g;
        if !r.contains_idx(0) {
            return None;
        }
        if r.is_full() {
            return Some((vec![], Rational64::new(1, 4), g.size()));
        }
        let mut best: Option<(Vec<Character>, Rational64, usize)> = None;
        let consider = |best: &mut Option<(Vec<Character>, Rational64, usize)>, gamma: Vec<Character>, rho: Rational64| {
            let Ok(b) = BohrSet::new(g, gamma.clone(), rho) else { return };
            let set = b.enumerate();
            if set.is_subset(r) && best.as_ref().is_none_or(|(_, _, s)| set.len() > *s) {
                *best = Some((gamma, rho, set.len()));
            }
        };
        let k = subgroup_inside(r);
        consider(&mut best, annihilator(g, &k.generators()), Rational64::from_integer(0));
        let f = GroupFunction::indicator(r);
        let mut theta = r.density().powi(2) / 2.0;
        for _ in 0..6 {
            let gamma = nonzero(spectrum(&f, theta));
            for den in [4, 8, 16] {
                consider(&mut best, gamma.clone(), Rational64::new(1, den));
            }
            theta /= 2.0;
        }
        for gamma in extra {
            consider(&mut best, gamma.clone(), Rational64::new(1, 4));
        }
        if best.as_ref().is_none_or(|b| b.2 < 3) {
            if let Some(x) = r.indices().find(|&x| x != 0 && r.contains_idx(g.neg_idx(x))) {
                let (gamma, rho) = three_point_bohr(g, x);
                consider(&mut best, gamma, rho);
            }
        }
        best
    }
}

/// Samples `A ⊆ G × H` of density at least `δ`, forms `D` from the operator
/// word and searches for a large bilinear Bohr variety inside `D`.
///
/// Candidates, each verified by enumeration against `D`:
/// the point `{0} × {0}`; `G × H`; `{0} × {0, ±y}` and `{0, ±x} × {0}` from
/// the axes of `D`; for each proper symmetric `C` among `H`, cyclic subgroups
/// and intervals, the largest Bohr set found inside `⋂_{y ∈ C} D_{·y}`, using
/// subgroup annihilators, large spectra and the row witnesses of
/// `2A_{·y} - 2A_{·y}` for dense rows; and rank-one varieties
/// `B(χ(y); ρ) × C` for homomorphisms `χ: H → Ĝ`.
pub fn main_theorem_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let g = FiniteAbelianGroup::new(&cfg.group_g)?;
    let h = FiniteAbelianGroup::new(&cfg.group_h)?;
    let total = (g.order() as u128) * (h.order() as u128);
    if total > order_ceiling() as u128 {
        return Err(Error::GroupTooLarge { order: total, ceiling: order_ceiling() });
    }
    if !(cfg.delta > 0.0 && cfg.delta <= 1.0) {
        return Err(Error::Precondition("δ must lie in (0, 1]".into()));
    }
    let n = total as usize;
    let m = ((cfg.delta * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = rng_for(cfg.seed, 0);
    let mut a = BiSet::empty(&g, &h);
    for i in sample(&mut rng, n, m) {
        a.insert(i % g.size(), i / g.size());
    }
    let d = iterated_difference(&a, &cfg.word)?;

    let mut s = Search { g: &g, d: &d, budget: cfg.budget.max(1), tried: 0, best: None };
    let zero_c = point_progression(&h, 0)?;
    s.offer(BilinearVariety::new(&g, units(&g), Rational64::from_integer(0), zero_c.clone(), vec![])?, "floor");
    let full_c = CosetProgression::from_subgroup(GroupSubset::full(&h))?;
    s.offer(BilinearVariety::new(&g, vec![], Rational64::new(1, 4), full_c, vec![])?, "full");

    let col0 = d.column(0);
    if let Some(y) = col0.indices().find(|&y| y != 0 && col0.contains_idx(h.neg_idx(y))) {
        s.offer(BilinearVariety::new(&g, units(&g), Rational64::from_integer(0), three_point_progression(&h, y)?, vec![])?, "column_axis");
    }
    for y in 0..h.size() {
        let row = d.row(y);
        let axis = row.indices().find(|&x| x != 0 && row.contains_idx(0) && row.contains_idx(g.neg_idx(x)));
        if let Some(x) = axis {
            let (gamma, rho) = three_point_bohr(&g, x);
            let c = if y == 0 { zero_c.clone() } else { point_progression(&h, y)? };
            s.offer(BilinearVariety::new(&g, gamma, rho, c, vec![])?, "row_axis");
            break;
        }
    }

    // Bohr witnesses in 2A - 2A for dense rows, clustered by frequency set.
    let mut clusters: HashMap<Vec<Vec<u64>>, usize> = HashMap::new();
    let mut dense_rows = GroupSubset::empty(&h);
    for y in 0..h.size() {
        let row = a.row(y);
        if (row.len() as f64) < cfg.delta / 2.0 * g.size() as f64 || row.is_empty() {
            continue;
        }
        dense_rows.insert_idx(y);
        if let Ok(w) = bogolyubov_bohr_in_2a2a(&row) {
            let mut key: Vec<Vec<u64>> = w.bohr.frequencies().iter().map(|c| c.0.clone()).collect();
            key.sort();
            *clusters.entry(key).or_default() += 1;
        }
    }
    let mut cluster_list: Vec<(Vec<Vec<u64>>, usize)> = clusters.into_iter().collect();
    cluster_list.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let extra: Vec<Vec<Character>> =
        cluster_list.iter().take(4).map(|(k, _)| k.iter().map(|c| Character(c.clone())).collect()).collect();

    let mut inside_cache: HashMap<Vec<usize>, Option<(Vec<Character>, Rational64, usize)>> = HashMap::new();
    let mut scored: Vec<(usize, CosetProgression)> = Vec::new();
    for c in progression_candidates(&h)? {
        if s.exhausted() {
            break;
        }
        let c_set = c.enumerate();
        if c_set.len() * g.size() <= s.best_size() {
            continue;
        }
        let mut r = GroupSubset::full(&g);
        for y in c_set.indices() {
            r = r.intersection(&d.row(y));
        }
        let key: Vec<usize> = r.indices().collect();
        let found = match inside_cache.get(&key) {
            Some(f) => f.clone(),
            None => {
                let f = s.bohr_inside(&r, &extra);
                inside_cache.insert(key, f.clone());
                f
            }
        };
        if let Some((gamma, rho, size)) = found {
            if size * c_set.len() > s.best_size() {
                s.offer(BilinearVariety::new(&g, gamma, rho, c.clone(), vec![])?, "bohr_times_progression");
            }
        }
        scored.push((c_set.len(), c));
    }

    // Rank-one varieties with a homomorphism H → Ĝ.
    scored.sort_by(|x, y| y.0.cmp(&x.0));
    let dual = g.dual();
    if let Some(homs) = global_homs(&h, &g, 4096) {
        let mut coords = vec![0u64; h.rank()];
        for (_, c) in scored.iter().take(3) {
            for images in &homs {
                if s.exhausted() {
                    break;
                }
                if images.iter().all(|&i| i == 0) {
                    continue;
                }
                for den in [4, 8] {
                    let chars: Vec<Character> = images.iter().map(|&i| dual.character_at(i)).collect();
                    let map = FreimanLinearMap::from_unit_images(&h, &g, &chars)?;
                    let rho = Rational64::new(1, den);
                    // Cheap row test before full enumeration.
                    let fits = c.enumerate().indices().all(|y| {
                        let chi = dual.character_at(hom_value(&h, &dual, images, y, &mut coords));
                        BohrSet::new(&g, vec![chi], rho).is_ok_and(|b| b.enumerate().is_subset(&d.row(y)))
                    });
                    if fits {
                        s.offer(BilinearVariety::new(&g, vec![], rho, c.clone(), vec![map])?, "rank_one_map");
                    }
                }
            }
        }
    }

    let budget_exhausted = s.exhausted();
    let (variety_size, variety, source) = s.best.expect("floor candidate is always evaluated");
    let verified = variety.enumerate().is_subset(&d);
    let c_set = variety.progression().enumerate();
    let both_dense = c_set.indices().filter(|&y| dense_rows.contains_idx(y)).count() as f64;
    let triple_density = (both_dense / c_set.len() as f64).powi(2);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        group_g: g.to_string(),
        group_h: h.to_string(),
        delta: cfg.delta,
        seed: cfg.seed,
        word: cfg.word.clone(),
        a_size: a.len(),
        d_size: d.len(),
        variety_size,
        variety,
        source: source.into(),
        verified,
        nontrivial: variety_size > 1,
        candidates_tried: s.tried,
        budget_exhausted,
        triple_density,
        elapsed_ms: start.elapsed().as_millis() as u64,
        a,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_gives_everything() {
        let r = main_theorem_experiment(&ExperimentConfig::new(&[4], &[4], 1.0, 1)).unwrap();
        assert!(r.verified);
        assert_eq!(r.variety_size, 16);
    }

    #[test]
    fn random_set_on_z16() {
        let r = main_theorem_experiment(&ExperimentConfig::new(&[16], &[16], 0.3, 7)).unwrap();
        assert!(r.verified && r.nontrivial);
    }

    #[test]
    fn three_point_bohr_sets() {
        let g = crate::group::make_group(&[12, 2]).unwrap();
        for x in 1..g.size() {
            let (gamma, rho) = three_point_bohr(&g, x);
            let b = BohrSet::new(&g, gamma, rho).unwrap().enumerate();
            let expect = GroupSubset::from_indices(&g, [0, x, g.neg_idx(x)]);
            assert_eq!(b, expect, "x = {x}");
        }
    }
}
