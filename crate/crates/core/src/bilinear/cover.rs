use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::Serialize;

use super::FreimanLinearMap;
use crate::coset_prog::CosetProgression;
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupSubset};
use crate::seed::rng_for;

/// Triple count above which the covering condition is sampled.
pub const TRIPLE_SAMPLES: usize = 10_000;

/// Finds a Freiman-linear map `C → Ĝ` agreeing with a partial table
/// `y ↦ f(y)` (indices into `H` and `Ĝ`) on many points.
pub trait HomFinder {
    /// The best map found with its number of agreements, or `None`.
    fn find(&self, g: &FiniteAbelianGroup, h: &FiniteAbelianGroup, table: &HashMap<usize, usize>) -> Option<(FreimanLinearMap, usize)>;
}

/// Brute force over homomorphisms `H → Ĝ` and over rank-one maps
/// `c·v ↦ c·χ` on intervals `[-N, N]·v`.
///
/// Rank-one maps use `N < ord(v)/2` when `ord(v)·χ = 0` and `N < ord(v)/4`
/// otherwise, which keeps them Freiman-linear.
#[derive(Clone, Debug)]
pub struct ExhaustiveHomFinder {
    /// Upper bound on candidate-times-point evaluations.
    pub budget: u64,
    pub min_agreement: usize,
}

impl Default for ExhaustiveHomFinder {
    fn default() -> Self {
        ExhaustiveHomFinder { budget: 1 << 26, min_agreement: 1 }
    }
}

/// Images of the unit vectors of `H` for every homomorphism `H → Ĝ`, or
/// `None` when there are more than `limit`.
pub(crate) fn global_homs(h: &FiniteAbelianGroup, g: &FiniteAbelianGroup, limit: u64) -> Option<Vec<Vec<usize>>> {
    let dual = g.dual();
    let choices: Vec<Vec<usize>> = h
        .moduli()
        .iter()
        .map(|&n| (0..dual.size()).filter(|&c| dual.scale_idx(c, n as i64) == 0).collect())
        .collect();
    let count = choices.iter().try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64))?;
    if count > limit {
        return None;
    }
    let mut out = vec![vec![]];
    for c in &choices {
        out = out.iter().flat_map(|p: &Vec<usize>| c.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    Some(out)
}

pub(crate) fn hom_value(h: &FiniteAbelianGroup, dual: &FiniteAbelianGroup, images: &[usize], y: usize, coords: &mut [u64]) -> usize {
    h.coords_into(y, coords);
    coords.iter().zip(images).fold(0, |acc, (&c, &chi)| dual.add_idx(acc, dual.scale_idx(chi, c as i64)))
}

impl HomFinder for ExhaustiveHomFinder {
    fn find(&self, g: &FiniteAbelianGroup, h: &FiniteAbelianGroup, table: &HashMap<usize, usize>) -> Option<(FreimanLinearMap, usize)> {
        let dual = g.dual();
        let points = table.len().max(1) as u64;
        let mut best: Option<(usize, FreimanLinearMap)> = None;
        let mut coords = vec![0u64; h.rank()];
        if let Some(homs) = global_homs(h, g, self.budget / points) {
            let mut top: Option<(usize, &Vec<usize>)> = None;
            for images in &homs {
                let score = table.iter().filter(|&(&y, &f)| hom_value(h, &dual, images, y, &mut coords) == f).count();
                if top.is_none_or(|(s, _)| score > s) {
                    top = Some((score, images));
                }
            }
            if let Some((score, images)) = top {
                let chars: Vec<Character> = images.iter().map(|&c| dual.character_at(c)).collect();
                let map = FreimanLinearMap::from_unit_images(h, g, &chars).ok()?;
                best = Some((score, map));
            }
        }
        let rank_one_cost = (h.size() * dual.size()) as u64 * (h.exponent() / 2).max(1);
        if rank_one_cost <= self.budget {
            let mut top: Option<(usize, usize, usize, i64)> = None;
            for v in 1..h.size() {
                if h.neg_idx(v) < v {
                    continue;
                }
                let ord = h.order_of(&h.element_at(v)) as i64;
                for chi in 0..dual.size() {
                    let n = if dual.scale_idx(chi, ord) == 0 { (ord - 1) / 2 } else { (ord - 1) / 4 };
                    if n == 0 {
                        continue;
                    }
                    let score = (-n..=n)
                        .filter(|&c| table.get(&h.scale_idx(v, c)) == Some(&dual.scale_idx(chi, c)))
                        .count();
                    if top.is_none_or(|(s, ..)| score > s) {
                        top = Some((score, v, chi, n));
                    }
                }
            }
            if let Some((score, v, chi, n)) = top {
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    let dom = CosetProgression::symmetric(h, vec![(h.element_at(v), n)], GroupSubset::singleton(h, 0)).ok()?;
                    let coords = dom.coordinate_map().ok()?;
                    let map = FreimanLinearMap::from_fn(dom, g, |y| dual.character_at(dual.scale_idx(chi, coords[&y].coeffs[0])));
                    best = Some((score, map));
                }
            }
        }
        best.filter(|(s, _)| *s >= self.min_agreement).map(|(s, m)| (m, s))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearCover {
    #[serde(skip)]
    pub maps: Vec<FreimanLinearMap>,
    pub map_count: usize,
    pub rounds: usize,
    /// Share of triples `(y, z, w)` still failing the covering condition.
    pub bad_fraction: f64,
    /// `α⁴/2`.
    pub threshold: f64,
    pub sampled: bool,
    /// Whether the bad share fell below the threshold.
    pub complete: bool,
    /// `Σ |U'_y|` and `Σ |U_y|`.
    pub covered: usize,
    pub total: usize,
}

fn diff(dual: &FiniteAbelianGroup, a: &[usize], b: &[usize]) -> HashSet<usize> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| dual.sub_idx(x, y))).collect()
}

/// Covers the sets `U_y ⊆ Ĝ`, `y ∈ Y ⊆ H`, by values of Freiman-linear maps.
///
/// Starting from the zero map, each round draws `f(y) ∈ U_y` at random and
/// asks `finder` for a map agreeing with `f` on points where `f(y)` is not
/// yet covered. Rounds continue while at least `α⁴/2` of the triples
/// `(y, z, w)` have `z, w, y + z, y + w ∈ Y` and
/// `(U_{y+z} - U_z) ∩ (U_{y+w} - U_w) ⊄ (U'_{y+z} - U'_z) + (U'_{y+w} - U'_w)`.
/// `u` is indexed by elements of `H`; entries off `Y` are ignored.
pub fn linear_cover(
    g: &FiniteAbelianGroup,
    y_set: &GroupSubset,
    u: &[Vec<Character>],
    finder: &dyn HomFinder,
    rounds_cap: usize,
    seed: u64,
) -> Result<LinearCover> {
    let h = y_set.group();
    if u.len() != h.size() {
        return Err(Error::RankMismatch { expected: h.size(), got: u.len() });
    }
    let dual_group = g.dual();
    let dual = &dual_group;
    let ys: Vec<usize> = y_set.indices().collect();
    let mut sets: Vec<Vec<usize>> = vec![vec![]; h.size()];
    for &y in &ys {
        let mut s: Vec<usize> = u[y].iter().map(|c| dual.index_of_coords(&c.0)).collect();
        s.sort_unstable();
        s.dedup();
        if s.first() != Some(&0) {
            return Err(Error::Precondition(format!("U_y for y = {y} does not contain 0")));
        }
        sets[y] = s;
    }
    let total = ys.iter().map(|&y| sets[y].len()).sum();
    let alpha = y_set.density();
    let threshold = alpha.powi(4) / 2.0;
    if ys.is_empty() {
        return Ok(LinearCover { maps: vec![], map_count: 0, rounds: 0, bad_fraction: 0.0, threshold, sampled: false, complete: true, covered: 0, total });
    }
    let zero = FreimanLinearMap::zero(CosetProgression::from_subgroup(GroupSubset::full(h))?, g);
    let mut maps = vec![zero];
    let mut covered: Vec<Vec<usize>> = vec![vec![]; h.size()];
    let refresh = |maps: &[FreimanLinearMap], covered: &mut Vec<Vec<usize>>| {
        for &y in &ys {
            let mut c: Vec<usize> = maps.iter().filter_map(|m| m.value_idx(y)).filter(|v| sets[y].binary_search(v).is_ok()).collect();
            c.sort_unstable();
            c.dedup();
            covered[y] = c;
        }
    };
    refresh(&maps, &mut covered);

    let n = h.size();
    let exhaustive = n.pow(3) <= TRIPLE_SAMPLES;
    let bad_share = |covered: &[Vec<usize>], round: u64| -> f64 {
        let bad = |y: usize, z: usize, w: usize| -> bool {
            let (yz, yw) = (h.add_idx(y, z), h.add_idx(y, w));
            if !(y_set.contains_idx(z) && y_set.contains_idx(w) && y_set.contains_idx(yz) && y_set.contains_idx(yw)) {
                return false;
            }
            let lhs = diff(dual, &sets[yz], &sets[z]);
            let rhs = diff(dual, &sets[yw], &sets[w]);
            let c1: Vec<usize> = diff(dual, &covered[yz], &covered[z]).into_iter().collect();
            let c2: Vec<usize> = diff(dual, &covered[yw], &covered[w]).into_iter().collect();
            let sums: HashSet<usize> = c1.iter().flat_map(|&a| c2.iter().map(move |&b| dual.add_idx(a, b))).collect();
            lhs.intersection(&rhs).any(|x| !sums.contains(x))
        };
        if exhaustive {
            let mut count = 0usize;
            for y in 0..n {
                for z in 0..n {
                    for w in 0..n {
                        count += bad(y, z, w) as usize;
                    }
                }
            }
            count as f64 / n.pow(3) as f64
        } else {
            let mut rng = rng_for(seed, 0x7472_0000 + round);
            let count = (0..TRIPLE_SAMPLES)
                .filter(|_| bad(rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)))
                .count();
            count as f64 / TRIPLE_SAMPLES as f64
        }
    };

    let mut rounds = 0;
    let mut bad_fraction = bad_share(&covered, 0);
    while bad_fraction >= threshold && rounds < rounds_cap {
        rounds += 1;
        let mut rng = rng_for(seed, rounds as u64);
        let mut table = HashMap::new();
        for &y in &ys {
            let pick = sets[y][rng.random_range(0..sets[y].len())];
            if covered[y].binary_search(&pick).is_err() {
                table.insert(y, pick);
            }
        }
        if table.is_empty() {
            continue;
        }
        let Some((map, _)) = finder.find(g, h, &table) else { continue };
        let gains = ys.iter().any(|&y| {
            map.value_idx(y).is_some_and(|v| sets[y].binary_search(&v).is_ok() && covered[y].binary_search(&v).is_err())
        });
        if !gains || !map.is_freiman_linear() {
            continue;
        }
        maps.push(map);
        refresh(&maps, &mut covered);
        bad_fraction = bad_share(&covered, rounds as u64);
    }
    Ok(LinearCover {
        map_count: maps.len(),
        maps,
        rounds,
        bad_fraction,
        threshold,
        sampled: !exhaustive,
        complete: bad_fraction < threshold,
        covered: covered.iter().map(Vec::len).sum(),
        total,
    })
}
