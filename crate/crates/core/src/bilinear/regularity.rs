use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;

use super::FreimanLinearMap;
use crate::bohr::{serialize_ratio, within};
use crate::coset_prog::{extract_subprogression, Arm, CosetProgression};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupElement, GroupSubset};
use crate::lattice::{annihilator_points, ChainMonitor};
use crate::seed::rng_for;

/// Pair count above which pairs are sampled.
pub const PAIR_SAMPLES: usize = 10_000;

/// Outcome of testing both quasirandomness properties on one cell.
#[derive(Clone, Debug, Serialize)]
pub struct QrCheck {
    #[serde(serialize_with = "serialize_ratio")]
    pub rho: Rational64,
    /// Median of `|B(Γ ∪ L(y); ρ)| / |B(Γ; ρ)|` over the cell.
    pub delta: f64,
    pub base_size: usize,
    pub pass_i: bool,
    pub pass_ii: bool,
    /// Smallest `η` for which both properties would hold.
    pub achieved_eta: f64,
    pub pairs_checked: usize,
    pub pairs_sampled: bool,
    /// Seed for the pair sample.
    pub seed: u64,
}

impl QrCheck {
    pub fn passes(&self) -> bool {
        self.pass_i && self.pass_ii
    }
}

/// Largest scaled distance over the frequencies at each `x`, so that
/// `x ∈ B(freqs; ρ)` iff `within(m[x], E, ρ)`.
fn max_profile(g: &FiniteAbelianGroup, freqs: &[Character]) -> Vec<u64> {
    let mut m = vec![0u64; g.size()];
    for chi in freqs {
        for (slot, d) in m.iter_mut().zip(g.scaled_distances(chi)) {
            *slot = (*slot).max(d);
        }
    }
    m
}

fn ball(profile: &[u64], exponent: u64, rho: Rational64) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(profile.len());
    for (x, &m) in profile.iter().enumerate() {
        if within(m, exponent, rho) {
            b.insert(x);
        }
    }
    b
}

/// Row profiles for a fixed `Γ` and maps, reused across radii.
struct Profiles {
    exponent: u64,
    order: u64,
    base: Vec<u64>,
    rows: HashMap<usize, Vec<u64>>,
}

impl Profiles {
    fn new(g: &FiniteAbelianGroup, gamma: &[Character], maps: &[FreimanLinearMap], ys: &GroupSubset) -> Result<Self> {
        let base = max_profile(g, gamma);
        let mut rows = HashMap::new();
        for y in ys.indices() {
            let mut freqs = Vec::with_capacity(maps.len());
            for m in maps {
                freqs.push(m.value(y).ok_or_else(|| Error::Precondition("cell leaves a map domain".into()))?);
            }
            let own = max_profile(g, &freqs);
            rows.insert(y, base.iter().zip(own).map(|(&a, b)| a.max(b)).collect());
        }
        Ok(Profiles { exponent: g.exponent(), order: g.order(), base, rows })
    }

    fn check(&self, cell: &[usize], rho: Rational64, eta: Rational64, seed: u64) -> QrCheck {
        let n = cell.len();
        let b = ball(&self.base, self.exponent, rho).count_ones(..) as i128;
        let balls: Vec<FixedBitSet> = cell.iter().map(|y| ball(&self.rows[y], self.exponent, rho)).collect();
        let sizes: Vec<i128> = balls.iter().map(|s| s.count_ones(..) as i128).collect();
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        // Twice the median.
        let med2 = if n % 2 == 1 { 2 * sorted[n / 2] } else { sorted[n / 2 - 1] + sorted[n / 2] };
        let (p, q) = (*eta.numer() as i128, *eta.denom() as i128);
        let order = self.order as i128;
        // |s - δ|B|| with δ|B| = med2/2, scaled by 2.
        let dev_i: Vec<i128> = sizes.iter().map(|&s| (2 * s - med2).abs()).collect();
        let good_i = dev_i.iter().filter(|&&d| d * q <= 2 * p * order).count() as i128;
        let pass_i = good_i * q >= (q - p) * n as i128;

        let pairs: Vec<(usize, usize)> = if n * n <= PAIR_SAMPLES {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
        } else {
            let mut rng = rng_for(seed, 0x5152);
            (0..PAIR_SAMPLES).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
        };
        let sampled = n * n > PAIR_SAMPLES;
        // |s - δ²|B|| with δ²|B| = med2²/(4b), scaled by 4b.
        let dev_ii: Vec<i128> = pairs
            .iter()
            .map(|&(i, j)| {
                let s = balls[i].intersection_count(&balls[j]) as i128;
                (4 * s * b - med2 * med2).abs()
            })
            .collect();
        let good_ii = dev_ii.iter().filter(|&&d| d * q <= 4 * p * order * b).count() as i128;
        let pass_ii = good_ii * q >= (q - p) * pairs.len() as i128;

        let norm_i: Vec<f64> = dev_i.iter().map(|&d| d as f64 / (2.0 * order as f64)).collect();
        let norm_ii: Vec<f64> = dev_ii.iter().map(|&d| d as f64 / (4.0 * (order * b) as f64)).collect();
        QrCheck {
            rho,
            delta: med2 as f64 / (2.0 * b as f64),
            base_size: b as usize,
            pass_i,
            pass_ii,
            achieved_eta: achieved(norm_i).max(achieved(norm_ii)),
            pairs_checked: pairs.len(),
            pairs_sampled: sampled,
            seed,
        }
    }
}

/// Least `η` with at least a `1 - η` share of deviations at most `η`.
fn achieved(mut devs: Vec<f64>) -> f64 {
    let n = devs.len();
    devs.sort_by(f64::total_cmp);
    (0..n).map(|k| (k as f64 / n as f64).max(devs[n - k - 1])).fold(1.0, f64::min)
}

/// Properties (i) and (ii) on a cell at radius `ρ`, decided in exact arithmetic.
///
/// `δ` is the median ratio. Pairs are exhaustive up to `10⁴` and sampled
/// beyond, in which case the result is flagged.
pub fn qr_property_check(
    g: &FiniteAbelianGroup,
    cell: &GroupSubset,
    gamma: &[Character],
    maps: &[FreimanLinearMap],
    rho: Rational64,
    eta: Rational64,
    seed: u64,
) -> Result<QrCheck> {
    if cell.is_empty() {
        return Err(Error::Precondition("empty cell".into()));
    }
    if eta <= Rational64::from_integer(0) || eta > Rational64::from_integer(1) {
        return Err(Error::Precondition("η must lie in (0, 1]".into()));
    }
    let profiles = Profiles::new(g, gamma, maps, cell)?;
    let pts: Vec<usize> = cell.indices().collect();
    Ok(profiles.check(&pts, rho, eta, seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityConfig {
    pub step_cap: usize,
    /// Box `[-K, K]^r` for relation vectors.
    pub coefficient_bound: u64,
    /// Radius candidates tried per cell.
    pub max_candidates: usize,
    pub seed: u64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig { step_cap: 32, coefficient_bound: 4, max_candidates: 64, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityCell {
    pub progression: CosetProgression,
    pub size: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub rho: Rational64,
    pub delta: f64,
    pub achieved_eta: f64,
    pub certified: bool,
    pub seed: u64,
    #[serde(skip)]
    pub points: GroupSubset,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityPartition {
    pub cells: Vec<RegularityCell>,
    pub certified: bool,
    /// Number of relations adjoined.
    pub steps: u64,
    pub chain_budget: u64,
    pub relations: Vec<Vec<i64>>,
    /// Why the loop stopped short, when it did.
    pub stop_reason: Option<String>,
}

/// Radii `ρ - jη²ρ/1000` for `j ≤ 500η⁻²`, thinned to at most `max` values.
fn radius_grid(rho: Rational64, eta: Rational64, max: usize) -> Vec<Rational64> {
    let (p, q) = (*eta.numer(), *eta.denom());
    let top = 500 * q * q / (p * p);
    let js: Vec<i64> = if (top + 1) as usize <= max {
        (0..=top).collect()
    } else {
        let m = max.max(2) as i64;
        let mut v: Vec<i64> = (0..m).map(|t| (t * top + (m - 1) / 2) / (m - 1)).collect();
        v.dedup();
        v
    };
    js.into_iter().map(|j| rho * Rational64::new(1000 * q * q - j * p * p, 1000 * q * q)).collect()
}

/// Shape of the current progression `Q_s` in the coordinates of `C`.
struct Shape {
    steps: Vec<i64>,
    lengths: Vec<i64>,
    subgroup: GroupSubset,
}

/// Cells `C ∩ (t + Q'_s)` with `Q'_s` the halved `Q_s`.
fn tile(c: &CosetProgression, coords: &HashMap<usize, crate::coset_prog::Coordinates>, shape: &Shape) -> Result<Vec<(CosetProgression, GroupSubset)>> {
    let h = c.group();
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for x in c.subgroup().indices() {
        let r = shape.subgroup.indices().map(|s| h.add_idx(x, s)).min().expect("subgroup has 0");
        rep.insert(x, r);
    }
    let mut groups: BTreeMap<(Vec<i64>, Vec<i64>, usize), Vec<usize>> = BTreeMap::new();
    for (&y, co) in coords {
        let mut res = Vec::with_capacity(co.coeffs.len());
        let mut block = Vec::with_capacity(co.coeffs.len());
        for (i, arm) in c.arms().iter().enumerate() {
            let off = co.coeffs[i] - arm.lo;
            let w = 2 * (shape.lengths[i] / 2) + 1;
            res.push(off % shape.steps[i]);
            block.push(off / shape.steps[i] / w);
        }
        groups.entry((res, block, rep[&co.subgroup])).or_default().push(y);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((_, _, hrep), pts) in groups {
        let mut lo = vec![i64::MAX; c.rank()];
        let mut hi = vec![i64::MIN; c.rank()];
        for y in &pts {
            for (i, &v) in coords[y].coeffs.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        let base = c.point_at(&lo, hrep);
        let arms: Vec<Arm> = c
            .arms()
            .iter()
            .enumerate()
            .map(|(i, a)| Arm::new(h.scale(&a.generator, shape.steps[i]), 0, (hi[i] - lo[i]) / shape.steps[i]))
            .collect();
        let prog = CosetProgression::new(h, h.element_at(base), arms, shape.subgroup.clone())?;
        let set = GroupSubset::from_indices(h, pts.iter().copied());
        debug_assert_eq!(prog.enumerate(), set);
        out.push((prog, set));
    }
    Ok(out)
}

/// Partitions `C` into cells on which both quasirandomness properties hold.
///
/// The loop keeps a shrinking progression `Q_s` and a growing lattice of
/// relations `λ` with `Σ λ_j L_j = 0` on `Q_s`. Each round tiles `C` by
/// translates of the halved `Q_s` and looks for a radius on the grid that
/// certifies each cell. A failing cell `S` yields the relation holding most
/// often on `(S - S) ∩ Q_s`; its zero set in `Q_s` is a Freiman-subgroup from
/// which the next `Q_s` is extracted. The whole of `C` is tried as one cell
/// first.
pub fn regularity_partition(
    g: &FiniteAbelianGroup,
    c: &CosetProgression,
    gamma: &[Character],
    maps: &[FreimanLinearMap],
    rho: Rational64,
    eta: Rational64,
    cfg: &RegularityConfig,
) -> Result<RegularityPartition> {
    if !c.is_symmetric() || !c.is_proper() {
        return Err(Error::Precondition("C must be proper and symmetric".into()));
    }
    if rho <= Rational64::from_integer(0) || rho > Rational64::new(1, 2) {
        return Err(Error::Precondition("ρ must lie in (0, 1/2]".into()));
    }
    if eta <= Rational64::from_integer(0) || eta > Rational64::from_integer(1) {
        return Err(Error::Precondition("η must lie in (0, 1]".into()));
    }
    let h = c.group();
    let c_set = c.enumerate();
    let coords = c.coordinate_map()?;
    let profiles = Profiles::new(g, gamma, maps, &c_set)?;
    let grid = radius_grid(rho, eta, cfg.max_candidates);
    let dual = g.dual();
    let r = maps.len();

    let evaluate = |set: &GroupSubset, task: u64| -> (QrCheck, bool) {
        let pts: Vec<usize> = set.indices().collect();
        let mut first = None;
        for (j, &rad) in grid.iter().enumerate() {
            let chk = profiles.check(&pts, rad, eta, crate::seed::derive_seed(cfg.seed, task * 1024 + j as u64));
            if chk.passes() {
                return (chk, true);
            }
            first.get_or_insert(chk);
        }
        (first.expect("grid is nonempty"), false)
    };
    let cell_of = |prog: CosetProgression, set: GroupSubset, chk: QrCheck, ok: bool| RegularityCell {
        size: set.len(),
        progression: prog,
        rho: chk.rho,
        delta: chk.delta,
        achieved_eta: chk.achieved_eta,
        certified: ok,
        seed: chk.seed,
        points: set,
    };

    let (chk, ok) = evaluate(&c_set, 0);
    let mut monitor = ChainMonitor::new(r.max(1), cfg.coefficient_bound);
    if ok {
        return Ok(RegularityPartition {
            cells: vec![cell_of(c.clone(), c_set, chk, true)],
            certified: true,
            steps: 0,
            chain_budget: monitor.budget(),
            relations: vec![],
            stop_reason: None,
        });
    }

    let mut shape = Shape {
        steps: vec![1; c.rank()],
        lengths: c.arms().iter().map(|a| a.hi).collect(),
        subgroup: c.subgroup().clone(),
    };
    let mut q = c.clone();
    let mut relations = Vec::new();
    let mut round = 0u64;
    loop {
        round += 1;
        let tiles = tile(c, &coords, &shape)?;
        let mut cells = Vec::with_capacity(tiles.len());
        let mut failing: Option<GroupSubset> = None;
        for (t, (prog, set)) in tiles.into_iter().enumerate() {
            let (chk, ok) = evaluate(&set, round * 65_536 + t as u64);
            if !ok && failing.as_ref().is_none_or(|f| set.len() > f.len()) {
                failing = Some(set.clone());
            }
            cells.push(cell_of(prog, set, chk, ok));
        }
        let finish = |cells, reason: Option<String>, monitor: &ChainMonitor, relations| RegularityPartition {
            certified: reason.is_none(),
            cells,
            steps: monitor.length(),
            chain_budget: monitor.budget(),
            relations,
            stop_reason: reason,
        };
        let Some(bad) = failing else {
            return Ok(finish(cells, None, &monitor, relations));
        };
        if r == 0 {
            return Ok(finish(cells, Some("no maps to relate".into()), &monitor, relations));
        }
        if monitor.length() as usize >= cfg.step_cap {
            return Ok(finish(cells, Some(format!("step cap {} reached", cfg.step_cap)), &monitor, relations));
        }
        let q_set = q.enumerate();
        let z_set = bad.diffset(&bad).intersection(&q_set);
        let mut votes: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for z in z_set.indices() {
            let vals: Vec<GroupElement> = maps.iter().map(|m| dual.element_at(m.value_idx(z).expect("Q ⊆ C"))).collect();
            for lam in annihilator_points(&dual, &vals, cfg.coefficient_bound)? {
                let lead = lam.iter().find(|&&v| v != 0);
                if lead.is_some_and(|&v| v > 0) && !monitor.lattice().contains(&lam) {
                    *votes.entry(lam).or_default() += 1;
                }
            }
        }
        let Some((lambda, _)) = votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))) else {
            return Ok(finish(cells, Some("no new relation in the coefficient box".into()), &monitor, relations));
        };
        let zero_set = GroupSubset::from_fn(h, |z| {
            q_set.contains_idx(z) && {
                let v = maps.iter().zip(&lambda).fold(0usize, |acc, (m, &l)| {
                    dual.add_idx(acc, dual.scale_idx(m.value_idx(z).expect("Q ⊆ C"), l))
                });
                v == 0
            }
        });
        let alpha = zero_set.len() as f64 / q_set.len() as f64;
        let ext = match extract_subprogression(&zero_set, &q, alpha) {
            Ok(e) => e,
            Err(e) => return Ok(finish(cells, Some(format!("extraction failed: {e}")), &monitor, relations)),
        };
        if let Err(e) = monitor.push(lambda.clone()) {
            return Ok(finish(cells, Some(e.to_string()), &monitor, relations));
        }
        relations.push(lambda);
        for (i, (&st, &len)) in ext.steps.iter().zip(&ext.lengths).enumerate() {
            shape.steps[i] *= st as i64;
            shape.lengths[i] = len;
        }
        shape.subgroup = ext.progression.subgroup().clone();
        q = ext.progression;
    }
}
