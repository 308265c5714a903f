//! Named verification suites run by the command-line driver.
//!
//! Every check draws its randomness from `rng_for(seed, task)` with a fixed
//! task id, so two runs with the same configuration report the same outcomes
//! and numbers. Only the `elapsed_ms` fields vary.

use std::time::Instant;

use num_integer::Integer;
use num_rational::Rational64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bilinear::{
    d_hor, d_ver, iterated_difference, linear_cover, main_theorem_experiment, qr_property_check,
    regularity_partition, respected_quadruple_count, variety_contained_in, BiSet, BilinearVariety,
    ExhaustiveHomFinder, ExperimentConfig, FreimanLinearMap, RegularityConfig,
};
use crate::bohr::{
    bohr_in_progression, bohr_size_estimate, dense_difference_cover, find_min_r, large_spectrum_certify, size_bounds,
    verify_bohr_sum, weak_regular_radius_search, BohrSet, DenseCover,
};
use crate::coset_prog::{
    change_basis, extract_subprogression, partial_projectivity, popular_difference_progression, BasisMove,
    CosetProgression, QuotientHom,
};
use crate::error::{Error, Result};
use crate::fourier::quadruple_counts;
use crate::group::{
    bounded_span, char_eval, invariant_factors, is_basis, make_group, Character, FiniteAbelianGroup, GroupElement,
    GroupSubset,
};
use crate::lattice::{bounded_representation, chain_monitor_budget, span_cover};
use crate::quasirandom::{
    box_norm, correlation_bound_check, neighborhood_stats, one_sided_qr, BipartiteGraph, TupleFamily,
};
use crate::seed::{derive_seed, rng_for};

pub const SUITE_SCHEMA_VERSION: u32 = 1;

pub const SUITES: [&str; 8] = ["bohr", "progression", "lattice", "bilinear", "quasirandom", "regularity", "main-theorem", "all"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Relation steps allowed in the regularity loop.
    pub step_cap: usize,
    /// Candidate varieties per main-theorem run.
    pub budget: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, step_cap: 32, budget: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub module: String,
    pub passed: bool,
    pub measured: Value,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub elapsed_ms: u64,
}

impl SuiteReport {
    /// The report with timing fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> SuiteReport {
        let mut r = self.clone();
        r.elapsed_ms = 0;
        for c in &mut r.checks {
            c.elapsed_ms = 0;
        }
        r
    }
}

type CheckFn = fn(&SuiteConfig) -> Result<(bool, Value)>;

struct Check {
    suite: &'static str,
    name: &'static str,
    module: &'static str,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check { suite: "bohr", name: "size_bounds", module: "bohr", run: bohr_size_bounds },
    Check { suite: "bohr", name: "size_formula", module: "bohr", run: bohr_size_formula },
    Check { suite: "bohr", name: "large_spectrum", module: "bohr", run: bohr_large_spectrum },
    Check { suite: "bohr", name: "bohr_sum", module: "bohr", run: bohr_sum },
    Check { suite: "bohr", name: "dense_difference", module: "bohr", run: bohr_dense_difference },
    Check { suite: "bohr", name: "bohr_in_progression", module: "bohr", run: bohr_inside_progression },
    Check { suite: "lattice", name: "span_cover", module: "lattice", run: lattice_span_cover },
    Check { suite: "progression", name: "quadruple_counts", module: "fourier", run: progression_quadruples },
    Check { suite: "progression", name: "partial_projectivity", module: "coset_prog", run: progression_projectivity },
    Check { suite: "progression", name: "extraction", module: "coset_prog", run: progression_extraction },
    Check { suite: "progression", name: "basis_moves", module: "coset_prog", run: progression_basis_moves },
    Check { suite: "bilinear", name: "difference_operators", module: "bilinear", run: bilinear_differences },
    Check { suite: "bilinear", name: "variety_enumeration", module: "bilinear", run: bilinear_variety },
    Check { suite: "bilinear", name: "linear_cover", module: "bilinear", run: bilinear_cover },
    Check { suite: "quasirandom", name: "correlation_bound", module: "quasirandom", run: qr_correlation },
    Check { suite: "quasirandom", name: "one_sided_exhaustive", module: "quasirandom", run: qr_one_sided },
    Check { suite: "quasirandom", name: "single_edge_box_norm", module: "quasirandom", run: qr_single_edge },
    Check { suite: "quasirandom", name: "neighborhood_stats", module: "quasirandom", run: qr_neighborhoods },
    Check { suite: "regularity", name: "regularity_partition", module: "bilinear", run: regularity_cells },
    Check { suite: "main-theorem", name: "main_theorem_smoke", module: "bilinear", run: main_theorem_smoke },
];

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Runs the checks of a named suite, or every check for `"all"`.
///
/// A check that errors is reported as failed with the error message; it does
/// not stop the suite.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    if !SUITES.contains(&name) {
        return Err(Error::UnknownSuite(name.to_string()));
    }
    let start = Instant::now();
    let mut checks = Vec::new();
    for c in CHECKS.iter().filter(|c| name == "all" || c.suite == name) {
        let t = Instant::now();
        let (passed, measured) = match (c.run)(cfg) {
            Ok(r) => r,
            Err(e) => (false, json!({ "error": e.to_string() })),
        };
        checks.push(CheckResult {
            name: c.name.into(),
            module: c.module.into(),
            passed,
            measured,
            elapsed_ms: elapsed_ms(t),
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        schema_version: SUITE_SCHEMA_VERSION,
        suite: name.into(),
        seed: cfg.seed,
        checks,
        passed,
        elapsed_ms: elapsed_ms(start),
    })
}

// ---------------------------------------------------------------- helpers

/// Up to `max_rank` cyclic factors of order at least 2 with product at most `max_order`.
fn random_moduli(rng: &mut ChaCha8Rng, max_order: u64, max_rank: usize) -> Vec<i64> {
    let rank = rng.random_range(1..=max_rank);
    let mut left = max_order;
    let mut out = Vec::with_capacity(rank);
    for i in 0..rank {
        let cap = (left as f64).powf(1.0 / (rank - i) as f64).floor() as u64;
        let q = if i + 1 == rank { rng.random_range(2..=left.max(2)) } else { rng.random_range(2..=cap.max(2)) };
        out.push(q as i64);
        left /= q;
        if left < 2 {
            break;
        }
    }
    out
}

fn random_group(rng: &mut ChaCha8Rng, max_order: u64, max_rank: usize) -> Result<FiniteAbelianGroup> {
    make_group(&random_moduli(rng, max_order, max_rank))
}

fn random_character(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup) -> Character {
    Character(g.moduli().iter().map(|&q| rng.random_range(0..q)).collect())
}

fn random_element(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup) -> GroupElement {
    GroupElement(g.moduli().iter().map(|&q| rng.random_range(0..q)).collect())
}

/// A random character whose values lie in `(1/d)ℤ` for a small divisor `d` of the exponent.
fn coarse_character(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup, max_order: u64) -> Character {
    let e = g.exponent();
    let divisors: Vec<u64> = (1..=max_order.min(e)).filter(|d| e % d == 0).collect();
    let d = *divisors.choose(rng).expect("1 divides the exponent");
    let chi = random_character(rng, g);
    let dual = g.dual();
    dual.character_at(dual.scale_idx(dual.index_of(&chi.as_element()), (e / d) as i64))
}

fn random_subset(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup, size: usize) -> GroupSubset {
    let idx = rand::seq::index::sample(rng, g.size(), size.min(g.size()));
    GroupSubset::from_indices(g, idx.iter())
}

fn ratio(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn rat_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Weakly regular Bohr instances shared by the size formula and spectrum checks.
///
/// The radius search uses `ε/2` so the same instances meet the stronger
/// annulus bound needed for the spectrum certificate.
struct RegularInstance {
    g: FiniteAbelianGroup,
    freqs: Vec<Character>,
    rho: Rational64,
}

const FORMULA_ETA: (i64, i64) = (1, 10);
const FORMULA_EPS: (i64, i64) = (1, 10);
const FORMULA_INSTANCES: usize = 50;

fn regular_instances(seed: u64) -> Result<(Vec<RegularInstance>, usize)> {
    let mut rng = rng_for(seed, 2);
    let eta = ratio(FORMULA_ETA.0, FORMULA_ETA.1);
    let eps = ratio(FORMULA_EPS.0, FORMULA_EPS.1);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < FORMULA_INSTANCES && attempts < 5000 {
        attempts += 1;
        let g = random_group(&mut rng, 512, 2)?;
        let k = rng.random_range(1..=2);
        let freqs: Vec<Character> = (0..k).map(|_| coarse_character(&mut rng, &g, 12)).collect();
        match weak_regular_radius_search(&g, &freqs, ratio(1, 10), ratio(2, 5), eta, eps / 2) {
            Ok(rho) => out.push(RegularInstance { g, freqs, rho }),
            Err(Error::NoWeaklyRegularRadius) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((out, attempts))
}

// ---------------------------------------------------------------- bohr

fn bohr_size_bounds(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 1);
    let (mut violations, mut doubled) = (0, 0);
    let mut min_slack = f64::INFINITY;
    for _ in 0..200 {
        let g = random_group(&mut rng, 2048, 3)?;
        let k = rng.random_range(0..=3);
        let freqs = (0..k).map(|_| random_character(&mut rng, &g)).collect();
        let den = rng.random_range(2..=64);
        let num = rng.random_range(1..=den / 2);
        let b = BohrSet::new(&g, freqs, ratio(num, den))?;
        match size_bounds(&b) {
            Ok(s) => {
                doubled += s.doubled_size.is_some() as usize;
                min_slack = min_slack.min(s.size as f64 / s.lower_bound);
            }
            Err(Error::BoundViolation(_)) => violations += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((violations == 0, json!({ "instances": 200, "violations": violations, "doubling_checked": doubled, "min_size_over_bound": min_slack })))
}

fn bohr_size_formula(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let (instances, attempts) = regular_instances(cfg.seed)?;
    let eta = ratio(FORMULA_ETA.0, FORMULA_ETA.1);
    let eps = ratio(FORMULA_EPS.0, FORMULA_EPS.1);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for inst in &instances {
        let est = bohr_size_estimate(&inst.g, &inst.freqs, inst.rho, eta, eps)?;
        let size = BohrSet::new(&inst.g, inst.freqs.clone(), inst.rho)?.size();
        let err = (est.estimate - size as f64).abs() / inst.g.order() as f64;
        worst = worst.max(err);
        if err > 2.0 * rat_f64(eps) + 1e-9 {
            failures += 1;
        }
    }
    let passed = instances.len() >= FORMULA_INSTANCES && failures == 0;
    Ok((passed, json!({ "instances": instances.len(), "attempts": attempts, "failures": failures, "worst_error_over_order": worst })))
}

fn bohr_large_spectrum(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let (instances, _) = regular_instances(cfg.seed)?;
    let eta = ratio(FORMULA_ETA.0, FORMULA_ETA.1);
    let eps = ratio(FORMULA_EPS.0, FORMULA_EPS.1);
    let (mut large, mut failures, mut scanned) = (0, 0, 0);
    for inst in &instances {
        let dual = inst.g.dual();
        for chi in inst.g.characters() {
            scanned += 1;
            let cert = large_spectrum_certify(&inst.g, &inst.freqs, inst.rho, eta, eps, &chi)?;
            if cert.coefficient + 1e-9 < rat_f64(eps) {
                continue;
            }
            large += 1;
            let ok = cert.representation.as_ref().is_some_and(|a| {
                let gens: Vec<GroupElement> = dedup(&inst.freqs).iter().map(Character::as_element).collect();
                a.iter().all(|c| c.unsigned_abs() <= cert.bound) && dual.combination(a, &gens) == chi.as_element()
            });
            failures += !ok as usize;
        }
    }
    let passed = instances.len() >= FORMULA_INSTANCES && failures == 0;
    Ok((passed, json!({ "instances": instances.len(), "characters": scanned, "large": large, "failures": failures })))
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

fn bohr_sum(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 4);
    let radii = [ratio(1, 8), ratio(1, 6), ratio(1, 5), ratio(1, 4)];
    let (mut found, mut failures, mut attempts) = (0, 0, 0);
    let mut rs = Vec::new();
    while found < 20 && attempts < 2000 {
        attempts += 1;
        let g = random_group(&mut rng, 256, 2)?;
        let pick = |rng: &mut ChaCha8Rng| -> Result<BohrSet> {
            let k = rng.random_range(1..=2);
            let freqs = (0..k).map(|_| random_character(rng, &g)).collect();
            BohrSet::new(&g, freqs, radii[rng.random_range(0..radii.len())])
        };
        let (b1, b2) = (pick(&mut rng)?, pick(&mut rng)?);
        if b1.enumerate().sumset(&b2.enumerate()).is_full() {
            continue;
        }
        found += 1;
        let ok = match find_min_r(&b1, &b2)? {
            Some(r) => {
                rs.push(r);
                verify_bohr_sum(&b1, &b2, r)?.holds && !verify_bohr_sum(&b1, &b2, 0)?.holds
            }
            None => false,
        };
        failures += !ok as usize;
    }
    let passed = found == 20 && failures == 0;
    Ok((passed, json!({ "instances": found, "failures": failures, "min_r": rs })))
}

fn bohr_dense_difference(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 5);
    let (mut holds, mut removed_total) = (0, 0);
    for _ in 0..100 {
        let g = random_group(&mut rng, 256, 2)?;
        let k = rng.random_range(1..=2);
        let freqs = (0..k).map(|_| random_character(&mut rng, &g)).collect();
        let den = rng.random_range(2..=16);
        let num = rng.random_range(1..=den / 2);
        let bohr = BohrSet::new(&g, freqs, ratio(num, den))?;
        let b = bohr.enumerate();
        let spare = (b.len() as f64 * 4f64.powi(-(k as i32) - 1)).floor() as usize;
        let drop = rng.random_range(0..=spare);
        let mut pts: Vec<usize> = b.indices().collect();
        pts.shuffle(&mut rng);
        let a = GroupSubset::from_indices(&g, pts[drop..].iter().copied());
        removed_total += drop;
        if let DenseCover::Checked { holds: true } = dense_difference_cover(&a, &bohr)? {
            holds += 1;
        }
    }
    Ok((holds == 100, json!({ "instances": 100, "holds": holds, "removed": removed_total })))
}

fn bohr_inside_progression(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 6);
    let (mut failures, mut strict) = (0, 0);
    let mut sizes = Vec::new();
    for _ in 0..10 {
        let q = rng.random_range(8..=128);
        let g = make_group(&[q])?;
        let n = rng.random_range(1..=(q - 1) / 2);
        let c = CosetProgression::symmetric(&g, vec![(g.element(&[1])?, n)], GroupSubset::singleton(&g, 0))?;
        let out = bohr_in_progression(&c)?;
        let b = out.bohr.enumerate();
        let c_set = c.enumerate();
        failures += !(b.is_subset(&c_set) && b.contains_idx(0)) as usize;
        strict += (b.len() > 1) as usize;
        sizes.push(b.len());
    }
    Ok((failures == 0, json!({ "instances": 10, "failures": failures, "larger_than_zero": strict, "sizes": sizes })))
}

// ---------------------------------------------------------------- lattice

fn lattice_span_cover(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 7);
    let (mut containment, mut length, mut coeff) = (0, 0, 0);
    let mut max_len = 0;
    for _ in 0..100 {
        let g = random_group(&mut rng, 10_000, 2)?;
        let k = rng.random_range(1..=4);
        let r = rng.random_range(1..=5u64);
        let a: Vec<GroupElement> = (0..k).map(|_| random_element(&mut rng, &g)).collect();
        let span = bounded_span(&g, &a, r);
        let size = rng.random_range(1..=span.len().min(40));
        let pts: Vec<usize> = span.indices().collect();
        let chosen = rand::seq::index::sample(&mut rng, pts.len(), size);
        let b = GroupSubset::from_indices(&g, chosen.iter().map(|i| pts[i]));
        let cover = span_cover(&g, &b, &a, r)?;
        let reach = bounded_span(&g, &cover.vectors, cover.coefficient_bound);
        containment += !b.is_subset(&reach) as usize;
        let l = cover.vectors.len();
        max_len = max_len.max(l);
        length += (l as u64 > chain_monitor_budget(k, r)) as usize;
        // A short combination of the preimages, kept inside the box.
        let z = &cover.preimages;
        let mut w = vec![0i64; k];
        for v in z {
            let c = rng.random_range(-1..=1);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += c * vi;
            }
        }
        if w.iter().any(|x| x.unsigned_abs() > r) {
            w = z[0].clone();
        }
        let lambda = bounded_representation(&w, z, r, r)?;
        let limit = (1..=k as u64).product::<u64>() * r.pow(k as u32 + 1) * (r + z.len() as u64);
        let exact = (0..k).all(|c| lambda.iter().zip(z).map(|(l, v)| l * v[c]).sum::<i64>() == w[c]);
        coeff += !(exact && lambda.iter().all(|l| l.unsigned_abs() <= limit)) as usize;
    }
    let passed = containment == 0 && length == 0 && coeff == 0;
    Ok((passed, json!({ "instances": 100, "containment_failures": containment, "length_failures": length, "coefficient_failures": coeff, "max_length": max_len })))
}

// ---------------------------------------------------------------- progression

fn brute_quadruples(g: &FiniteAbelianGroup, a: &GroupSubset) -> Vec<u64> {
    let pts: Vec<usize> = a.indices().collect();
    let mut out = vec![0u64; g.size()];
    for &p in &pts {
        for &q in &pts {
            let s = g.add_idx(p, q);
            for &r in &pts {
                let t = g.sub_idx(s, r);
                for &u in &pts {
                    out[g.sub_idx(t, u)] += 1;
                }
            }
        }
    }
    out
}

fn progression_quadruples(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 8);
    let (mut mismatches, mut popular_failures, mut popular_runs) = (0, 0, 0);
    for i in 0..1000 {
        let g = random_group(&mut rng, 64, 2)?;
        let size = rng.random_range(1..=g.size().min(16));
        let a = random_subset(&mut rng, &g, size);
        let brute = brute_quadruples(&g, &a);
        mismatches += (quadruple_counts(&a) != brute) as usize;
        if i % 10 == 0 {
            popular_runs += 1;
            let k = a.sumset(&a).len() as f64 / a.len() as f64;
            let pp = popular_difference_progression(&a, k)?;
            let threshold = (a.len() as f64).powi(3) / (64.0 * k);
            let set = pp.progression.enumerate();
            let ok = pp.progression.is_symmetric()
                && pp.progression.is_proper()
                && set.indices().all(|x| brute[x] as f64 >= threshold);
            popular_failures += !ok as usize;
        }
    }
    let passed = mismatches == 0 && popular_failures == 0;
    Ok((passed, json!({ "cases": 1000, "mismatches": mismatches, "popular_runs": popular_runs, "popular_failures": popular_failures })))
}

fn random_quotient_hom(rng: &mut ChaCha8Rng) -> Result<QuotientHom> {
    loop {
        let g = random_group(rng, 64, 2)?;
        let h = random_group(rng, 64, 2)?;
        let gens: Vec<GroupElement> = (0..rng.random_range(1..=2)).map(|_| random_element(rng, &h)).collect();
        let kernel = GroupSubset::generated(&h, &gens);
        if kernel.len() > 8 {
            continue;
        }
        let mut images = Vec::new();
        for &q in g.moduli() {
            let ok: Vec<GroupElement> = h.elements().filter(|x| kernel.contains(&h.scale(x, q as i64))).collect();
            images.push(ok.choose(rng).expect("0 qualifies").clone());
        }
        return QuotientHom::new(&g, &h, kernel, images);
    }
}

fn progression_projectivity(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 9);
    let (mut failures, mut max_rank) = (0, 0);
    for _ in 0..50 {
        let phi = random_quotient_hom(&mut rng)?;
        let (g, h, kernel) = (phi.domain(), phi.codomain(), phi.kernel());
        let pp = partial_projectivity(&phi, 2)?;
        let c = pp.progression.enumerate();
        let rank = pp.progression.rank();
        max_rank = max_rank.max(rank);
        let rank_ok = (rank as f64) <= (kernel.len() as f64).log2() + 1e-9;
        let size_ok = c.len() * kernel.len() >= g.size();
        let lift_ok = c.indices().all(|x| {
            let psi = pp.map.get(x).expect("C is the domain");
            kernel.contains_idx(h.sub_idx(psi, h.index_of(&phi.lift(&g.element_at(x)))))
        });
        let pts: Vec<usize> = c.indices().collect();
        let psi = |x: usize| pp.map.get(x).expect("C is the domain");
        let hom_ok = pts.iter().all(|&p| {
            pts.iter().all(|&q| {
                pts.iter().all(|&r| {
                    let s = g.sub_idx(g.add_idx(p, q), r);
                    !c.contains_idx(s) || h.add_idx(psi(p), psi(q)) == h.add_idx(psi(r), psi(s))
                })
            })
        });
        failures += !(rank_ok && size_ok && lift_ok && hom_ok) as usize;
    }
    Ok((failures == 0, json!({ "instances": 50, "failures": failures, "max_rank": max_rank })))
}

/// A proper symmetric progression in a random group, with a Freiman-subgroup
/// `A = C ∩ S` for a random cyclic subgroup `S`.
fn extraction_instance(rng: &mut ChaCha8Rng) -> Result<(CosetProgression, GroupSubset)> {
    loop {
        let g = random_group(rng, 400, 2)?;
        let rank = rng.random_range(0..=2);
        let arms: Vec<(GroupElement, i64)> =
            (0..rank).map(|_| (random_element(rng, &g), rng.random_range(1..=12))).collect();
        let sub = if rng.random_bool(0.5) {
            GroupSubset::generated(&g, &[random_element(rng, &g)])
        } else {
            GroupSubset::singleton(&g, 0)
        };
        let Ok(c) = CosetProgression::symmetric(&g, arms, sub) else { continue };
        if !c.is_proper() {
            continue;
        }
        let s = GroupSubset::generated(&g, &[random_element(rng, &g)]);
        return Ok((c.clone(), c.enumerate().intersection(&s)));
    }
}

fn progression_extraction(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 10);
    let mut failures = 0;
    let mut max_step = 0;
    for _ in 0..100 {
        let (c, a) = extraction_instance(&mut rng)?;
        let alpha = a.len() as f64 / c.enumerate().len() as f64;
        let ex = extract_subprogression(&a, &c, alpha)?;
        let inside = ex.progression.enumerate().is_subset(&a);
        let steps_ok = ex.steps.iter().all(|&l| l >= 1 && l as f64 <= 20.0 / alpha + 1e-9);
        let lengths_ok = c.arms().iter().zip(&ex.steps).zip(&ex.lengths).all(|((arm, &l), &m)| m == Integer::div_floor(&arm.hi, &(l as i64)));
        let h_prime = a.intersection(c.subgroup());
        let sub_ok = *ex.progression.subgroup() == h_prime
            && h_prime.len() as f64 >= alpha * c.subgroup().len() as f64 - 1e-9;
        max_step = max_step.max(ex.steps.iter().copied().max().unwrap_or(0));
        failures += !(inside && steps_ok && lengths_ok && sub_ok) as usize;
    }
    Ok((failures == 0, json!({ "instances": 100, "failures": failures, "max_step": max_step })))
}

fn random_move(rng: &mut ChaCha8Rng, orders: &[u64]) -> Option<BasisMove> {
    let r = orders.len();
    match rng.random_range(0..3) {
        0 if r >= 2 => {
            let i = rng.random_range(0..r - 1);
            let j = rng.random_range(i + 1..r);
            Some(BasisMove::Upper { i, j, lambda: rng.random_range(-5..=5) })
        }
        1 if r >= 2 => {
            let j = rng.random_range(0..r - 1);
            let i = rng.random_range(j + 1..r);
            Some(BasisMove::Lower { i, j, lambda: rng.random_range(-5..=5) })
        }
        _ => {
            let i = rng.random_range(0..r);
            let n = orders[i] as i64;
            let units: Vec<i64> = (-n.max(2)..=n.max(2)).filter(|&l| l.rem_euclid(n).gcd(&n) == 1).collect();
            Some(BasisMove::Scale { i, lambda: *units.choose(rng)? })
        }
    }
}

fn progression_basis_moves(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 11);
    let (mut moves, mut failures) = (0, 0);
    while moves < 1000 {
        let g = random_group(&mut rng, 1024, 3)?;
        let inv = invariant_factors(&g);
        if inv.basis.is_empty() {
            continue;
        }
        let mut basis = inv.basis.clone();
        for _ in 0..50 {
            let Some(mv) = random_move(&mut rng, &inv.orders) else { continue };
            moves += 1;
            match change_basis(&g, &basis, mv) {
                Ok(next) => {
                    let orders: Vec<u64> = next.iter().map(|x| g.order_of(x)).collect();
                    failures += !(is_basis(&g, &next) && orders == inv.orders) as usize;
                    basis = next;
                }
                Err(_) => failures += 1,
            }
        }
    }
    Ok((failures == 0, json!({ "moves": moves, "failures": failures })))
}

// ---------------------------------------------------------------- bilinear

fn brute_d_hor(a: &BiSet) -> BiSet {
    let (g, h) = (a.g(), a.h());
    let mut out = BiSet::empty(g, h);
    for y in 0..h.size() {
        for x1 in 0..g.size() {
            for x2 in 0..g.size() {
                if a.contains(x1, y) && a.contains(x2, y) {
                    out.insert(g.sub_idx(x1, x2), y);
                }
            }
        }
    }
    out
}

fn bilinear_differences(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 12);
    let (mut failures, mut instances) = (0, 0);
    for _ in 0..30 {
        instances += 1;
        let g = random_group(&mut rng, 12, 2)?;
        let h = random_group(&mut rng, 12, 2)?;
        let p = rng.random_range(0.05..0.5);
        let a = BiSet::from_fn(&g, &h, |_, _| rng.random_bool(p));
        let hor = d_hor(&a);
        let ok = hor == brute_d_hor(&a)
            && d_ver(&a) == d_hor(&a.transpose()).transpose()
            && iterated_difference(&a, "hv")? == d_hor(&d_ver(&a))
            && a.is_subset(&BiSet::full(&g, &h))
            && (0..h.size()).all(|y| a.row(y).is_empty() || hor.contains(0, y));
        failures += !ok as usize;
    }
    let g = make_group(&[2, 2])?;
    let a = BiSet::from_fn(&g, &g, |x, y| (x, y) == (0, 0) || (x, y) == (1, 0) || (x, y) == (0, 1));
    let example = d_hor(&a) == a && d_ver(&a) == a;
    let z5 = make_group(&[5])?;
    let respected = respected_quadruple_count(&z5, &z5, &[(0, 0), (1, 0)]);
    let passed = failures == 0 && example && respected == 6;
    Ok((passed, json!({ "instances": instances, "failures": failures, "small_example": example, "respected_quadruples": respected })))
}

/// Membership by the definition: `y ∈ C` and `‖χ(x)‖ ≤ ρ` for every frequency of the row.
fn brute_variety_member(v: &BilinearVariety, c: &GroupSubset, x: usize, y: usize) -> bool {
    if !c.contains_idx(y) {
        return false;
    }
    let g = v.g();
    let xe = g.element_at(x);
    v.gamma()
        .iter()
        .cloned()
        .chain(v.maps().iter().map(|m| m.value(y).expect("C in domain")))
        .all(|chi| char_eval(g, &chi, &xe).dist() <= v.rho())
}

fn random_hom_images(rng: &mut ChaCha8Rng, h: &FiniteAbelianGroup, g: &FiniteAbelianGroup) -> Vec<Character> {
    let dual = g.dual();
    h.moduli()
        .iter()
        .map(|&n| {
            let ok: Vec<Character> = dual.elements().filter(|c| dual.scale(c, n as i64) == dual.zero()).map(|c| Character(c.0)).collect();
            ok.choose(rng).expect("0 qualifies").clone()
        })
        .collect()
}

fn bilinear_variety(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 13);
    let mut failures = 0;
    for _ in 0..20 {
        let g = random_group(&mut rng, 32, 2)?;
        let h = random_group(&mut rng, 32, 2)?;
        let gamma = (0..rng.random_range(0..=2)).map(|_| random_character(&mut rng, &g)).collect();
        let den = rng.random_range(2..=12);
        let rho = ratio(rng.random_range(0..=den / 2), den);
        let n = rng.random_range(0..=((h.moduli()[0] as i64 - 1) / 2));
        let c = CosetProgression::symmetric(&h, vec![(h.unit(0), n)], GroupSubset::singleton(&h, 0))?;
        let maps = (0..rng.random_range(0..=2))
            .map(|_| FreimanLinearMap::from_unit_images(&h, &g, &random_hom_images(&mut rng, &h, &g)))
            .collect::<Result<Vec<_>>>()?;
        let v = BilinearVariety::new(&g, gamma, rho, c.clone(), maps)?;
        let c_set = c.enumerate();
        let brute = BiSet::from_fn(&g, &h, |x, y| brute_variety_member(&v, &c_set, x, y));
        let e = v.enumerate();
        let linear = v.maps().iter().all(FreimanLinearMap::is_freiman_linear);
        failures += !(e == brute && variety_contained_in(&v, &brute) && linear) as usize;
    }
    Ok((failures == 0, json!({ "instances": 20, "failures": failures })))
}

fn bilinear_cover(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let g = make_group(&[16])?;
    let h = g.clone();
    let u: Vec<Vec<Character>> = (0..16u64).map(|y| vec![Character(vec![0]), Character(vec![(3 * y) % 16])]).collect();
    let y_set = GroupSubset::full(&h);
    let cover = linear_cover(&g, &y_set, &u, &ExhaustiveHomFinder::default(), 8, derive_seed(cfg.seed, 14))?;
    let linear = cover.maps.iter().all(FreimanLinearMap::is_freiman_linear);
    let matches = cover.maps.iter().any(|m| (0..16).filter(|&y| m.value_idx(y) == Some((3 * y) % 16)).count() >= 8);
    let passed = linear && matches && cover.complete;
    Ok((passed, json!({ "maps": cover.map_count, "rounds": cover.rounds, "complete": cover.complete, "bad_fraction": cover.bad_fraction, "all_linear": linear, "structure_found": matches })))
}

// ---------------------------------------------------------------- quasirandom

fn qr_correlation(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 15);
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for t in 0..1000 {
        let nx = rng.random_range(1..=8);
        let ny = rng.random_range(1..=8);
        let f: Vec<f64> = if t % 2 == 0 {
            (0..nx * ny).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
        } else {
            (0..nx * ny).map(|_| rng.random_range(-1.0..=1.0)).collect()
        };
        let u: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..ny).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let c = correlation_bound_check(&f, &u, &v)?;
        violations += !c.holds as usize;
        if c.rhs > 0.0 {
            max_ratio = max_ratio.max(c.lhs / c.rhs);
        }
    }
    Ok((violations == 0, json!({ "triples": 1000, "violations": violations, "max_lhs_over_rhs": max_ratio })))
}

fn qr_one_sided(_cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let (mut violations, mut hypothesis_misses, mut checked) = (0, 0, 0);
    for mask in 0u32..1 << 16 {
        let graph = BipartiteGraph::from_fn(4, 4, |x, y| mask >> (4 * x + y) & 1 == 1);
        let density = graph.density();
        for delta in [0.0, 0.25, 0.5, 0.75, 1.0, density] {
            let dev = one_sided_qr(&graph, delta, 0.0)?;
            let eps = dev.degree_deviation.max(dev.codegree_deviation);
            let r = one_sided_qr(&graph, delta, eps)?;
            checked += 1;
            hypothesis_misses += !r.hypotheses_hold as usize;
            violations += !r.holds as usize;
        }
    }
    let passed = violations == 0 && hypothesis_misses == 0;
    Ok((passed, json!({ "graphs": 1u32 << 16, "checks": checked, "violations": violations, "hypothesis_misses": hypothesis_misses })))
}

fn qr_single_edge(_cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let g = BipartiteGraph::from_fn(2, 2, |x, y| x == 0 && y == 0);
    let n = box_norm(&g.balanced(0.25), 2, 2)?;
    let expected = (7.0f64 / 256.0).powf(0.25);
    Ok(((n - expected).abs() <= 1e-9, json!({ "box_norm": n, "expected": expected })))
}

fn qr_neighborhoods(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    // Edges x ~ y when ‖xy/16‖ ≤ 1/4 on ℤ/16 × ℤ/16.
    let bohr = BipartiteGraph::from_fn(16, 16, |x, y| {
        let t = (x * y) % 16;
        t.min(16 - t) * 4 <= 16
    });
    let complete = BipartiteGraph::from_fn(8, 8, |_, _| true);
    let mut out = Vec::new();
    let mut passed = true;
    for (name, graph) in [("bohr_z16", &bohr), ("complete", &complete)] {
        for (k, m) in [(1, 1), (2, 1), (1, 2), (3, 1)] {
            let s = neighborhood_stats(graph, k, m, &TupleFamily::Full, 0.25, derive_seed(cfg.seed, 16))?;
            passed &= s.holds && (name != "complete" || s.probability == 0.0);
            out.push(json!({ "graph": name, "k": k, "m": m, "probability": s.probability, "bound": s.bound, "sampled": s.sampled }));
        }
    }
    Ok((passed, Value::Array(out)))
}

// ---------------------------------------------------------------- regularity

fn regularity_cells(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut rng = rng_for(cfg.seed, 17);
    let eta = ratio(1, 4);
    let rho = ratio(1, 4);
    let (mut partition_failures, mut recheck_failures, mut budget_failures) = (0, 0, 0);
    let (mut cells, mut certified_cells, mut certified_runs, mut steps) = (0, 0, 0, 0);
    for t in 0..20u64 {
        let g = random_group(&mut rng, 256, 2)?;
        let h = make_group(&[rng.random_range(2..=256)])?;
        let q = h.moduli()[0] as i64;
        let c = if rng.random_bool(0.3) {
            CosetProgression::from_subgroup(GroupSubset::full(&h))?
        } else {
            CosetProgression::symmetric(&h, vec![(h.unit(0), rng.random_range(0..=(q - 1) / 2))], GroupSubset::singleton(&h, 0))?
        };
        let gamma: Vec<Character> = (0..rng.random_range(0..=1)).map(|_| random_character(&mut rng, &g)).collect();
        let r = rng.random_range(0..=2);
        let maps = (0..r)
            .map(|_| FreimanLinearMap::from_unit_images(&h, &g, &random_hom_images(&mut rng, &h, &g)))
            .collect::<Result<Vec<_>>>()?;
        let rcfg = RegularityConfig { step_cap: cfg.step_cap, seed: derive_seed(cfg.seed, 1700 + t), ..RegularityConfig::default() };
        let part = regularity_partition(&g, &c, &gamma, &maps, rho, eta, &rcfg)?;
        let c_set = c.enumerate();
        let mut union = GroupSubset::empty(&h);
        let mut total = 0;
        for cell in &part.cells {
            union = union.union(&cell.points);
            total += cell.points.len();
            cells += 1;
            let band = cell.rho >= rho / 2 && cell.rho <= rho;
            if cell.certified {
                certified_cells += 1;
                let chk = qr_property_check(&g, &cell.points, &gamma, &maps, cell.rho, eta, cell.seed)?;
                recheck_failures += !(chk.passes() && band) as usize;
            }
        }
        partition_failures += !(union == c_set && total == c_set.len()) as usize;
        budget_failures += (part.steps > chain_monitor_budget(r, rcfg.coefficient_bound)) as usize;
        certified_runs += part.certified as usize;
        steps += part.steps;
    }
    let passed = partition_failures == 0 && recheck_failures == 0 && budget_failures == 0;
    Ok((passed, json!({
        "instances": 20,
        "cells": cells,
        "certified_cells": certified_cells,
        "certified_partitions": certified_runs,
        "relation_steps": steps,
        "partition_failures": partition_failures,
        "recheck_failures": recheck_failures,
        "budget_failures": budget_failures,
    })))
}

// ---------------------------------------------------------------- main theorem

/// Groups `G = H` used by the main-theorem smoke test; `|G||H| ≤ 2^16`.
pub const SMOKE_GROUPS: [&[i64]; 6] = [&[16], &[4, 4], &[2, 2, 2, 2], &[64], &[8, 8], &[256]];
pub const SMOKE_DENSITIES: [f64; 3] = [0.05, 0.1, 0.3];
pub const SMOKE_SEEDS: u64 = 10;

fn main_theorem_smoke(cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let mut runs = Vec::new();
    let mut failures = 0;
    for (gi, moduli) in SMOKE_GROUPS.iter().enumerate() {
        for (di, &delta) in SMOKE_DENSITIES.iter().enumerate() {
            let mut sizes = Vec::new();
            for s in 0..SMOKE_SEEDS {
                let seed = derive_seed(cfg.seed, 0x1200 + (gi * 64 + di * 16) as u64 + s);
                let mut ecfg = ExperimentConfig::new(moduli, moduli, delta, seed);
                ecfg.budget = cfg.budget;
                let rep = main_theorem_experiment(&ecfg)?;
                let v = &rep.variety;
                let c_set = v.progression().enumerate();
                let (g, h) = (v.g(), v.h());
                let mut brute_size = 0;
                let mut brute_inside = true;
                for y in 0..h.size() {
                    for x in 0..g.size() {
                        if brute_variety_member(v, &c_set, x, y) {
                            brute_size += 1;
                            brute_inside &= rep.d.contains(x, y);
                        }
                    }
                }
                let contained = variety_contained_in(v, &rep.d);
                let nontrivial = rep.d_size <= 1 || rep.variety_size > 1;
                let ok = rep.verified && contained && brute_inside == contained && brute_size == rep.variety_size && nontrivial;
                failures += !ok as usize;
                sizes.push(rep.variety_size);
            }
            runs.push(json!({ "group": moduli, "delta": delta, "variety_sizes": sizes }));
        }
    }
    Ok((failures == 0, json!({ "runs": runs, "failures": failures })))
}
