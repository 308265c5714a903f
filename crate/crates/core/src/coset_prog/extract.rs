use std::collections::HashMap;

use serde::Serialize;

use super::{is_freiman_subgroup, Arm, CosetProgression};
use crate::error::{Error, Result};
use crate::group::GroupSubset;

/// A symmetric subprogression `Σ [-M_i, M_i]·(ℓ_i v_i) + H'` inside `A`.
#[derive(Clone, Debug, Serialize)]
pub struct Extraction {
    pub progression: CosetProgression,
    pub steps: Vec<u64>,
    pub lengths: Vec<i64>,
    pub subgroup_size: usize,
}

/// For `A` a Freiman-subgroup of a proper symmetric `C = Σ [-N_i, N_i]·v_i + H`
/// with `|A| ≥ α|C|`, finds `ℓ_i ≤ 20α⁻¹`, `M_i = ⌊N_i/ℓ_i⌋` and `H' = A ∩ H`
/// with the progression above contained in `A`.
///
/// Each step `ℓ_i` is the smallest gap between points of `A` on the densest
/// line parallel to `v_i`; a gap below `2⌈α⁻¹⌉` exists by pigeonhole once
/// `N_i ≥ 10α⁻¹`. Without such a gap the arm collapses to `M_i = 0`.
pub fn extract_subprogression(a: &GroupSubset, c: &CosetProgression, alpha: f64) -> Result<Extraction> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Precondition("α must lie in (0, 1]".into()));
    }
    if !c.is_symmetric() {
        return Err(Error::Precondition("C must be symmetric".into()));
    }
    let coords = c.coordinate_map()?;
    let c_set = c.enumerate();
    if !is_freiman_subgroup(a, &c_set)? {
        return Err(Error::Precondition("A is not a Freiman-subgroup of C".into()));
    }
    if (a.len() as f64) < alpha * c_set.len() as f64 - 1e-9 {
        return Err(Error::Precondition(format!("|A| = {} below α|C|", a.len())));
    }
    let g = c.group();
    let pigeon = 2 * (1.0 / alpha).ceil() as u64;
    let mut steps = Vec::new();
    let mut lengths = Vec::new();
    for (i, arm) in c.arms().iter().enumerate() {
        let n = arm.hi;
        // Lines parallel to v_i, keyed by the other coordinates.
        let mut lines: HashMap<(Vec<i64>, usize), Vec<i64>> = HashMap::new();
        let mut order: Vec<(Vec<i64>, usize)> = Vec::new();
        for x in a.indices() {
            let co = &coords[&x];
            let mut key = co.coeffs.clone();
            key[i] = 0;
            let key = (key, co.subgroup);
            let entry = lines.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                Vec::new()
            });
            entry.push(co.coeffs[i]);
        }
        let best = order.iter().max_by(|p, q| lines[*p].len().cmp(&lines[*q].len()).then(q.cmp(p)));
        let mut gap = None;
        if let Some(key) = best {
            let mut pts = lines[key].clone();
            pts.sort_unstable();
            gap = pts.windows(2).map(|w| (w[1] - w[0]) as u64).min();
        }
        let vi = g.index_of(&arm.generator);
        let step = match gap {
            Some(l) if l < pigeon && (l as i64) <= n && a.contains_idx(g.scale_idx(vi, l as i64)) => l,
            _ if (n as f64) >= 10.0 / alpha => {
                return Err(Error::BoundViolation(format!("no short gap on arm {i} although N ≥ 10/α")));
            }
            _ => (20.0 / alpha).floor() as u64,
        };
        if step as f64 > 20.0 / alpha + 1e-9 {
            return Err(Error::BoundViolation(format!("step {step} above 20/α")));
        }
        steps.push(step);
        lengths.push(n / step as i64);
    }
    let h_prime = a.intersection(c.subgroup());
    if (h_prime.len() as f64) < alpha * c.subgroup().len() as f64 - 1e-9 {
        return Err(Error::BoundViolation("|A ∩ H| below α|H|".into()));
    }
    let arms = c
        .arms()
        .iter()
        .zip(steps.iter().zip(&lengths))
        .map(|(arm, (&l, &m))| Arm::symmetric(g.scale(&arm.generator, l as i64), m))
        .collect();
    let subgroup_size = h_prime.len();
    let progression = CosetProgression::new(g, g.zero(), arms, h_prime)?;
    if !progression.enumerate().is_subset(a) {
        return Err(Error::BoundViolation("extracted progression leaves A".into()));
    }
    Ok(Extraction { progression, steps, lengths, subgroup_size })
}
