use std::collections::BTreeMap;

use serde::Serialize;

use super::{popular_difference_progression, Arm, CosetProgression};
use crate::error::{Error, Result};
use crate::group::GroupSubset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementSource {
    /// Translated popular-difference progression of the densest common cell.
    Popular,
    /// The selected cell of one of the input progressions.
    Cell,
    /// A single point of `X`.
    Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub progression: CosetProgression,
    pub source: RefinementSource,
    /// `|C ∩ X|`.
    pub hits: usize,
    /// `|Y|` for the densest common cell `Y`.
    pub cell_population: usize,
    /// Cell widths `M` per input progression and arm.
    pub widths: Vec<Vec<u64>>,
    /// Sum of the input ranks, reported as the rank bound for this instance.
    pub rank_sum: usize,
}

struct Cells {
    lows: Vec<i64>,
    widths: Vec<u64>,
    ranges: Vec<(i64, i64)>,
}

/// A proper coset progression inside `C_1 ∩ … ∩ C_r` meeting `X` often.
///
/// Each `C_i` is cut into cells of width `M = ⌈δN/(100dr)⌉` along every arm,
/// keeping only interior cells when there are at least `50dr/δ` of them and
/// unit cells otherwise. The common cell holding most of `X` is `Y`; the
/// candidates are the popular-difference progression of `Y` translated by a
/// point of `Y`, the chosen cells themselves and a single point. Every
/// candidate is checked against the intersection by enumeration.
pub fn intersect_refine(progs: &[CosetProgression], x: &GroupSubset) -> Result<Refinement> {
    let first = progs.first().ok_or_else(|| Error::Precondition("need at least one progression".into()))?;
    let g = first.group();
    if x.is_empty() {
        return Err(Error::Precondition("X is empty".into()));
    }
    let mut inter = GroupSubset::full(g);
    for p in progs {
        if p.group() != g {
            return Err(Error::GroupMismatch);
        }
        inter = inter.intersection(&p.enumerate());
    }
    if !x.is_subset(&inter) {
        return Err(Error::Precondition("X is not inside every C_i".into()));
    }
    let delta = x.density();
    let r = progs.len() as f64;
    let d = progs.iter().map(CosetProgression::rank).max().unwrap_or(0).max(1) as f64;
    let mut coords = Vec::new();
    let mut cells = Vec::new();
    for p in progs {
        coords.push(p.coordinate_map()?);
        let mut c = Cells { lows: vec![], widths: vec![], ranges: vec![] };
        for arm in p.arms() {
            let n = arm.len();
            let m = ((delta * n as f64) / (100.0 * d * r)).ceil().max(1.0) as u64;
            let t = n.div_ceil(m);
            c.lows.push(arm.lo);
            if t as f64 >= 50.0 * d * r / delta {
                c.widths.push(m);
                c.ranges.push((4, t as i64 - 4));
            } else {
                c.widths.push(1);
                c.ranges.push((0, n as i64 - 1));
            }
        }
        cells.push(c);
    }
    let mut tally: BTreeMap<Vec<Vec<i64>>, Vec<usize>> = BTreeMap::new();
    'points: for xi in x.indices() {
        let mut key = Vec::with_capacity(progs.len());
        for (map, c) in coords.iter().zip(&cells) {
            let co = &map[&xi];
            let mut k = Vec::with_capacity(co.coeffs.len());
            for (j, &v) in co.coeffs.iter().enumerate() {
                let idx = (v - c.lows[j]) / c.widths[j] as i64;
                if idx < c.ranges[j].0 || idx > c.ranges[j].1 {
                    continue 'points;
                }
                k.push(idx);
            }
            key.push(k);
        }
        tally.entry(key).or_default().push(xi);
    }
    let mut best_key = None;
    let mut best_len = 0;
    for (k, pts) in &tally {
        if pts.len() > best_len {
            best_len = pts.len();
            best_key = Some(k.clone());
        }
    }

    let mut candidates: Vec<(CosetProgression, RefinementSource)> = Vec::new();
    let y = match &best_key {
        Some(k) => GroupSubset::from_indices(g, tally[k].iter().copied()),
        None => GroupSubset::singleton(g, x.indices().next().expect("X nonempty")),
    };
    let doubling = y.sumset(&y).len() as f64 / y.len() as f64;
    let popular = popular_difference_progression(&y, doubling)?.progression;
    let mut best_shift: Option<(usize, usize)> = None;
    for t in y.indices() {
        let hits = popular.translate(&g.element_at(t)).enumerate().intersection_len(x);
        if best_shift.is_none_or(|(h, _)| hits > h) {
            best_shift = Some((hits, t));
        }
    }
    if let Some((_, t)) = best_shift {
        candidates.push((popular.translate(&g.element_at(t)), RefinementSource::Popular));
    }
    if let Some(k) = &best_key {
        for ((p, c), key) in progs.iter().zip(&cells).zip(k) {
            let arms: Vec<Arm> = p
                .arms()
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let lo = c.lows[j] + key[j] * c.widths[j] as i64;
                    Arm::new(a.generator.clone(), lo, (lo + c.widths[j] as i64 - 1).min(a.hi))
                })
                .collect();
            candidates.push((CosetProgression::new(g, p.base().clone(), arms, p.subgroup().clone())?, RefinementSource::Cell));
        }
    }
    let point = y.indices().next().expect("Y nonempty");
    candidates.push((CosetProgression::point(g, g.element_at(point))?, RefinementSource::Point));

    let mut best: Option<(usize, usize, CosetProgression, RefinementSource)> = None;
    for (cand, source) in candidates {
        let set = cand.enumerate();
        if !set.is_subset(&inter) || !cand.is_proper() {
            continue;
        }
        let hits = set.intersection_len(x);
        let better = best.as_ref().is_none_or(|(h, s, _, _)| (hits, set.len()) > (*h, *s));
        if better {
            best = Some((hits, set.len(), cand, source));
        }
    }
    let (hits, _, progression, source) = best.expect("the point candidate always qualifies");
    Ok(Refinement {
        progression,
        source,
        hits,
        cell_population: y.len(),
        widths: cells.into_iter().map(|c| c.widths).collect(),
        rank_sum: progs.iter().map(CosetProgression::rank).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    fn interval(g: &crate::group::FiniteAbelianGroup, lo: i64, hi: i64) -> CosetProgression {
        CosetProgression::new(g, g.zero(), vec![Arm::new(g.element(&[1]).unwrap(), lo, hi)], GroupSubset::singleton(g, 0)).unwrap()
    }

    #[test]
    fn overlapping_intervals() {
        let g = make_group(&[100]).unwrap();
        let (c1, c2) = (interval(&g, 0, 40), interval(&g, 20, 60));
        let x = c1.enumerate().intersection(&c2.enumerate());
        let out = intersect_refine(&[c1.clone(), c2.clone()], &x).unwrap();
        let set = out.progression.enumerate();
        assert!(set.is_subset(&c1.enumerate()) && set.is_subset(&c2.enumerate()));
        assert!(out.hits >= 1);
    }

    #[test]
    fn single_progression_cell_inside_x() {
        let g = make_group(&[64]).unwrap();
        let c = interval(&g, -10, 10);
        let x = c.enumerate();
        let out = intersect_refine(&[c], &x).unwrap();
        assert!(out.progression.enumerate().is_subset(&x));
        assert_eq!(out.hits, out.progression.enumerate().len());
    }
}
