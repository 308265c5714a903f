use serde::Serialize;

use super::{Arm, CosetProgression};
use crate::error::{Error, Result};
use crate::fourier::quadruple_counts;
use crate::group::GroupSubset;

/// A proper symmetric progression of popular differences.
#[derive(Clone, Debug, Serialize)]
pub struct PopularProgression {
    pub progression: CosetProgression,
    /// `|A|³ / (64K)`.
    pub threshold: f64,
    /// Number of popular differences.
    pub popular: usize,
}

/// Largest arm count tried when growing the progression.
const MAX_ARMS: usize = 8;

/// A proper symmetric coset progression inside
/// `{x : #{a + b - c - d = x} ≥ |A|³/(64K)}`.
///
/// The subgroup part is the stabiliser of the popular set. Arms are added
/// greedily from popular elements in decreasing order of count, each extended
/// as far as properness and popularity allow.
pub fn popular_difference_progression(a: &GroupSubset, doubling: f64) -> Result<PopularProgression> {
    if a.is_empty() {
        return Err(Error::Precondition("A must be nonempty".into()));
    }
    let g = a.group();
    let size = a.len() as f64;
    if a.sumset(a).len() as f64 > doubling * size + 1e-9 {
        return Err(Error::Precondition(format!("|A + A| exceeds {doubling}|A|")));
    }
    let counts = quadruple_counts(a);
    let threshold = size.powi(3) / (64.0 * doubling);
    let popular = GroupSubset::from_fn(g, |x| counts[x] as f64 >= threshold);
    let stab = popular.stabilizer();
    let mut prog = CosetProgression::from_subgroup(stab)?;
    let mut current = prog.enumerate();

    let mut candidates: Vec<usize> = popular.indices().filter(|&x| !current.contains_idx(x)).collect();
    candidates.sort_by(|&x, &y| counts[y].cmp(&counts[x]).then(x.cmp(&y)));
    for cand in candidates {
        if prog.rank() >= MAX_ARMS {
            break;
        }
        if current.contains_idx(cand) {
            continue;
        }
        let v = g.element_at(cand);
        let attempt = |n: i64| -> Option<(CosetProgression, GroupSubset)> {
            let mut arms = prog.arms().to_vec();
            arms.push(Arm::symmetric(v.clone(), n));
            let next = CosetProgression::new(g, g.zero(), arms, prog.subgroup().clone()).ok()?;
            let set = next.enumerate();
            (next.is_proper() && set.is_subset(&popular)).then_some((next, set))
        };
        let Some(mut best) = attempt(1) else { continue };
        let mut n = 2;
        while let Some(longer) = attempt(n) {
            best = longer;
            n += 1;
        }
        prog = best.0;
        current = best.1;
    }
    if current.indices().any(|x| (counts[x] as f64) < threshold) {
        return Err(Error::BoundViolation("progression element below the popularity threshold".into()));
    }
    Ok(PopularProgression { progression: prog, threshold, popular: popular.len() })
}

/// Popular differences of `A ⊆ C` with threshold `α|A|³/2^{d+6}`, where
/// `d = rank(C)` and `α = |A|/|C|`. This is the doubling bound `K = 2^d/α`.
pub fn popular_difference_in_progression(a: &GroupSubset, c: &CosetProgression) -> Result<PopularProgression> {
    let c_set = c.enumerate();
    if !a.is_subset(&c_set) || !c.is_proper() {
        return Err(Error::Precondition("A must lie in a proper progression C".into()));
    }
    let alpha = a.len() as f64 / c_set.len() as f64;
    popular_difference_progression(a, 2f64.powi(c.rank() as i32) / alpha)
}
