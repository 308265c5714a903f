//! Box norms and quasirandomness of bipartite graphs on `X × Y`.

use fixedbitset::FixedBitSet;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Sample count used when exhaustive enumeration is too large.
pub const SAMPLES: usize = 10_000;

/// A bipartite graph with vertex classes `[0, nx)` and `[0, ny)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    nx: usize,
    ny: usize,
    edges: FixedBitSet,
}

impl BipartiteGraph {
    pub fn empty(nx: usize, ny: usize) -> Self {
        BipartiteGraph { nx, ny, edges: FixedBitSet::with_capacity(nx * ny) }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Self::empty(nx, ny);
        for x in 0..nx {
            for y in 0..ny {
                if f(x, y) {
                    g.add_edge(x, y);
                }
            }
        }
        g
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn add_edge(&mut self, x: usize, y: usize) {
        self.edges.insert(x * self.ny + y);
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.edges.contains(x * self.ny + y)
    }

    pub fn density(&self) -> f64 {
        self.edges.count_ones(..) as f64 / (self.nx * self.ny) as f64
    }

    pub fn neighborhood(&self, x: usize) -> FixedBitSet {
        let mut n = FixedBitSet::with_capacity(self.ny);
        for y in 0..self.ny {
            if self.has_edge(x, y) {
                n.insert(y);
            }
        }
        n
    }

    /// `1_G - c` as a row-major table.
    pub fn balanced(&self, c: f64) -> Vec<f64> {
        (0..self.nx * self.ny).map(|i| if self.edges.contains(i) { 1.0 - c } else { -c }).collect()
    }
}

fn check_shape(f: &[f64], nx: usize, ny: usize) -> Result<()> {
    if f.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::RankMismatch { expected: nx * ny, got: f.len() });
    }
    Ok(())
}

/// `‖f‖_□ = (E_{x,x'} (E_y f(x,y) f(x',y))²)^{1/4}` for a row-major table.
pub fn box_norm(f: &[f64], nx: usize, ny: usize) -> Result<f64> {
    check_shape(f, nx, ny)?;
    let mut total = 0.0;
    for x in 0..nx {
        let rx = &f[x * ny..(x + 1) * ny];
        for xp in 0..nx {
            let rxp = &f[xp * ny..(xp + 1) * ny];
            let inner: f64 = rx.iter().zip(rxp).map(|(a, b)| a * b).sum::<f64>() / ny as f64;
            total += inner * inner;
        }
    }
    Ok((total / (nx * nx) as f64).max(0.0).powf(0.25))
}

/// `‖f‖_□⁴` in exact arithmetic.
pub fn box_norm_fourth_exact(f: &[BigRational], nx: usize, ny: usize) -> Result<BigRational> {
    if f.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::RankMismatch { expected: nx * ny, got: f.len() });
    }
    let mut total = BigRational::zero();
    for x in 0..nx {
        for xp in 0..nx {
            let mut inner = BigRational::zero();
            for y in 0..ny {
                inner += &f[x * ny + y] * &f[xp * ny + y];
            }
            inner /= BigRational::from_integer(ny.into());
            total += &inner * &inner;
        }
    }
    Ok(total / BigRational::from_integer((nx * nx).into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|E f(x,y) u(x) v(y)| ≤ ‖f‖_□ ‖u‖₂ ‖v‖₂`.
pub fn correlation_bound_check(f: &[f64], u: &[f64], v: &[f64]) -> Result<CorrelationCheck> {
    let (nx, ny) = (u.len(), v.len());
    check_shape(f, nx, ny)?;
    let mut s = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            s += f[x * ny + y] * u[x] * v[y];
        }
    }
    let lhs = (s / (nx * ny) as f64).abs();
    let l2 = |w: &[f64]| (w.iter().map(|a| a * a).sum::<f64>() / w.len() as f64).sqrt();
    let rhs = box_norm(f, nx, ny)? * l2(u) * l2(v);
    Ok(CorrelationCheck { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}

/// The family `M ⊆ Y^m` of tuples tested against common neighbourhoods.
#[derive(Clone, Debug)]
pub enum TupleFamily {
    /// All of `Y^m`.
    Full,
    Explicit(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, Serialize)]
pub struct NeighborhoodStats {
    pub density: f64,
    /// `‖G - δ‖_□`.
    pub eps: f64,
    /// Share of `k`-tuples with a large deviation.
    pub probability: f64,
    /// `4km η⁻² ε`.
    pub bound: f64,
    /// Three standard errors when sampled, zero when exhaustive.
    pub slack: f64,
    pub sampled: bool,
    pub holds: bool,
}

/// Probability over `x_1, …, x_k ∈ X` that
/// `| |N^m(x_1) ∩ … ∩ N^m(x_k) ∩ M| - δ^{mk} |M| | ≥ η |Y|^m`.
pub fn neighborhood_stats(
    graph: &BipartiteGraph,
    k: usize,
    m: usize,
    family: &TupleFamily,
    eta: f64,
    seed: u64,
) -> Result<NeighborhoodStats> {
    if k == 0 || m == 0 || eta <= 0.0 {
        return Err(Error::Precondition("need k, m ≥ 1 and η > 0".into()));
    }
    let (nx, ny) = (graph.nx(), graph.ny());
    let density = graph.density();
    let eps = box_norm(&graph.balanced(density), nx, ny)?;
    let m_size = match family {
        TupleFamily::Full => (ny as f64).powi(m as i32),
        TupleFamily::Explicit(t) => {
            if t.iter().any(|tu| tu.len() != m || tu.iter().any(|&y| y >= ny)) {
                return Err(Error::Precondition("tuple family does not live in Y^m".into()));
            }
            t.len() as f64
        }
    };
    let expected = density.powi((m * k) as i32) * m_size;
    let threshold = eta * (ny as f64).powi(m as i32);
    let neigh: Vec<FixedBitSet> = (0..nx).map(|x| graph.neighborhood(x)).collect();
    let deviates = |xs: &[usize]| {
        let mut common = neigh[xs[0]].clone();
        for &x in &xs[1..] {
            common.intersect_with(&neigh[x]);
        }
        let count = match family {
            TupleFamily::Full => (common.count_ones(..) as f64).powi(m as i32),
            TupleFamily::Explicit(t) => t.iter().filter(|tu| tu.iter().all(|&y| common.contains(y))).count() as f64,
        };
        (count - expected).abs() >= threshold
    };
    let exhaustive = (nx as f64).powi(k as i32) <= SAMPLES as f64;
    let (bad, total) = if exhaustive {
        let mut xs = vec![0usize; k];
        let (mut bad, mut total) = (0usize, 0usize);
        loop {
            total += 1;
            bad += deviates(&xs) as usize;
            let mut pos = 0;
            while pos < k && xs[pos] + 1 == nx {
                xs[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
            xs[pos] += 1;
        }
        (bad, total)
    } else {
        let mut rng = rng_for(seed, 0x4e42);
        let mut xs = vec![0usize; k];
        let mut bad = 0usize;
        for _ in 0..SAMPLES {
            for x in xs.iter_mut() {
                *x = rng.random_range(0..nx);
            }
            bad += deviates(&xs) as usize;
        }
        (bad, SAMPLES)
    };
    let probability = bad as f64 / total as f64;
    let bound = 4.0 * (k * m) as f64 * eps / (eta * eta);
    let slack = if exhaustive { 0.0 } else { 3.0 * (probability * (1.0 - probability) / total as f64).sqrt() };
    Ok(NeighborhoodStats {
        density,
        eps,
        probability,
        bound,
        slack,
        sampled: !exhaustive,
        holds: probability <= bound + slack + 1e-12,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OneSidedCheck {
    /// `E_x | |N_x| - δ|Y| | / |Y|`.
    pub degree_deviation: f64,
    /// `E_{x,x'} | |N_x ∩ N_{x'}| - δ²|Y| | / |Y|`.
    pub codegree_deviation: f64,
    pub hypotheses_hold: bool,
    pub density: f64,
    /// `‖G - δ'‖_□` with `δ'` the true density.
    pub box_norm: f64,
    /// Hypotheses imply `|δ - δ'| ≤ ε` and `‖G - δ'‖_□ ≤ 3ε^{1/8}`.
    pub holds: bool,
}

/// Degree and codegree regularity at `(δ, ε)` and the box-norm conclusion.
pub fn one_sided_qr(graph: &BipartiteGraph, delta: f64, eps: f64) -> Result<OneSidedCheck> {
    let (nx, ny) = (graph.nx(), graph.ny());
    if nx == 0 || ny == 0 {
        return Err(Error::Precondition("empty vertex class".into()));
    }
    let neigh: Vec<FixedBitSet> = (0..nx).map(|x| graph.neighborhood(x)).collect();
    let y = ny as f64;
    let degree_deviation = neigh.iter().map(|n| (n.count_ones(..) as f64 - delta * y).abs()).sum::<f64>() / (nx as f64 * y);
    let mut co = 0.0;
    for a in &neigh {
        for b in &neigh {
            co += (a.intersection_count(b) as f64 - delta * delta * y).abs();
        }
    }
    let codegree_deviation = co / ((nx * nx) as f64 * y);
    let hypotheses_hold = degree_deviation <= eps + 1e-12 && codegree_deviation <= eps + 1e-12;
    let density = graph.density();
    let norm = box_norm(&graph.balanced(density), nx, ny)?;
    let conclusion = (delta - density).abs() <= eps + 1e-9 && norm <= 3.0 * eps.powf(0.125) + 1e-9;
    Ok(OneSidedCheck {
        degree_deviation,
        codegree_deviation,
        hypotheses_hold,
        density,
        box_norm: norm,
        holds: !hypotheses_hold || conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_box_norm() {
        let g = BipartiteGraph::from_fn(2, 2, |x, y| x == 0 && y == 0);
        let n = box_norm(&g.balanced(0.25), 2, 2).unwrap();
        assert!((n - (7.0f64 / 256.0).powf(0.25)).abs() < 1e-12);
        let exact: Vec<BigRational> = g
            .balanced(0.25)
            .iter()
            .map(|&v| BigRational::new(((v * 4.0) as i64).into(), 4.into()))
            .collect();
        assert_eq!(box_norm_fourth_exact(&exact, 2, 2).unwrap(), BigRational::new(7.into(), 256.into()));
    }

    #[test]
    fn complete_and_empty_graphs_have_zero_norm() {
        for full in [true, false] {
            let g = BipartiteGraph::from_fn(3, 4, |_, _| full);
            assert!(box_norm(&g.balanced(g.density()), 3, 4).unwrap() < 1e-12);
        }
    }

    #[test]
    fn correlation_example() {
        let g = BipartiteGraph::from_fn(3, 3, |x, y| (x + y) % 2 == 0);
        let c = correlation_bound_check(&g.balanced(g.density()), &[1.0, -1.0, 0.5], &[0.3, 1.0, -2.0]).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn one_sided_on_complete_graph() {
        let g = BipartiteGraph::from_fn(4, 4, |_, _| true);
        let c = one_sided_qr(&g, 1.0, 0.0).unwrap();
        assert!(c.hypotheses_hold && c.holds);
    }
}
