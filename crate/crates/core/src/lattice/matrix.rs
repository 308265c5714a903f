//! Exact integer row reduction: Hermite-style echelon forms with transforms and
//! Smith diagonalisation with the inverse right transform.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn from_i64(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Row echelon form `U · M` with non-negative pivots and entries above each
/// pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug)]
pub struct Echelon {
    /// The nonzero rows of `U · M`.
    pub rows: IntMatrix,
    pub pivots: Vec<usize>,
    /// Unimodular transform; rows past `rank` span the left kernel of `M`.
    pub transform: IntMatrix,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Left kernel basis `{u : u · M = 0}`.
    pub fn kernel(&self) -> &[Vec<BigInt>] {
        &self.transform[self.rank()..]
    }
}

fn combine_rows(m: &mut IntMatrix, r: usize, i: usize, x: &BigInt, y: &BigInt, p: &BigInt, q: &BigInt) {
    // (row_r, row_i) ← (x row_r + y row_i, -q row_r + p row_i)
    for c in 0..m[r].len() {
        let a = m[r][c].clone();
        let b = m[i][c].clone();
        m[r][c] = x * &a + y * &b;
        m[i][c] = p * &b - q * &a;
    }
}

fn sub_multiple(m: &mut IntMatrix, target: usize, src: usize, f: &BigInt) {
    if f.is_zero() {
        return;
    }
    for c in 0..m[target].len() {
        let v = &m[src][c] * f;
        m[target][c] -= v;
    }
}

fn negate_row(m: &mut IntMatrix, r: usize) {
    for v in m[r].iter_mut() {
        *v = -v.clone();
    }
}

pub fn echelon(input: &IntMatrix) -> Echelon {
    let n = input.len();
    let cols = input.first().map_or(0, Vec::len);
    let mut a = input.clone();
    let mut u = identity(n);
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if r == n {
            break;
        }
        for i in r + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            if a[r][c].is_zero() {
                a.swap(r, i);
                u.swap(r, i);
                continue;
            }
            let e = a[r][c].extended_gcd(&a[i][c]);
            let (mut g, mut x, mut y) = (e.gcd, e.x, e.y);
            if g.is_negative() {
                g = -g;
                x = -x;
                y = -y;
            }
            let p = &a[r][c] / &g;
            let q = &a[i][c] / &g;
            combine_rows(&mut a, r, i, &x, &y, &p, &q);
            combine_rows(&mut u, r, i, &x, &y, &p, &q);
        }
        if a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            negate_row(&mut a, r);
            negate_row(&mut u, r);
        }
        for i in 0..r {
            let f = a[i][c].div_floor(&a[r][c]);
            sub_multiple(&mut a, i, r, &f);
            sub_multiple(&mut u, i, r, &f);
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    Echelon { rows: a, pivots, transform: u }
}

/// Smith form of a `k × m` matrix: returns the diagonal `d_1 | d_2 | …` and
/// `Q⁻¹` where `P M Q = diag(d)`.
pub fn smith(input: &IntMatrix, m: usize) -> (Vec<BigInt>, IntMatrix) {
    let k = input.len();
    let mut a = input.clone();
    let mut qinv = identity(m);
    let mut diag = Vec::new();
    for t in 0..k.min(m) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..k {
                for j in t..m {
                    if !a[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return (diag, qinv);
            };
            a.swap(t, bi);
            if bj != t {
                for row in a.iter_mut() {
                    row.swap(t, bj);
                }
                qinv.swap(t, bj);
            }
            let mut clean = true;
            for i in t + 1..k {
                let f = a[i][t].div_floor(&a[t][t]);
                sub_multiple(&mut a, i, t, &f);
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..m {
                let f = a[t][j].div_floor(&a[t][t]);
                if !f.is_zero() {
                    for row in a.iter_mut() {
                        let v = &row[t] * &f;
                        row[j] -= v;
                    }
                    for c in 0..m {
                        let v = &qinv[j][c] * &f;
                        qinv[t][c] += v;
                    }
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..k).find(|&i| (t + 1..m).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
            match bad {
                Some(i) => {
                    for c in 0..m {
                        let v = a[i][c].clone();
                        a[t][c] += v;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
    }
    (diag, qinv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
        a.iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|j| row.iter().zip(b).map(|(x, br)| x * &br[j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn echelon_transform_reproduces_rows() {
        let m = from_i64(&[vec![4, 6, 2], vec![6, 9, 3], vec![2, 1, 7]]);
        let e = echelon(&m);
        let um = mul(&e.transform, &m);
        for (i, row) in e.rows.iter().enumerate() {
            assert_eq!(&um[i], row);
        }
        for row in &um[e.rank()..] {
            assert!(row.iter().all(Zero::is_zero));
        }
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn smith_of_diagonal() {
        let m = from_i64(&[vec![2, 0], vec![0, 3]]);
        let (d, _) = smith(&m, 2);
        assert_eq!(d, vec![BigInt::from(1), BigInt::from(6)]);
        let m = from_i64(&[vec![4, 0], vec![0, 6]]);
        let (d, _) = smith(&m, 2);
        assert_eq!(d, vec![BigInt::from(2), BigInt::from(12)]);
    }
}
