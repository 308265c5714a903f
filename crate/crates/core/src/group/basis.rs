use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{FiniteAbelianGroup, GroupElement, GroupSubset};
use crate::lattice::matrix;

/// A basis `x_1, …, x_r` of a subgroup with orders `n_1 | n_2 | … | n_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupBasis {
    pub orders: Vec<u64>,
    pub basis: Vec<GroupElement>,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Invariant factors `n_1 | … | n_r` of the group with a matching basis.
///
/// Splits each cyclic factor into prime-power parts and recombines the parts
/// by size, so `ℤ/2 ⊕ ℤ/3` gives `[6]` with basis `(1, 1)`.
pub fn invariant_factors(group: &FiniteAbelianGroup) -> SubgroupBasis {
    // For each prime, the p-power components as (exponent power, generator).
    let mut by_prime: Vec<(u64, Vec<(u64, GroupElement)>)> = Vec::new();
    for (i, &q) in group.moduli().iter().enumerate() {
        for (p, e) in factorize(q) {
            let pe = p.pow(e);
            let mut c = vec![0u64; group.rank()];
            c[i] = q / pe;
            let entry = match by_prime.iter_mut().find(|(pp, _)| *pp == p) {
                Some(entry) => entry,
                None => {
                    by_prime.push((p, Vec::new()));
                    by_prime.last_mut().unwrap()
                }
            };
            entry.1.push((pe, GroupElement(c)));
        }
    }
    let r = by_prime.iter().map(|(_, parts)| parts.len()).max().unwrap_or(0);
    let mut orders = vec![1u64; r];
    let mut basis = vec![group.zero(); r];
    for (_, parts) in by_prime.iter_mut() {
        parts.sort_by_key(|(pe, _)| *pe);
        // Largest parts go to the last invariant factors.
        let offset = r - parts.len();
        for (j, (pe, gen)) in parts.iter().enumerate() {
            orders[offset + j] *= pe;
            basis[offset + j] = group.add(&basis[offset + j], gen);
        }
    }
    SubgroupBasis { orders, basis }
}

/// Whether the elements form a basis of the group: the product of their
/// orders is `|G|` and `Σ λ_i x_i = 0` forces `ord(x_i) | λ_i`.
pub fn is_basis(group: &FiniteAbelianGroup, basis: &[GroupElement]) -> bool {
    if basis.iter().any(|x| !group.is_valid(&x.0)) {
        return false;
    }
    let orders: Vec<u64> = basis.iter().map(|x| group.order_of(x)).collect();
    let product = orders.iter().try_fold(1u64, |acc, &n| acc.checked_mul(n));
    if product != Some(group.order()) {
        return false;
    }
    // With matching sizes, independence is injectivity of the coordinate map.
    let span = GroupSubset::generated(group, basis);
    span.len() as u64 == group.order()
}

/// A basis of the subgroup generated by `gens`, via the Smith form of the
/// relation lattice.
pub fn subgroup_basis(group: &FiniteAbelianGroup, gens: &[GroupElement]) -> SubgroupBasis {
    let gens: Vec<GroupElement> = gens.iter().filter(|g| g.0.iter().any(|&c| c != 0)).cloned().collect();
    let m = gens.len();
    let n = group.rank();
    if m == 0 {
        return SubgroupBasis { orders: vec![], basis: vec![] };
    }
    // Rows: generators, then q_i e_i. The left kernel restricted to the first
    // m coordinates is the relation lattice of the generators.
    let mut rows: matrix::IntMatrix = gens
        .iter()
        .map(|g| g.0.iter().map(|&c| BigInt::from(c)).collect())
        .collect();
    for (i, &q) in group.moduli().iter().enumerate() {
        let mut row = vec![BigInt::zero(); n];
        row[i] = BigInt::from(q);
        rows.push(row);
    }
    let ech = matrix::echelon(&rows);
    let relations: matrix::IntMatrix = ech.kernel().iter().map(|u| u[..m].to_vec()).collect();
    let (diag, qinv) = matrix::smith(&relations, m);
    let mut out = SubgroupBasis { orders: vec![], basis: vec![] };
    for (i, d) in diag.iter().enumerate() {
        let d = d.to_u64().expect("subgroup order fits in u64");
        if d == 1 {
            continue;
        }
        let mut x = group.zero();
        for (j, g) in gens.iter().enumerate() {
            let coeff = &qinv[i][j] % BigInt::from(group.exponent());
            let coeff = coeff.to_i64().expect("reduced coefficient fits");
            x = group.add(&x, &group.scale(g, coeff));
        }
        out.orders.push(d);
        out.basis.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    #[test]
    fn invariant_factor_examples() {
        let g = make_group(&[2, 3]).unwrap();
        let b = invariant_factors(&g);
        assert_eq!(b.orders, vec![6]);
        assert_eq!(b.basis, vec![g.element(&[1, 1]).unwrap()]);
        let g = make_group(&[2, 2]).unwrap();
        let b = invariant_factors(&g);
        assert_eq!(b.orders, vec![2, 2]);
        assert!(is_basis(&g, &b.basis));
        let g = make_group(&[12, 18, 4]).unwrap();
        let b = invariant_factors(&g);
        assert_eq!(b.orders, vec![2, 12, 36]);
        assert!(is_basis(&g, &b.basis));
        for (x, n) in b.basis.iter().zip(&b.orders) {
            assert_eq!(g.order_of(x), *n);
        }
    }

    #[test]
    fn basis_checks() {
        let g = make_group(&[4]).unwrap();
        assert!(!is_basis(&g, &[g.element(&[2]).unwrap()]));
        assert!(is_basis(&g, &[g.element(&[3]).unwrap()]));
        let g = make_group(&[2, 4]).unwrap();
        assert!(is_basis(&g, &[g.element(&[1, 2]).unwrap(), g.element(&[0, 1]).unwrap()]));
        assert!(!is_basis(&g, &[g.element(&[0, 2]).unwrap(), g.element(&[0, 1]).unwrap()]));
    }

    #[test]
    fn subgroup_bases_generate_the_subgroup() {
        let g = make_group(&[4, 6, 8]).unwrap();
        let gens = [g.element(&[2, 3, 4]).unwrap(), g.element(&[0, 2, 6]).unwrap(), g.element(&[2, 1, 2]).unwrap()];
        let sub = GroupSubset::generated(&g, &gens);
        let b = subgroup_basis(&g, &gens);
        assert_eq!(GroupSubset::generated(&g, &b.basis), sub);
        assert_eq!(b.orders.iter().product::<u64>(), sub.len() as u64);
        for w in b.orders.windows(2) {
            assert_eq!(w[1] % w[0], 0);
        }
        for (x, n) in b.basis.iter().zip(&b.orders) {
            assert_eq!(g.order_of(x), *n);
        }
    }
}
