use std::fmt;

use fixedbitset::FixedBitSet;

use super::{FiniteAbelianGroup, GroupElement};

/// A subset of a finite abelian group, stored as a bitset over element indices.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupSubset {
    group: FiniteAbelianGroup,
    bits: FixedBitSet,
}

impl fmt::Debug for GroupSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSubset({}, {:?})", self.group, self.indices().collect::<Vec<_>>())
    }
}

impl GroupSubset {
    pub fn empty(group: &FiniteAbelianGroup) -> Self {
        GroupSubset { group: group.clone(), bits: FixedBitSet::with_capacity(group.size()) }
    }

    pub fn full(group: &FiniteAbelianGroup) -> Self {
        let mut s = Self::empty(group);
        s.bits.insert_range(..);
        s
    }

    pub fn singleton(group: &FiniteAbelianGroup, idx: usize) -> Self {
        let mut s = Self::empty(group);
        s.insert_idx(idx);
        s
    }

    pub fn from_indices(group: &FiniteAbelianGroup, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(group);
        for i in idx {
            s.insert_idx(i);
        }
        s
    }

    pub fn from_elements<'a>(
        group: &FiniteAbelianGroup,
        elems: impl IntoIterator<Item = &'a GroupElement>,
    ) -> Self {
        Self::from_indices(group, elems.into_iter().map(|x| group.index_of(x)))
    }

    /// Elements satisfying a predicate on the index.
    pub fn from_fn(group: &FiniteAbelianGroup, mut pred: impl FnMut(usize) -> bool) -> Self {
        Self::from_indices(group, (0..group.size()).filter(|&i| pred(i)))
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn insert_idx(&mut self, idx: usize) {
        self.bits.insert(idx);
    }

    pub fn remove_idx(&mut self, idx: usize) {
        self.bits.set(idx, false);
    }

    pub fn insert(&mut self, x: &GroupElement) {
        let i = self.group.index_of(x);
        self.bits.insert(i);
    }

    pub fn contains_idx(&self, idx: usize) -> bool {
        self.bits.contains(idx)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.bits.contains(self.group.index_of(x))
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.group.size()
    }

    pub fn density(&self) -> f64 {
        self.len() as f64 / self.group.size() as f64
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        self.bits.ones().map(|i| self.group.element_at(i))
    }

    pub fn is_subset(&self, other: &GroupSubset) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union(&self, other: &GroupSubset) -> GroupSubset {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        GroupSubset { group: self.group.clone(), bits }
    }

    pub fn intersection(&self, other: &GroupSubset) -> GroupSubset {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        GroupSubset { group: self.group.clone(), bits }
    }

    pub fn difference(&self, other: &GroupSubset) -> GroupSubset {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        GroupSubset { group: self.group.clone(), bits }
    }

    pub fn intersection_len(&self, other: &GroupSubset) -> usize {
        self.bits.intersection_count(&other.bits)
    }

    /// `-A`.
    pub fn negate(&self) -> GroupSubset {
        GroupSubset::from_indices(&self.group, self.indices().map(|i| self.group.neg_idx(i)))
    }

    /// `A + t`.
    pub fn translate(&self, t: usize) -> GroupSubset {
        GroupSubset::from_indices(&self.group, self.indices().map(|i| self.group.add_idx(i, t)))
    }

    /// `A + B`.
    pub fn sumset(&self, other: &GroupSubset) -> GroupSubset {
        self.combine(other, false)
    }

    /// `A - B`.
    pub fn diffset(&self, other: &GroupSubset) -> GroupSubset {
        self.combine(other, true)
    }

    fn combine(&self, other: &GroupSubset, subtract: bool) -> GroupSubset {
        let g = &self.group;
        let mut out = GroupSubset::empty(g);
        let size = g.size();
        let rhs: Vec<usize> = other.indices().collect();
        let mut filled = 0usize;
        for a in self.indices() {
            for &b in &rhs {
                let x = if subtract { g.sub_idx(a, b) } else { g.add_idx(a, b) };
                if !out.bits.put(x) {
                    filled += 1;
                }
            }
            if filled == size {
                break;
            }
        }
        out
    }

    /// Whether the set is a subgroup: nonempty and closed under subtraction.
    pub fn is_subgroup(&self) -> bool {
        if !self.contains_idx(0) {
            return false;
        }
        let elems: Vec<usize> = self.indices().collect();
        elems
            .iter()
            .all(|&a| elems.iter().all(|&b| self.contains_idx(self.group.sub_idx(a, b))))
    }

    /// The subgroup generated by the given elements.
    pub fn generated(group: &FiniteAbelianGroup, gens: &[GroupElement]) -> GroupSubset {
        let mut out = GroupSubset::singleton(group, 0);
        for g in gens {
            let gi = group.index_of(g);
            if out.contains_idx(gi) {
                continue;
            }
            let ord = group.order_of(g) as i64;
            let multiples: Vec<usize> = (0..ord).map(|k| group.scale_idx(gi, k)).collect();
            let mut next = GroupSubset::empty(group);
            for x in out.indices() {
                for &m in &multiples {
                    next.insert_idx(group.add_idx(x, m));
                }
            }
            out = next;
        }
        out
    }

    /// A small generating set, chosen greedily in index order.
    pub fn generators(&self) -> Vec<GroupElement> {
        let mut gens = Vec::new();
        let mut span = GroupSubset::singleton(&self.group, 0);
        for i in self.indices() {
            if !span.contains_idx(i) {
                gens.push(self.group.element_at(i));
                span = GroupSubset::generated(&self.group, &gens);
            }
        }
        gens
    }

    /// Largest subgroup `H` with `A + H = A`.
    pub fn stabilizer(&self) -> GroupSubset {
        let g = &self.group;
        let elems: Vec<usize> = self.indices().collect();
        GroupSubset::from_fn(g, |h| elems.iter().all(|&a| self.contains_idx(g.add_idx(a, h))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    #[test]
    fn sumsets_and_stabilizers() {
        let g = make_group(&[10]).unwrap();
        let a = GroupSubset::from_indices(&g, [0, 5]);
        let b = GroupSubset::from_indices(&g, [1, 2]);
        assert_eq!(a.sumset(&b).indices().collect::<Vec<_>>(), vec![1, 2, 6, 7]);
        assert_eq!(b.diffset(&b).indices().collect::<Vec<_>>(), vec![0, 1, 9]);
        assert_eq!(a.stabilizer(), a);
        assert!(a.is_subgroup());
        assert!(!b.is_subgroup());
    }

    #[test]
    fn generated_subgroups() {
        let g = make_group(&[4, 6]).unwrap();
        let h = GroupSubset::generated(&g, &[g.element(&[2, 3]).unwrap()]);
        assert_eq!(h.len(), 2);
        let full = GroupSubset::full(&g);
        let gens = full.generators();
        assert_eq!(GroupSubset::generated(&g, &gens), full);
    }
}
