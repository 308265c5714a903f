//! Subsets of `G × H`, directional difference sets and bilinear Bohr varieties.

mod cover;
mod experiment;
mod regularity;

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bohr::{serialize_ratio, BohrSet};
use crate::coset_prog::{CosetProgression, FreimanMap};
use crate::error::{Error, Result};
use crate::group::{Character, FiniteAbelianGroup, GroupSubset};

pub use cover::{linear_cover, ExhaustiveHomFinder, HomFinder, LinearCover};
pub use experiment::{main_theorem_experiment, ExperimentConfig, ExperimentReport, SCHEMA_VERSION};
pub use regularity::{
    qr_property_check, regularity_partition, QrCheck, RegularityCell, RegularityConfig, RegularityPartition,
};

/// Operator word proved sufficient for the main containment.
pub const DEFAULT_WORD: &str = "hvvhvhh";

/// A subset of `G × H`, stored row-major: `(x, y)` sits at `y·|G| + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiSet {
    g: FiniteAbelianGroup,
    h: FiniteAbelianGroup,
    bits: FixedBitSet,
}

impl BiSet {
    pub fn empty(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup) -> Self {
        BiSet { g: g.clone(), h: h.clone(), bits: FixedBitSet::with_capacity(g.size() * h.size()) }
    }

    pub fn full(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup) -> Self {
        let mut s = Self::empty(g, h);
        s.bits.insert_range(..);
        s
    }

    pub fn from_fn(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut s = Self::empty(g, h);
        for y in 0..h.size() {
            for x in 0..g.size() {
                if f(x, y) {
                    s.insert(x, y);
                }
            }
        }
        s
    }

    /// `⋃ R_y × {y}` from one row per element of `H`.
    pub fn from_rows(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup, rows: &[GroupSubset]) -> Self {
        let mut s = Self::empty(g, h);
        for (y, row) in rows.iter().enumerate() {
            for x in row.indices() {
                s.insert(x, y);
            }
        }
        s
    }

    pub fn g(&self) -> &FiniteAbelianGroup {
        &self.g
    }

    pub fn h(&self) -> &FiniteAbelianGroup {
        &self.h
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.bits.insert(y * self.g.size() + x);
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits.contains(y * self.g.size() + x)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_subset(&self, other: &BiSet) -> bool {
        self.g == other.g && self.h == other.h && self.bits.is_subset(&other.bits)
    }

    /// All members as `(x, y)`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.g.size();
        self.bits.ones().map(move |i| (i % n, i / n))
    }

    /// The row `A_{·y} = {x : (x, y) ∈ A}`.
    pub fn row(&self, y: usize) -> GroupSubset {
        let n = self.g.size();
        GroupSubset::from_fn(&self.g, |x| self.bits.contains(y * n + x))
    }

    /// The column `A_{x·} = {y : (x, y) ∈ A}`.
    pub fn column(&self, x: usize) -> GroupSubset {
        let n = self.g.size();
        GroupSubset::from_fn(&self.h, |y| self.bits.contains(y * n + x))
    }

    /// `{(y, x) : (x, y) ∈ A}` as a subset of `H × G`.
    pub fn transpose(&self) -> BiSet {
        let mut t = BiSet::empty(&self.h, &self.g);
        for (x, y) in self.pairs() {
            t.insert(y, x);
        }
        t
    }
}

/// Horizontal difference set: each row replaced by its difference set.
pub fn d_hor(a: &BiSet) -> BiSet {
    let rows: Vec<GroupSubset> = (0..a.h.size())
        .into_par_iter()
        .map(|y| {
            let r = a.row(y);
            r.diffset(&r)
        })
        .collect();
    BiSet::from_rows(&a.g, &a.h, &rows)
}

/// Vertical difference set: each column replaced by its difference set.
pub fn d_ver(a: &BiSet) -> BiSet {
    let cols: Vec<GroupSubset> = (0..a.g.size())
        .into_par_iter()
        .map(|x| {
            let c = a.column(x);
            c.diffset(&c)
        })
        .collect();
    let mut out = BiSet::empty(&a.g, &a.h);
    for (x, col) in cols.iter().enumerate() {
        for y in col.indices() {
            out.insert(x, y);
        }
    }
    out
}

/// Applies a word over `{h, v}` as an operator product, rightmost letter
/// first. `"vh"` is `d_ver(d_hor(A))`; the default `"hvvhvhh"` starts with
/// two horizontal differences and ends with one.
pub fn iterated_difference(a: &BiSet, word: &str) -> Result<BiSet> {
    if let Some((pos, c)) = word.char_indices().find(|(_, c)| *c != 'h' && *c != 'v') {
        return Err(Error::Parse { pos, msg: format!("operator word letter {c:?} is not h or v") });
    }
    let mut out = a.clone();
    for c in word.chars().rev() {
        out = if c == 'h' { d_hor(&out) } else { d_ver(&out) };
    }
    Ok(out)
}

/// Number of `(a, b, c, d) ∈ A⁴` with `a + b = c + d` and
/// `φ(a) + φ(b) = φ(c) + φ(d)`, for `φ` given by `(a, φ(a))` pairs.
pub fn respected_quadruple_count(g: &FiniteAbelianGroup, h: &FiniteAbelianGroup, table: &[(usize, usize)]) -> u64 {
    let mut buckets: HashMap<(usize, usize), u64> = HashMap::new();
    for &(a, fa) in table {
        for &(b, fb) in table {
            *buckets.entry((g.add_idx(a, b), h.add_idx(fa, fb))).or_default() += 1;
        }
    }
    buckets.values().map(|c| c * c).sum()
}

/// A map from a coset progression `C ⊆ H` into the characters of `G`.
#[derive(Clone, Debug)]
pub struct FreimanLinearMap {
    map: FreimanMap,
}

impl FreimanLinearMap {
    pub fn from_fn(domain: CosetProgression, g: &FiniteAbelianGroup, mut f: impl FnMut(usize) -> Character) -> Self {
        let dual = g.dual();
        let map = FreimanMap::from_fn(domain, &dual, |y| dual.index_of_coords(&f(y).0));
        FreimanLinearMap { map }
    }

    pub fn zero(domain: CosetProgression, g: &FiniteAbelianGroup) -> Self {
        FreimanLinearMap::from_fn(domain, g, |_| Character(vec![0; g.rank()]))
    }

    /// `y ↦ Σ y_i χ_i` on all of `H`, with `χ_i` the image of the `i`-th unit.
    /// This is a homomorphism when `n_i χ_i = 0` for every modulus `n_i` of `H`.
    pub fn from_unit_images(h: &FiniteAbelianGroup, g: &FiniteAbelianGroup, images: &[Character]) -> Result<Self> {
        if images.len() != h.rank() {
            return Err(Error::RankMismatch { expected: h.rank(), got: images.len() });
        }
        let dual = g.dual();
        let idx: Vec<usize> = images.iter().map(|c| dual.index_of_coords(&c.0)).collect();
        let domain = CosetProgression::from_subgroup(GroupSubset::full(h))?;
        let mut coords = vec![0u64; h.rank()];
        Ok(FreimanLinearMap::from_fn(domain, g, |y| {
            h.coords_into(y, &mut coords);
            let v = coords
                .iter()
                .zip(&idx)
                .fold(0, |acc, (&c, &chi)| dual.add_idx(acc, dual.scale_idx(chi, c as i64)));
            dual.character_at(v)
        }))
    }

    pub fn domain(&self) -> &CosetProgression {
        self.map.domain()
    }

    pub fn domain_set(&self) -> &GroupSubset {
        self.map.domain_set()
    }

    /// `L(y)` as an index into `Ĝ`.
    pub fn value_idx(&self, y: usize) -> Option<usize> {
        self.map.get(y)
    }

    pub fn value(&self, y: usize) -> Option<Character> {
        self.map.get(y).map(|i| self.map.codomain().character_at(i))
    }

    pub fn as_freiman_map(&self) -> &FreimanMap {
        &self.map
    }

    /// `L(a - b) = L(a) - L(b)` whenever `a`, `b` and `a - b` lie in the domain.
    pub fn is_freiman_linear(&self) -> bool {
        let h = self.domain().group();
        let dual = self.map.codomain();
        let pts: Vec<(usize, usize)> = self.map.domain_set().indices().map(|y| (y, self.map.table()[&y])).collect();
        pts.par_iter().all(|&(a, la)| {
            pts.iter().all(|&(b, lb)| match self.map.get(h.sub_idx(a, b)) {
                Some(ld) => ld == dual.sub_idx(la, lb),
                None => true,
            })
        })
    }
}

/// `{(x, y) : y ∈ C, x ∈ B(Γ ∪ {L_1(y), …, L_r(y)}; ρ)}`.
#[derive(Clone, Debug)]
pub struct BilinearVariety {
    g: FiniteAbelianGroup,
    gamma: Vec<Character>,
    rho: Rational64,
    progression: CosetProgression,
    maps: Vec<FreimanLinearMap>,
}

impl BilinearVariety {
    pub fn new(
        g: &FiniteAbelianGroup,
        gamma: Vec<Character>,
        rho: Rational64,
        progression: CosetProgression,
        maps: Vec<FreimanLinearMap>,
    ) -> Result<Self> {
        BohrSet::new(g, gamma.clone(), rho)?;
        let c_set = progression.enumerate();
        for m in &maps {
            if m.domain().group() != progression.group() || !c_set.is_subset(m.domain_set()) {
                return Err(Error::Precondition("map domain does not contain C".into()));
            }
        }
        Ok(BilinearVariety { g: g.clone(), gamma, rho, progression, maps })
    }

    pub fn g(&self) -> &FiniteAbelianGroup {
        &self.g
    }

    pub fn h(&self) -> &FiniteAbelianGroup {
        self.progression.group()
    }

    pub fn gamma(&self) -> &[Character] {
        &self.gamma
    }

    pub fn rho(&self) -> Rational64 {
        self.rho
    }

    pub fn progression(&self) -> &CosetProgression {
        &self.progression
    }

    pub fn maps(&self) -> &[FreimanLinearMap] {
        &self.maps
    }

    /// Frequencies of the row over `y`.
    pub fn row_frequencies(&self, y: usize) -> Vec<Character> {
        let mut f = self.gamma.clone();
        f.extend(self.maps.iter().filter_map(|m| m.value(y)));
        f
    }

    pub fn enumerate(&self) -> BiSet {
        let base = BohrSet::new(&self.g, self.gamma.clone(), self.rho).expect("validated").enumerate();
        let mut rows = vec![GroupSubset::empty(&self.g); self.h().size()];
        for y in self.progression.enumerate().indices() {
            let mut row = base.clone();
            for m in &self.maps {
                let chi = m.value(y).expect("C lies in every domain");
                let b = BohrSet::new(&self.g, vec![chi], self.rho).expect("validated");
                row = row.intersection(&b.enumerate());
            }
            rows[y] = row;
        }
        BiSet::from_rows(&self.g, self.h(), &rows)
    }
}

impl Serialize for BilinearVariety {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            gamma: Vec<&'a [u64]>,
            #[serde(serialize_with = "serialize_ratio")]
            rho: Rational64,
            progression: &'a CosetProgression,
            maps: usize,
        }
        View {
            gamma: self.gamma.iter().map(|c| c.0.as_slice()).collect(),
            rho: self.rho,
            progression: &self.progression,
            maps: self.maps.len(),
        }
        .serialize(s)
    }
}

/// Whether every point of the variety lies in `d`.
pub fn variety_contained_in(v: &BilinearVariety, d: &BiSet) -> bool {
    v.enumerate().is_subset(d)
}
