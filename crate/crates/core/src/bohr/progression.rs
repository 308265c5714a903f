use num_rational::Rational64;
use serde::Serialize;

use super::BohrSet;
use crate::coset_prog::{Arm, CosetProgression};
use crate::error::{Error, Result};
use crate::fourier::{nonzero, spectrum, GroupFunction};
use crate::group::{bounded_span, Character, GroupElement, GroupSubset};

/// Largest shrink factor tried.
const MAX_SHRINK: i64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BohrSource {
    /// Large spectrum of the shrunk progression at radius 1/4.
    Spectral,
    /// A greedy generating subset `Ψ` at radius `1/(4|Ψ|)`.
    Compressed,
    /// The annihilator of the subgroup part at radius 0.
    SubgroupAnnihilator,
    /// All characters, giving `{0}`.
    FullDual,
}

#[derive(Clone, Debug, Serialize)]
pub struct BohrInProgression {
    pub bohr: BohrSet,
    pub source: BohrSource,
    pub size: usize,
    /// Shrink factor `d` for the spectral candidates.
    pub shrink: Option<i64>,
    /// Spectral threshold `ξ = δ^{1+1/(d-2)}/2` actually used.
    pub xi: Option<f64>,
}

/// A Bohr set inside a proper symmetric coset progression `C`.
///
/// For even `d ≥ 4`, `Q = Σ [-⌊N_i/d⌋, ⌊N_i/d⌋]·v_i + H` satisfies `dQ ⊆ C`,
/// and `B(Spec_ξ(1_Q); 1/4)` lies in the support of the `d`-fold convolution
/// of `1_Q`. Every candidate is checked against `C` and the largest is kept.
pub fn bohr_in_progression(c: &CosetProgression) -> Result<BohrInProgression> {
    if !c.is_symmetric() || !c.is_proper() {
        return Err(Error::Precondition("C must be proper and symmetric".into()));
    }
    let g = c.group();
    let dual = g.dual();
    let c_set = c.enumerate();
    let quarter = Rational64::new(1, 4);
    let mut best: Option<BohrInProgression> = None;
    let mut consider = |cand: BohrInProgression| {
        if best.as_ref().is_none_or(|b| cand.size > b.size) {
            best = Some(cand);
        }
    };

    for d in (4..=MAX_SHRINK).step_by(2) {
        let arms: Vec<Arm> = c.arms().iter().map(|a| Arm::symmetric(a.generator.clone(), a.hi / d)).collect();
        let q = CosetProgression::new(g, g.zero(), arms, c.subgroup().clone())?;
        let q_set = q.enumerate();
        let delta = q_set.density();
        let xi = delta.powf(1.0 + 1.0 / (d as f64 - 2.0)) / 2.0;
        let gamma = nonzero(spectrum(&GroupFunction::indicator(&q_set), xi));
        let bohr = BohrSet::new(g, gamma.clone(), quarter)?;
        let set = bohr.enumerate();
        if set.is_subset(&c_set) {
            consider(BohrInProgression { size: set.len(), bohr, source: BohrSource::Spectral, shrink: Some(d), xi: Some(xi) });
        }
        // Γ ⊆ ⟨Ψ⟩_1 gives B(Ψ; 1/(4|Ψ|)) ⊆ B(Γ; 1/4).
        let mut psi: Vec<GroupElement> = Vec::new();
        let mut covered = GroupSubset::singleton(&dual, 0);
        for chi in &gamma {
            if !covered.contains(&chi.as_element()) {
                psi.push(chi.as_element());
                covered = bounded_span(&dual, &psi, 1);
            }
        }
        if !psi.is_empty() && psi.len() < gamma.len() {
            let freqs: Vec<Character> = psi.iter().map(Character::from_element).collect();
            let radius = Rational64::new(1, 4 * psi.len() as i64);
            let bohr = BohrSet::new(g, freqs, radius)?;
            let set = bohr.enumerate();
            if set.is_subset(&c_set) {
                consider(BohrInProgression { size: set.len(), bohr, source: BohrSource::Compressed, shrink: Some(d), xi: Some(xi) });
            }
        }
        if c.arms().iter().all(|a| a.hi / d == 0) {
            break;
        }
    }

    let h = c.subgroup();
    let hgens: Vec<GroupElement> = h.generators();
    let annihilator = GroupSubset::from_fn(&dual, |i| {
        let chi = dual.element_at(i);
        hgens.iter().all(|x| g.eval_scaled(&chi.0, &x.0) == 0)
    });
    let freqs: Vec<Character> = annihilator.generators().iter().map(Character::from_element).collect();
    let bohr = BohrSet::new(g, freqs, Rational64::from_integer(0))?;
    let set = bohr.enumerate();
    if set.is_subset(&c_set) {
        consider(BohrInProgression { size: set.len(), bohr, source: BohrSource::SubgroupAnnihilator, shrink: None, xi: None });
    }
    let bohr = BohrSet::new(g, dual.characters().collect(), quarter)?;
    let size = bohr.size();
    consider(BohrInProgression { bohr, source: BohrSource::FullDual, size, shrink: None, xi: None });
    Ok(best.expect("full dual candidate always present"))
}
