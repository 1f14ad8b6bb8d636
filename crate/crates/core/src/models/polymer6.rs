//! Linear chain of six sticky unit spheres in 3D. The five backbone bonds are
//! always present; the other ten contacts form and break.

use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::constraint::{ConstraintSystem, FixFlag, LabelVector, StratificationSpec, Tag};
use crate::error::Result;
use crate::geometry::{constraint_gradient_matrix, log_pseudodet};
use crate::models::sticky::SphereSystem;
use crate::models::Model;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

pub const N_SPHERES: usize = 6;
const N_PAIRS: usize = 15;

/// Sticky parameters per interaction type. Spheres 1 and 6 are type B, the
/// middle four type A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StickyKappas {
    pub aa: f64,
    pub ab: f64,
    pub bb: f64,
}

impl StickyKappas {
    pub fn uniform(kappa: f64) -> Self {
        StickyKappas { aa: kappa, ab: kappa, bb: kappa }
    }

    pub fn for_pair(&self, i: usize, j: usize) -> f64 {
        match (is_b(i), is_b(j)) {
            (false, false) => self.aa,
            (true, true) => self.bb,
            _ => self.ab,
        }
    }
}

fn is_b(i: usize) -> bool {
    i == 0 || i == N_SPHERES - 1
}

/// Contact-graph classes of rigid 12-contact clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cluster {
    NotRigid,
    Octahedron,
    Polytetrahedron,
    Other,
}

impl Cluster {
    pub fn code(self) -> f64 {
        match self {
            Cluster::NotRigid => 0.0,
            Cluster::Octahedron => 1.0,
            Cluster::Polytetrahedron => 2.0,
            Cluster::Other => 3.0,
        }
    }
}

fn pair_slot(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    // lexicographic index of (i, j) among pairs of 6
    i * (2 * N_SPHERES - i - 1) / 2 + (j - i - 1)
}

fn permutations() -> &'static Vec<[usize; N_SPHERES]> {
    static PERMS: OnceLock<Vec<[usize; N_SPHERES]>> = OnceLock::new();
    PERMS.get_or_init(|| {
        let mut out = Vec::with_capacity(720);
        let mut p = [0, 1, 2, 3, 4, 5];
        heap_permute(&mut p, N_SPHERES, &mut out);
        out
    })
}

fn heap_permute(p: &mut [usize; N_SPHERES], k: usize, out: &mut Vec<[usize; N_SPHERES]>) {
    if k == 1 {
        out.push(*p);
        return;
    }
    for i in 0..k {
        heap_permute(p, k - 1, out);
        if k % 2 == 0 {
            p.swap(i, k - 1);
        } else {
            p.swap(0, k - 1);
        }
    }
}

/// Smallest adjacency bitmask over all relabelings of the spheres.
pub fn canonical_adjacency(edges: &[(usize, usize)]) -> u16 {
    permutations()
        .iter()
        .map(|p| edges.iter().fold(0u16, |acc, &(i, j)| acc | 1 << pair_slot(p[i], p[j])))
        .min()
        .unwrap_or(0)
}

fn reference_forms() -> &'static (u16, u16) {
    static FORMS: OnceLock<(u16, u16)> = OnceLock::new();
    FORMS.get_or_init(|| {
        let all = SphereSystem::all_pairs(N_SPHERES);
        let octa: Vec<_> = all.iter().copied().filter(|&(i, j)| i + j != 5).collect();
        let tets = [[0, 1, 2, 3], [1, 2, 3, 4], [2, 3, 4, 5]];
        let poly: Vec<_> = all.iter().copied().filter(|&(i, j)| tets.iter().any(|t| t.contains(&i) && t.contains(&j))).collect();
        (canonical_adjacency(&octa), canonical_adjacency(&poly))
    })
}

pub fn classify(edges: &[(usize, usize)]) -> Cluster {
    if edges.len() != 12 {
        return Cluster::NotRigid;
    }
    let form = canonical_adjacency(edges);
    let (octa, poly) = *reference_forms();
    if form == octa {
        Cluster::Octahedron
    } else if form == poly {
        Cluster::Polytetrahedron
    } else {
        Cluster::Other
    }
}

#[derive(Clone, Debug)]
pub struct Polymer6 {
    kappas: StickyKappas,
    system: SphereSystem,
    strat: StratificationSpec,
}

impl Polymer6 {
    pub fn new(kappa: f64) -> Self {
        Self::typed(StickyKappas::uniform(kappa))
    }

    pub fn typed(kappas: StickyKappas) -> Self {
        let pairs = SphereSystem::all_pairs(N_SPHERES);
        let backbone: Vec<bool> = pairs.iter().map(|&(i, j)| j == i + 1).collect();
        let reference =
            LabelVector::new(backbone.iter().map(|&b| if b { Tag::Eq } else { Tag::In }).collect());
        let flags: Vec<FixFlag> = backbone.iter().map(|&b| if b { FixFlag::Fix } else { FixFlag::Vary }).collect();
        let strat = StratificationSpec::vary(reference, &flags, &[false; N_PAIRS]).expect("valid flags");
        Polymer6 { kappas, system: SphereSystem::new(3, N_SPHERES, pairs, vec![]), strat }
    }

    pub fn kappas(&self) -> StickyKappas {
        self.kappas
    }

    pub fn sphere_system(&self) -> &SphereSystem {
        &self.system
    }

    /// Pairs tagged EQ in `labels`.
    pub fn contacts(&self, labels: &LabelVector) -> Vec<(usize, usize)> {
        labels.eq_indices().into_iter().map(|k| self.system.pairs()[k]).collect()
    }

    /// Counts of non-backbone contacts `(n_AA, n_AB, n_BB)`.
    pub fn type_counts(edges: &[(usize, usize)]) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for &(i, j) in edges.iter().filter(|&&(i, j)| j != i + 1) {
            match (is_b(i), is_b(j)) {
                (false, false) => counts.0 += 1,
                (true, true) => counts.2 += 1,
                _ => counts.1 += 1,
            }
        }
        counts
    }

    /// Observables for a given contact list, shared with Brownian-dynamics traces.
    pub fn contact_observables(edges: &[(usize, usize)]) -> Vec<f64> {
        let (aa, ab, bb) = Self::type_counts(edges);
        vec![edges.len() as f64, aa as f64, ab as f64, bb as f64, classify(edges).code()]
    }

    pub fn contact_observable_names() -> Vec<String> {
        ["bonds", "n_AA", "n_AB", "n_BB", "cluster"].iter().map(|s| s.to_string()).collect()
    }

    /// Canonical label string for a contact list (same ids the sampler reports).
    pub fn label_for_contacts(edges: &[(usize, usize)]) -> LabelVector {
        let mut tags = vec![Tag::In; N_PAIRS];
        for &(i, j) in edges {
            tags[pair_slot(i, j)] = Tag::Eq;
        }
        LabelVector::new(tags)
    }

    /// Zig-zag chain with unit bonds and no other contacts.
    pub fn zigzag() -> DVector<f64> {
        let a = 0.5f64;
        let mut x = vec![0.0; 3 * N_SPHERES];
        for i in 1..N_SPHERES {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            x[3 * i] = x[3 * (i - 1)] + a.cos();
            x[3 * i + 1] = x[3 * (i - 1) + 1] + sign * a.sin();
        }
        DVector::from_vec(x)
    }
}

impl Model for Polymer6 {
    fn name(&self) -> &str {
        "polymer6"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    /// Product of per-contact sticky parameters over non-backbone contacts,
    /// divided by the distance-gauge pseudo-determinant of the contact gradients.
    fn log_density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64> {
        let q = constraint_gradient_matrix(&self.system, labels, x);
        let edges = self.contacts(labels);
        let sticky: f64 =
            edges.iter().filter(|&&(i, j)| j != i + 1).map(|&(i, j)| self.kappas.for_pair(i, j)).product();
        Ok(sticky.ln() + edges.len() as f64 * 2f64.ln() - log_pseudodet(&q)?)
    }
    fn observable_names(&self) -> Vec<String> {
        Self::contact_observable_names()
    }
    fn observables(&self, _x: &[f64], labels: &LabelVector) -> Vec<f64> {
        Self::contact_observables(&self.contacts(labels))
    }
    fn initial_state(&self) -> ChainState {
        let reference = Self::label_for_contacts(&(0..N_SPHERES - 1).map(|i| (i, i + 1)).collect::<Vec<_>>());
        ChainState::new(Self::zigzag(), reference)
    }
    fn recommended_params(&self) -> SamplerParams {
        SamplerParams::new(0.4, 0.3, 0.2, 0.4).with_lambda_gain(0.24)
    }
    fn describe(&self) -> serde_json::Value {
        json!({ "name": self.name(), "kappa_aa": self.kappas.aa, "kappa_ab": self.kappas.ab, "kappa_bb": self.kappas.bb })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_slots_are_lexicographic() {
        let all = SphereSystem::all_pairs(N_SPHERES);
        for (k, &(i, j)) in all.iter().enumerate() {
            assert_eq!(pair_slot(i, j), k);
            assert_eq!(pair_slot(j, i), k);
        }
    }

    #[test]
    fn there_are_720_permutations() {
        let perms = permutations();
        assert_eq!(perms.len(), 720);
        let mut sorted = perms.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 720);
    }

    #[test]
    fn reference_clusters_are_distinct_and_relabel_invariant() {
        let (octa, poly) = *reference_forms();
        assert_ne!(octa, poly);
        // an octahedron with a different perfect matching removed
        let all = SphereSystem::all_pairs(N_SPHERES);
        let missing = [(0, 1), (2, 4), (3, 5)];
        let octa2: Vec<_> = all.iter().copied().filter(|e| !missing.contains(e)).collect();
        assert_eq!(classify(&octa2), Cluster::Octahedron);
        let tets = [[5, 0, 1, 2], [0, 1, 2, 3], [0, 1, 3, 4]];
        let poly2: Vec<_> =
            all.iter().copied().filter(|&(i, j)| tets.iter().any(|t| t.contains(&i) && t.contains(&j))).collect();
        assert_eq!(poly2.len(), 12);
        assert_eq!(classify(&poly2), Cluster::Polytetrahedron);
        assert_eq!(classify(&all[..11]), Cluster::NotRigid);
    }

    #[test]
    fn zigzag_is_a_valid_start() {
        let m = Polymer6::new(1.0);
        let s = m.initial_state();
        s.validate(&m, 1e-12).unwrap();
        assert_eq!(s.labels().n_eq(), 5);
        assert_eq!(m.observables(s.x().as_slice(), s.labels()), vec![5.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_typed_weights_match_untyped_bitwise() {
        let untyped = Polymer6::new(2.885);
        let typed = Polymer6::typed(StickyKappas { aa: 2.885, ab: 2.885, bb: 2.885 });
        let s = untyped.initial_state();
        let lab = s.labels();
        assert_eq!(
            untyped.log_density_weight(s.x().as_slice(), lab).unwrap().to_bits(),
            typed.log_density_weight(s.x().as_slice(), lab).unwrap().to_bits()
        );
    }

    #[test]
    fn type_counts_skip_backbone() {
        let edges = vec![(0, 1), (1, 2), (0, 5), (1, 3), (0, 2)];
        assert_eq!(Polymer6::type_counts(&edges), (1, 1, 1));
    }
}
