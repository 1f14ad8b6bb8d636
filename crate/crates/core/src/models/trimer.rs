//! Three sticky unit disks in the plane, bonded 1-2 and 2-3, with the 1-3
//! contact free to form (triangle) or break (flexible polymer).

use std::f64::consts::PI;

use nalgebra::DVector;
use serde_json::json;

use crate::constraint::{ConstraintSystem, LabelVector, StratificationSpec, Tag};
use crate::error::Result;
use crate::geometry::{constraint_gradient_matrix, log_pseudodet};
use crate::models::sticky::SphereSystem;
use crate::models::Model;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

#[derive(Clone, Debug)]
pub struct Trimer {
    kappa: f64,
    system: SphereSystem,
    strat: StratificationSpec,
}

impl Trimer {
    pub const POLYMER: usize = 0;
    pub const TRIANGLE: usize = 1;

    pub fn new(kappa: f64) -> Self {
        // functions: q12, q23, q13
        let system = SphereSystem::new(2, 3, vec![(0, 1), (1, 2), (0, 2)], vec![]);
        let labels = vec![
            LabelVector::new(vec![Tag::Eq, Tag::Eq, Tag::In]),
            LabelVector::new(vec![Tag::Eq, Tag::Eq, Tag::Eq]),
        ];
        let strat = StratificationSpec::explicit(3, labels).expect("static label list is valid");
        Trimer { kappa, system, strat }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Equilibrium probability of the triangle.
    pub fn triangle_probability(kappa: f64) -> f64 {
        kappa / (kappa + PI / 3f64.sqrt())
    }

    /// Oriented internal angle at the middle disk, in `[0, 2 pi)`.
    pub fn bond_angle(x: &[f64]) -> f64 {
        let u = [x[0] - x[2], x[1] - x[3]];
        let w = [x[4] - x[2], x[5] - x[3]];
        let theta = (u[0] * w[1] - u[1] * w[0]).atan2(u[0] * w[0] + u[1] * w[1]);
        theta.rem_euclid(2.0 * PI)
    }

    /// Configuration with bond angle `theta` and centre of mass at the origin.
    pub fn configuration(theta: f64) -> DVector<f64> {
        let (s, c) = (theta / 2.0).sin_cos();
        DVector::from_vec(vec![-s, -c / 3.0, 0.0, 2.0 * c / 3.0, s, -c / 3.0])
    }
}

impl Model for Trimer {
    fn name(&self) -> &str {
        "trimer"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    /// `kappa^m / |Q|` with |Q| in the distance gauge, computed from squared-distance gradients.
    fn log_density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64> {
        let q = constraint_gradient_matrix(&self.system, labels, x);
        let m = labels.n_eq() as f64;
        Ok(m * (2.0 * self.kappa).ln() - log_pseudodet(&q)?)
    }
    fn observable_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }
    fn observables(&self, x: &[f64], _labels: &LabelVector) -> Vec<f64> {
        vec![Self::bond_angle(x)]
    }
    fn initial_state(&self) -> ChainState {
        ChainState::new(Self::configuration(PI), self.strat.explicit_labels().expect("explicit")[Self::POLYMER].clone())
    }
    fn recommended_params(&self) -> SamplerParams {
        SamplerParams::new(0.5, 0.4, 0.3, 0.7)
    }
    fn describe(&self) -> serde_json::Value {
        json!({ "name": self.name(), "kappa": self.kappa })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_has_unit_bonds_and_requested_angle() {
        for theta in [PI / 3.0, 1.0, PI, 4.0, 5.0 * PI / 3.0] {
            let x = Trimer::configuration(theta);
            let sys = SphereSystem::new(2, 3, vec![(0, 1), (1, 2), (0, 2)], vec![]);
            assert!(sys.eval(0, x.as_slice()).abs() < 1e-14);
            assert!(sys.eval(1, x.as_slice()).abs() < 1e-14);
            assert!((Trimer::bond_angle(x.as_slice()) - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_gauge_pseudodets() {
        // triangle: |Q| = sqrt(27/4); polymer at angle theta: sqrt(4 - cos^2 theta)
        let t = Trimer::new(1.0);
        let tri: LabelVector = "EEE".parse().unwrap();
        let x = Trimer::configuration(PI / 3.0);
        let w = t.log_density_weight(x.as_slice(), &tri).unwrap();
        assert!((w + (27.0f64 / 4.0).sqrt().ln()).abs() < 1e-12);
        let poly: LabelVector = "EEI".parse().unwrap();
        let theta = 2.0;
        let x = Trimer::configuration(theta);
        let w = t.log_density_weight(x.as_slice(), &poly).unwrap();
        assert!((w + (4.0 - theta.cos().powi(2)).sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn triangle_probability_at_unit_kappa() {
        assert!((Trimer::triangle_probability(1.0) - 0.35539).abs() < 1e-5);
    }
}
