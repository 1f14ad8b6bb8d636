//! Freely jointed (or semiflexible) chain of unit spheres above a sticky wall
//! at `z = 0`. Sphere 1 is always attached to the wall.

use nalgebra::DVector;
use serde_json::json;

use crate::constraint::{ConstraintSystem, FixFlag, LabelVector, StratificationSpec, Tag};
use crate::error::{Error, Result};
use crate::geometry::{constraint_gradient_matrix, log_pseudodet};
use crate::models::sticky::SphereSystem;
use crate::models::Model;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

#[derive(Clone, Debug)]
pub struct PolymerWall {
    n: usize,
    kappa: f64,
    k_bend: f64,
    system: SphereSystem,
    strat: StratificationSpec,
}

impl PolymerWall {
    pub fn new(n: usize, kappa: f64, k_bend: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 spheres, got {n}")));
        }
        if !(kappa > 0.0) || !(k_bend >= 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0 and k_bend >= 0, got {kappa}, {k_bend}")));
        }
        let backbone: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let system = SphereSystem::new(3, n, backbone, (0..n).collect());
        let n_fcns = 2 * n - 1;
        let reference = LabelVector::new(vec![Tag::Eq; n_fcns]);
        let flags: Vec<FixFlag> = (0..n_fcns).map(|k| if k < n { FixFlag::Fix } else { FixFlag::Vary }).collect();
        let strat = StratificationSpec::vary(reference, &flags, &vec![false; n_fcns])?;
        Ok(PolymerWall { n, kappa, k_bend, system, strat })
    }

    pub fn n_spheres(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of spheres whose wall function is EQ.
    pub fn on_wall(&self, labels: &LabelVector) -> usize {
        labels.tags()[self.n - 1..].iter().filter(|&&t| t == Tag::Eq).count()
    }

    /// `sum_i (1 - cos theta_i)` over internal angles.
    pub fn bending(&self, x: &[f64]) -> f64 {
        (0..self.n.saturating_sub(2))
            .map(|i| {
                let p = |k: usize| &x[3 * k..3 * k + 3];
                let (a, b, c) = (p(i), p(i + 1), p(i + 2));
                let cos: f64 = (0..3).map(|d| (c[d] - b[d]) * (b[d] - a[d])).sum();
                1.0 - cos
            })
            .sum()
    }
}

impl Model for PolymerWall {
    fn name(&self) -> &str {
        "polymer-wall"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    fn log_density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64> {
        let q = constraint_gradient_matrix(&self.system, labels, x);
        let bonds = (self.n - 1) as f64;
        Ok(-0.5 * self.k_bend * self.bending(x) + self.on_wall(labels) as f64 * self.kappa.ln() + bonds * 2f64.ln()
            - log_pseudodet(&q)?)
    }
    fn observable_names(&self) -> Vec<String> {
        vec!["wall_fraction".into(), "end_to_end".into(), "on_wall".into()]
    }
    fn observables(&self, x: &[f64], labels: &LabelVector) -> Vec<f64> {
        let k = self.on_wall(labels);
        vec![k as f64 / self.n as f64, self.system.distance(x, 0, self.n - 1), k as f64]
    }
    /// Straight chain lying flat on the wall.
    fn initial_state(&self) -> ChainState {
        let mut x = vec![0.0; 3 * self.n];
        for i in 0..self.n {
            x[3 * i] = i as f64;
        }
        ChainState::new(DVector::from_vec(x), LabelVector::new(vec![Tag::Eq; 2 * self.n - 1]))
    }
    fn recommended_params(&self) -> SamplerParams {
        let sigma = if self.n <= 10 { 0.3 } else { 0.1 };
        SamplerParams::new(sigma, 0.3, 0.2, 0.4).with_lambda_gain(0.24)
    }
    fn describe(&self) -> serde_json::Value {
        json!({ "name": self.name(), "n": self.n, "kappa": self.kappa, "k_bend": self.k_bend })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_chain_has_no_bending() {
        let m = PolymerWall::new(5, 1.0, 2.0).unwrap();
        let s = m.initial_state();
        s.validate(&m, 1e-12).unwrap();
        assert_eq!(m.bending(s.x().as_slice()), 0.0);
        assert_eq!(m.observables(s.x().as_slice(), s.labels()), vec![1.0, 4.0, 5.0]);
    }

    #[test]
    fn first_wall_function_is_fixed() {
        let m = PolymerWall::new(3, 1.0, 0.0).unwrap();
        let s = m.initial_state();
        let gains = m.stratification().gain_neighbours(s.labels());
        assert_eq!(gains.iter().map(|g| g.index).collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PolymerWall::new(1, 1.0, 0.0).is_err());
        assert!(PolymerWall::new(3, 0.0, 0.0).is_err());
        assert!(PolymerWall::new(3, 1.0, -1.0).is_err());
    }
}
