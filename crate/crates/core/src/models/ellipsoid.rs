//! Ellipsoid surfaces cut down by coordinate hyperplanes, for estimating the
//! surface area of an n-dimensional ellipsoid.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde_json::json;

use crate::constraint::{ConstraintSystem, LabelVector, StratificationSpec, Tag};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

/// `q_0 = sum x_i^2 / a_i^2 - 1` (negated when `inside`), `q_k = x_k` for `k >= 1`.
#[derive(Clone, Debug)]
pub struct EllipsoidSystem {
    inv_sq: Vec<f64>,
    inside: bool,
    with_planes: bool,
}

impl ConstraintSystem for EllipsoidSystem {
    fn n_vars(&self) -> usize {
        self.inv_sq.len()
    }
    fn n_fcns(&self) -> usize {
        if self.with_planes {
            self.inv_sq.len()
        } else {
            1
        }
    }
    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        if i == 0 {
            let q = x.iter().zip(&self.inv_sq).map(|(v, w)| v * v * w).sum::<f64>() - 1.0;
            if self.inside {
                -q
            } else {
                q
            }
        } else {
            x[i]
        }
    }
    fn grad(&self, i: usize, x: &[f64], out: &mut [f64]) {
        if i == 0 {
            let s = if self.inside { -2.0 } else { 2.0 };
            for ((o, v), w) in out.iter_mut().zip(x).zip(&self.inv_sq) {
                *o = s * v * w;
            }
        } else {
            out[i] = 1.0;
        }
    }
}

fn check_semiaxes(semiaxes: &[f64]) -> Result<()> {
    if semiaxes.len() < 2 || semiaxes.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter(format!("need at least two positive semi-axes, got {semiaxes:?}")));
    }
    Ok(())
}

/// Nested intersections of the ellipsoid surface with `x_2 = 0, ..., x_k = 0`.
/// Level `k` (1-based) is the surface cut by the first `k - 1` planes; level n
/// is the pair of points `+-a_1 e_1`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    semiaxes: Vec<f64>,
    level_weights: Vec<f64>,
    system: EllipsoidSystem,
    strat: StratificationSpec,
}

impl Ellipsoid {
    /// `level_weights[k - 1]` is the density constant on level `k`.
    pub fn new(semiaxes: Vec<f64>, level_weights: Vec<f64>) -> Result<Self> {
        check_semiaxes(&semiaxes)?;
        let n = semiaxes.len();
        if level_weights.len() != n || level_weights.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidParameter(format!("need {n} positive level weights")));
        }
        let labels = (1..=n)
            .map(|k| LabelVector::new((0..n).map(|i| if i < k { Tag::Eq } else { Tag::None }).collect()))
            .collect();
        let strat = StratificationSpec::explicit(n, labels)?;
        let system = EllipsoidSystem { inv_sq: semiaxes.iter().map(|a| 1.0 / (a * a)).collect(), inside: false, with_planes: true };
        Ok(Ellipsoid { semiaxes, level_weights, system, strat })
    }

    /// Level weights `exp(rate * k)`.
    pub fn with_exponential_weights(semiaxes: Vec<f64>, rate: f64) -> Result<Self> {
        let n = semiaxes.len();
        Self::new(semiaxes, (1..=n).map(|k| (rate * k as f64).exp()).collect())
    }

    pub fn semiaxes(&self) -> &[f64] {
        &self.semiaxes
    }

    pub fn level_weights(&self) -> &[f64] {
        &self.level_weights
    }

    /// Volume (point count) of the last level.
    pub fn anchor_volume() -> f64 {
        2.0
    }
}

impl Model for Ellipsoid {
    fn name(&self) -> &str {
        "ellipsoid"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    fn log_density_weight(&self, _x: &[f64], labels: &LabelVector) -> Result<f64> {
        Ok(self.level_weights[labels.n_eq() - 1].ln())
    }
    fn observable_names(&self) -> Vec<String> {
        vec!["level".into()]
    }
    fn observables(&self, _x: &[f64], labels: &LabelVector) -> Vec<f64> {
        vec![labels.n_eq() as f64]
    }
    fn initial_state(&self) -> ChainState {
        let (s, c) = 0.3f64.sin_cos();
        let mut x = vec![0.0; self.semiaxes.len()];
        x[0] = self.semiaxes[0] * c;
        x[1] = self.semiaxes[1] * s;
        ChainState::new(DVector::from_vec(x), self.strat.explicit_labels().expect("explicit")[0].clone())
    }
    fn recommended_params(&self) -> SamplerParams {
        SamplerParams::new(0.6, 0.4, 0.3, 0.4)
    }
    fn describe(&self) -> serde_json::Value {
        json!({ "name": self.name(), "semiaxes": self.semiaxes, "level_weights": self.level_weights })
    }
}

/// Solid ellipsoid (IN) and its surface (EQ), for estimating the surface area
/// from the known volume.
#[derive(Clone, Debug)]
pub struct EllipsoidInterior {
    semiaxes: Vec<f64>,
    surface_weight: f64,
    interior_weight: f64,
    system: EllipsoidSystem,
    strat: StratificationSpec,
}

impl EllipsoidInterior {
    pub const SURFACE: usize = 0;
    pub const INTERIOR: usize = 1;

    pub fn new(semiaxes: Vec<f64>, surface_weight: f64, interior_weight: f64) -> Result<Self> {
        check_semiaxes(&semiaxes)?;
        if !(surface_weight > 0.0) || !(interior_weight > 0.0) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let labels = vec![LabelVector::new(vec![Tag::Eq]), LabelVector::new(vec![Tag::In])];
        let strat = StratificationSpec::explicit(1, labels)?;
        let system = EllipsoidSystem { inv_sq: semiaxes.iter().map(|a| 1.0 / (a * a)).collect(), inside: true, with_planes: false };
        Ok(EllipsoidInterior { semiaxes, surface_weight, interior_weight, system, strat })
    }

    /// `pi^(n/2) / Gamma(n/2 + 1) * prod a_i`.
    pub fn interior_volume(&self) -> f64 {
        let n = self.semiaxes.len();
        unit_ball_volume(n) * self.semiaxes.iter().product::<f64>()
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.surface_weight, self.interior_weight)
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2 pi / n * V_{n-2}
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

impl Model for EllipsoidInterior {
    fn name(&self) -> &str {
        "ellipsoid-interior"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    fn log_density_weight(&self, _x: &[f64], labels: &LabelVector) -> Result<f64> {
        Ok(if labels.n_eq() == 1 { self.surface_weight } else { self.interior_weight }.ln())
    }
    fn observable_names(&self) -> Vec<String> {
        vec!["surface".into()]
    }
    fn observables(&self, _x: &[f64], labels: &LabelVector) -> Vec<f64> {
        vec![labels.n_eq() as f64]
    }
    fn initial_state(&self) -> ChainState {
        let mut x = vec![0.0; self.semiaxes.len()];
        x[0] = 0.5 * self.semiaxes[0];
        ChainState::new(DVector::from_vec(x), LabelVector::new(vec![Tag::In]))
    }
    fn recommended_params(&self) -> SamplerParams {
        SamplerParams::new(0.6, 0.4, 0.3, 0.4)
    }
    fn describe(&self) -> serde_json::Value {
        json!({
            "name": self.name(),
            "semiaxes": self.semiaxes,
            "surface_weight": self.surface_weight,
            "interior_weight": self.interior_weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_axes() -> Vec<f64> {
        vec![2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 1.0, 1.0, 1.0]
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(10) - PI.powi(5) / 120.0).abs() < 1e-13);
    }

    #[test]
    fn interior_volume_of_ten_dimensional_ellipsoid() {
        let m = EllipsoidInterior::new(reference_axes(), 1.0, 1.0).unwrap();
        assert!((m.interior_volume() - 1101.7).abs() < 0.1);
    }

    #[test]
    fn nested_levels_and_two_sided_gains() {
        let m = Ellipsoid::with_exponential_weights(reference_axes(), 0.94).unwrap();
        let s = m.initial_state();
        s.validate(&m, 1e-12).unwrap();
        let labels = m.stratification().explicit_labels().unwrap();
        assert_eq!(labels.len(), 10);
        let g = m.stratification().gain_neighbours(&labels[4]);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].sidedness, crate::constraint::Sidedness::TwoSided);
        assert!(m.stratification().gain_neighbours(&labels[0]).is_empty());
        assert!((m.log_density_weight(&[0.0; 10], &labels[2]).unwrap() - 3.0 * 0.94).abs() < 1e-12);
    }
}
