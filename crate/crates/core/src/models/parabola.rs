//! Region between the parabola `y = x^2` and the line `y = 2`, with its two
//! boundary curves and two corner points, all at density 1.

use nalgebra::DVector;
use serde_json::json;

use crate::constraint::{ConstraintSystem, LabelVector, StratificationSpec, Tag};
use crate::error::Result;
use crate::models::Model;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

/// `q1 = y - x^2`, `q2 = 2 - y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParabolaLineSystem;

impl ConstraintSystem for ParabolaLineSystem {
    fn n_vars(&self) -> usize {
        2
    }
    fn n_fcns(&self) -> usize {
        2
    }
    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        match i {
            0 => x[1] - x[0] * x[0],
            _ => 2.0 - x[1],
        }
    }
    fn grad(&self, i: usize, x: &[f64], out: &mut [f64]) {
        match i {
            0 => {
                out[0] = -2.0 * x[0];
                out[1] = 1.0;
            }
            _ => out[1] = -1.0,
        }
    }
}

/// Manifolds in list order: interior, parabola arc, line segment, corners.
#[derive(Clone, Debug)]
pub struct ParabolaLine {
    system: ParabolaLineSystem,
    strat: StratificationSpec,
}

impl ParabolaLine {
    pub const INTERIOR: usize = 0;
    pub const ARC: usize = 1;
    pub const SEGMENT: usize = 2;
    pub const CORNERS: usize = 3;

    pub fn new() -> Self {
        let labels = [[Tag::In, Tag::In], [Tag::Eq, Tag::In], [Tag::In, Tag::Eq], [Tag::Eq, Tag::Eq]]
            .into_iter()
            .map(|t| LabelVector::new(t.to_vec()))
            .collect();
        let strat = StratificationSpec::explicit(2, labels).expect("static label list is valid");
        ParabolaLine { system: ParabolaLineSystem, strat }
    }

    /// Exact stationary fractions: area, arc length, segment length and the two
    /// corners, each weighted by 1 and normalized.
    pub fn theoretical_fractions() -> [f64; 4] {
        let s2 = 2f64.sqrt();
        let area = 8.0 * s2 / 3.0;
        // arc length of y = x^2 on [-sqrt2, sqrt2]
        let half = |t: f64| 0.5 * t * (1.0 + 4.0 * t * t).sqrt() + 0.25 * (2.0 * t + (1.0 + 4.0 * t * t).sqrt()).ln();
        let arc = 2.0 * half(s2);
        let segment = 2.0 * s2;
        let corners = 2.0;
        let total = area + arc + segment + corners;
        [area / total, arc / total, segment / total, corners / total]
    }
}

impl Default for ParabolaLine {
    fn default() -> Self {
        Self::new()
    }
}

impl Model for ParabolaLine {
    fn name(&self) -> &str {
        "parabola-line"
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    fn log_density_weight(&self, _x: &[f64], _labels: &LabelVector) -> Result<f64> {
        Ok(0.0)
    }
    fn observable_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }
    fn observables(&self, x: &[f64], _labels: &LabelVector) -> Vec<f64> {
        x.to_vec()
    }
    fn initial_state(&self) -> ChainState {
        ChainState::new(DVector::from_vec(vec![0.0, 1.0]), LabelVector::new(vec![Tag::In, Tag::In]))
    }
    fn recommended_params(&self) -> SamplerParams {
        SamplerParams::new(0.9, 0.3, 0.6, 0.7)
    }
    fn describe(&self) -> serde_json::Value {
        json!({ "name": self.name() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_values() {
        let s = ParabolaLineSystem;
        assert_eq!(s.eval(0, &[1.0, 3.0]), 2.0);
        assert_eq!(s.eval(1, &[1.0, 3.0]), -1.0);
    }

    #[test]
    fn theory_fractions() {
        let f = ParabolaLine::theoretical_fractions();
        let expect = [0.2748, 0.3734, 0.2061, 0.1457];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 6e-5, "{a} vs {b}");
        }
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
