//! Newton solvers that project a point back onto a constraint manifold along
//! a fixed set of directions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::ConstraintSystem;
use crate::geometry::gradient_matrix_for;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Absolute tolerance on `max |q_i|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub y: DVector<f64>,
    /// Coefficients of the projection directions.
    pub coeffs: DVector<f64>,
    /// Step length along the lose direction, only set by [`nes_l`].
    pub alpha: Option<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("Newton iteration did not converge")]
    MaxIterations,
    #[error("singular Newton system")]
    Singular,
    #[error("non-finite value during Newton iteration")]
    NonFinite,
}

pub type ProjectionResult = Result<Projection, ProjectionError>;

/// Find `a` with `q_k(z + Q a) = 0` for all `k` in `eq`, where `Q` has one
/// column per constraint and is held fixed during the iteration.
pub fn nes(
    sys: &dyn ConstraintSystem,
    z: &DVector<f64>,
    q: &DMatrix<f64>,
    eq: &[usize],
    settings: &NewtonSettings,
) -> ProjectionResult {
    assert_eq!(q.ncols(), eq.len(), "one projection direction per constraint");
    newton(sys, z, q, eq, DVector::zeros(eq.len()), settings)
}

/// Like [`nes`], with an extra direction `v` (last column of `q_v`) and an
/// extra constraint `i0` to be made active. The step starts from the
/// linearized hitting distance along `v`; its final coefficient is `alpha`.
pub fn nes_l(
    sys: &dyn ConstraintSystem,
    x: &DVector<f64>,
    q_v: &DMatrix<f64>,
    eq: &[usize],
    i0: usize,
    v: &DVector<f64>,
    settings: &NewtonSettings,
) -> ProjectionResult {
    let m = eq.len();
    assert_eq!(q_v.ncols(), m + 1, "gradient columns plus the lose direction");
    let g = gradient_matrix_for(sys, &[i0], x.as_slice());
    let slope = g.column(0).dot(v);
    let h = -sys.eval(i0, x.as_slice()) / slope;
    if !h.is_finite() {
        return Err(ProjectionError::Singular);
    }
    let mut a0 = DVector::zeros(m + 1);
    a0[m] = h;
    let mut all_eq = eq.to_vec();
    all_eq.push(i0);
    let mut p = newton(sys, x, q_v, &all_eq, a0, settings)?;
    p.alpha = Some(p.coeffs[m]);
    Ok(p)
}

fn newton(
    sys: &dyn ConstraintSystem,
    base: &DVector<f64>,
    q: &DMatrix<f64>,
    eq: &[usize],
    mut a: DVector<f64>,
    settings: &NewtonSettings,
) -> ProjectionResult {
    let mut p = base.clone();
    for it in 0..settings.max_iter {
        p.copy_from(base);
        if !eq.is_empty() {
            p.gemv(1.0, q, &a, 1.0);
        }
        let f = DVector::from_iterator(eq.len(), eq.iter().map(|&k| sys.eval(k, p.as_slice())));
        if f.iter().any(|v| !v.is_finite()) {
            return Err(ProjectionError::NonFinite);
        }
        if f.amax() < settings.tol {
            return Ok(Projection { y: p, coeffs: a, alpha: None, iterations: it });
        }
        let jac = gradient_matrix_for(sys, eq, p.as_slice()).tr_mul(q);
        let delta = jac.lu().solve(&(-f)).ok_or(ProjectionError::Singular)?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(ProjectionError::Singular);
        }
        a += delta;
    }
    Err(ProjectionError::MaxIterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Circle;

    impl ConstraintSystem for Circle {
        fn n_vars(&self) -> usize {
            2
        }
        fn n_fcns(&self) -> usize {
            1
        }
        fn eval(&self, _i: usize, x: &[f64]) -> f64 {
            x[0] * x[0] + x[1] * x[1] - 1.0
        }
        fn grad(&self, _i: usize, x: &[f64], out: &mut [f64]) {
            out[0] = 2.0 * x[0];
            out[1] = 2.0 * x[1];
        }
    }

    #[test]
    fn projects_onto_circle_along_fixed_normal() {
        let z = DVector::from_vec(vec![1.0, 0.1]);
        let q = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        let p = nes(&Circle, &z, &q, &[0], &NewtonSettings::default()).unwrap();
        let expected = (0.99f64.sqrt() - 1.0) / 2.0;
        assert!((p.coeffs[0] - expected).abs() < 1e-12);
        assert!(Circle.eval(0, p.y.as_slice()).abs() < 1e-10);
        assert!(p.iterations >= 1);
    }

    #[test]
    fn already_on_manifold_takes_zero_iterations() {
        let z = DVector::from_vec(vec![0.6, 0.8]);
        let q = DMatrix::from_column_slice(2, 1, &[1.2, 1.6]);
        let p = nes(&Circle, &z, &q, &[0], &NewtonSettings::default()).unwrap();
        assert_eq!(p.iterations, 0);
        assert_eq!(p.y, z);
    }

    #[test]
    fn fails_outside_basin() {
        let z = DVector::from_vec(vec![0.0, 0.0]);
        let q = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(nes(&Circle, &z, &q, &[0], &NewtonSettings::default()).is_err());
    }

    #[test]
    fn lose_solver_hits_circle_along_ray() {
        // ray from (2, 0.5) in direction (-1, 0) hits the circle at x0 = sqrt(0.75)
        let x = DVector::from_vec(vec![2.0, 0.5]);
        let v = DVector::from_vec(vec![-1.0, 0.0]);
        let q_v = DMatrix::from_column_slice(2, 1, v.as_slice());
        let p = nes_l(&Circle, &x, &q_v, &[], 0, &v, &NewtonSettings::default()).unwrap();
        let alpha = p.alpha.unwrap();
        assert!((alpha - (2.0 - 0.75f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn lose_solver_fails_on_tangent_ray() {
        let x = DVector::from_vec(vec![0.0, 2.0]);
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let q_v = DMatrix::from_column_slice(2, 1, v.as_slice());
        assert_eq!(
            nes_l(&Circle, &x, &q_v, &[], 0, &v, &NewtonSettings::default()).unwrap_err(),
            ProjectionError::Singular
        );
    }
}
