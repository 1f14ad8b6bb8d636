//! Tangent spaces, boundary estimates and tangent-space Jacobian factors.

use nalgebra::{DMatrix, DVector};

use crate::constraint::{ConstraintSystem, LabelVector};
use crate::error::{Error, Result};

/// Relative threshold on the diagonal of R below which the gradient matrix is
/// treated as rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values below this count as zero in the non-square pseudo-determinant.
pub const SINGULAR_TOL: f64 = 1e-12;

/// n x k matrix whose columns are the gradients of `indices` at `x`.
pub fn gradient_matrix_for(sys: &dyn ConstraintSystem, indices: &[usize], x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut q = DMatrix::zeros(n, indices.len());
    let data = q.as_mut_slice();
    for (j, &k) in indices.iter().enumerate() {
        sys.grad(k, x, &mut data[j * n..(j + 1) * n]);
    }
    q
}

/// Gradients of the EQ-tagged functions of `labels`, in index order.
pub fn constraint_gradient_matrix(sys: &dyn ConstraintSystem, labels: &LabelVector, x: &[f64]) -> DMatrix<f64> {
    gradient_matrix_for(sys, &labels.eq_indices(), x)
}

/// Orthonormal basis of a tangent space, stored as an n x d matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentBasis(DMatrix<f64>);

impl TangentBasis {
    pub fn from_matrix(t: DMatrix<f64>) -> Self {
        TangentBasis(t)
    }

    pub fn identity(n: usize) -> Self {
        TangentBasis(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn n_vars(&self) -> usize {
        self.0.nrows()
    }

    /// `T^T v`
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(v)
    }

    /// `T c`
    pub fn embed(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.0 * c
    }

    /// Orthogonal projection `T T^T v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coords(v))
    }
}

/// Gradient matrix together with its tangent basis and `ln sqrt(det(Q^T Q))`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub gradients: DMatrix<f64>,
    pub tangent: TangentBasis,
    pub log_pdet: f64,
}

impl Frame {
    pub fn new(sys: &dyn ConstraintSystem, labels: &LabelVector, x: &[f64]) -> Result<Frame> {
        frame_from_gradients(constraint_gradient_matrix(sys, labels, x))
    }
}

/// Householder QR of the n x m gradient matrix; the tangent basis is the
/// trailing n - m columns of the full orthogonal factor.
pub fn frame_from_gradients(q: DMatrix<f64>) -> Result<Frame> {
    let (n, m) = q.shape();
    if m == 0 {
        return Ok(Frame { gradients: q, tangent: TangentBasis::identity(n), log_pdet: 0.0 });
    }
    if m > n {
        return Err(Error::Degenerate);
    }
    let qr = q.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..m).map(|k| r[(k, k)].abs()).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || !largest.is_finite() || smallest < RANK_TOL * largest {
        return Err(Error::Degenerate);
    }
    let log_pdet = diag.iter().map(|d| d.ln()).sum();
    let mut q_tr = DMatrix::identity(n, n);
    qr.q_tr_mul(&mut q_tr);
    let tangent = TangentBasis(q_tr.rows(m, n - m).transpose());
    Ok(Frame { gradients: q, tangent, log_pdet })
}

pub fn tangent_basis(sys: &dyn ConstraintSystem, labels: &LabelVector, x: &[f64]) -> Result<TangentBasis> {
    Frame::new(sys, labels, x).map(|f| f.tangent)
}

/// `ln sqrt(det(Q^T Q))` for a full-column-rank `q`.
pub fn log_pseudodet(q: &DMatrix<f64>) -> Result<f64> {
    frame_from_gradients(q.clone()).map(|f| f.log_pdet)
}

/// Basis of the (d-1)-dimensional subspace of span(T) orthogonal to `v`.
///
/// Works in tangent coordinates: with `c = T^T v`, the trailing columns of the
/// full Q of the QR of `c` span `c`'s complement in R^d.
pub fn perp_basis(t: &TangentBasis, v: &DVector<f64>) -> DMatrix<f64> {
    let (n, d) = t.0.shape();
    if d < 2 {
        return DMatrix::zeros(n, 0);
    }
    let c = DMatrix::from_column_slice(d, 1, t.coords(v).as_slice());
    let qr = c.qr();
    let mut h_tr = DMatrix::identity(d, d);
    qr.q_tr_mul(&mut h_tr);
    &t.0 * h_tr.rows(1, d - 1).transpose()
}

pub fn tangent_basis_perp_v(
    sys: &dyn ConstraintSystem,
    labels: &LabelVector,
    x: &[f64],
    v: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    Ok(perp_basis(&tangent_basis(sys, labels, x)?, v))
}

/// `|q| / |T^T grad q|`, or infinity when the gradient has no tangential part.
pub fn boundary_distance_from(value: f64, tangential_grad: &DVector<f64>) -> f64 {
    let norm = tangential_grad.norm();
    if norm == 0.0 {
        f64::INFINITY
    } else {
        value.abs() / norm
    }
}

/// Linearized distance within the manifold spanned by `t` to the zero set of `q_k`.
pub fn boundary_distance_estimate(sys: &dyn ConstraintSystem, x: &[f64], t: &TangentBasis, k: usize) -> f64 {
    let g = gradient_matrix_for(sys, &[k], x).column(0).into_owned();
    boundary_distance_from(sys.eval(k, x), &t.coords(&g))
}

/// Unit tangent vector pointing toward the zero set of `q_k`.
pub fn boundary_direction(sys: &dyn ConstraintSystem, x: &[f64], t: &TangentBasis, k: usize) -> Result<DVector<f64>> {
    let g = gradient_matrix_for(sys, &[k], x).column(0).into_owned();
    boundary_direction_from(sys.eval(k, x), t, &g)
}

pub fn boundary_direction_from(value: f64, t: &TangentBasis, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let c = t.coords(grad);
    let norm = c.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Unreachable);
    }
    let sign = if value < 0.0 { 1.0 } else { -1.0 };
    Ok(t.embed(&(c * (sign / norm))))
}

/// `|det(A^T B)|` when square, otherwise the product of the nonzero singular values.
pub fn cross_tangent_pseudodet(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a.tr_mul(b);
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    if m.is_square() {
        m.determinant().abs()
    } else {
        m.singular_values().iter().filter(|&&s| s > SINGULAR_TOL).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::LabelVector;

    struct Quadrics;

    // q0 = |x|^2 - 1 (sphere), q1 = x0 (plane), q2 = x0 - x1 - 0.5
    impl ConstraintSystem for Quadrics {
        fn n_vars(&self) -> usize {
            3
        }
        fn n_fcns(&self) -> usize {
            3
        }
        fn eval(&self, i: usize, x: &[f64]) -> f64 {
            match i {
                0 => x.iter().map(|v| v * v).sum::<f64>() - 1.0,
                1 => x[0],
                _ => x[0] - x[1] - 0.5,
            }
        }
        fn grad(&self, i: usize, x: &[f64], out: &mut [f64]) {
            match i {
                0 => out.iter_mut().zip(x).for_each(|(o, v)| *o = 2.0 * v),
                1 => out[0] = 1.0,
                _ => {
                    out[0] = 1.0;
                    out[1] = -1.0;
                }
            }
        }
    }

    fn l(s: &str) -> LabelVector {
        s.parse().unwrap()
    }

    #[test]
    fn tangent_basis_orthonormal_and_orthogonal_to_gradients() {
        let x = [0.0, 0.6, 0.8];
        let f = Frame::new(&Quadrics, &l("EEN"), &x).unwrap();
        let t = f.tangent.matrix();
        assert_eq!(t.shape(), (3, 1));
        assert!((t.tr_mul(t) - DMatrix::identity(1, 1)).amax() < 1e-12);
        assert!(f.gradients.tr_mul(t).amax() < 1e-12);
        // pdet of [(0,1.2,1.6), (1,0,0)] = 2 * 1
        assert!((f.log_pdet - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn full_and_empty_labels() {
        let x = [0.3, -0.2, 0.9];
        assert_eq!(tangent_basis(&Quadrics, &l("NNN"), &x).unwrap(), TangentBasis::identity(3));
        let t = tangent_basis(&Quadrics, &l("EEE"), &[0.5, 0.0, 0.5f64.sqrt()]).unwrap();
        assert_eq!(t.dim(), 0);
    }

    #[test]
    fn dependent_gradients_are_degenerate() {
        // at x = (1,0,0) the sphere gradient is parallel to the plane gradient
        assert!(matches!(Frame::new(&Quadrics, &l("EEN"), &[1.0, 0.0, 0.0]), Err(Error::Degenerate)));
    }

    #[test]
    fn perp_basis_handles_aligned_direction() {
        let t = TangentBasis::identity(2);
        let p = perp_basis(&t, &DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(p.shape(), (2, 1));
        assert!(p[(0, 0)].abs() < 1e-15);
        assert!((p[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perp_basis_is_orthonormal_and_orthogonal_to_v() {
        let t = tangent_basis(&Quadrics, &l("NNN"), &[0.0; 3]).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.2, 0.4]);
        let p = perp_basis(&t, &v);
        assert_eq!(p.ncols(), 2);
        assert!((p.tr_mul(&p) - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!(p.tr_mul(&v).amax() < 1e-12);
    }

    #[test]
    fn boundary_estimates_on_circle() {
        // circle |x|^2 - 1 seen from (2,0,0) in full space: h = 3 / 4
        let t = TangentBasis::identity(3);
        assert!((boundary_distance_estimate(&Quadrics, &[2.0, 0.0, 0.0], &t, 0) - 0.75).abs() < 1e-15);
        let v = boundary_direction(&Quadrics, &[2.0, 0.0, 0.0], &t, 0).unwrap();
        assert_eq!(v.as_slice(), &[-1.0, 0.0, 0.0]);
        // two-sided plane x0 = 0 seen from negative side points toward +x0
        let v = boundary_direction(&Quadrics, &[-0.5, 0.0, 0.0], &t, 1).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn boundary_unreachable_when_gradient_is_normal() {
        // on the sphere EQ manifold, the plane x1 - ... gradient (1,0,0) at (1,0,0) is normal
        let t = tangent_basis(&Quadrics, &l("ENN"), &[1.0, 0.0, 0.0]).unwrap();
        assert!(boundary_distance_estimate(&Quadrics, &[1.0, 0.0, 0.0], &t, 1).is_infinite());
        assert!(matches!(boundary_direction(&Quadrics, &[1.0, 0.0, 0.0], &t, 1), Err(Error::Unreachable)));
    }

    #[test]
    fn pseudodet_of_identical_and_empty_bases() {
        let t = tangent_basis(&Quadrics, &l("ENN"), &[0.0, 0.6, 0.8]).unwrap();
        assert!((cross_tangent_pseudodet(t.matrix(), t.matrix()) - 1.0).abs() < 1e-12);
        assert_eq!(cross_tangent_pseudodet(&DMatrix::zeros(3, 0), &DMatrix::zeros(3, 0)), 1.0);
    }
}
