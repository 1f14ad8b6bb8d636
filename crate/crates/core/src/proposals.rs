//! Label proposals, tangent-step proposals and their densities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintSystem, LabelVector, Neighbour, Sidedness};
use crate::error::{Error, Result};
use crate::geometry::{boundary_distance_from, gradient_matrix_for, perp_basis, TangentBasis};
use crate::projection::NewtonSettings;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    /// Standard deviation of same-manifold steps.
    pub sigma: f64,
    /// Range of the normal component of gain steps, and the nearby threshold for lose moves.
    pub sigma_bdy: f64,
    /// Relative scale of tangential components in gain and lose steps.
    pub sigma_tan: f64,
    pub lambda_lose: f64,
    pub lambda_gain: f64,
    pub newton: NewtonSettings,
    /// Maximum-norm tolerance for the reverse projection to land back on the start.
    pub reverse_tol: f64,
}

impl SamplerParams {
    /// `lambda_gain` defaults to `sigma_bdy * lambda_lose`.
    pub fn new(sigma: f64, sigma_bdy: f64, sigma_tan: f64, lambda_lose: f64) -> Self {
        SamplerParams {
            sigma,
            sigma_bdy,
            sigma_tan,
            lambda_lose,
            lambda_gain: sigma_bdy * lambda_lose,
            newton: NewtonSettings::default(),
            reverse_tol: 1e-7,
        }
    }

    pub fn with_lambda_gain(mut self, lambda_gain: f64) -> Self {
        self.lambda_gain = lambda_gain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let scales = [("sigma", self.sigma), ("sigma_bdy", self.sigma_bdy), ("sigma_tan", self.sigma_tan)];
        for (name, s) in scales {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {s}")));
            }
        }
        for (name, p) in [("lambda_gain", self.lambda_gain), ("lambda_lose", self.lambda_lose)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        if self.lambda_gain + self.lambda_lose >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda_gain + lambda_lose must be < 1, got {}",
                self.lambda_gain + self.lambda_lose
            )));
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 || !(self.reverse_tol > 0.0) {
            return Err(Error::InvalidParameter("Newton settings must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveType {
    Same,
    Gain,
    Lose,
}

impl MoveType {
    pub fn reversed(self) -> MoveType {
        match self {
            MoveType::Same => MoveType::Same,
            MoveType::Gain => MoveType::Lose,
            MoveType::Lose => MoveType::Gain,
        }
    }
}

/// Probabilities of choosing each move type from a given state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveRates {
    pub same: f64,
    pub gain: f64,
    pub lose: f64,
}

/// Move-type probabilities. `gain_rate` is the mean of the per-neighbour gain
/// probabilities (or 0 when there are none).
pub fn move_rates(gain_rate: f64, n_nearby_lose: usize, params: &SamplerParams) -> MoveRates {
    let lose = if n_nearby_lose > 0 { params.lambda_lose } else { 0.0 };
    MoveRates { same: 1.0 - gain_rate - lose, gain: gain_rate, lose }
}

#[derive(Clone, Debug)]
pub struct LabelProposal {
    pub movetype: MoveType,
    pub target: LabelVector,
    /// The chosen neighbour for gain and lose moves.
    pub neighbour: Option<Neighbour>,
    pub rates: MoveRates,
    /// Probability of proposing exactly this target label.
    pub probability: f64,
}

/// Lose neighbours whose boundary is within `sigma_bdy` by the linearized estimate.
pub fn nearby_lose_neighbours(
    sys: &dyn ConstraintSystem,
    lose: &[Neighbour],
    x: &[f64],
    t: &TangentBasis,
    sigma_bdy: f64,
) -> Vec<Neighbour> {
    if t.dim() == 0 {
        return Vec::new();
    }
    lose.iter()
        .filter(|nb| {
            let g = gradient_matrix_for(sys, &[nb.index], x).column(0).into_owned();
            boundary_distance_from(sys.eval(nb.index, x), &t.coords(&g)) < sigma_bdy
        })
        .cloned()
        .collect()
}

/// Choose Same/Gain/Lose with one uniform draw, then a target uniformly among
/// gain neighbours or nearby lose neighbours (weighted by `gain_probs` when
/// they differ).
pub fn propose_labels<R: Rng + ?Sized>(
    current: &LabelVector,
    gain: &[Neighbour],
    gain_probs: &[f64],
    nearby_lose: &[Neighbour],
    params: &SamplerParams,
    rng: &mut R,
) -> LabelProposal {
    let gain_rate = mean_or_zero(gain_probs);
    let rates = move_rates(gain_rate, nearby_lose.len(), params);
    let u: f64 = rng.random();
    if u < rates.same {
        LabelProposal {
            movetype: MoveType::Same,
            target: current.clone(),
            neighbour: None,
            rates,
            probability: rates.same,
        }
    } else if u < rates.same + rates.gain {
        let k = pick_weighted(gain_probs, rng);
        LabelProposal {
            movetype: MoveType::Gain,
            target: gain[k].labels.clone(),
            neighbour: Some(gain[k].clone()),
            rates,
            probability: gain_probs[k] / gain.len() as f64,
        }
    } else {
        let k = rng.random_range(0..nearby_lose.len());
        LabelProposal {
            movetype: MoveType::Lose,
            target: nearby_lose[k].labels.clone(),
            neighbour: Some(nearby_lose[k].clone()),
            rates,
            probability: rates.lose / nearby_lose.len() as f64,
        }
    }
}

fn mean_or_zero(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    if weights.windows(2).all(|w| w[0] == w[1]) {
        return rng.random_range(0..weights.len());
    }
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

fn normals<R: Rng + ?Sized>(len: usize, scale: f64, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)))
}

/// Isotropic Gaussian step in the tangent space.
pub fn propose_same<R: Rng + ?Sized>(t: &TangentBasis, sigma: f64, rng: &mut R) -> DVector<f64> {
    t.embed(&normals(t.dim(), sigma, rng))
}

#[derive(Clone, Debug)]
pub struct GainStep {
    pub v: DVector<f64>,
    /// Unit normal in the higher-dimensional tangent space.
    pub u_n: DVector<f64>,
    pub v_n: f64,
    /// Coordinates in the lower-dimensional tangent basis.
    pub v_t: DVector<f64>,
}

/// `lower` is the tangent space of the current manifold, `upper` that of the
/// target manifold at the same point, `grad` the gradient of the dropped constraint.
pub fn propose_gain<R: Rng + ?Sized>(
    lower: &TangentBasis,
    upper: &TangentBasis,
    grad: &DVector<f64>,
    sidedness: Sidedness,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<GainStep> {
    let u_n = gain_normal(upper, grad)?;
    let u: f64 = rng.random();
    let v_n = match sidedness {
        Sidedness::OneSided => params.sigma_bdy * u,
        Sidedness::TwoSided => params.sigma_bdy * (2.0 * u - 1.0),
    };
    let v_t = normals(lower.dim(), params.sigma_tan * v_n.abs(), rng);
    let v = &u_n * v_n + lower.embed(&v_t);
    Ok(GainStep { v, u_n, v_n, v_t })
}

/// Unit vector along the projection of `grad` onto `upper`.
pub fn gain_normal(upper: &TangentBasis, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let c = upper.coords(grad);
    let norm = c.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Unreachable);
    }
    Ok(upper.embed(&(c / norm)))
}

#[derive(Clone, Debug)]
pub struct LoseStep {
    /// Unit direction.
    pub v: DVector<f64>,
    /// Tangential perturbation in the basis orthogonal to `v_opt`.
    pub r: DVector<f64>,
    pub perp: DMatrix<f64>,
}

pub fn propose_lose<R: Rng + ?Sized>(
    t: &TangentBasis,
    v_opt: &DVector<f64>,
    sigma_tan: f64,
    rng: &mut R,
) -> LoseStep {
    let perp = perp_basis(t, v_opt);
    let r = normals(perp.ncols(), sigma_tan, rng);
    let w = v_opt + &perp * &r;
    let v = &w / w.norm();
    LoseStep { v, r, perp }
}

/// Inverse of the lose parametrization: `r = P^T v / (v . v_opt)`, or `None`
/// when `v` points away from `v_opt`.
pub fn tangential_components(v: &DVector<f64>, v_opt: &DVector<f64>, perp: &DMatrix<f64>) -> Option<DVector<f64>> {
    let c = v.dot(v_opt);
    if c > 0.0 {
        Some(perp.tr_mul(v) / c)
    } else {
        None
    }
}

/// Reverse tangent step from `y` back toward `x`, expressed in `t`.
#[derive(Clone, Debug)]
pub struct ReverseStep {
    pub v: DVector<f64>,
    /// Length of the unnormalized step, only for reversed gain moves (lose steps).
    pub alpha: Option<f64>,
}

/// `t` is the tangent space at `y` in which the reverse step lives: the
/// current manifold for Same, the higher-dimensional one when the reverse is
/// a Gain, and the manifold of `y` when the reverse is a Lose.
pub fn reverse_step(x: &DVector<f64>, y: &DVector<f64>, t: &TangentBasis, reversed: MoveType) -> Option<ReverseStep> {
    let v = t.project(&(x - y));
    match reversed {
        MoveType::Same | MoveType::Gain => Some(ReverseStep { v, alpha: None }),
        MoveType::Lose => {
            let alpha = v.norm();
            if alpha > 0.0 {
                Some(ReverseStep { v: v / alpha, alpha: Some(alpha) })
            } else {
                None
            }
        }
    }
}

/// Ingredients of the proposal density of one tangent step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MoveDensity {
    Same {
        label_prob: f64,
        v_sq: f64,
        dim: usize,
    },
    Gain {
        label_prob: f64,
        sidedness: Sidedness,
        v_n: f64,
        v_t_sq: f64,
        /// Dimension of the lower manifold (length of `v_t`).
        dim_lower: usize,
        /// `|T_{x,J}^T T_{y,J}|`
        jacobian: f64,
    },
    Lose {
        label_prob: f64,
        r_sq: f64,
        /// Dimension of the higher manifold the move starts on.
        dim_upper: usize,
        /// `v . v_opt`
        cos_v_opt: f64,
        /// `|T_{x,I,v}^T T_{y,J}|`
        jacobian: f64,
        alpha: f64,
    },
}

fn log_gauss(sq_norm: f64, dim: usize, scale: f64) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    -0.5 * dim as f64 * (2.0 * PI * scale * scale).ln() - sq_norm / (2.0 * scale * scale)
}

impl MoveDensity {
    pub fn log_density(&self, params: &SamplerParams) -> f64 {
        match *self {
            MoveDensity::Same { label_prob, v_sq, dim } => label_prob.ln() + log_gauss(v_sq, dim, params.sigma),
            MoveDensity::Gain { label_prob, sidedness, v_n, v_t_sq, dim_lower, jacobian } => {
                let normal = match sidedness {
                    Sidedness::OneSided if (0.0..=params.sigma_bdy).contains(&v_n) => -params.sigma_bdy.ln(),
                    Sidedness::TwoSided if v_n.abs() <= params.sigma_bdy => -(2.0 * params.sigma_bdy).ln(),
                    _ => return f64::NEG_INFINITY,
                };
                label_prob.ln() + normal + log_gauss(v_t_sq, dim_lower, params.sigma_tan * v_n.abs()) + jacobian.ln()
            }
            MoveDensity::Lose { label_prob, r_sq, dim_upper, cos_v_opt, jacobian, alpha } => {
                if !(cos_v_opt > 0.0) {
                    return f64::NEG_INFINITY;
                }
                let dim_lower = dim_upper - 1;
                label_prob.ln() + log_gauss(r_sq, dim_lower, params.sigma_tan) - dim_upper as f64 * cos_v_opt.ln()
                    + jacobian.ln()
                    - dim_lower as f64 * alpha.ln()
            }
        }
    }

    pub fn density(&self, params: &SamplerParams) -> f64 {
        self.log_density(params).exp()
    }
}

/// `min(1, exp(log_ratio))`, with NaN treated as a certain rejection.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.exp().min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> SamplerParams {
        SamplerParams::new(0.9, 0.3, 0.6, 0.7)
    }

    #[test]
    fn default_lambda_gain_is_sigma_bdy_times_lambda_lose() {
        let p = params();
        assert!((p.lambda_gain - 0.21).abs() < 1e-15);
        assert!(p.validate().is_ok());
        assert!(SamplerParams::new(0.9, 0.3, 0.6, 0.7).with_lambda_gain(0.4).validate().is_err());
        assert!(SamplerParams::new(-1.0, 0.3, 0.6, 0.7).validate().is_err());
    }

    #[test]
    fn rates_drop_unavailable_moves() {
        let p = params();
        let r = move_rates(0.0, 0, &p);
        assert_eq!((r.same, r.gain, r.lose), (1.0, 0.0, 0.0));
        let r = move_rates(p.lambda_gain, 2, &p);
        assert!((r.same - 0.09).abs() < 1e-12);
    }

    #[test]
    fn label_probabilities_sum_to_one() {
        let cur: LabelVector = "EE".parse().unwrap();
        let gain = vec![
            Neighbour { labels: "IE".parse().unwrap(), index: 0, sidedness: Sidedness::OneSided },
            Neighbour { labels: "EI".parse().unwrap(), index: 1, sidedness: Sidedness::OneSided },
        ];
        let p = params();
        let probs = vec![p.lambda_gain; 2];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        let n = 20000;
        for _ in 0..n {
            let lp = propose_labels(&cur, &gain, &probs, &[], &p, &mut rng);
            counts[lp.movetype as usize] += 1;
            let total = lp.rates.same + lp.rates.gain + lp.rates.lose;
            assert!((total - 1.0).abs() < 1e-15);
        }
        assert_eq!(counts[2], 0);
        let frac_gain = counts[1] as f64 / n as f64;
        assert!((frac_gain - 0.21).abs() < 0.015);
    }

    #[test]
    fn lose_components_round_trip() {
        let t = TangentBasis::identity(4);
        let v_opt = DVector::from_vec(vec![0.0, 0.6, 0.0, -0.8]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = propose_lose(&t, &v_opt, 0.4, &mut rng);
        assert!((step.v.norm() - 1.0).abs() < 1e-14);
        let r = tangential_components(&step.v, &v_opt, &step.perp).unwrap();
        assert!((r - &step.r).amax() < 1e-12);
        assert!(tangential_components(&(-&step.v), &v_opt, &step.perp).is_none());
    }

    #[test]
    fn gain_density_is_zero_outside_normal_range() {
        let p = params();
        let d = MoveDensity::Gain {
            label_prob: 0.1,
            sidedness: Sidedness::OneSided,
            v_n: -0.01,
            v_t_sq: 0.0,
            dim_lower: 0,
            jacobian: 1.0,
        };
        assert_eq!(d.density(&p), 0.0);
        let d = MoveDensity::Gain {
            label_prob: 0.1,
            sidedness: Sidedness::OneSided,
            v_n: 0.1,
            v_t_sq: 0.0,
            dim_lower: 0,
            jacobian: 1.0,
        };
        assert!((d.density(&p) - 0.1 / 0.3).abs() < 1e-14);
    }

    #[test]
    fn acceptance_probability_clips() {
        assert_eq!(acceptance_probability(0.5), 1.0);
        assert!((acceptance_probability(-1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(acceptance_probability(f64::NAN), 0.0);
        assert_eq!(acceptance_probability(f64::NEG_INFINITY), 0.0);
    }
}
