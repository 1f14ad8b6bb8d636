//! Numerical consistency checks shared by the `check` command and the tests:
//! finite-difference gradients, tangent-space invariants, and the exact
//! acceptance of gain/lose moves between flat manifolds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constraint::{FixFlag, LabelVector, StratificationSpec, Tag};
use crate::error::Result;
use crate::geometry::{gradient_matrix_for, Frame};
use crate::models::{CustomModel, Ellipsoid, EllipsoidInterior, FnSystem, Model, ParabolaLine, PolymerWall, Polymer6, Trimer};
use crate::proposals::{MoveType, SamplerParams};
use crate::sampler::{ChainState, Sampler};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The built-in models at their reference parameters.
pub fn builtin_models() -> Vec<Box<dyn Model>> {
    vec![
        Box::new(ParabolaLine::new()),
        Box::new(Trimer::new(1.0)),
        Box::new(Polymer6::new(2.885)),
        Box::new(PolymerWall::new(10, 1.0, 0.0).expect("valid")),
        Box::new(Ellipsoid::with_exponential_weights(vec![2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 1.0, 1.0, 1.0], 0.94).expect("valid")),
        Box::new(EllipsoidInterior::new(vec![2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 1.0, 1.0, 1.0], 1.0, 1.0).expect("valid")),
    ]
}

/// States visited by a short chain, every `thin` steps.
pub fn sample_states(model: &dyn Model, n_states: usize, thin: usize, seed: u64) -> Result<Vec<ChainState>> {
    let sampler = Sampler::new(model, model.recommended_params())?;
    let mut state = model.initial_state();
    sampler.prepare(&mut state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_states);
    while out.len() < n_states {
        for _ in 0..thin {
            sampler.step(&mut state, &mut rng);
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Largest scaled difference between analytic and central-difference
/// gradients of every function at `x`.
pub fn gradient_error(model: &dyn Model, x: &[f64]) -> f64 {
    let sys = model.system();
    let all: Vec<usize> = (0..sys.n_fcns()).collect();
    let g = gradient_matrix_for(sys, &all, x);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let orig = xp[j];
        for (col, &k) in all.iter().enumerate() {
            xp[j] = orig + h;
            let fp = sys.eval(k, &xp);
            xp[j] = orig - h;
            let fm = sys.eval(k, &xp);
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((fd - g[(j, col)]).abs() / (1.0 + g[(j, col)].abs()));
        }
        xp[j] = orig;
    }
    worst
}

/// `max(|T^T T - I|, |Q^T T|)` for the state's manifold.
pub fn tangent_error(model: &dyn Model, state: &ChainState) -> Result<f64> {
    let f = Frame::new(model.system(), state.labels(), state.x().as_slice())?;
    let t = f.tangent.matrix();
    let d = t.ncols();
    let ortho = (t.tr_mul(t) - DMatrix::identity(d, d)).amax();
    let normal = if f.gradients.ncols() == 0 || d == 0 { 0.0 } else { f.gradients.tr_mul(t).amax() };
    Ok(ortho.max(normal))
}

/// Two flat manifolds: a random affine `d`-plane and the half of a random
/// affine `(d+1)`-plane on one side of it (or both sides when `two_sided`),
/// embedded in `R^(d + 1 + extra)`. Density 1 on both.
pub fn flat_stratification(d: usize, extra: usize, two_sided: bool, seed: u64) -> Result<CustomModel> {
    let n = d + 1 + extra;
    let k = extra + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let offsets = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    // minimum-norm point on all k planes
    let gram = normals.tr_mul(&normals);
    let x0 = &normals * gram.lu().solve(&offsets).expect("random normals are independent");
    let (a, b) = (normals.clone(), offsets.clone());
    let system = FnSystem::new(
        n,
        k,
        move |i, x| a.column(i).iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - b[i],
        move |i, _x, out| out.copy_from_slice(normals.column(i).as_slice()),
    );
    let lower = LabelVector::new(vec![Tag::Eq; k]);
    let mut flags = vec![FixFlag::Fix; k];
    flags[k - 1] = FixFlag::Vary;
    let mut sides = vec![false; k];
    sides[k - 1] = two_sided;
    let strat = StratificationSpec::vary(lower.clone(), &flags, &sides)?;
    let base = SamplerParams::new(0.7, 0.4, 0.5, 0.35);
    let params = if two_sided { base.with_lambda_gain(2.0 * base.sigma_bdy * base.lambda_lose) } else { base };
    Ok(CustomModel::new(format!("flat-d{d}"), system, strat, x0, lower, params))
}

/// Run `steps` steps on a flat stratification and return the largest
/// `|ratio - 1|` over gain and lose proposals that reached the Metropolis test,
/// with the number of such proposals.
pub fn flat_case_deviation(model: &dyn Model, steps: usize, seed: u64) -> Result<(f64, usize)> {
    let sampler = Sampler::new(model, model.recommended_params())?;
    let mut state = model.initial_state();
    sampler.prepare(&mut state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..steps {
        let out = sampler.step(&mut state, &mut rng);
        if out.movetype != MoveType::Same {
            if let Some(lr) = out.log_ratio {
                worst = worst.max((lr.exp() - 1.0).abs());
                count += 1;
            }
        }
    }
    Ok((worst, count))
}

pub fn run_all() -> Vec<CheckResult> {
    let mut results = Vec::new();
    for model in builtin_models() {
        let name = model.name().to_string();
        match sample_states(model.as_ref(), 50, 20, 11) {
            Ok(states) => {
                let grad = states.iter().map(|s| gradient_error(model.as_ref(), s.x().as_slice())).fold(0.0, f64::max);
                results.push(CheckResult {
                    name: format!("{name}: gradients vs finite differences"),
                    passed: grad < 1e-5,
                    detail: format!("max scaled error {grad:.2e}"),
                });
                let tan = states
                    .iter()
                    .map(|s| tangent_error(model.as_ref(), s).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max);
                results.push(CheckResult {
                    name: format!("{name}: tangent basis orthonormal and normal to gradients"),
                    passed: tan < 1e-10,
                    detail: format!("max error {tan:.2e}"),
                });
            }
            Err(e) => results.push(CheckResult { name: format!("{name}: sampling"), passed: false, detail: e.to_string() }),
        }
    }
    for d in 1..=5 {
        for two_sided in [false, true] {
            let res = flat_stratification(d, 1, two_sided, 100 + d as u64)
                .and_then(|m| flat_case_deviation(&m, 4000, d as u64));
            let name = format!("flat d={d} {}: gain/lose ratio is 1", if two_sided { "two-sided" } else { "one-sided" });
            results.push(match res {
                Ok((dev, n)) => CheckResult { name, passed: dev < 1e-9 && n > 0, detail: format!("{n} proposals, max |ratio-1| {dev:.2e}") },
                Err(e) => CheckResult { name, passed: false, detail: e.to_string() },
            });
        }
    }
    results
}
