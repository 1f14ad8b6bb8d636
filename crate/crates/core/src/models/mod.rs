//! Model interface and the built-in models.

use std::sync::Arc;

use nalgebra::DVector;

use crate::constraint::{ConstraintSystem, LabelVector, StratificationSpec};
use crate::error::Result;
use crate::proposals::SamplerParams;
use crate::sampler::ChainState;

pub mod ellipsoid;
pub mod parabola;
pub mod polymer6;
pub mod sticky;
pub mod trimer;
pub mod wall;

pub use ellipsoid::{Ellipsoid, EllipsoidInterior};
pub use parabola::ParabolaLine;
pub use polymer6::{Cluster, Polymer6, StickyKappas};
pub use trimer::Trimer;
pub use wall::PolymerWall;

/// A constraint system, its stratification, and a target density on each manifold.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    fn system(&self) -> &dyn ConstraintSystem;
    fn stratification(&self) -> &StratificationSpec;

    /// Log of the unnormalized density `f_L(x)` with respect to the natural
    /// surface measure of manifold `labels`.
    fn log_density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64>;

    fn density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64> {
        self.log_density_weight(x, labels).map(f64::exp)
    }

    fn observable_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn observables(&self, _x: &[f64], _labels: &LabelVector) -> Vec<f64> {
        Vec::new()
    }

    fn initial_state(&self) -> ChainState;

    fn recommended_params(&self) -> SamplerParams;

    /// Probability of proposing a gain move from `from` to `to`, given it is chosen
    /// uniformly among the gain neighbours. Models that know their density ratios
    /// can tune this per pair; it must keep `gain + lambda_lose < 1`.
    fn gain_probability(&self, _from: &LabelVector, _to: &LabelVector, params: &SamplerParams) -> f64 {
        params.lambda_gain
    }

    /// Model parameters recorded in run summaries.
    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "name": self.name() })
    }
}

type EvalFn = dyn Fn(usize, &[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(usize, &[f64], &mut [f64]) + Send + Sync;
type WeightFn = dyn Fn(&[f64], &LabelVector) -> f64 + Send + Sync;
type ObservableFn = dyn Fn(&[f64], &LabelVector) -> Vec<f64> + Send + Sync;

/// Constraint system backed by closures.
#[derive(Clone)]
pub struct FnSystem {
    n_vars: usize,
    n_fcns: usize,
    eval: Arc<EvalFn>,
    grad: Arc<GradFn>,
}

impl FnSystem {
    pub fn new(
        n_vars: usize,
        n_fcns: usize,
        eval: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(usize, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        FnSystem { n_vars, n_fcns, eval: Arc::new(eval), grad: Arc::new(grad) }
    }
}

impl ConstraintSystem for FnSystem {
    fn n_vars(&self) -> usize {
        self.n_vars
    }
    fn n_fcns(&self) -> usize {
        self.n_fcns
    }
    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        (self.eval)(i, x)
    }
    fn grad(&self, i: usize, x: &[f64], out: &mut [f64]) {
        (self.grad)(i, x, out)
    }
}

/// A model assembled from user-supplied parts.
#[derive(Clone)]
pub struct CustomModel {
    name: String,
    system: FnSystem,
    strat: StratificationSpec,
    log_weight: Arc<WeightFn>,
    observable_names: Vec<String>,
    observables: Arc<ObservableFn>,
    initial: (DVector<f64>, LabelVector),
    params: SamplerParams,
}

impl CustomModel {
    /// Density weight 1 on every manifold until [`CustomModel::with_log_weight`] is called.
    pub fn new(
        name: impl Into<String>,
        system: FnSystem,
        strat: StratificationSpec,
        initial_x: DVector<f64>,
        initial_labels: LabelVector,
        params: SamplerParams,
    ) -> Self {
        CustomModel {
            name: name.into(),
            system,
            strat,
            log_weight: Arc::new(|_, _| 0.0),
            observable_names: Vec::new(),
            observables: Arc::new(|_, _| Vec::new()),
            initial: (initial_x, initial_labels),
            params,
        }
    }

    pub fn with_log_weight(mut self, f: impl Fn(&[f64], &LabelVector) -> f64 + Send + Sync + 'static) -> Self {
        self.log_weight = Arc::new(f);
        self
    }

    pub fn with_observables(
        mut self,
        names: Vec<String>,
        f: impl Fn(&[f64], &LabelVector) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.observable_names = names;
        self.observables = Arc::new(f);
        self
    }
}

impl Model for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn system(&self) -> &dyn ConstraintSystem {
        &self.system
    }
    fn stratification(&self) -> &StratificationSpec {
        &self.strat
    }
    fn log_density_weight(&self, x: &[f64], labels: &LabelVector) -> Result<f64> {
        Ok((self.log_weight)(x, labels))
    }
    fn observable_names(&self) -> Vec<String> {
        self.observable_names.clone()
    }
    fn observables(&self, x: &[f64], labels: &LabelVector) -> Vec<f64> {
        (self.observables)(x, labels)
    }
    fn initial_state(&self) -> ChainState {
        ChainState::new(self.initial.0.clone(), self.initial.1.clone())
    }
    fn recommended_params(&self) -> SamplerParams {
        self.params
    }
}
