//! The stratification sampler: one Metropolis-Hastings step over the union of
//! manifolds, and chain driving.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{manifold_dims, LabelVector, Neighbour, Tag};
use crate::error::{Error, Result};
use crate::geometry::{boundary_direction_from, cross_tangent_pseudodet, gradient_matrix_for, perp_basis, Frame};
use crate::models::Model;
use crate::projection::{nes, nes_l, ProjectionResult};
use crate::proposals::{
    acceptance_probability, gain_normal, move_rates, nearby_lose_neighbours, propose_gain, propose_labels,
    propose_lose, propose_same, reverse_step, tangential_components, MoveDensity, MoveType, SamplerParams,
};

/// Quantities derived from a state that the next step reuses.
#[derive(Clone, Debug)]
struct StateCache {
    frame: Frame,
    gain: Vec<Neighbour>,
    gain_probs: Vec<f64>,
    nearby_lose: Vec<Neighbour>,
}

/// Current point and manifold label of a chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    x: DVector<f64>,
    labels: LabelVector,
    cache: Option<StateCache>,
}

impl ChainState {
    pub fn new(x: DVector<f64>, labels: LabelVector) -> Self {
        ChainState { x, labels, cache: None }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    /// Check that the state lies on its manifold: EQ constraints within `tol`,
    /// IN constraints strictly positive, label present in the stratification.
    pub fn validate(&self, model: &dyn Model, tol: f64) -> Result<()> {
        let sys = model.system();
        if self.x.len() != sys.n_vars() {
            return Err(Error::DimensionMismatch { expected: sys.n_vars(), got: self.x.len() });
        }
        if self.labels.len() != sys.n_fcns() {
            return Err(Error::InvalidState(format!(
                "label has {} tags, system has {} functions",
                self.labels.len(),
                sys.n_fcns()
            )));
        }
        manifold_dims(&self.labels, sys.n_vars())?;
        if !model.stratification().contains(&self.labels) {
            return Err(Error::InvalidState(format!("label {} is not in the stratification", self.labels)));
        }
        for (i, &tag) in self.labels.tags().iter().enumerate() {
            let q = sys.eval(i, self.x.as_slice());
            match tag {
                Tag::Eq if !(q.abs() < tol) => {
                    return Err(Error::InvalidState(format!("equality constraint {i} violated: q = {q:e}")));
                }
                Tag::In if !(q > 0.0) => {
                    return Err(Error::InvalidState(format!("inequality constraint {i} violated: q = {q:e}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepReason {
    Accepted,
    NewtonFail,
    AlphaNegative,
    InequalityViolated,
    MetropolisReject,
    ReverseNewtonFail,
    ReverseMismatch,
    ReverseAlphaNegative,
}

impl StepReason {
    pub const ALL: [StepReason; 8] = [
        StepReason::Accepted,
        StepReason::NewtonFail,
        StepReason::AlphaNegative,
        StepReason::InequalityViolated,
        StepReason::MetropolisReject,
        StepReason::ReverseNewtonFail,
        StepReason::ReverseMismatch,
        StepReason::ReverseAlphaNegative,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub movetype: MoveType,
    pub reason: StepReason,
    /// `min(1, ratio)`, set once both densities were evaluated.
    pub acceptance_prob: Option<f64>,
    /// Unclipped log Metropolis-Hastings ratio.
    pub log_ratio: Option<f64>,
}

impl StepOutcome {
    pub fn accepted(&self) -> bool {
        self.reason == StepReason::Accepted
    }

    fn rejected(movetype: MoveType, reason: StepReason) -> Self {
        StepOutcome { movetype, reason, acceptance_prob: None, log_ratio: None }
    }
}

/// Everything the reverse check needs about an accepted proposal.
struct Proposal {
    movetype: MoveType,
    neighbour: Option<Neighbour>,
    y: DVector<f64>,
    target: LabelVector,
    frame_y: Frame,
    forward: MoveDensity,
}

/// Runs steps of the sampler for one model and parameter set.
pub struct Sampler<'a> {
    model: &'a dyn Model,
    params: SamplerParams,
}

impl<'a> Sampler<'a> {
    pub fn new(model: &'a dyn Model, params: SamplerParams) -> Result<Self> {
        params.validate()?;
        Ok(Sampler { model, params })
    }

    pub fn params(&self) -> &SamplerParams {
        &self.params
    }

    /// Validate a state and fill its cache.
    pub fn prepare(&self, state: &mut ChainState) -> Result<()> {
        state.validate(self.model, self.params.newton.tol)?;
        state.cache = Some(self.build_cache(&state.x, &state.labels)?);
        Ok(())
    }

    fn build_cache(&self, x: &DVector<f64>, labels: &LabelVector) -> Result<StateCache> {
        let frame = Frame::new(self.model.system(), labels, x.as_slice())?;
        self.cache_from_frame(x, labels, frame)
    }

    fn cache_from_frame(&self, x: &DVector<f64>, labels: &LabelVector, frame: Frame) -> Result<StateCache> {
        let strat = self.model.stratification();
        let gain = strat.gain_neighbours(labels);
        let gain_probs = gain.iter().map(|nb| self.model.gain_probability(labels, &nb.labels, &self.params)).collect();
        let lose = strat.lose_neighbours(labels);
        let nearby_lose =
            nearby_lose_neighbours(self.model.system(), &lose, x.as_slice(), &frame.tangent, self.params.sigma_bdy);
        Ok(StateCache { frame, gain, gain_probs, nearby_lose })
    }

    /// One step. On acceptance `state` moves to the proposed point and manifold.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> StepOutcome {
        if state.cache.is_none() {
            match self.build_cache(&state.x, &state.labels) {
                Ok(c) => state.cache = Some(c),
                Err(_) => return StepOutcome::rejected(MoveType::Same, StepReason::NewtonFail),
            }
        }
        let cache = state.cache.as_ref().expect("cache filled above");
        let lp = propose_labels(&state.labels, &cache.gain, &cache.gain_probs, &cache.nearby_lose, &self.params, rng);
        let movetype = lp.movetype;

        if movetype == MoveType::Same && cache.frame.tangent.dim() == 0 {
            return StepOutcome { movetype, reason: StepReason::Accepted, acceptance_prob: Some(1.0), log_ratio: Some(0.0) };
        }

        let proposal = match self.propose(state, cache, lp.neighbour.clone(), lp.target, lp.probability, rng) {
            Ok(p) => p,
            Err(reason) => return StepOutcome::rejected(movetype, reason),
        };

        let y = &proposal.y;
        let cache_y = match self.cache_from_frame(y, &proposal.target, proposal.frame_y.clone()) {
            Ok(c) => c,
            Err(_) => return StepOutcome::rejected(movetype, StepReason::NewtonFail),
        };

        let reverse = match self.reverse_density(state, cache, &proposal, &cache_y) {
            Ok(r) => r,
            Err(reason) => return StepOutcome::rejected(movetype, reason),
        };
        let (log_fx, log_fy) = match (
            self.model.log_density_weight(state.x.as_slice(), &state.labels),
            self.model.log_density_weight(y.as_slice(), &proposal.target),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return StepOutcome::rejected(movetype, StepReason::NewtonFail),
        };
        let log_rev = reverse.as_ref().map_or(f64::NEG_INFINITY, |(d, _)| d.log_density(&self.params));
        let log_ratio = log_fy + log_rev - log_fx - proposal.forward.log_density(&self.params);
        let a = acceptance_probability(log_ratio);
        let decided = |reason| StepOutcome { movetype, reason, acceptance_prob: Some(a), log_ratio: Some(log_ratio) };

        let u: f64 = rng.random();
        if !(u < a) {
            return decided(StepReason::MetropolisReject);
        }
        let (_, rev_v) = reverse.expect("positive acceptance implies a reverse density");
        if let Err(reason) = self.check_reverse(state, &proposal, &cache_y, &rev_v) {
            return decided(reason);
        }

        state.x = proposal.y;
        state.labels = proposal.target;
        state.cache = Some(cache_y);
        decided(StepReason::Accepted)
    }

    /// Tangent step and forward projection.
    fn propose<R: Rng + ?Sized>(
        &self,
        state: &ChainState,
        cache: &StateCache,
        neighbour: Option<Neighbour>,
        target: LabelVector,
        label_prob: f64,
        rng: &mut R,
    ) -> std::result::Result<Proposal, StepReason> {
        let sys = self.model.system();
        let x = &state.x;
        let t0 = &cache.frame.tangent;
        let settings = &self.params.newton;
        let frame_at = |y: &DVector<f64>, labels: &LabelVector| {
            Frame::new(sys, labels, y.as_slice()).map_err(|_| StepReason::NewtonFail)
        };
        let (y, forward, frame_y) = match &neighbour {
            None => {
                let v = propose_same(t0, self.params.sigma, rng);
                let density = MoveDensity::Same { label_prob, v_sq: v.norm_squared(), dim: t0.dim() };
                let eq = state.labels.eq_indices();
                let y = project_or_keep(sys, &(x + &v), &cache.frame.gradients, &eq, settings)?;
                let frame_y = frame_at(&y, &target)?;
                (y, density, frame_y)
            }
            Some(nb) if nb.labels.n_eq() < state.labels.n_eq() => {
                let upper = Frame::new(sys, &nb.labels, x.as_slice()).map_err(|_| StepReason::NewtonFail)?;
                let grad = gradient_matrix_for(sys, &[nb.index], x.as_slice()).column(0).into_owned();
                let step = propose_gain(t0, &upper.tangent, &grad, nb.sidedness, &self.params, rng)
                    .map_err(|_| StepReason::NewtonFail)?;
                let y = project_or_keep(sys, &(x + &step.v), &upper.gradients, &nb.labels.eq_indices(), settings)?;
                let frame_y = frame_at(&y, &nb.labels)?;
                let density = MoveDensity::Gain {
                    label_prob,
                    sidedness: nb.sidedness,
                    v_n: step.v_n,
                    v_t_sq: step.v_t.norm_squared(),
                    dim_lower: t0.dim(),
                    jacobian: cross_tangent_pseudodet(upper.tangent.matrix(), frame_y.tangent.matrix()),
                };
                (y, density, frame_y)
            }
            Some(nb) => {
                let grad = gradient_matrix_for(sys, &[nb.index], x.as_slice()).column(0).into_owned();
                let v_opt = boundary_direction_from(sys.eval(nb.index, x.as_slice()), t0, &grad)
                    .map_err(|_| StepReason::NewtonFail)?;
                let step = propose_lose(t0, &v_opt, self.params.sigma_tan, rng);
                let q_v = with_column(&cache.frame.gradients, &step.v);
                let proj = nes_l(sys, x, &q_v, &state.labels.eq_indices(), nb.index, &step.v, settings)
                    .map_err(|_| StepReason::NewtonFail)?;
                let alpha = proj.alpha.expect("lose solver sets alpha");
                if !(alpha > 0.0) {
                    return Err(StepReason::AlphaNegative);
                }
                let frame_y = frame_at(&proj.y, &nb.labels)?;
                let perp_v = perp_basis(t0, &step.v);
                let density = MoveDensity::Lose {
                    label_prob,
                    r_sq: step.r.norm_squared(),
                    dim_upper: t0.dim(),
                    cos_v_opt: step.v.dot(&v_opt),
                    jacobian: cross_tangent_pseudodet(&perp_v, frame_y.tangent.matrix()),
                    alpha,
                };
                (proj.y, density, frame_y)
            }
        };
        for i in target.in_indices() {
            if !(sys.eval(i, y.as_slice()) > 0.0) {
                return Err(StepReason::InequalityViolated);
            }
        }
        Ok(Proposal { movetype: movetype_of(&state.labels, &neighbour), neighbour, y, target, frame_y, forward })
    }

    /// Density of proposing the way back from `y`, with the reverse tangent step.
    /// `Ok(None)` means that density is zero.
    fn reverse_density(
        &self,
        state: &ChainState,
        cache_x: &StateCache,
        p: &Proposal,
        cache_y: &StateCache,
    ) -> std::result::Result<Option<(MoveDensity, DVector<f64>)>, StepReason> {
        let sys = self.model.system();
        let (x, y) = (&state.x, &p.y);
        let t_y = &cache_y.frame.tangent;
        let rates_y = move_rates(mean_or_zero(&cache_y.gain_probs), cache_y.nearby_lose.len(), &self.params);
        match p.movetype {
            MoveType::Same => {
                let rev = reverse_step(x, y, t_y, MoveType::Same).expect("same reverse always exists");
                let d = MoveDensity::Same { label_prob: rates_y.same, v_sq: rev.v.norm_squared(), dim: t_y.dim() };
                Ok(Some((d, rev.v)))
            }
            MoveType::Gain => {
                // reverse is a Lose from y back onto the current manifold
                let k = p.neighbour.as_ref().expect("gain has a neighbour").index;
                if !cache_y.nearby_lose.iter().any(|nb| nb.index == k && nb.labels == state.labels) {
                    return Ok(None);
                }
                let Some(rev) = reverse_step(x, y, t_y, MoveType::Lose) else {
                    return Ok(None);
                };
                let grad = gradient_matrix_for(sys, &[k], y.as_slice()).column(0).into_owned();
                let v_opt = boundary_direction_from(sys.eval(k, y.as_slice()), t_y, &grad)
                    .map_err(|_| StepReason::NewtonFail)?;
                let perp_opt = perp_basis(t_y, &v_opt);
                let Some(r) = tangential_components(&rev.v, &v_opt, &perp_opt) else {
                    return Ok(None);
                };
                let perp_v = perp_basis(t_y, &rev.v);
                let d = MoveDensity::Lose {
                    label_prob: rates_y.lose / cache_y.nearby_lose.len() as f64,
                    r_sq: r.norm_squared(),
                    dim_upper: t_y.dim(),
                    cos_v_opt: rev.v.dot(&v_opt),
                    jacobian: cross_tangent_pseudodet(&perp_v, cache_x.frame.tangent.matrix()),
                    alpha: rev.alpha.expect("lose reverse has alpha"),
                };
                Ok(Some((d, rev.v)))
            }
            MoveType::Lose => {
                // reverse is a Gain from y back onto the current manifold
                let nb = p.neighbour.as_ref().expect("lose has a neighbour");
                let upper = Frame::new(sys, &state.labels, y.as_slice()).map_err(|_| StepReason::NewtonFail)?;
                let grad = gradient_matrix_for(sys, &[nb.index], y.as_slice()).column(0).into_owned();
                let u_n = gain_normal(&upper.tangent, &grad).map_err(|_| StepReason::NewtonFail)?;
                let rev = reverse_step(x, y, &upper.tangent, MoveType::Gain).expect("gain reverse always exists");
                let v_n = rev.v.dot(&u_n);
                let v_t = t_y.coords(&rev.v);
                let Some(pos) = cache_y.gain.iter().position(|g| g.labels == state.labels) else {
                    return Ok(None);
                };
                let d = MoveDensity::Gain {
                    label_prob: cache_y.gain_probs[pos] / cache_y.gain.len() as f64,
                    sidedness: cache_y.gain[pos].sidedness,
                    v_n,
                    v_t_sq: v_t.norm_squared(),
                    dim_lower: t_y.dim(),
                    jacobian: cross_tangent_pseudodet(upper.tangent.matrix(), cache_x.frame.tangent.matrix()),
                };
                Ok(Some((d, rev.v)))
            }
        }
    }

    /// Project back from `y` with the reverse step and require landing on `x`
    /// with a positive step length.
    fn check_reverse(
        &self,
        state: &ChainState,
        p: &Proposal,
        cache_y: &StateCache,
        rev_v: &DVector<f64>,
    ) -> std::result::Result<(), StepReason> {
        let (x_back, alpha) = self.reverse_projection(
            &p.y,
            &p.target,
            &cache_y.frame,
            &state.labels,
            p.movetype,
            p.neighbour.as_ref(),
            rev_v,
        )?;
        if !((&x_back - &state.x).amax() < self.params.reverse_tol) {
            return Err(StepReason::ReverseMismatch);
        }
        if alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(StepReason::ReverseAlphaNegative);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn reverse_projection(
        &self,
        y: &DVector<f64>,
        y_labels: &LabelVector,
        frame_y: &Frame,
        x_labels: &LabelVector,
        movetype: MoveType,
        neighbour: Option<&Neighbour>,
        rev_v: &DVector<f64>,
    ) -> std::result::Result<(DVector<f64>, Option<f64>), StepReason> {
        let sys = self.model.system();
        let settings = &self.params.newton;
        fn fail<E>(_: E) -> StepReason {
            StepReason::ReverseNewtonFail
        }
        match movetype {
            MoveType::Same => {
                project_or_keep(sys, &(y + rev_v), &frame_y.gradients, &y_labels.eq_indices(), settings)
                    .map(|x| (x, None))
                    .map_err(fail)
            }
            MoveType::Lose => {
                let upper = Frame::new(sys, x_labels, y.as_slice()).map_err(|_| StepReason::ReverseNewtonFail)?;
                project_or_keep(sys, &(y + rev_v), &upper.gradients, &x_labels.eq_indices(), settings)
                    .map(|x| (x, None))
                    .map_err(fail)
            }
            MoveType::Gain => {
                let k = neighbour.expect("gain has a neighbour").index;
                let q_v = with_column(&frame_y.gradients, rev_v);
                let proj = nes_l(sys, y, &q_v, &y_labels.eq_indices(), k, rev_v, settings)
                    .map_err(|_| StepReason::ReverseNewtonFail)?;
                Ok((proj.y, proj.alpha))
            }
        }
    }

    /// Recompute, from scratch, the reverse projection of an accepted step
    /// from `new` back to `old`. Returns the point it lands on.
    pub fn verify_reverse(&self, old: &ChainState, new: &ChainState, movetype: MoveType) -> Result<DVector<f64>> {
        let sys = self.model.system();
        let frame_y = Frame::new(sys, &new.labels, new.x.as_slice())?;
        let t = match movetype {
            MoveType::Lose => Frame::new(sys, &old.labels, new.x.as_slice())?.tangent,
            _ => frame_y.tangent.clone(),
        };
        let rev = reverse_step(&old.x, &new.x, &t, movetype.reversed())
            .ok_or_else(|| Error::InvalidState("zero reverse step".into()))?;
        let neighbour = if movetype == MoveType::Gain {
            self.model
                .stratification()
                .gain_neighbours(&old.labels)
                .into_iter()
                .find(|nb| nb.labels == new.labels)
        } else {
            None
        };
        let (x_back, alpha) = self
            .reverse_projection(&new.x, &new.labels, &frame_y, &old.labels, movetype, neighbour.as_ref(), &rev.v)
            .map_err(|r| Error::InvalidState(format!("reverse projection failed: {r:?}")))?;
        if alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(Error::InvalidState(format!("reverse step length {alpha:?} is not positive")));
        }
        Ok(x_back)
    }
}

fn mean_or_zero(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn movetype_of(current: &LabelVector, neighbour: &Option<Neighbour>) -> MoveType {
    match neighbour {
        None => MoveType::Same,
        Some(nb) if nb.labels.n_eq() < current.n_eq() => MoveType::Gain,
        Some(_) => MoveType::Lose,
    }
}

fn with_column(q: &DMatrix<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let m = q.ncols();
    let mut out = q.clone().insert_column(m, 0.0);
    out.set_column(m, v);
    out
}

fn project_or_keep(
    sys: &dyn crate::constraint::ConstraintSystem,
    z: &DVector<f64>,
    q: &DMatrix<f64>,
    eq: &[usize],
    settings: &crate::projection::NewtonSettings,
) -> std::result::Result<DVector<f64>, StepReason> {
    if eq.is_empty() {
        return Ok(z.clone());
    }
    let res: ProjectionResult = nes(sys, z, q, eq, settings);
    res.map(|p| p.y).map_err(|_| StepReason::NewtonFail)
}

/// Advance a chain one step with a throwaway [`Sampler`].
pub fn sample_strat_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &dyn Model,
    params: &SamplerParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    let sampler = Sampler::new(model, *params)?;
    if state.cache.is_none() {
        sampler.prepare(state)?;
    }
    Ok(sampler.step(state, rng))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub manifold_id: String,
    pub m_l: usize,
    pub observables: Vec<f64>,
}

/// Step counts of one chain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub n_steps: u64,
    pub thin: u64,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Outcome counts per move type and reason.
    pub outcomes: BTreeMap<MoveType, BTreeMap<StepReason, u64>>,
    /// Number of steps that ended on each manifold.
    pub visits: BTreeMap<String, u64>,
}

impl ChainSummary {
    pub fn count(&self, movetype: MoveType, reason: StepReason) -> u64 {
        self.outcomes.get(&movetype).and_then(|m| m.get(&reason)).copied().unwrap_or(0)
    }

    pub fn proposals(&self, movetype: MoveType) -> u64 {
        self.outcomes.get(&movetype).map_or(0, |m| m.values().sum())
    }

    /// Fraction of proposals of `movetype` that were rejected.
    pub fn rejection_rate(&self, movetype: MoveType) -> f64 {
        let n = self.proposals(movetype);
        if n == 0 {
            0.0
        } else {
            1.0 - self.count(movetype, StepReason::Accepted) as f64 / n as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub observable_names: Vec<String>,
    pub records: Vec<TraceRecord>,
    pub summary: ChainSummary,
}

/// Run `n_steps` steps from `init`, recording every `thin`-th state.
pub fn run_chain(
    model: &dyn Model,
    init: ChainState,
    n_steps: u64,
    thin: u64,
    params: &SamplerParams,
    seed: u64,
) -> Result<ChainTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_chain_with_rng(model, init, n_steps, thin, params, &mut rng, seed)
}

pub fn run_chain_with_rng<R: Rng + ?Sized>(
    model: &dyn Model,
    mut state: ChainState,
    n_steps: u64,
    thin: u64,
    params: &SamplerParams,
    rng: &mut R,
    seed: u64,
) -> Result<ChainTrace> {
    if thin == 0 {
        return Err(Error::InvalidParameter("thin must be at least 1".into()));
    }
    let start = Instant::now();
    let sampler = Sampler::new(model, *params)?;
    sampler.prepare(&mut state)?;
    let strat = model.stratification();
    let mut summary = ChainSummary { n_steps, thin, seed, ..Default::default() };
    let mut records = Vec::with_capacity((n_steps / thin) as usize);
    let mut current_id = strat.manifold_id(&state.labels);
    for step in 1..=n_steps {
        let outcome = sampler.step(&mut state, rng);
        *summary.outcomes.entry(outcome.movetype).or_default().entry(outcome.reason).or_insert(0) += 1;
        if outcome.accepted() && outcome.movetype != MoveType::Same {
            current_id = strat.manifold_id(&state.labels);
        }
        *summary.visits.entry(current_id.clone()).or_insert(0) += 1;
        if step % thin == 0 {
            records.push(TraceRecord {
                step,
                manifold_id: current_id.clone(),
                m_l: state.labels.n_eq(),
                observables: model.observables(state.x.as_slice(), &state.labels),
            });
        }
    }
    summary.wall_time_s = start.elapsed().as_secs_f64();
    Ok(ChainTrace { observable_names: model.observable_names(), records, summary })
}
