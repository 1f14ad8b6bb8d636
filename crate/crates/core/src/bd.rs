//! Overdamped Brownian dynamics of the six-sphere chain with a short-ranged
//! Morse attraction, used as an independent check of the sticky-limit sampler.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::polymer6::{Polymer6, N_SPHERES};
use crate::models::sticky::SphereSystem;
use crate::sampler::{ChainSummary, ChainTrace, TraceRecord};

const DOF: usize = 3 * N_SPHERES;

/// Pair potential: harmonic springs on the backbone, Morse well elsewhere,
/// both with rest length 1. Energies are in units of `k_B T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseParams {
    /// Well depth `E`.
    pub energy: f64,
    /// Inverse range `rho`.
    pub rho: f64,
    /// Backbone spring constant.
    pub spring: f64,
}

impl MorseParams {
    /// Spring constant `6 rho^2`.
    pub fn new(energy: f64, rho: f64) -> Self {
        MorseParams { energy, rho, spring: 6.0 * rho * rho }
    }

    /// Two spheres count as bonded below this distance.
    pub fn bond_cutoff(&self) -> f64 {
        1.0 + 2.5 / self.rho
    }

    pub fn morse(&self, r: f64) -> f64 {
        let e = (-self.rho * (r - 1.0)).exp();
        self.energy * (1.0 - e) * (1.0 - e) - self.energy
    }

    fn morse_slope(&self, r: f64) -> f64 {
        let e = (-self.rho * (r - 1.0)).exp();
        2.0 * self.energy * self.rho * e * (1.0 - e)
    }

    /// Sticky parameter `int_0^cutoff exp(-U(r)) dr` of the Morse well.
    pub fn sticky_parameter(&self) -> f64 {
        let cutoff = self.bond_cutoff();
        let panels = 400;
        let h = cutoff / panels as f64;
        (0..panels)
            .map(|k| adaptive_simpson(&|r| (-self.morse(r)).exp(), k as f64 * h, (k + 1) as f64 * h, 1e-13, 30))
            .sum()
    }
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Well depth whose sticky parameter equals `kappa`, by bisection.
pub fn energy_for_kappa(kappa: f64, rho: f64) -> Result<f64> {
    let kappa_at = |e: f64| MorseParams::new(e, rho).sticky_parameter();
    if !(kappa > kappa_at(0.0)) {
        return Err(Error::InvalidParameter(format!(
            "kappa {kappa} is below the zero-depth value {:.6}",
            kappa_at(0.0)
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while kappa_at(hi) < kappa {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::InvalidParameter(format!("kappa {kappa} out of reach")));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if kappa_at(mid) < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn is_backbone(i: usize, j: usize) -> bool {
    j == i + 1
}

/// Total potential energy.
pub fn energy(x: &[f64; DOF], p: &MorseParams) -> f64 {
    let mut u = 0.0;
    for i in 0..N_SPHERES {
        for j in i + 1..N_SPHERES {
            let r = dist(x, i, j);
            u += if is_backbone(i, j) { 0.5 * p.spring * (r - 1.0).powi(2) } else { p.morse(r) };
        }
    }
    u
}

fn dist(x: &[f64; DOF], i: usize, j: usize) -> f64 {
    let d = [x[3 * i] - x[3 * j], x[3 * i + 1] - x[3 * j + 1], x[3 * i + 2] - x[3 * j + 2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Gradient of [`energy`].
pub fn energy_gradient(x: &[f64; DOF], p: &MorseParams, out: &mut [f64; DOF]) {
    out.fill(0.0);
    for i in 0..N_SPHERES {
        for j in i + 1..N_SPHERES {
            let d = [x[3 * i] - x[3 * j], x[3 * i + 1] - x[3 * j + 1], x[3 * i + 2] - x[3 * j + 2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let slope = if is_backbone(i, j) { p.spring * (r - 1.0) } else { p.morse_slope(r) };
            let s = slope / r;
            for c in 0..3 {
                out[3 * i + c] += s * d[c];
                out[3 * j + c] -= s * d[c];
            }
        }
    }
}

/// Pairs closer than the bond cutoff; backbone pairs are always included.
pub fn bond_census(x: &[f64; DOF], p: &MorseParams) -> Vec<(usize, usize)> {
    let cutoff = p.bond_cutoff();
    SphereSystem::all_pairs(N_SPHERES)
        .into_iter()
        .filter(|&(i, j)| is_backbone(i, j) || dist(x, i, j) < cutoff)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdConfig {
    pub potential: MorseParams,
    pub dt: f64,
    /// Simulated time per replica, including burn-in.
    pub total_time: f64,
    /// Time between bond censuses.
    pub cadence: f64,
    /// Fraction of `total_time` discarded at the start.
    pub burn_in: f64,
}

impl BdConfig {
    pub fn new(potential: MorseParams, total_time: f64) -> Self {
        BdConfig { potential, dt: 1e-6, total_time, cadence: 0.05, burn_in: 0.1 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.total_time >= 0.0 && self.cadence >= self.dt && (0.0..1.0).contains(&self.burn_in)) {
            return Err(Error::InvalidParameter(format!("invalid Brownian-dynamics settings {self:?}")));
        }
        Ok(())
    }
}

/// Euler-Maruyama integration `x += -grad U dt + sqrt(2 dt) xi` from the
/// zig-zag chain, recording a bond census every `cadence` after burn-in.
pub fn run_bd<R: Rng + ?Sized>(config: &BdConfig, rng: &mut R, seed: u64) -> Result<ChainTrace> {
    config.validate()?;
    let start = Instant::now();
    let p = &config.potential;
    let mut x = [0.0; DOF];
    x.copy_from_slice(Polymer6::zigzag().as_slice());
    let mut grad = [0.0; DOF];
    let noise = (2.0 * config.dt).sqrt();
    let n_steps = (config.total_time / config.dt).round() as u64;
    let every = (config.cadence / config.dt).round().max(1.0) as u64;
    let burn = (config.burn_in * n_steps as f64).round() as u64;
    let mut records = Vec::new();
    let mut visits = BTreeMap::new();
    for step in 1..=n_steps {
        energy_gradient(&x, p, &mut grad);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            let z: f64 = rng.sample(StandardNormal);
            *xi += -gi * config.dt + noise * z;
        }
        if step > burn && step % every == 0 {
            let edges = bond_census(&x, p);
            let id = Polymer6::label_for_contacts(&edges).canonical();
            *visits.entry(id.clone()).or_insert(0) += 1;
            records.push(TraceRecord {
                step,
                manifold_id: id,
                m_l: edges.len(),
                observables: Polymer6::contact_observables(&edges),
            });
        }
        if !x[0].is_finite() {
            return Err(Error::InvalidState(format!("Brownian dynamics blew up at step {step}")));
        }
    }
    let summary = ChainSummary {
        n_steps,
        thin: every,
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        outcomes: BTreeMap::new(),
        visits,
    };
    Ok(ChainTrace { observable_names: Polymer6::contact_observable_names(), records, summary })
}

/// Independent replicas run on scoped threads, records concatenated in replica order.
pub fn run_bd_replicas(config: &BdConfig, replicas: usize, seed: u64) -> Result<Vec<ChainTrace>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..replicas)
            .map(|k| {
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    run_bd(config, &mut rng, seed)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("replica thread panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_depth_sticky_parameter_is_cutoff() {
        let p = MorseParams::new(0.0, 60.0);
        assert!((p.sticky_parameter() - (1.0 + 2.5 / 60.0)).abs() < 1e-10);
    }

    #[test]
    fn simpson_integrates_polynomials_and_gaussians() {
        assert!((adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12, 20) - 4.0).abs() < 1e-12);
        let g = adaptive_simpson(&|x| (-x * x).exp(), -8.0, 8.0, 1e-12, 30);
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn calibrated_energy_reproduces_kappa() {
        let e = energy_for_kappa(2.885, 60.0).unwrap();
        assert!(e > 4.0 && e < 7.0, "{e}");
        assert!((MorseParams::new(e, 60.0).sticky_parameter() - 2.885).abs() < 1e-9);
        assert!(energy_for_kappa(0.5, 60.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = MorseParams::new(5.0, 60.0);
        let mut x = [0.0; DOF];
        x.copy_from_slice(Polymer6::zigzag().as_slice());
        // bring spheres 0 and 2 into the Morse range
        x[6] -= 0.72;
        let mut g = [0.0; DOF];
        energy_gradient(&x, &p, &mut g);
        for k in 0..DOF {
            let h = 1e-7;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (energy(&xp, &p) - energy(&xm, &p)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-4 * (1.0 + g[k].abs()), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn short_run_keeps_backbone_intact() {
        let cfg = BdConfig { cadence: 0.001, ..BdConfig::new(MorseParams::new(5.0, 60.0), 0.01) };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = run_bd(&cfg, &mut rng, 5).unwrap();
        assert_eq!(t.records.len(), 9);
        assert!(t.records.iter().all(|r| r.m_l >= 5));
    }
}
