//! Defining a model from closures: the unit disk together with its boundary
//! circle, where the circle carries density weight `c` relative to the disk.
//! The fraction of time on the circle should be `2 pi c / (pi + 2 pi c)`.
//!
//! `cargo run --release --example custom_model -- [c]`

use nalgebra::DVector;
use stratsample::constraint::{LabelVector, StratificationSpec, Tag};
use stratsample::models::{CustomModel, FnSystem, Model};
use stratsample::proposals::SamplerParams;
use stratsample::sampler::run_chain;

fn main() -> stratsample::Result<()> {
    let c: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);

    // q(x) = 1 - |x|^2 is positive inside the disk
    let system = FnSystem::new(
        2,
        1,
        |_, x| 1.0 - x[0] * x[0] - x[1] * x[1],
        |_, x, g| {
            g[0] = -2.0 * x[0];
            g[1] = -2.0 * x[1];
        },
    );
    let circle = LabelVector::new(vec![Tag::Eq]);
    let disk = LabelVector::new(vec![Tag::In]);
    let strat = StratificationSpec::explicit(1, vec![disk.clone(), circle])?;
    let model = CustomModel::new("disk", system, strat, DVector::from_vec(vec![0.0, 0.0]), disk, SamplerParams::new(0.5, 0.3, 0.3, 0.5))
        .with_log_weight(move |_, labels| if labels.n_eq() == 1 { c.ln() } else { 0.0 })
        .with_observables(vec!["r".into()], |x, _| vec![x[0].hypot(x[1])]);

    let trace = run_chain(&model, model.initial_state(), 500_000, 10, &model.recommended_params(), 1)?;
    let on_circle = trace.records.iter().filter(|r| r.m_l == 1).count() as f64 / trace.records.len() as f64;
    let exact = 2.0 * c / (1.0 + 2.0 * c);
    println!("fraction on the circle: {on_circle:.4} (exact {exact:.4})");
    Ok(())
}
