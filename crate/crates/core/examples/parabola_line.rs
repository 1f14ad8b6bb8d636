//! Uniform sampling of the region between a parabola and a line, together
//! with its boundary arc, boundary segment and two corner points.
//!
//! `cargo run --release --example parabola_line -- [steps]`

use stratsample::analysis::category_fractions;
use stratsample::models::{Model, ParabolaLine};
use stratsample::proposals::SamplerParams;
use stratsample::sampler::run_chain;

fn main() -> stratsample::Result<()> {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let model = ParabolaLine::new();
    let params = SamplerParams::new(0.9, 0.3, 0.6, 0.7).with_lambda_gain(0.21);
    let trace = run_chain(&model, model.initial_state(), steps, 10, &params, 1)?;

    let fractions = category_fractions(&trace.records, |r| r.manifold_id.clone(), 8)?;
    let names = ["interior", "parabola arc", "line segment", "corners"];
    let theory = ParabolaLine::theoretical_fractions();
    println!("{:<14} {:>9} {:>9} {:>9}", "manifold", "sampled", "+-", "exact");
    for (k, name) in names.iter().enumerate() {
        let est = fractions.get(&k.to_string()).copied().unwrap_or(stratsample::analysis::Estimate { value: 0.0, std_error: 0.0 });
        println!("{name:<14} {:>9.5} {:>9.5} {:>9.5}", est.value, est.std_error, theory[k]);
    }

    let corners: Vec<_> = trace.records.iter().filter(|r| r.manifold_id == ParabolaLine::CORNERS.to_string()).collect();
    let right = corners.iter().filter(|r| r.observables[0] > 0.0).count() as f64 / corners.len().max(1) as f64;
    println!("corner split: {:.4} / {:.4}", right, 1.0 - right);
    println!("rejection rates: same {:.3}, gain {:.3}, lose {:.3}",
        trace.summary.rejection_rate(stratsample::proposals::MoveType::Same),
        trace.summary.rejection_rate(stratsample::proposals::MoveType::Gain),
        trace.summary.rejection_rate(stratsample::proposals::MoveType::Lose));
    Ok(())
}
