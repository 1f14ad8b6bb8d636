//! Surface area of a 10-dimensional ellipsoid, estimated two ways: from
//! nested slices down to a pair of points, and from the solid interior of
//! known volume.
//!
//! `cargo run --release --example ellipsoid_volume -- [steps]`

use stratsample::analysis::volume_estimate;
use stratsample::models::{Ellipsoid, EllipsoidInterior, Model};
use stratsample::sampler::run_chain;
use stratsample::trace::format_value;

fn main() -> stratsample::Result<()> {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000_000);
    let axes = vec![2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 1.0, 1.0, 1.0];

    let nested = Ellipsoid::with_exponential_weights(axes.clone(), 0.94)?;
    let trace = run_chain(&nested, nested.initial_state(), steps, 10, &nested.recommended_params(), 1)?;
    let c = nested.level_weights().to_vec();
    let weight = |k: &str| c[k.parse::<usize>().expect("level") - 1];
    let level = |r: &stratsample::sampler::TraceRecord| format_value(r.observables[0]);
    let a = volume_estimate(&trace.records, level, &weight, "1", ("10", Ellipsoid::anchor_volume()), 10)?;
    println!("nested slices, two-point anchor: {:.1} +- {:.1}", a.value, a.std_error);

    let solid = EllipsoidInterior::new(axes, 1.0, 1.0)?;
    let trace = run_chain(&solid, solid.initial_state(), steps, 10, &solid.recommended_params(), 2)?;
    let b = volume_estimate(&trace.records, |r| r.manifold_id.clone(), &|_| 1.0, "0", ("1", solid.interior_volume()), 10)?;
    println!("solid interior anchor (volume {:.1}): {:.1} +- {:.1}", solid.interior_volume(), b.value, b.std_error);
    println!("difference in combined standard errors: {:.2}", a.z_score(&b, 0.0));
    Ok(())
}
