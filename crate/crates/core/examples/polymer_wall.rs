//! A freely jointed chain whose first sphere is stuck to a wall and whose
//! other spheres may stick to it: fraction on the wall and end-to-end distance
//! as the wall's sticky parameter grows.
//!
//! `cargo run --release --example polymer_wall -- [n_spheres] [steps] [k_bend]`

use stratsample::analysis::binned_error;
use stratsample::models::{Model, PolymerWall};
use stratsample::sampler::run_chain;

fn main() -> stratsample::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let steps: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let k_bend: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.0);
    println!("N = {n}, k_bend = {k_bend}");
    println!("{:>8} {:>8} {:>8} {:>8}", "kappa", "f", "+-", "R");
    for e in -3..=3 {
        let kappa = 5f64.powf(e as f64 / 2.0);
        let model = PolymerWall::new(n, kappa, k_bend)?;
        let trace = run_chain(&model, model.initial_state(), steps, 10, &model.recommended_params(), 11)?;
        let f: Vec<f64> = trace.records.iter().map(|r| r.observables[0]).collect();
        let rg: Vec<f64> = trace.records.iter().map(|r| r.observables[1]).collect();
        let fe = binned_error(&f, 8)?;
        println!("{kappa:>8.4} {:>8.4} {:>8.4} {:>8.4}", fe.value, fe.std_error, binned_error(&rg, 8)?.value);
    }
    Ok(())
}
