//! Six sticky spheres on a permanent backbone: probability of each bond count
//! at one sticky parameter, then at others by reweighting the same trace.
//!
//! `cargo run --release --example polymer_bonds -- [steps]`

use stratsample::analysis::reweight_categories;
use stratsample::models::{Model, Polymer6};
use stratsample::sampler::run_chain;
use stratsample::trace::format_value;

fn main() -> stratsample::Result<()> {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let kappa0 = 2.0;
    let model = Polymer6::new(kappa0);
    let trace = run_chain(&model, model.initial_state(), steps, 4, &model.recommended_params(), 3)?;
    println!("{} records at kappa0 = {kappa0}", trace.records.len());

    let kappas = [0.5, 1.0, 2.0, 2.885, 5.0, 10.0];
    print!("{:>4}", "m");
    for k in kappas {
        print!(" {:>9}", format!("k={k}"));
    }
    println!();
    // p_m(kappa) is proportional to p_m(kappa0) (kappa/kappa0)^(m-5)
    let tables: Vec<_> = kappas
        .iter()
        .map(|&k| reweight_categories(&trace.records, |r| (k / kappa0).powf(r.observables[0]), |r| format_value(r.observables[0]), 8))
        .collect::<stratsample::Result<_>>()?;
    for m in 5..=12 {
        print!("{m:>4}");
        for t in &tables {
            print!(" {:>9.5}", t.get(&m.to_string()).map_or(0.0, |e| e.value));
        }
        println!();
    }
    Ok(())
}
