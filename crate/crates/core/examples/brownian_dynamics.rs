//! Brownian dynamics of the six-sphere chain with a narrow Morse well,
//! compared with the sticky-limit sampler at the matching sticky parameter.
//!
//! `cargo run --release --example brownian_dynamics -- [time] [kappa]`

use stratsample::analysis::category_fractions;
use stratsample::bd::{energy_for_kappa, run_bd_replicas, BdConfig, MorseParams};
use stratsample::models::{Model, Polymer6};
use stratsample::sampler::run_chain;
use stratsample::trace::format_value;

fn main() -> stratsample::Result<()> {
    let mut args = std::env::args().skip(1);
    let time: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(50.0);
    let kappa: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2.885);
    let rho = 60.0;
    let energy = energy_for_kappa(kappa, rho)?;
    println!("well depth {energy:.4} gives kappa {kappa}");

    let config = BdConfig::new(MorseParams::new(energy, rho), time);
    let bd = run_bd_replicas(&config, 1, 1)?.remove(0);
    let model = Polymer6::new(kappa);
    let mc = run_chain(&model, model.initial_state(), 500_000, 10, &model.recommended_params(), 1)?;

    let bonds = |r: &stratsample::sampler::TraceRecord| format_value(r.observables[0]);
    let p_bd = category_fractions(&bd.records, bonds, 8)?;
    let p_mc = category_fractions(&mc.records, bonds, 8)?;
    println!("{:>3} {:>16} {:>16}", "m", "sampler", "Brownian");
    for m in 5..=12 {
        let show = |t: &std::collections::BTreeMap<String, stratsample::analysis::Estimate>| {
            t.get(&m.to_string()).map_or("-".to_string(), |e| format!("{:.4} +- {:.4}", e.value, e.std_error))
        };
        println!("{m:>3} {:>16} {:>16}", show(&p_mc), show(&p_bd));
    }
    Ok(())
}
