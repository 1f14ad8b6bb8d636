//! Choosing sticky parameters for two particle types so that the rigid
//! six-sphere cluster is an octahedron rather than a polytetrahedron. One run
//! at equal sticky parameters is reweighted to every typed combination.
//!
//! `cargo run --release --example octahedron_design -- [steps]`

use stratsample::analysis::{weighted_estimate, Estimate};
use stratsample::models::{Cluster, Model, Polymer6};
use stratsample::sampler::{run_chain, TraceRecord};

const N_AA: usize = 1;
const N_AB: usize = 2;
const N_BB: usize = 3;
const CLUSTER: usize = 4;

/// Octahedron probability among rigid clusters at typed sticky parameters.
fn octahedron_yield(records: &[TraceRecord], kappa0: f64, aa: f64, ab: f64, bb: f64) -> stratsample::Result<Estimate> {
    let weights: Vec<f64> = records
        .iter()
        .map(|r| {
            let rigid = r.observables[CLUSTER] != Cluster::NotRigid.code();
            let w = (aa / kappa0).powf(r.observables[N_AA]) * (ab / kappa0).powf(r.observables[N_AB]) * (bb / kappa0).powf(r.observables[N_BB]);
            if rigid { w } else { 0.0 }
        })
        .collect();
    let octa: Vec<f64> = records.iter().map(|r| (r.observables[CLUSTER] == Cluster::Octahedron.code()) as u8 as f64).collect();
    weighted_estimate(&octa, &weights, 8)
}

fn main() -> stratsample::Result<()> {
    let steps: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let kappa0 = 2.0;
    let model = Polymer6::new(kappa0);
    let trace = run_chain(&model, model.initial_state(), steps, 4, &model.recommended_params(), 5)?;

    let equal = octahedron_yield(&trace.records, kappa0, kappa0, kappa0, kappa0)?;
    println!("equal sticky parameters: octahedron {:.4} +- {:.4}", equal.value, equal.std_error);

    for bb in [0.0, 0.1] {
        println!("\nkappa_BB = {bb}: octahedron yield (rows kappa_AA, columns kappa_AB)");
        let grid = [0.1, 1.0, 10.0, 100.0];
        print!("{:>8}", "");
        for ab in grid {
            print!(" {ab:>8}");
        }
        println!();
        for aa in grid {
            print!("{aa:>8}");
            for ab in grid {
                let y = octahedron_yield(&trace.records, kappa0, aa, ab, bb)?;
                print!(" {:>8.3}", y.value);
            }
            println!();
        }
    }
    Ok(())
}
