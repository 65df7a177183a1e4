//! Emitter amplitude from the pseudomodes against a direct simulation of the
//! discretized continuum in a 200 um box (about two minutes).

use mie_pseudomode::config::ScenarioConfig;
use mie_pseudomode::scenario::{oracle_comparison, Model};

fn main() -> anyhow::Result<()> {
    let config = ScenarioConfig::preset(10.0);
    let model = Model::build(&config)?;
    let (report, oracle) = oracle_comparison(&config, &model)?;
    println!("{} box modes, {} ODE steps", report.box_modes, report.ode_steps);
    println!(
        "max relative error of c0 over ct in [{}, {}]: {:.3e}",
        report.validity_window[0], report.validity_window[1], report.max_rel_err_c0
    );
    println!("probability drift in the box: {:.2e}", report.max_probability_error);
    for e in report.per_l_kernel_errors.iter().filter(|e| [1, 5, 8].contains(&e.l)) {
        println!("  l = {:>2}, c tau = {:>4}: kernel rel err {:.2e}", e.l, e.tau, e.rel_err);
    }
    let last = oracle.t.len() - 1;
    println!("|c0|^2 at ct = {}: {:.9}", oracle.t[last], oracle.c0[last].norm_sqr());
    Ok(())
}
