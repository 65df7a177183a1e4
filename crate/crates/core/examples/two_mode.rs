//! The reduced model with the (8,3) and (5,4) modes and the Lamb shift of the
//! rest, against the full 614-dimensional solution at 10 D and 100 D.

use mie_pseudomode::config::ScenarioConfig;
use mie_pseudomode::dynamics::{assemble_generator, evolve, rabi_period, two_mode_approx};
use mie_pseudomode::poles::enumerate_poles;
use mie_pseudomode::scenario::{two_mode_deviation, Model};

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig::preset(10.0);
    let poles = enumerate_poles(&base.resonator, base.window)?;
    for d in [10.0, 100.0] {
        let mut config = base.clone();
        config.emitter.dipole_debye = d;
        let model = Model::from_poles(&config, poles.clone())?;
        let t = model.time_grid(&config)?;
        let full = evolve(&assemble_generator(&model.set), &t)?;
        let resonant = &config.dynamics.resonant;
        let reduced = two_mode_approx(&model.set, resonant, &t, config.dynamics.lamb_convention)?;
        let (dev, n) = two_mode_deviation(&full, &reduced, resonant);
        println!(
            "d = {d:>5} D: periods full {:.4e}, two-mode {:.4e}; max deviation {dev:.2e} over {n} points",
            rabi_period(&full.t, &full.population())?,
            rabi_period(&reduced.t, &reduced.population())?
        );
    }
    Ok(())
}
