//! Emitter population for the full pseudomode set at 10 D and 100 D, tuned to
//! the (8,3) resonance, with the measured vacuum Rabi periods.

use mie_pseudomode::dynamics::{
    assemble_generator, evolve, hybrid_time_grid, linear_time_grid, rabi_period, tune_omega0, write_trajectory_csv,
    LambConvention, TuningPart,
};
use mie_pseudomode::mie::ResonatorSpec;
use mie_pseudomode::poles::{enumerate_poles, PoleWindow};
use mie_pseudomode::pseudomode::{build_pseudomodes, EmitterSpec};

fn main() -> anyhow::Result<()> {
    let spec = ResonatorSpec::silicon_microsphere();
    let poles = enumerate_poles(&spec, PoleWindow::default())?;
    let emitter = EmitterSpec::new(spec.radius, 10.0, poles.find(8, 3).unwrap().omega())?;
    let base = build_pseudomodes(&poles, &emitter)?;
    let resonant = [(8, 3), (5, 4)];
    let out = std::env::temp_dir().join("mie_pseudomode_dynamics");
    std::fs::create_dir_all(&out)?;

    let mut periods = Vec::new();
    for d in [10.0, 100.0] {
        let set = base.with_dipole(d);
        let tuning = tune_omega0(&set, (8, 3), &resonant, LambConvention::default(), TuningPart::Real)?;
        let set = set.with_omega0(tuning.omega0);
        let gen = assemble_generator(&set);
        let scale = 4.63e5 * 10.0 / d;
        let t = linear_time_grid(4.0 * scale, 4000);
        let traj = evolve(&gen, &t)?;
        let period = rabi_period(&traj.t, &traj.population())?;
        periods.push(period);
        println!(
            "d = {d:>5} D  omega0 = {:.12}  shift = {:.3e}{:+.3e}i  ({} iterations)  cond = {:.2e}  period = {period:.5e} um",
            tuning.omega0, tuning.shift.re, tuning.shift.im, tuning.iterations, traj.condition
        );
        let grid = hybrid_time_grid(1e-2, 100.0, 4.0 * scale, 200, 2000)?;
        let traj = evolve(&gen, &grid)?;
        let path = out.join(format!("trajectory_{d}D.csv"));
        write_trajectory_csv(std::fs::File::create(&path)?, &traj, Some(&resonant))?;
        println!("  wrote {}", path.display());
    }
    println!("period ratio 10 D / 100 D = {:.5}", periods[0] / periods[1]);
    Ok(())
}
