//! `|v|^2` of the (5,4) and (8,3) pseudomodes over 0 < r < 1.5 um, and the
//! growth of the outgoing branch away from the sphere.

use std::f64::consts::PI;

use mie_pseudomode::field::{pseudomode_portrait, write_portrait_csv};
use mie_pseudomode::mie::ResonatorSpec;
use mie_pseudomode::poles::{enumerate_poles, PoleWindow};
use mie_pseudomode::pseudomode::{build_pseudomodes, pseudomode_radial, EmitterSpec};

fn main() -> anyhow::Result<()> {
    let spec = ResonatorSpec::silicon_microsphere();
    let poles = enumerate_poles(&spec, PoleWindow::default())?;
    let emitter = EmitterSpec::new(spec.radius, 10.0, poles.find(8, 3).unwrap().omega())?;
    let set = build_pseudomodes(&poles, &emitter)?;
    let r: Vec<f64> = (1..=150).map(|i| 0.01 * i as f64).collect();
    let theta: Vec<f64> = (0..=90).map(|i| PI * i as f64 / 90.0).collect();
    for label in [(5, 4), (8, 3)] {
        let rows = pseudomode_portrait(&set, label, &r, &theta)?;
        let out = std::env::temp_dir().join(format!("portrait_{}_{}.csv", label.0, label.1));
        write_portrait_csv(std::fs::File::create(&out)?, &rows)?;
        let peak = rows.iter().fold((0.0, 0.0, 0.0), |a, &b| if b.2 > a.2 { b } else { a });
        println!("{label:?}: max |v|^2 = {:.3e} at r = {:.2}, theta = {:.2}; wrote {}", peak.2, peak.0, peak.1, out.display());
    }
    // pseudomodes diverge like exp(|Im z| r) far from the sphere
    let p = poles.find(5, 4).unwrap();
    for r in [2.0, 50.0, 500.0] {
        println!("(5,4) |v({r})| = {:.3e}", pseudomode_radial(&spec, p, r)?.norm());
    }
    Ok(())
}
