//! Enumerate the natural-mode poles of the silicon microsphere and write the
//! pole catalog.

use std::time::Instant;

use mie_pseudomode::mie::ResonatorSpec;
use mie_pseudomode::poles::{enumerate_poles, write_catalog_csv, PoleWindow};

fn main() -> anyhow::Result<()> {
    let spec = ResonatorSpec::silicon_microsphere();
    let window = PoleWindow::default();
    let start = Instant::now();
    let set = enumerate_poles(&spec, window)?;
    println!("{} poles with l <= {}, Re z < {}, Im z > {} ({:.1?})", set.len(), window.l_max, window.re_max, window.im_min, start.elapsed());
    for l in 1..=window.l_max {
        let n = set.poles.iter().filter(|p| p.l == l).count();
        print!("{l}:{n} ");
    }
    println!();
    for (l, n) in [(5, 4), (8, 3)] {
        let p = set.find(l, n).expect("resonance pair present");
        println!("({l},{n}) z = {:.10} {:+.6e}i  lambda = {:.4} um", p.z.re, p.z.im, 2.0 * std::f64::consts::PI / p.z.re);
    }
    let out = std::env::temp_dir().join("poles.csv");
    write_catalog_csv(std::fs::File::create(&out)?, &set)?;
    println!("catalog written to {}", out.display());
    Ok(())
}
