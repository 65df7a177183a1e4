//! Direct quadrature of the memory kernel against its sum over pole residues,
//! on the surface and across the light cone.

use mie_pseudomode::mie::ResonatorSpec;
use mie_pseudomode::oracle::{KernelIntegrator, KernelOptions};

fn main() -> anyhow::Result<()> {
    let spec = ResonatorSpec::silicon_microsphere();
    let a = spec.radius;
    for l in [5, 8] {
        let k = KernelIntegrator::new(&spec, l, KernelOptions::default())?;
        println!("l = {l}: {} poles in the residue sum", k.poles.len());
        for tau in [1.0, 5.0, 20.0] {
            let q = k.quadrature(a, a, tau)?;
            let s = k.residue_sum(a, a, tau)?;
            println!(
                "  r = r' = a, c tau = {tau:>4}: quadrature {:.6e}, residues {:.6e}, rel diff {:.2e} (tail {:.1e})",
                q.value,
                s,
                (q.value - s).norm() / s.norm(),
                q.truncation
            );
        }
        // field point 2 um outside the surface: the cone opens at c tau = 2
        for tau in [1.0, 3.0] {
            let q = k.quadrature(a + 2.0, a, tau)?;
            let s = k.residue_sum(a + 2.0, a, tau)?;
            println!("  r = a + 2, c tau = {tau}: |quadrature| {:.3e}, |residues| {:.3e}", q.value.norm(), s.norm());
        }
    }
    Ok(())
}
