//! Space-time intensity maps at 10 D: the (8,3) mode alone, everything else,
//! and the total, each written as `r, ct, intensity`.

use mie_pseudomode::config::ScenarioConfig;
use mie_pseudomode::field::ModeFilter;
use mie_pseudomode::scenario::{field_map, Model};

fn main() -> anyhow::Result<()> {
    let mut config = ScenarioConfig::preset(10.0);
    config.field.r_max = 51.0;
    config.field.r_points = 101;
    config.field.t_max = 100.0;
    config.field.t_points = 201;
    let model = Model::build(&config)?;
    let a = config.resonator.radius;
    for (name, filter) in [
        ("mode_8_3", ModeFilter::Only(vec![(8, 3)])),
        ("others", ModeFilter::Except(vec![(8, 3)])),
        ("total", ModeFilter::All),
    ] {
        config.field.filter = filter;
        let map = field_map(&config, &model)?;
        let out = std::env::temp_dir().join(format!("fieldmap_{name}.csv"));
        map.write_csv(std::fs::File::create(&out)?)?;
        println!(
            "{name:>8}: max {:.3e}, outside the light cone {:.1e}; wrote {}",
            map.max(),
            map.max_outside_cone(a, 0.0),
            out.display()
        );
    }
    Ok(())
}
