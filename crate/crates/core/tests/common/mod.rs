#![allow(dead_code)]

use std::sync::OnceLock;

use mie_pseudomode::config::ScenarioConfig;
use mie_pseudomode::poles::{enumerate_poles, PoleSet};
use mie_pseudomode::scenario::Model;

/// The reference pole catalog, computed once per test binary.
pub fn poles() -> &'static PoleSet {
    static POLES: OnceLock<PoleSet> = OnceLock::new();
    POLES.get_or_init(|| {
        let c = ScenarioConfig::preset(10.0);
        enumerate_poles(&c.resonator, c.window).expect("pole search")
    })
}

/// Tuned model for the reference sphere at dipole `d`.
pub fn model(d: f64) -> (ScenarioConfig, Model) {
    let c = ScenarioConfig::preset(d);
    let m = Model::from_poles(&c, poles().clone()).expect("model");
    (c, m)
}
