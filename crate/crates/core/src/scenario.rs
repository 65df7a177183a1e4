//! Scenario orchestration: builds the pseudomode model from a config, writes
//! the data files for one scenario and a manifest with their hashes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{Scenario, ScenarioConfig};
use crate::dynamics::{
    assemble_with_form, evolve, hybrid_time_grid, rabi_period, tune_omega0, two_mode_approx, write_trajectory_csv, Propagator,
    Trajectory, Tuning,
};
use crate::error::{Error, Result};
use crate::field::{pseudomode_portrait, write_portrait_csv, AmplitudeSource, FieldMap, FieldReconstructor};
use crate::mie::{spectrum_scan, write_spectrum_csv};
use crate::ode::Tolerance;
use crate::oracle::{compare_with_pseudomodes, ComparisonReport, OracleTrajectory};
use crate::poles::{enumerate_poles, write_catalog_csv, write_catalog_json, PoleSet};
use crate::pseudomode::{build_pseudomodes, EmitterSpec, PseudomodeSet};

/// Pole catalog and pseudomodes for a config, with the emitter frequency resolved.
pub struct Model {
    pub poles: PoleSet,
    pub set: PseudomodeSet,
    /// Present when the frequency was tuned rather than given.
    pub tuning: Option<Tuning>,
}

impl Model {
    pub fn build(config: &ScenarioConfig) -> Result<Model> {
        let poles = enumerate_poles(&config.resonator, config.window)?;
        Model::from_poles(config, poles)
    }

    pub fn from_poles(config: &ScenarioConfig, poles: PoleSet) -> Result<Model> {
        let e = &config.emitter;
        let target = poles
            .find(e.tune_to.0, e.tune_to.1)
            .ok_or_else(|| Error::Config(format!("emitter.tune_to {:?} is not in the pole window", e.tune_to)))?;
        let start = e.omega0.unwrap_or(target.omega());
        let emitter = EmitterSpec::new(config.emitter_radius(), e.dipole_debye, start)?;
        let set = build_pseudomodes(&poles, &emitter)?;
        if e.omega0.is_some() || e.bare {
            return Ok(Model { poles, set, tuning: None });
        }
        let d = &config.dynamics;
        let tuning = tune_omega0(&set, e.tune_to, &d.resonant, d.lamb_convention, d.tuning_part)?;
        Ok(Model { set: set.with_omega0(tuning.omega0), poles, tuning: Some(tuning) })
    }

    pub fn omega0(&self) -> f64 {
        self.set.emitter.omega0
    }

    pub fn propagator(&self, config: &ScenarioConfig) -> Result<Propagator> {
        Propagator::new(&assemble_with_form(&self.set, config.dynamics.coupling_form))
    }

    pub fn time_grid(&self, config: &ScenarioConfig) -> Result<Vec<f64>> {
        let d = &config.dynamics;
        hybrid_time_grid(d.t_first, d.t_switch, config.t_max(), d.n_log, d.n_lin)
    }
}

/// One written file in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: &'static str,
    pub version: &'static str,
    pub config: ScenarioConfig,
    pub files: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

/// Output of one scenario run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// `false` only for a failing acceptance run.
    pub passed: bool,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Outputs> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        let data = std::fs::read(&path)?;
        let sha256 = Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect();
        self.files.push(OutputFile { path: name.to_string(), sha256, bytes: data.len() as u64 });
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Run `scenario` with `config`, writing into `out_dir`.
pub fn run_scenario(scenario: Scenario, config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome> {
    let mut config = config.clone();
    config.scenario = Some(scenario);
    let mut out = Outputs::new(out_dir)?;
    let mut passed = true;
    let summary = match scenario {
        Scenario::Spectrum => spectrum(&config, &mut out)?,
        Scenario::Poles => poles(&config, &mut out)?,
        Scenario::Portraits => portraits(&config, &mut out)?,
        Scenario::Dynamics => dynamics(&config, &mut out)?,
        Scenario::TwoMode => two_mode(&config, &mut out)?,
        Scenario::Fieldmap => fieldmap(&config, &mut out)?,
        Scenario::OracleCompare => oracle_compare(&config, &mut out)?,
        Scenario::Acceptance => {
            let report = crate::acceptance::run_suite(&config)?;
            passed = report.passed();
            out.json("acceptance.json", &report)?;
            out.write("acceptance.txt", |w| {
                write!(w, "{}", report.table())?;
                Ok(())
            })?;
            json!({ "passed": passed, "criteria": report.results.len() })
        }
    };
    let manifest = Manifest {
        scenario: scenario.name(),
        version: env!("CARGO_PKG_VERSION"),
        config,
        files: out.files,
        summary,
    };
    let manifest_path = out_dir.join("manifest.json");
    let mut w = BufWriter::new(File::create(&manifest_path)?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(RunOutcome { manifest, manifest_path, passed })
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn spectrum(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let s = &config.spectrum;
    let ks = grid(s.k_min, s.k_max, s.points);
    let rows = spectrum_scan(&config.resonator, config.window.l_max, &ks)?;
    out.write("spectrum.csv", |w| Ok(write_spectrum_csv(w, &rows)?))?;
    let totals: Vec<_> = rows.iter().filter(|r| r.l.is_none()).collect();
    out.write("cross_section.csv", |w| {
        writeln!(w, "k,wavelength,sigma_s")?;
        for r in &totals {
            writeln!(w, "{:.10e},{:.10e},{:.10e}", r.k, 2.0 * std::f64::consts::PI / r.k, r.sigma_s_partial)?;
        }
        Ok(())
    })?;
    let peak = totals.iter().fold(totals[0], |a, &b| if b.sigma_s_partial > a.sigma_s_partial { b } else { a });
    Ok(json!({ "k_points": ks.len(), "l_max": config.window.l_max, "max_sigma_s": peak.sigma_s_partial, "k_at_max_sigma_s": peak.k }))
}

fn poles(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let set = enumerate_poles(&config.resonator, config.window)?;
    out.write("poles.json", |w| {
        write_catalog_json(&mut *w, &set)?;
        writeln!(w)?;
        Ok(())
    })?;
    out.write("poles.csv", |w| write_catalog_csv(w, &set))?;
    Ok(json!({ "poles": set.len() }))
}

fn portraits(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let model = Model::build(config)?;
    let p = &config.portraits;
    let r: Vec<f64> = (1..=p.r_points).map(|i| p.r_max * i as f64 / p.r_points as f64).collect();
    let theta = grid(0.0, std::f64::consts::PI, p.theta_points);
    let mut peaks = Vec::new();
    for &(l, n) in &p.modes {
        let rows = pseudomode_portrait(&model.set, (l, n), &r, &theta)?;
        out.write(&format!("portrait_{l}_{n}.csv"), |w| Ok(write_portrait_csv(w, &rows)?))?;
        let max = rows.iter().map(|x| x.2).fold(0.0, f64::max);
        peaks.push(json!({ "l": l, "n": n, "max_abs2_v": max }));
    }
    Ok(json!({ "portraits": peaks }))
}

fn mode_metadata(model: &Model, config: &ScenarioConfig) -> serde_json::Value {
    let gamma0 = model.set.modes[model.set.index_of(config.emitter.tune_to.0, config.emitter.tune_to.1).unwrap()].pole.gamma();
    let modes: Vec<_> = model
        .set
        .modes
        .iter()
        .map(|m| {
            let label = (m.pole.l, m.pole.n);
            json!({
                "l": label.0,
                "n": label.1,
                "re_z": m.pole.z.re,
                "im_z": m.pole.z.im,
                "gamma": m.pole.gamma(),
                "gamma_ratio": m.pole.gamma() / gamma0,
                "gbar": [m.gbar.re, m.gbar.im],
                "resonant": config.dynamics.resonant.contains(&label),
            })
        })
        .collect();
    json!({ "gamma0": gamma0, "reference_mode": config.emitter.tune_to, "modes": modes })
}

fn period_or_null(traj: &Trajectory) -> serde_json::Value {
    rabi_period(&traj.t, &traj.population()).map_or(serde_json::Value::Null, |p| json!(p))
}

fn dynamics(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let model = Model::build(config)?;
    let gen = assemble_with_form(&model.set, config.dynamics.coupling_form);
    let traj = evolve(&gen, &model.time_grid(config)?)?;
    out.write("trajectory.csv", |w| Ok(write_trajectory_csv(w, &traj, None)?))?;
    out.json("modes.json", &mode_metadata(&model, config))?;
    let drift = traj.total_probability().iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    Ok(json!({
        "omega0": model.omega0(),
        "tuning": model.tuning,
        "dimension": gen.dim(),
        "solver": traj.path,
        "condition": traj.condition,
        "rabi_period": period_or_null(&traj),
        "max_probability_drift": drift,
    }))
}

/// Largest relative deviation of the two-mode `|c0|^2` from the full one
/// while the full `|c0|^2` exceeds every off-resonant population.
pub fn two_mode_deviation(full: &Trajectory, reduced: &Trajectory, resonant: &[crate::dynamics::ModeLabel]) -> (f64, usize) {
    let background: Vec<usize> = (0..full.labels.len()).filter(|&i| !resonant.contains(&full.labels[i])).collect();
    let (mut worst, mut counted) = (0.0f64, 0);
    for k in 0..full.t.len() {
        let p = full.c0[k].norm_sqr();
        let bg = background.iter().map(|&i| full.b[i][k].norm_sqr()).fold(0.0, f64::max);
        if p > bg {
            worst = worst.max((reduced.c0[k].norm_sqr() - p).abs() / p);
            counted += 1;
        }
    }
    (worst, counted)
}

fn two_mode(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let model = Model::build(config)?;
    let t = model.time_grid(config)?;
    let full = evolve(&assemble_with_form(&model.set, config.dynamics.coupling_form), &t)?;
    let resonant = &config.dynamics.resonant;
    let reduced = two_mode_approx(&model.set, resonant, &t, config.dynamics.lamb_convention)?;
    let background: Vec<usize> = (0..full.labels.len()).filter(|&i| !resonant.contains(&full.labels[i])).collect();
    out.write("two_mode.csv", |w| {
        writeln!(w, "ct,abs2_c0_full,abs2_c0_two_mode,max_abs2_background")?;
        for k in 0..t.len() {
            let bg = background.iter().map(|&i| full.b[i][k].norm_sqr()).fold(0.0, f64::max);
            writeln!(w, "{:.10e},{:.10e},{:.10e},{:.6e}", t[k], full.c0[k].norm_sqr(), reduced.c0[k].norm_sqr(), bg)?;
        }
        Ok(())
    })?;
    let (dev, counted) = two_mode_deviation(&full, &reduced, resonant);
    Ok(json!({
        "omega0": model.omega0(),
        "resonant": resonant,
        "max_relative_deviation": dev,
        "compared_points": counted,
        "rabi_period_full": period_or_null(&full),
        "rabi_period_two_mode": period_or_null(&reduced),
    }))
}

/// Field intensity map on the configured grid from the exact propagator.
pub fn field_map(config: &ScenarioConfig, model: &Model) -> Result<FieldMap> {
    let f = &config.field;
    let a = config.resonator.radius;
    let r = grid(a, f.r_max, f.r_points);
    let t = grid(0.0, f.t_max, f.t_points);
    let source = AmplitudeSource::Spectral { propagator: model.propagator(config)?, horizon: f.t_max };
    let rec = FieldReconstructor::new(&model.set, source, f.filter.clone(), f.delay);
    rec.intensity_map(&r, &t, f.theta)
}

fn fieldmap(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let model = Model::build(config)?;
    let map = field_map(config, &model)?;
    let map = if config.field.normalize { map.normalized() } else { map };
    out.write("fieldmap.csv", |w| Ok(map.write_csv(w)?))?;
    let a = config.resonator.radius;
    let lead = config.field.delay.delay(a, config.emitter_radius(), a);
    let mut meta = map.metadata(config.field.normalize);
    meta["max_outside_cone"] = json!(map.max_outside_cone(a, lead));
    meta["cone_lead"] = json!(lead);
    out.json("fieldmap.json", &meta)?;
    Ok(meta)
}

/// Box-oracle comparison for the model's emitter.
pub fn oracle_comparison(config: &ScenarioConfig, model: &Model) -> Result<(ComparisonReport, OracleTrajectory)> {
    let prop = model.propagator(config)?;
    let o = &config.oracle;
    compare_with_pseudomodes(&model.set, |t| prop.c0(t), o.r_box, o.k_max, o.times, Tolerance::default())
}

fn oracle_compare(config: &ScenarioConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    let model = Model::build(config)?;
    let prop = model.propagator(config)?;
    let (report, oracle) = oracle_comparison(config, &model)?;
    out.json("oracle_report.json", &report)?;
    out.write("oracle_c0.csv", |w| {
        writeln!(w, "ct,re_c0_oracle,im_c0_oracle,re_c0_pseudomode,im_c0_pseudomode,probability_oracle")?;
        for (k, &t) in oracle.t.iter().enumerate() {
            let c: Complex64 = prop.c0(t);
            let o = oracle.c0[k];
            writeln!(w, "{t:.8e},{:.12e},{:.12e},{:.12e},{:.12e},{:.14e}", o.re, o.im, c.re, c.im, oracle.probability[k])?;
        }
        Ok(())
    })?;
    Ok(json!({
        "max_rel_err_c0": report.max_rel_err_c0,
        "max_probability_error": report.max_probability_error,
        "box_modes": report.box_modes,
    }))
}
