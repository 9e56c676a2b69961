//! Subcommand implementations. Errors are classified so `main` can map them
//! to the documented exit codes.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use phasekick::fock::density;
use phasekick::lindblad::{integrate, suggested_dt, IntegratorConfig, MeasurementGenerator};
use phasekick::measurement::{
    evolve_char, evolve_char_point, monte_carlo_char_probe, sample_outcomes, ApparatusState,
    ChiSource, MeasurementModel,
};
use phasekick::phase::{char_function, purity_from_char_grid};
use phasekick::quadham::{diagonalization_residuals, diagonalize, QuadraticLadder};
use phasekick::{PhaseGrid, Tolerances};

use crate::config::{thermal_state, ConfigError, RunConfig};
use crate::report::{ComparisonEntry, DampingEntry, Peak, Provenance, RunReport, TimeSummary};

/// Failure classes, mapped to exit codes 2 / 3 / 4 by `main`.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Tolerance(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance failure: {m}"),
            CliError::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<phasekick::Error> for CliError {
    fn from(e: phasekick::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn tolerances(profile: &str) -> Result<Tolerances, CliError> {
    match profile {
        "strict" => Ok(Tolerances::strict()),
        "fast" => Ok(Tolerances::fast()),
        other => Err(CliError::Config(format!(
            "unknown tolerance profile '{other}' (expected strict|fast)"
        ))),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn provenance(config_bytes: &[u8], seed: u64, profile: &str) -> Provenance {
    Provenance {
        config_sha256: sha256_hex(config_bytes),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        tolerance_profile: profile.to_string(),
    }
}

/// Strict 8-neighbour local maxima of |chi|, largest first, floor at 5% of
/// the global maximum; the boundary ring is excluded.
pub fn find_peaks(grid: &PhaseGrid) -> Vec<Peak> {
    let n = grid.n_points;
    let mag = |iy: usize, ix: usize| grid.values[(iy, ix)].norm();
    let global_max = (0..n)
        .flat_map(|iy| (0..n).map(move |ix| (iy, ix)))
        .map(|(iy, ix)| mag(iy, ix))
        .fold(0.0, f64::max);
    let floor = 0.05 * global_max;
    let mut peaks = Vec::new();
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let v = mag(iy, ix);
            if v < floor {
                continue;
            }
            let mut is_peak = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    let w = mag((iy as i64 + dy) as usize, (ix as i64 + dx) as usize);
                    if w >= v {
                        is_peak = false;
                    }
                }
            }
            if is_peak {
                let z = grid.point(iy, ix);
                peaks.push(Peak { x: z.re, y: z.im, magnitude: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap());
    peaks.truncate(8);
    peaks
}

fn build_model(config: &RunConfig) -> Result<(MeasurementModel, f64), CliError> {
    let omega = config.omega()?;
    let kick = config.kick()?;
    let model = MeasurementModel::new(config.model.gamma, omega, kick)?;
    Ok((model, omega))
}

pub fn run(
    config: &RunConfig,
    config_bytes: &[u8],
    out_dir: &Path,
    compare_oracle: bool,
    profile: &str,
) -> Result<RunReport, CliError> {
    let tol = tolerances(profile)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let psi0 = config.initial_state()?;
    let (model, omega) = build_model(config)?;
    let src = ChiSource::Pure(&psi0);

    // t = 0 reference grid for the peak table and damping ratios
    let grid0 = evolve_char(&src, &model, 0.0, config.grid.extent, config.grid.n)?.grid;
    let peaks0 = find_peaks(&grid0);

    let mut summaries = Vec::new();
    for (i, &t) in config.times.iter().enumerate() {
        let evolved = evolve_char(&src, &model, t, config.grid.extent, config.grid.n)?;
        evolved.grid.check_invariants(&tol)?;
        let name = format!("chi_t{i}.csv");
        evolved.grid.write_csv(&out_dir.join(&name))?;
        let mut damping = Vec::new();
        for p in &peaks0 {
            let eta0 = C64::new(p.x, p.y);
            let image = eta0 * C64::new(0.0, -omega * t).exp();
            let now = evolve_char_point(&src, &model, t, image)?.norm();
            let predicted =
                (-model.gamma * t * (1.0 - model.kick.chi_g(eta0.norm()))).exp();
            damping.push(DampingEntry {
                x0: p.x,
                y0: p.y,
                ratio: now / p.magnitude,
                predicted,
            });
        }
        summaries.push(TimeSummary {
            t,
            chi_csv: name,
            purity: purity_from_char_grid(&evolved.grid),
            peaks: find_peaks(&evolved.grid),
            damping,
        });
    }

    let mut comparisons = Vec::new();
    if compare_oracle {
        let rho0 = density(&psi0);
        let gen = MeasurementGenerator::new(omega, model.gamma, &model.kick, config.dim)?;
        let dt = config
            .dt
            .unwrap_or_else(|| suggested_dt(omega, model.gamma, config.dim));
        let mut icfg = IntegratorConfig::new(dt);
        icfg.tolerances = tol.clone();
        // drop a possible t = 0 checkpoint: integrate wants strictly
        // ascending positive times and t = 0 is the initial condition
        let times: Vec<f64> = config.times.iter().copied().filter(|&t| t > 0.0).collect();
        if !times.is_empty() {
            let result = integrate(|r| gen.rhs(r), &rho0, &times, &icfg)?;
            for (state, &t) in result.states.iter().zip(&times) {
                let exact = evolve_char(&src, &model, t, config.grid.extent, config.grid.n)?;
                let numeric =
                    phasekick::phase::char_grid(state, config.grid.extent, config.grid.n)?;
                let dev = (&exact.grid.values - &numeric.values)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                let tolerance = 1e-3;
                comparisons.push(ComparisonEntry {
                    label: format!("chi grid closed-form vs rk4 at t = {t}"),
                    max_deviation: dev,
                    tolerance,
                    pass: dev <= tolerance,
                });
            }
        }
    }

    let report = RunReport {
        scenario: config.scenario.clone(),
        provenance: provenance(config_bytes, config.seed, profile),
        times: summaries,
        comparisons,
    };
    write_report(&report, out_dir)?;
    if !report.all_pass() {
        return Err(CliError::Tolerance(
            "one or more oracle comparisons exceeded tolerance (see report.json)".into(),
        ));
    }
    Ok(report)
}

pub fn compare(
    config: &RunConfig,
    config_bytes: &[u8],
    out_dir: &Path,
    profile: &str,
) -> Result<RunReport, CliError> {
    let tol = tolerances(profile)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let psi0 = config.initial_state()?;
    let rho0 = density(&psi0);
    let (model, omega) = build_model(config)?;
    let src = ChiSource::Pure(&psi0);
    let t = *config.times.last().unwrap();
    if t <= 0.0 {
        return Err(CliError::Config("compare needs a positive final time".into()));
    }
    let l = config.grid.extent;
    let probes = [
        C64::new(0.125 * l, 0.0),
        C64::new(0.0, 0.125 * l),
        C64::new(0.125 * l, 0.125 * l),
        C64::new(-0.25 * l, 0.125 * l),
        C64::new(0.0, 0.25 * l),
    ];

    // RK4 oracle with the mandatory step-halving audit
    let gen = MeasurementGenerator::new(omega, model.gamma, &model.kick, config.dim)?;
    let dt = config
        .dt
        .unwrap_or_else(|| suggested_dt(omega, model.gamma, config.dim));
    let mut icfg = IntegratorConfig::new(dt);
    icfg.tolerances = tol;
    icfg.audit = true;
    let rk4 = integrate(|r| gen.rhs(r), &rho0, &[t], &icfg)?;

    let mut comparisons = Vec::new();
    let rk4_tol = if model.gamma == 0.0 { 1e-8 } else { 1e-3 };
    let mut rk4_dev: f64 = 0.0;
    for &eta in &probes {
        let exact = evolve_char_point(&src, &model, t, eta)?;
        rk4_dev = rk4_dev.max((char_function(&rk4.states[0], eta) - exact).norm());
    }
    comparisons.push(ComparisonEntry {
        label: "closed form vs rk4 (chi probes)".into(),
        max_deviation: rk4_dev,
        tolerance: rk4_tol,
        pass: rk4_dev <= rk4_tol,
    });

    let (mc, ses) = monte_carlo_char_probe(&rho0, &model, t, 1000, config.seed, &probes)?;
    // normalized by 3 standard errors per probe, so tolerance is 1
    let mut mc_score: f64 = 0.0;
    for (k, &eta) in probes.iter().enumerate() {
        let exact = evolve_char_point(&src, &model, t, eta)?;
        mc_score = mc_score.max((mc[k] - exact).norm() / (3.0 * ses[k]).max(1e-300));
    }
    comparisons.push(ComparisonEntry {
        label: "closed form vs monte carlo (deviation / 3 se)".into(),
        max_deviation: mc_score,
        tolerance: 1.0,
        pass: mc_score <= 1.0,
    });

    let report = RunReport {
        scenario: config.scenario.clone(),
        provenance: provenance(config_bytes, config.seed, profile),
        times: vec![],
        comparisons,
    };
    write_report(&report, out_dir)?;
    if !report.all_pass() {
        return Err(CliError::Tolerance(
            "oracle comparison exceeded tolerance (see report.json)".into(),
        ));
    }
    Ok(report)
}

fn write_report(report: &RunReport, out_dir: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    std::fs::write(out_dir.join("report.json"), json + "\n")
        .map_err(|e| CliError::Config(format!("cannot write report: {e}")))?;
    Ok(())
}

/// Parse "a", "a,b", or "a+bi"/"a-bi" into a complex number.
pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let s = s.trim();
    if let Some((re, im)) = s.split_once(',') {
        let re: f64 = re.trim().parse().map_err(|_| bad_complex(s))?;
        let im: f64 = im.trim().parse().map_err(|_| bad_complex(s))?;
        return Ok(C64::new(re, im));
    }
    if let Some(body) = s.strip_suffix('i') {
        // find the sign splitting real and imaginary parts (skip a leading sign)
        for (idx, ch) in body.char_indices().skip(1) {
            if (ch == '+' || ch == '-') && !matches!(&body[idx - 1..idx], "e" | "E") {
                let re: f64 = body[..idx].parse().map_err(|_| bad_complex(s))?;
                let im_str = &body[idx..];
                let im: f64 = if im_str == "+" || im_str == "-" {
                    format!("{im_str}1").parse().map_err(|_| bad_complex(s))?
                } else {
                    im_str.parse().map_err(|_| bad_complex(s))?
                };
                return Ok(C64::new(re, im));
            }
        }
        let im: f64 = match body {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse().map_err(|_| bad_complex(s))?,
        };
        return Ok(C64::new(0.0, im));
    }
    let re: f64 = s.parse().map_err(|_| bad_complex(s))?;
    Ok(C64::new(re, 0.0))
}

fn bad_complex(s: &str) -> CliError {
    CliError::Config(format!("cannot parse complex number '{s}'"))
}

pub fn diagonalize_cmd(z1: f64, z2: &str, z3: &str) -> Result<String, CliError> {
    let h = QuadraticLadder { z1, z2: parse_complex(z2)?, z3: parse_complex(z3)? };
    let nf = diagonalize(&h).map_err(|e| CliError::Numerical(e.to_string()))?;
    let residuals = diagonalization_residuals(&h, &nf);
    let doc = serde_json::json!({
        "input": { "z1": h.z1, "z2": [h.z2.re, h.z2.im], "z3": [h.z3.re, h.z3.im] },
        "normal_form": nf,
        "residuals": residuals,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn sample(
    config: &RunConfig,
    out: Option<&PathBuf>,
    n: usize,
    nbar: f64,
) -> Result<(), CliError> {
    let psi0 = config.initial_state()?;
    let rho = density(&psi0);
    let apparatus = ApparatusState::new(thermal_state(nbar, config.dim)?)?;
    let outcomes = sample_outcomes(&rho, &apparatus, n, config.seed)?;
    let mut body = String::from("x,y\n");
    for a in &outcomes {
        body.push_str(&format!("{},{}\n", a.re, a.im));
    }
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// The canned two-snapshot scenario: cat alpha = 3i, Gaussian sigma = 0.5,
/// gamma = 1, omega = 10, chi grids at t = 0 and gamma t = 1.
pub fn figure1_config() -> RunConfig {
    serde_json::from_value(serde_json::json!({
        "scenario": "figure1",
        "dim": 64,
        "seed": 1,
        "state": { "kind": "cat", "alpha": [0.0, 3.0] },
        "model": { "gamma": 1.0, "omega": 10.0, "kick": { "kind": "gaussian", "sigma": 0.5 } },
        "times": [0.0, 1.0],
        "grid": { "extent": 8.0, "n": 64 }
    }))
    .expect("static config is valid")
}
