//! Run configuration: a single JSON document describing the scenario.
//! All physical inputs are dimensionless (ladder-basis units; rates and
//! frequencies share one time unit).

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use phasekick::fock::{cat_state, coherent_state, fock_state, FockVector};
use phasekick::kick::kick_distribution_from_apparatus;
use phasekick::quadham::{diagonalize, to_ladder, QuadraticLadder, QuadraticQp};
use phasekick::{FockMatrix, KickDistribution, Tolerances};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    Coherent { alpha: [f64; 2] },
    Cat { alpha: [f64; 2] },
    Fock { n: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "lowercase")]
pub enum HamiltonianSpec {
    Ladder { z1: f64, z2: [f64; 2], z3: [f64; 2] },
    Qp { c1: f64, c2: f64, c3: f64, c4: f64, c5: f64, lambda: f64, hbar: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KickSpec {
    Gaussian { sigma: f64 },
    /// CSV file with an `r,g` header and one radius/density pair per line.
    Table { path: String },
    /// Thermal apparatus state with mean occupation `nbar` at dimension `dim`.
    Apparatus { nbar: f64, dim: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub gamma: f64,
    /// Defaults to the normal-form frequency z0 when a Hamiltonian is given.
    #[serde(default)]
    pub omega: Option<f64>,
    pub kick: KickSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub extent: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    pub state: StateSpec,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSpec>,
    pub model: ModelSpec,
    pub times: Vec<f64>,
    pub grid: GridSpec,
    /// Integrator step override (used by oracle comparisons).
    #[serde(default)]
    pub dt: Option<f64>,
}

/// Anything wrong with the configuration document itself.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dim < 2 {
            return Err(ConfigError(format!("dim {} too small", self.dim)));
        }
        if self.times.is_empty() {
            return Err(ConfigError("empty time list".into()));
        }
        if self.times[0] < 0.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError("times must be nonnegative and ascending".into()));
        }
        if self.grid.n < 2 || self.grid.n % 2 != 0 {
            return Err(ConfigError(format!("grid n {} must be even and >= 2", self.grid.n)));
        }
        if !(self.grid.extent > 0.0) {
            return Err(ConfigError(format!("grid extent {}", self.grid.extent)));
        }
        if !(self.model.gamma >= 0.0) {
            return Err(ConfigError(format!("gamma {}", self.model.gamma)));
        }
        if self.model.omega.is_none() && self.hamiltonian.is_none() {
            return Err(ConfigError("need model.omega or a hamiltonian block".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(ConfigError(format!("dt {dt}")));
            }
        }
        if let KickSpec::Gaussian { sigma } = self.model.kick {
            if !(sigma > 0.0) {
                return Err(ConfigError(format!("kick sigma {sigma}")));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<FockVector, phasekick::Error> {
        match &self.state {
            StateSpec::Coherent { alpha } => {
                coherent_state(C64::new(alpha[0], alpha[1]), self.dim)
            }
            StateSpec::Cat { alpha } => cat_state(C64::new(alpha[0], alpha[1]), self.dim),
            StateSpec::Fock { n } => fock_state(*n, self.dim),
        }
    }

    pub fn ladder_hamiltonian(&self) -> Result<Option<QuadraticLadder>, ConfigError> {
        match &self.hamiltonian {
            None => Ok(None),
            Some(HamiltonianSpec::Ladder { z1, z2, z3 }) => Ok(Some(QuadraticLadder {
                z1: *z1,
                z2: C64::new(z2[0], z2[1]),
                z3: C64::new(z3[0], z3[1]),
            })),
            Some(HamiltonianSpec::Qp { c1, c2, c3, c4, c5, lambda, hbar }) => {
                let qp = QuadraticQp {
                    c1: *c1,
                    c2: *c2,
                    c3: *c3,
                    c4: *c4,
                    c5: *c5,
                    lambda: *lambda,
                    hbar: *hbar,
                };
                let (ladder, _constant) =
                    to_ladder(&qp).map_err(|e| ConfigError(e.to_string()))?;
                Ok(Some(ladder))
            }
        }
    }

    /// omega from the config, falling back to the normal-form frequency.
    pub fn omega(&self) -> Result<f64, ConfigError> {
        if let Some(w) = self.model.omega {
            return Ok(w);
        }
        let ladder = self
            .ladder_hamiltonian()?
            .ok_or_else(|| ConfigError("need model.omega or a hamiltonian block".into()))?;
        let nf = diagonalize(&ladder).map_err(|e| ConfigError(e.to_string()))?;
        Ok(nf.z0)
    }

    pub fn kick(&self) -> Result<KickDistribution, ConfigError> {
        match &self.model.kick {
            KickSpec::Gaussian { sigma } => {
                KickDistribution::gaussian(*sigma).map_err(|e| ConfigError(e.to_string()))
            }
            KickSpec::Table { path } => {
                let body = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
                let mut radii = Vec::new();
                let mut density = Vec::new();
                for (lineno, line) in body.lines().enumerate() {
                    if lineno == 0 && line.trim() == "r,g" {
                        continue;
                    }
                    let mut parts = line.split(',');
                    let r: f64 = parts
                        .next()
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| ConfigError(format!("{path} line {lineno}")))?;
                    let g: f64 = parts
                        .next()
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| ConfigError(format!("{path} line {lineno}")))?;
                    radii.push(r);
                    density.push(g);
                }
                KickDistribution::tabulated(radii, density)
                    .map_err(|e| ConfigError(e.to_string()))
            }
            KickSpec::Apparatus { nbar, dim } => {
                let psi = thermal_state(*nbar, *dim).map_err(|e| ConfigError(e.to_string()))?;
                kick_distribution_from_apparatus(&psi, &Tolerances::default())
                    .map_err(|e| ConfigError(e.to_string()))
            }
        }
    }
}

/// Diagonal thermal density matrix with mean occupation nbar (0 = vacuum).
pub fn thermal_state(nbar: f64, dim: usize) -> Result<FockMatrix, phasekick::Error> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(phasekick::Error::InvalidParameter(format!("nbar {nbar}")));
    }
    let q: f64 = nbar / (1.0 + nbar);
    let mut m = phasekick::nalgebra::DMatrix::<C64>::zeros(dim, dim);
    let norm: f64 = (0..dim).map(|n| q.powi(n as i32)).sum();
    for n in 0..dim {
        let p = if q == 0.0 {
            if n == 0 { 1.0 } else { 0.0 }
        } else {
            q.powi(n as i32) / norm
        };
        m[(n, n)] = C64::new(p, 0.0);
    }
    FockMatrix::new(m)
}
