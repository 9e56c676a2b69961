//! Master-equation generators (LGKS, kick-measurement, diffusion limit) and
//! a fixed-step RK4 integrator with invariant monitoring and an optional
//! step-halving audit.
//!
//! The measurement master equation is
//!   drho/dt = -i omega [N, rho] + gamma (K(rho) - rho),
//! K(rho) = ∫ g(|alpha|) D(alpha) rho D(alpha)^dagger d^2 alpha.
//! Because g is radial, K preserves each matrix diagonal: the angular
//! integral is analytic and leaves one real kernel B_d per diagonal offset d.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{expectation, number, quadrature_x, quadrature_y, FockMatrix};
use crate::kick::{KickDistribution, KickKind};
use crate::phase::char_function;
use crate::special::gauss_legendre_ab;
use crate::tol::Tolerances;

/// H plus a list of (collapse operator, rate) channels.
pub struct LindbladSpec {
    pub h: FockMatrix,
    pub channels: Vec<(FockMatrix, f64)>,
}

/// drho/dt = -i[H, rho] + sum_k kappa_k (2 L rho L^dag - L^dag L rho - rho L^dag L) / ...
/// (convention: each channel contributes kappa (L rho L^dag - {L^dag L, rho}/2)).
pub fn lgks_rhs(spec: &LindbladSpec, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    let mut out = (&spec.h.mat * rho - rho * &spec.h.mat) * (-i);
    for (l, kappa) in &spec.channels {
        let ldl = l.mat.adjoint() * &l.mat;
        let jump = &l.mat * rho * l.mat.adjoint();
        let anti = (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
        out += (jump - anti) * C64::new(*kappa, 0.0);
    }
    out
}

/// Radial quadrature for ∫ 2 pi r g(r) f(r) dr; weights sum to 1.
pub struct KickQuadrature {
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KickQuadrature {
    /// 24 Gauss-Legendre nodes on [0, support radius] for the Gaussian kind;
    /// tabulated distributions integrate on their own nodes.
    pub fn from_distribution(kick: &KickDistribution) -> Result<Self> {
        Self::with_nodes(kick, 24)
    }

    pub fn with_nodes(kick: &KickDistribution, n_radial: usize) -> Result<Self> {
        let (radii, mut weights) = match &kick.kind {
            KickKind::Gaussian { sigma } => {
                let (r, w) = gauss_legendre_ab(n_radial, 0.0, kick.support_radius());
                let s2 = sigma * sigma;
                let weights = r
                    .iter()
                    .zip(&w)
                    .map(|(&ri, &wi)| {
                        wi * 2.0 * ri * (-ri * ri / s2).exp() / s2
                    })
                    .collect::<Vec<_>>();
                (r, weights)
            }
            KickKind::Tabulated { radii, density, weights, .. } => {
                let w = radii
                    .iter()
                    .zip(density)
                    .zip(weights)
                    .map(|((&r, &g), &w)| 2.0 * std::f64::consts::PI * r * g * w)
                    .collect::<Vec<_>>();
                (radii.clone(), w)
            }
        };
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.5) || !(mass < 1.5) {
            return Err(Error::QuadratureFailure(format!("radial mass {mass}")));
        }
        // normalize so the generator is exactly trace-preserving
        for w in &mut weights {
            *w /= mass;
        }
        Ok(Self { radii, weights })
    }
}

/// Eigendecomposition of the Hermitian generator X = i(a^dag - a), so that
/// D(r) = exp(r a^dag - r a) = V e^{-i r Lambda} V^dag is exactly unitary
/// even in the truncated space.
pub struct KickGenerator {
    dim: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl KickGenerator {
    pub fn new(dim: usize) -> Result<Self> {
        let a = crate::fock::ladder(dim)?;
        let i = C64::new(0.0, 1.0);
        let x = (a.mat.adjoint() - &a.mat) * i;
        let eig = nalgebra::SymmetricEigen::new(x);
        Ok(Self { dim, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    /// Real orthogonal matrix representing D(r) for real r >= 0.
    pub fn unitary(&self, r: f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for j in 0..self.dim {
            let ph = C64::new(0.0, -r * self.eigenvalues[j]).exp();
            for i in 0..self.dim {
                scaled[(i, j)] *= ph;
            }
        }
        let u = scaled * self.eigenvectors.adjoint();
        // D(r) is real for real displacement; the imaginary residue is
        // eigendecomposition roundoff
        DMatrix::from_fn(self.dim, self.dim, |i, j| u[(i, j)].re)
    }
}

/// Per-diagonal kick kernels: [K(rho)]_{d+i,i} = sum_j B_d[i,j] rho_{d+j,j}.
pub struct KickKernels {
    dim: usize,
    diagonals: Vec<DMatrix<C64>>,
}

impl KickKernels {
    pub fn new(kick: &KickDistribution, dim: usize) -> Result<Self> {
        let quad = KickQuadrature::from_distribution(kick)?;
        Self::from_quadrature(&quad, dim)
    }

    pub fn from_quadrature(quad: &KickQuadrature, dim: usize) -> Result<Self> {
        let gen = KickGenerator::new(dim)?;
        let mut real: Vec<DMatrix<f64>> =
            (0..dim).map(|d| DMatrix::zeros(dim - d, dim - d)).collect();
        for (&r, &w) in quad.radii.iter().zip(&quad.weights) {
            let u = gen.unitary(r);
            for (d, b) in real.iter_mut().enumerate() {
                for i in 0..dim - d {
                    for j in 0..dim - d {
                        b[(i, j)] += w * u[(d + i, d + j)] * u[(i, j)];
                    }
                }
            }
        }
        let diagonals = real.into_iter().map(|b| b.map(|x| C64::new(x, 0.0))).collect();
        Ok(Self { dim, diagonals })
    }

    /// K(rho) for Hermitian rho; upper diagonals follow by conjugation.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = self.dim;
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for (d, b) in self.diagonals.iter().enumerate() {
            let v = DVector::from_fn(dim - d, |j, _| rho[(d + j, j)]);
            let w = b * v;
            for i in 0..dim - d {
                out[(d + i, i)] = w[i];
                if d > 0 {
                    out[(i, d + i)] = w[i].conj();
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Measurement master-equation generator.
pub struct MeasurementGenerator {
    pub omega: f64,
    pub gamma: f64,
    pub kernels: KickKernels,
}

impl MeasurementGenerator {
    pub fn new(omega: f64, gamma: f64, kick: &KickDistribution, dim: usize) -> Result<Self> {
        Ok(Self { omega, gamma, kernels: KickKernels::new(kick, dim)? })
    }

    pub fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = self.kernels.dim;
        let mut out = self.kernels.apply(rho);
        out -= rho;
        out *= C64::new(self.gamma, 0.0);
        // -i omega [N, rho]: element (m, n) picks up -i omega (m - n)
        for n in 0..dim {
            for m in 0..dim {
                out[(m, n)] += rho[(m, n)] * C64::new(0.0, -self.omega * (m as f64 - n as f64));
            }
        }
        out
    }
}

/// Diffusion (weak-kick) limit: symmetric a / a^dag channels at rate kappa.
pub struct DiffusionGenerator {
    pub omega: f64,
    pub kappa: f64,
    dim: usize,
    a: DMatrix<C64>,
}

impl DiffusionGenerator {
    pub fn new(omega: f64, kappa: f64, dim: usize) -> Result<Self> {
        Ok(Self { omega, kappa, dim, a: crate::fock::ladder(dim)?.mat })
    }

    /// -i omega [N, rho] + kappa (2 a rho a^dag - a^dag a rho - rho a^dag a
    ///                          + 2 a^dag rho a - a a^dag rho - rho a a^dag)
    pub fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let ad = self.a.adjoint();
        let ada = &ad * &self.a;
        let aad = &self.a * &ad;
        let mut out = (&self.a * rho * &ad) * C64::new(2.0, 0.0)
            + (&ad * rho * &self.a) * C64::new(2.0, 0.0)
            - (&ada * rho + rho * &ada)
            - (&aad * rho + rho * &aad);
        out *= C64::new(self.kappa, 0.0);
        for n in 0..self.dim {
            for m in 0..self.dim {
                out[(m, n)] += rho[(m, n)] * C64::new(0.0, -self.omega * (m as f64 - n as f64));
            }
        }
        out
    }
}

/// Fixed-step RK4 configuration.
#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub tolerances: Tolerances,
    /// rerun at dt/2 and compare chi probes of the final state
    pub audit: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, tolerances: Tolerances::default(), audit: false }
    }
}

/// Stability-limited default step: |omega| dt dim <= 1/8, gamma dt <= 1/8.
pub fn suggested_dt(omega: f64, gamma: f64, dim: usize) -> f64 {
    0.125 / (omega.abs() * dim as f64).max(gamma).max(1.0)
}

/// Scalar diagnostics recorded at each checkpoint.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub trace: f64,
    pub purity: f64,
    pub mean_n: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug)]
pub struct IntegrationResult {
    /// density matrix at each requested checkpoint time
    pub states: Vec<FockMatrix>,
    pub trajectory: Vec<TrajectoryPoint>,
    /// max chi-probe deviation between dt and dt/2 runs (audit only)
    pub audit_deviation: Option<f64>,
}

fn rk4_step<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(
    rhs: &F,
    rho: &DMatrix<C64>,
    dt: f64,
) -> DMatrix<C64> {
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = rhs(rho);
    let k2 = rhs(&(rho + &k1 * half));
    let k3 = rhs(&(rho + &k2 * half));
    let k4 = rhs(&(rho + &k3 * h));
    rho + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / C64::new(6.0, 0.0))
}

fn diagnostics(t: f64, rho: &FockMatrix) -> Result<TrajectoryPoint> {
    let dim = rho.dim;
    Ok(TrajectoryPoint {
        t,
        trace: rho.trace().re,
        purity: rho.purity(),
        mean_n: expectation(rho, &number(dim)?)?.re,
        mean_x: expectation(rho, &quadrature_x(dim)?)?.re,
        mean_y: expectation(rho, &quadrature_y(dim)?)?.re,
        min_eigenvalue: rho.eigenvalues_hermitian()[0],
    })
}

fn check_drift(tp: &TrajectoryPoint, rho: &FockMatrix, tol: &Tolerances) -> Result<()> {
    if (tp.trace - 1.0).abs() > tol.trace_drift {
        return Err(Error::IntegratorDrift(format!(
            "trace drift {:.3e} at t = {}",
            tp.trace - 1.0,
            tp.t
        )));
    }
    let herm = rho.hermiticity_defect();
    if herm > tol.herm_drift {
        return Err(Error::IntegratorDrift(format!(
            "hermiticity drift {herm:.3e} at t = {}",
            tp.t
        )));
    }
    if tp.min_eigenvalue < tol.positivity_drift {
        return Err(Error::IntegratorDrift(format!(
            "eigenvalue {:.3e} at t = {}",
            tp.min_eigenvalue, tp.t
        )));
    }
    Ok(())
}

fn integrate_once<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(
    rhs: &F,
    rho0: &FockMatrix,
    times: &[f64],
    dt: f64,
    tol: &Tolerances,
) -> Result<(Vec<FockMatrix>, Vec<TrajectoryPoint>)> {
    let mut rho = rho0.mat.clone();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(times.len());
    let mut trajectory = Vec::with_capacity(times.len());
    for &target in times {
        while t < target - 1e-12 * target.max(1.0) {
            let step = dt.min(target - t);
            rho = rk4_step(rhs, &rho, step);
            t += step;
        }
        t = target;
        let snap = FockMatrix { dim: rho0.dim, mat: rho.clone() };
        let tp = diagnostics(t, &snap)?;
        check_drift(&tp, &snap, tol)?;
        trajectory.push(tp);
        states.push(snap);
    }
    Ok((states, trajectory))
}

/// Integrate drho/dt = rhs(rho) from t = 0, snapshotting at each time in
/// `times` (ascending, nonnegative). Invariants are enforced at every
/// checkpoint; with `audit` set the run is repeated at half step and the
/// final states compared through chi probes.
pub fn integrate<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(
    rhs: F,
    rho0: &FockMatrix,
    times: &[f64],
    config: &IntegratorConfig,
) -> Result<IntegrationResult> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no checkpoint times".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::InvalidParameter(
            "checkpoint times must be ascending and nonnegative".into(),
        ));
    }
    if !(config.dt > 0.0) || !config.dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt = {}", config.dt)));
    }
    rho0.check_density(&config.tolerances)?;
    let (states, trajectory) =
        integrate_once(&rhs, rho0, times, config.dt, &config.tolerances)?;
    let mut audit_deviation = None;
    if config.audit {
        let (half_states, _) =
            integrate_once(&rhs, rho0, times, 0.5 * config.dt, &config.tolerances)?;
        let probes = [
            C64::new(0.5, 0.0),
            C64::new(0.0, 1.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 2.0),
            C64::new(-1.5, 0.5),
        ];
        let mut seen: f64 = 0.0;
        let last = states.last().unwrap();
        let last_half = half_states.last().unwrap();
        for &eta in &probes {
            seen = seen.max((char_function(last, eta) - char_function(last_half, eta)).norm());
        }
        if seen > config.tolerances.halving {
            return Err(Error::ConvergenceAudit { seen, limit: config.tolerances.halving });
        }
        audit_deviation = Some(seen);
    }
    Ok(IntegrationResult { states, trajectory, audit_deviation })
}
