//! POVM measurement statistics, the exact characteristic-function
//! propagator, and the compound-Poisson Monte-Carlo unravelling.
//!
//! The POVM effects are pi_alpha = (1/pi) D(alpha) Psi D(alpha)^dagger; the
//! exact propagator is chi(eta, t) = chi_0(eta e^{i omega t}) ·
//! exp{-gamma t [1 - chi_g(|eta|)]}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::displacement::{apply_displacement, displacement_matrix_stable};
use crate::error::{Error, Result};
use crate::fock::{FockMatrix, FockVector};
use crate::grid::{GridKind, PhaseGrid};
use crate::kick::{matrix_sqrt_psd, KickDistribution};
use crate::phase::{char_function, char_function_pure};
use crate::special::gauss_legendre_ab;
use crate::tol::Tolerances;

/// Measurement rate, oscillator frequency, and kick distribution.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    pub gamma: f64,
    pub omega: f64,
    pub kick: KickDistribution,
}

impl MeasurementModel {
    pub fn new(gamma: f64, omega: f64, kick: KickDistribution) -> Result<Self> {
        if gamma < 0.0 || !gamma.is_finite() || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma = {gamma}, omega = {omega}"
            )));
        }
        Ok(Self { gamma, omega, kick })
    }
}

/// Apparatus state Psi: positive, unit trace. Caches Psi^{1/2}.
#[derive(Clone, Debug)]
pub struct ApparatusState {
    pub psi: FockMatrix,
    sqrt_psi: DMatrix<C64>,
}

impl ApparatusState {
    pub fn new(psi: FockMatrix) -> Result<Self> {
        let tol = Tolerances::default();
        if psi.hermiticity_defect() > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "apparatus hermiticity defect {:.3e}",
                psi.hermiticity_defect()
            )));
        }
        if (psi.trace() - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::InvalidDensity(format!("apparatus trace {}", psi.trace())));
        }
        let min_ev = psi.eigenvalues_hermitian()[0];
        if min_ev < -1e-10 {
            return Err(Error::PositivityViolation(min_ev));
        }
        let sqrt_psi = matrix_sqrt_psd(&psi, &tol)?;
        Ok(Self { psi, sqrt_psi })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        let rho = crate::fock::density(&crate::fock::fock_state(0, dim)?);
        Self::new(rho)
    }

    pub fn dim(&self) -> usize {
        self.psi.dim
    }

    pub fn sqrt_psi(&self) -> &DMatrix<C64> {
        &self.sqrt_psi
    }
}

/// Prob(alpha) = Tr[pi_alpha rho] = (1/pi) Tr[D Psi D^dagger rho].
pub fn povm_probability(rho: &FockMatrix, psi: &ApparatusState, alpha: C64) -> Result<f64> {
    if rho.dim != psi.dim() {
        return Err(Error::DimensionMismatch(rho.dim, psi.dim()));
    }
    let d = displacement_matrix_stable(alpha, rho.dim)?;
    // Tr[(D^dagger rho D) Psi]
    let m = d.mat.adjoint() * &rho.mat * &d.mat;
    let mut tot = C64::new(0.0, 0.0);
    for n in 0..rho.dim {
        for k in 0..rho.dim {
            tot += m[(n, k)] * psi.psi.mat[(k, n)];
        }
    }
    Ok((tot.re / std::f64::consts::PI).max(0.0))
}

/// Rank decomposition of a Hermitian PSD matrix: (weight, vector) pairs
/// above a cutoff; lets Prob(alpha) be evaluated with vector displacements.
struct RankDecomp {
    pairs: Vec<(f64, FockVector)>,
}

impl RankDecomp {
    fn of(m: &DMatrix<C64>, cutoff: f64) -> Self {
        let herm = (m.clone() + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(herm);
        let dim = m.nrows();
        let mut pairs = Vec::new();
        for j in 0..dim {
            let w = eig.eigenvalues[j];
            if w > cutoff {
                let amp = DVector::from_fn(dim, |i, _| eig.eigenvectors[(i, j)]);
                pairs.push((w, FockVector { dim, amp }));
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Self { pairs }
    }
}

/// Shared machinery for POVM quadrature and sampling: eigendecompositions of
/// rho and Psi so that Prob(alpha) = (1/pi) sum_ij p_i l_j |<v_i|D(alpha)|u_j>|^2.
pub struct PovmEvaluator {
    rho_pairs: RankDecomp,
    psi_pairs: RankDecomp,
}

impl PovmEvaluator {
    pub fn new(rho: &FockMatrix, psi: &ApparatusState) -> Result<Self> {
        if rho.dim != psi.dim() {
            return Err(Error::DimensionMismatch(rho.dim, psi.dim()));
        }
        Ok(Self {
            rho_pairs: RankDecomp::of(&rho.mat, 1e-13),
            psi_pairs: RankDecomp::of(&psi.psi.mat, 1e-13),
        })
    }

    pub fn probability(&self, alpha: C64) -> f64 {
        let mut tot = 0.0;
        for (lam, u) in &self.psi_pairs.pairs {
            let du = apply_displacement(alpha, u);
            for (p, v) in &self.rho_pairs.pairs {
                tot += p * lam * v.amp.dotc(&du.amp).norm_sqr();
            }
        }
        (tot / std::f64::consts::PI).max(0.0)
    }

    /// Mean occupation implied by the decompositions; used to size the
    /// quadrature domain.
    fn amplitude_scale(&self) -> f64 {
        let nbar = |pairs: &RankDecomp| -> f64 {
            pairs
                .pairs
                .iter()
                .map(|(w, v)| {
                    w * v
                        .amp
                        .iter()
                        .enumerate()
                        .map(|(n, a)| n as f64 * a.norm_sqr())
                        .sum::<f64>()
                })
                .sum()
        };
        nbar(&self.rho_pairs).sqrt() + nbar(&self.psi_pairs).sqrt()
    }
}

/// Moment M_ij = ∫ Prob(alpha) alpha_x^i alpha_y^j d^2 alpha by radial
/// Gauss–Legendre times angular trapezoid quadrature.
pub fn povm_moments(rho: &FockMatrix, psi: &ApparatusState, i: u32, j: u32) -> Result<f64> {
    if i + j > 4 {
        return Err(Error::InvalidParameter(format!("moment order {i}+{j} > 4", )));
    }
    let ev = PovmEvaluator::new(rho, psi)?;
    let r_max = 2.0 * ev.amplitude_scale() + 7.0;
    let (radii, wr) = gauss_legendre_ab(96, 0.0, r_max);
    let n_angle = 64;
    let mut total = 0.0;
    for (&r, &w) in radii.iter().zip(&wr) {
        for k in 0..n_angle {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_angle as f64;
            let alpha = C64::from_polar(r, th);
            let weight = w * r * 2.0 * std::f64::consts::PI / n_angle as f64;
            total += weight * ev.probability(alpha) * alpha.re.powi(i as i32) * alpha.im.powi(j as i32);
        }
    }
    Ok(total)
}

/// Post-measurement state A_alpha rho A_alpha^dagger / Tr[pi_alpha rho]
/// with A_alpha = (1/sqrt(pi)) D(alpha) Psi^{1/2} D(alpha)^dagger.
pub fn post_measurement_state(
    rho: &FockMatrix,
    psi: &ApparatusState,
    alpha: C64,
) -> Result<FockMatrix> {
    if rho.dim != psi.dim() {
        return Err(Error::DimensionMismatch(rho.dim, psi.dim()));
    }
    let d = displacement_matrix_stable(alpha, rho.dim)?;
    let a = &d.mat * psi.sqrt_psi() * d.mat.adjoint() * C64::new(1.0 / std::f64::consts::PI.sqrt(), 0.0);
    let num = &a * &rho.mat * a.adjoint();
    let p = num.trace().re;
    if p < 1e-14 {
        return Err(Error::ZeroProbability);
    }
    Ok(FockMatrix { dim: rho.dim, mat: num / C64::new(p, 0.0) })
}

/// i.i.d. outcomes from Prob(alpha) by rejection sampling against a
/// moment-matched Gaussian envelope (variances inflated by 1.5).
pub fn sample_outcomes(
    rho: &FockMatrix,
    psi: &ApparatusState,
    n: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let ev = PovmEvaluator::new(rho, psi)?;
    let m10 = povm_moments(rho, psi, 1, 0)?;
    let m01 = povm_moments(rho, psi, 0, 1)?;
    let var_x = povm_moments(rho, psi, 2, 0)? - m10 * m10;
    let var_y = povm_moments(rho, psi, 0, 2)? - m01 * m01;
    if var_x <= 0.0 || var_y <= 0.0 {
        return Err(Error::QuadratureFailure(format!(
            "nonpositive variances ({var_x}, {var_y})"
        )));
    }
    let (sx, sy) = ((1.5 * var_x).sqrt(), (1.5 * var_y).sqrt());
    let envelope = |a: C64| -> f64 {
        let zx = (a.re - m10) / sx;
        let zy = (a.im - m01) / sy;
        (-0.5 * (zx * zx + zy * zy)).exp() / (2.0 * std::f64::consts::PI * sx * sy)
    };
    // bound the density/envelope ratio on a scan grid, with safety margin
    let mut ratio_bound: f64 = 0.0;
    for iy in 0..41 {
        for ix in 0..41 {
            let a = C64::new(
                m10 + sx * (-5.0 + 0.25 * ix as f64),
                m01 + sy * (-5.0 + 0.25 * iy as f64),
            );
            let q = envelope(a);
            if q > 1e-300 {
                ratio_bound = ratio_bound.max(ev.probability(a) / q);
            }
        }
    }
    let bound = 1.2 * ratio_bound;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n {
            return Err(Error::EnvelopeFailure(bound));
        }
        let gx: f64 = StandardNormal.sample(&mut rng);
        let gy: f64 = StandardNormal.sample(&mut rng);
        let a = C64::new(m10 + sx * gx, m01 + sy * gy);
        let ratio = ev.probability(a) / (bound * envelope(a));
        if ratio > 1.0 {
            return Err(Error::EnvelopeFailure(ratio * bound));
        }
        if rng.gen::<f64>() < ratio {
            out.push(a);
        }
    }
    Ok(out)
}

/// Where the initial characteristic function comes from.
pub enum ChiSource<'a> {
    Pure(&'a FockVector),
    Mixed(&'a FockMatrix),
    Grid(&'a PhaseGrid),
}

impl ChiSource<'_> {
    fn eval(&self, eta: C64) -> Result<C64> {
        match self {
            ChiSource::Pure(psi) => Ok(char_function_pure(psi, eta)),
            ChiSource::Mixed(rho) => Ok(char_function(rho, eta)),
            ChiSource::Grid(grid) => bicubic(grid, eta),
        }
    }

    fn is_grid(&self) -> bool {
        matches!(self, ChiSource::Grid(_))
    }
}

/// Exact propagator at a single point:
/// chi(eta, t) = chi_0(eta e^{i omega t}) exp{-gamma t [1 - chi_g(|eta|)]}.
pub fn evolve_char_point(
    source: &ChiSource,
    model: &MeasurementModel,
    t: f64,
    eta: C64,
) -> Result<C64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("t = {t} must be nonnegative")));
    }
    let rotated = eta * C64::new(0.0, model.omega * t).exp();
    let chi0 = source.eval(rotated)?;
    let damp = (-model.gamma * t * (1.0 - model.kick.chi_g(eta.norm()))).exp();
    Ok(chi0 * damp)
}

/// Exact-propagator grid; `interpolated` records whether any value came
/// from grid interpolation rather than re-evaluation of the stored state.
pub struct EvolvedChar {
    pub grid: PhaseGrid,
    pub interpolated: bool,
}

/// Evaluate the exact propagator over a square grid.
pub fn evolve_char(
    source: &ChiSource,
    model: &MeasurementModel,
    t: f64,
    extent: f64,
    n_points: usize,
) -> Result<EvolvedChar> {
    let mut values = DMatrix::<C64>::zeros(n_points, n_points);
    let shape = PhaseGrid::new(extent, n_points, GridKind::Characteristic, values.clone())?;
    let axis = shape.axis();
    for (iy, &y) in axis.iter().enumerate() {
        for (ix, &x) in axis.iter().enumerate() {
            values[(iy, ix)] = evolve_char_point(source, model, t, C64::new(x, y))?;
        }
    }
    let grid = PhaseGrid::new(extent, n_points, GridKind::Characteristic, values)?;
    Ok(EvolvedChar { grid, interpolated: source.is_grid() })
}

/// Catmull-Rom bicubic interpolation of a chi grid (real and imaginary
/// parts independently); errors outside the grid extent.
fn bicubic(grid: &PhaseGrid, z: C64) -> Result<C64> {
    let l = grid.extent;
    let step = grid.step();
    let n = grid.n_points as isize;
    let fx = (z.re + l) / step;
    let fy = (z.im + l) / step;
    if fx < 0.0 || fy < 0.0 || fx > (grid.n_points - 1) as f64 || fy > (grid.n_points - 1) as f64 {
        return Err(Error::OutsideGrid { re: z.re, im: z.im, extent: l });
    }
    let ix = (fx.floor() as isize).min(n - 2);
    let iy = (fy.floor() as isize).min(n - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let clamp = |i: isize| i.clamp(0, n - 1) as usize;
    let kernel = |t: f64, p: [C64; 4]| -> C64 {
        // Catmull-Rom spline through p[0..4] evaluated between p[1] and p[2]
        let t2 = t * t;
        let t3 = t2 * t;
        (p[1] * 2.0
            + (p[2] - p[0]) * t
            + (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) * t2
            + (p[3] - p[0] + (p[1] - p[2]) * 3.0) * t3)
            * 0.5
    };
    let mut rows = [C64::new(0.0, 0.0); 4];
    for (k, row) in rows.iter_mut().enumerate() {
        let ry = clamp(iy - 1 + k as isize);
        let p = [
            grid.values[(ry, clamp(ix - 1))],
            grid.values[(ry, clamp(ix))],
            grid.values[(ry, clamp(ix + 1))],
            grid.values[(ry, clamp(ix + 2))],
        ];
        *row = kernel(tx, p);
    }
    Ok(kernel(ty, rows))
}

/// Trajectory-resolved Monte-Carlo unravelling: jumps at Poisson(gamma)
/// times, each applying D(alpha) with radius from g and uniform angle, free
/// rotation in between. Returns the averaged density matrix.
pub fn monte_carlo_unravelling(
    rho0: &FockMatrix,
    model: &MeasurementModel,
    t: f64,
    n_traj: usize,
    seed: u64,
) -> Result<FockMatrix> {
    let dim = rho0.dim;
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    run_trajectories(rho0, model, t, n_traj, seed, |psi| {
        acc += &psi.amp * psi.amp.adjoint();
        Ok(())
    })?;
    Ok(FockMatrix { dim, mat: acc / C64::new(n_traj as f64, 0.0) })
}

/// Monte-Carlo estimate of chi at probe points, with per-point standard
/// errors of the mean (complex scatter).
pub fn monte_carlo_char_probe(
    rho0: &FockMatrix,
    model: &MeasurementModel,
    t: f64,
    n_traj: usize,
    seed: u64,
    probes: &[C64],
) -> Result<(Vec<C64>, Vec<f64>)> {
    let mut sums = vec![C64::new(0.0, 0.0); probes.len()];
    let mut sq_sums = vec![0.0f64; probes.len()];
    run_trajectories(rho0, model, t, n_traj, seed, |psi| {
        for (k, &eta) in probes.iter().enumerate() {
            let v = char_function_pure(psi, eta);
            sums[k] += v;
            sq_sums[k] += v.norm_sqr();
        }
        Ok(())
    })?;
    let nf = n_traj as f64;
    let means: Vec<C64> = sums.iter().map(|&s| s / nf).collect();
    let ses: Vec<f64> = means
        .iter()
        .zip(&sq_sums)
        .map(|(&m, &sq)| ((sq / nf - m.norm_sqr()).max(0.0) / nf).sqrt())
        .collect();
    Ok((means, ses))
}

fn run_trajectories<F: FnMut(&FockVector) -> Result<()>>(
    rho0: &FockMatrix,
    model: &MeasurementModel,
    t: f64,
    n_traj: usize,
    seed: u64,
    mut visit: F,
) -> Result<()> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let initial = RankDecomp::of(&rho0.mat, 1e-13);
    let total_weight: f64 = initial.pairs.iter().map(|(w, _)| w).sum();
    for idx in 0..n_traj {
        // deterministic per-trajectory stream regardless of scheduling
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(1 + idx as u64);
        // draw an initial pure state from the eigen-ensemble
        let draw = rng.gen::<f64>() * total_weight;
        let mut running = 0.0;
        let mut psi = initial.pairs[0].1.clone();
        for (w, v) in &initial.pairs {
            running += w;
            if draw <= running {
                psi = v.clone();
                break;
            }
        }
        evolve_trajectory(&mut psi, model, t, &mut rng)?;
        visit(&psi)?;
    }
    Ok(())
}

fn evolve_trajectory(
    psi: &mut FockVector,
    model: &MeasurementModel,
    t: f64,
    rng: &mut ChaCha12Rng,
) -> Result<()> {
    let dim = psi.dim;
    let rotate = |psi: &mut FockVector, dt: f64| {
        for n in 0..dim {
            psi.amp[n] *= C64::new(0.0, -model.omega * dt * n as f64).exp();
        }
    };
    let mut elapsed = 0.0;
    if model.gamma > 0.0 {
        loop {
            let wait = -(1.0 - rng.gen::<f64>()).ln() / model.gamma;
            if elapsed + wait >= t {
                break;
            }
            elapsed += wait;
            rotate(psi, wait);
            let r = model.kick.sample_radius(rng);
            let th = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            *psi = apply_displacement(C64::from_polar(r, th), psi);
            let norm = psi.norm();
            if (norm - 1.0).abs() > 1e-2 {
                return Err(Error::TruncationTooSmall {
                    dim,
                    tail: (norm - 1.0).abs(),
                    limit: 1e-2,
                });
            }
            psi.normalize()?;
        }
    }
    rotate(psi, t - elapsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, density, fock_state};
    use approx::assert_abs_diff_eq;

    fn vacuum_rho(dim: usize) -> FockMatrix {
        density(&fock_state(0, dim).unwrap())
    }

    #[test]
    fn povm_probability_vacuum_values() {
        let dim = 24;
        let rho = vacuum_rho(dim);
        let psi = ApparatusState::vacuum(dim).unwrap();
        let p0 = povm_probability(&rho, &psi, C64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p0, 1.0 / std::f64::consts::PI, epsilon = 1e-12);
        // Husimi of the vacuum: e^{-|alpha|^2}/pi
        for alpha in [C64::new(1.0, 0.0), C64::new(0.5, -1.5), C64::new(0.0, 2.0)] {
            let p = povm_probability(&rho, &psi, alpha).unwrap();
            assert_abs_diff_eq!(
                p,
                (-alpha.norm_sqr()).exp() / std::f64::consts::PI,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn povm_evaluator_matches_trace_formula() {
        let dim = 32;
        let rho = density(&coherent_state(C64::new(1.0, 0.5), dim).unwrap());
        let psi = ApparatusState::vacuum(dim).unwrap();
        let ev = PovmEvaluator::new(&rho, &psi).unwrap();
        for alpha in [C64::new(0.3, 0.3), C64::new(1.5, -0.5), C64::new(-1.0, 2.0)] {
            let a = ev.probability(alpha);
            let b = povm_probability(&rho, &psi, alpha).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn povm_moments_first_and_second() {
        let dim = 40;
        let beta = C64::new(1.0, 2.0);
        let rho = density(&coherent_state(beta, dim).unwrap());
        let psi = ApparatusState::vacuum(dim).unwrap();
        assert_abs_diff_eq!(povm_moments(&rho, &psi, 0, 0).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(povm_moments(&rho, &psi, 1, 0).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(povm_moments(&rho, &psi, 0, 1).unwrap(), 2.0, epsilon = 1e-6);
        // M20 - M10^2 = <X^2>_rho + <X^2>_Psi (central) = 1/4 + 1/4
        let m20 = povm_moments(&rho, &psi, 2, 0).unwrap();
        assert_abs_diff_eq!(m20 - 1.0, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn povm_moments_vacuum_variance() {
        let dim = 24;
        let rho = vacuum_rho(dim);
        let psi = ApparatusState::vacuum(dim).unwrap();
        let var = povm_moments(&rho, &psi, 2, 0).unwrap();
        assert_abs_diff_eq!(var, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn post_measurement_fixed_point_and_projection() {
        let dim = 32;
        let rho = vacuum_rho(dim);
        let psi = ApparatusState::vacuum(dim).unwrap();
        let post0 = post_measurement_state(&rho, &psi, C64::new(0.0, 0.0)).unwrap();
        assert!((post0.mat.clone() - rho.mat.clone()).norm() < 1e-12);

        // projective apparatus: outcome alpha collapses anything onto |alpha>
        let alpha = C64::new(0.7, -0.4);
        let start = density(&coherent_state(C64::new(-0.5, 0.3), dim).unwrap());
        let post = post_measurement_state(&start, &psi, alpha).unwrap();
        let target = density(&coherent_state(alpha, dim).unwrap());
        assert!((post.mat - target.mat).norm() < 1e-8);
        post_measurement_state(&start, &psi, alpha)
            .unwrap()
            .check_density(&Tolerances::default())
            .unwrap();
    }

    #[test]
    fn sampling_reproducible_and_unbiased() {
        let dim = 40;
        let beta = C64::new(1.0, 2.0);
        let rho = density(&coherent_state(beta, dim).unwrap());
        let psi = ApparatusState::vacuum(dim).unwrap();
        let n = 4000;
        let s1 = sample_outcomes(&rho, &psi, n, 7).unwrap();
        let s2 = sample_outcomes(&rho, &psi, n, 7).unwrap();
        assert_eq!(s1, s2);
        let mean_x: f64 = s1.iter().map(|a| a.re).sum::<f64>() / n as f64;
        let mean_y: f64 = s1.iter().map(|a| a.im).sum::<f64>() / n as f64;
        let se = (0.5 / n as f64).sqrt();
        assert!((mean_x - 1.0).abs() < 3.0 * se, "mean_x {mean_x}");
        assert!((mean_y - 2.0).abs() < 3.0 * se, "mean_y {mean_y}");
    }

    #[test]
    fn evolve_char_identity_and_rotation() {
        let dim = 48;
        let psi0 = coherent_state(C64::new(1.0, 0.0), dim).unwrap();
        let model = MeasurementModel::new(0.7, 3.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let src = ChiSource::Pure(&psi0);
        let eta = C64::new(0.8, -0.3);
        // t = 0 leaves chi unchanged
        let v = evolve_char_point(&src, &model, 0.0, eta).unwrap();
        assert!((v - char_function_pure(&psi0, eta)).norm() < 1e-14);
        // gamma = 0: Fock states are rotation-invariant
        let fock = fock_state(2, dim).unwrap();
        let model_free =
            MeasurementModel::new(0.0, 3.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let src_f = ChiSource::Pure(&fock);
        for t in [0.0, 0.4, 1.3] {
            let v = evolve_char_point(&src_f, &model_free, t, eta).unwrap();
            assert!((v - char_function_pure(&fock, eta)).norm() < 1e-12);
        }
    }

    #[test]
    fn evolve_char_outer_peak_damping() {
        let dim = 72;
        let cat = crate::fock::cat_state(C64::new(0.0, 3.0), dim).unwrap();
        let model = MeasurementModel::new(1.0, 10.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let src = ChiSource::Pure(&cat);
        let t = 1.0;
        let eta0 = C64::new(0.0, 6.0);
        // probe the rotated image of the t=0 outer peak
        let eta_t = eta0 * C64::new(0.0, -model.omega * t).exp();
        let ratio = evolve_char_point(&src, &model, t, eta_t).unwrap().norm()
            / char_function_pure(&cat, eta0).norm();
        let expect = (-(1.0 - (-9.0_f64).exp())).exp();
        assert_abs_diff_eq!(ratio, expect, epsilon = 1e-9);
        assert_abs_diff_eq!(expect, 0.367_925, epsilon = 1e-6);
    }

    #[test]
    fn evolve_char_normalization_and_envelope() {
        let dim = 64;
        let cat = crate::fock::cat_state(C64::new(0.0, 3.0), dim).unwrap();
        let model = MeasurementModel::new(1.3, 4.0, KickDistribution::gaussian(0.4).unwrap()).unwrap();
        let src = ChiSource::Pure(&cat);
        for t in [0.0, 0.5, 2.0] {
            let origin = evolve_char_point(&src, &model, t, C64::new(0.0, 0.0)).unwrap();
            assert!((origin - C64::new(1.0, 0.0)).norm() < 1e-10);
            for eta in [C64::new(1.0, 0.0), C64::new(0.0, 6.0), C64::new(2.0, 2.0)] {
                let now = evolve_char_point(&src, &model, t, eta).unwrap().norm();
                let rotated = eta * C64::new(0.0, model.omega * t).exp();
                assert!(now <= char_function_pure(&cat, rotated).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn evolve_char_semigroup() {
        let dim = 64;
        let cat = crate::fock::cat_state(C64::new(0.0, 3.0), dim).unwrap();
        let rho = density(&cat);
        let model = MeasurementModel::new(0.9, 2.5, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let (t1, t2) = (0.4, 0.7);
        // evolve to t1 on a grid, then continue from the grid to t1+t2
        let src = ChiSource::Mixed(&rho);
        for eta in [C64::new(0.5, 0.5), C64::new(0.0, 2.0), C64::new(-1.5, 0.3)] {
            let direct = evolve_char_point(&src, &model, t1 + t2, eta).unwrap();
            // composition in closed form: damping factors multiply, rotations add
            let mid = evolve_char_point(&src, &model, t1, eta * C64::new(0.0, model.omega * t2).exp()).unwrap();
            let step = mid * (-model.gamma * t2 * (1.0 - model.kick.chi_g(eta.norm()))).exp();
            assert!((direct - step).norm() < 1e-12, "semigroup defect {}", (direct - step).norm());
        }
    }

    #[test]
    fn evolve_char_grid_source_interpolates() {
        let dim = 48;
        let rho = density(&coherent_state(C64::new(0.8, 0.0), dim).unwrap());
        let chi0 = crate::phase::char_grid(&rho, 7.0, 128).unwrap();
        let model = MeasurementModel::new(0.8, 1.5, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let t = 0.6;
        let from_grid = evolve_char(&ChiSource::Grid(&chi0), &model, t, 4.0, 32).unwrap();
        assert!(from_grid.interpolated);
        let from_state = evolve_char(&ChiSource::Mixed(&rho), &model, t, 4.0, 32).unwrap();
        assert!(!from_state.interpolated);
        let dev = (&from_grid.grid.values - &from_state.grid.values)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "interpolation error {dev}");
    }

    #[test]
    fn evolve_char_grid_source_out_of_range() {
        let dim = 32;
        let rho = vacuum_rho(dim);
        let chi0 = crate::phase::char_grid(&rho, 3.0, 16).unwrap();
        let model = MeasurementModel::new(0.5, 1.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let res = evolve_char(&ChiSource::Grid(&chi0), &model, 0.3, 6.0, 16);
        assert!(matches!(res, Err(Error::OutsideGrid { .. })));
    }

    #[test]
    fn monte_carlo_free_evolution_is_exact() {
        let dim = 32;
        let rho = density(&coherent_state(C64::new(1.0, 0.0), dim).unwrap());
        let model = MeasurementModel::new(0.0, 2.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let t = 0.9;
        let mc = monte_carlo_unravelling(&rho, &model, t, 3, 42).unwrap();
        let expect_alpha = C64::new(1.0, 0.0) * C64::new(0.0, -2.0 * t).exp();
        let target = density(&coherent_state(expect_alpha, dim).unwrap());
        assert!((mc.mat - target.mat).norm() < 1e-10);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let dim = 32;
        let rho = vacuum_rho(dim);
        let model = MeasurementModel::new(1.0, 10.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
        let t = 1.0;
        let probes = [C64::new(1.0, 0.0)];
        let (means, ses) = monte_carlo_char_probe(&rho, &model, t, 2000, 7, &probes).unwrap();
        let vac = fock_state(0, dim).unwrap();
        let exact = evolve_char_point(&ChiSource::Pure(&vac), &model, t, probes[0]).unwrap();
        let dev = (means[0] - exact).norm();
        assert!(dev < 3.0 * ses[0], "dev {dev} vs 3 se {}", 3.0 * ses[0]);
    }

    #[test]
    fn monte_carlo_reproducible() {
        let dim = 24;
        let rho = vacuum_rho(dim);
        let model = MeasurementModel::new(1.0, 3.0, KickDistribution::gaussian(0.4).unwrap()).unwrap();
        let a = monte_carlo_unravelling(&rho, &model, 0.5, 50, 9).unwrap();
        let b = monte_carlo_unravelling(&rho, &model, 0.5, 50, 9).unwrap();
        assert_eq!(a.mat, b.mat);
    }
}
