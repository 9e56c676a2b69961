//! Quadratic Hamiltonians: (Q,P)-basis and ladder-basis coefficient records,
//! the basis conversion, and the Bogoliubov normal form
//! H = z1 a^dagger a + z2 a a + z2^* a^dagger a^dagger + z3 a + z3^* a^dagger
//!   = z0 b^dagger b + c,  b = mu a + nu a^dagger + delta.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ladder, FockMatrix};

/// H = c1 Q^2 + c2 P^2 + c3 (QP + PQ) + c4 Q + c5 P, with explicit length
/// scale lambda and action scale hbar.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadraticQp {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub lambda: f64,
    pub hbar: f64,
}

/// Ladder-basis coefficients (energies); z1 real, z2, z3 complex.
#[derive(Clone, Copy, Debug)]
pub struct QuadraticLadder {
    pub z1: f64,
    pub z2: C64,
    pub z3: C64,
}

impl QuadraticLadder {
    /// z1 > 2|z2| — the condition for a bounded-below normal form.
    pub fn is_stable(&self) -> bool {
        self.z1 > 2.0 * self.z2.norm()
    }
}

/// Output of the Bogoliubov diagonalization.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormalForm {
    /// Level spacing (hbar omega).
    pub z0: f64,
    /// Constant energy shift.
    pub c: f64,
    pub mu: C64,
    pub nu: C64,
    pub delta: C64,
    /// Squeeze parameter, Theta = log sqrt((z1-2|z2|)/(z1+2|z2|)).
    pub theta: f64,
    /// Phase of z2 (0 when z2 = 0).
    pub phi: f64,
}

/// Substitute Q = lambda (b + b^dagger)/sqrt(2), P = hbar (b - b^dagger)/(sqrt(2) i lambda)
/// and normal-order; returns the ladder coefficients and the scalar remainder.
pub fn to_ladder(h: &QuadraticQp) -> Result<(QuadraticLadder, f64)> {
    if !(h.lambda > 0.0) || !(h.hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {}, hbar = {} must be positive",
            h.lambda, h.hbar
        )));
    }
    let l2 = h.lambda * h.lambda;
    let hb2_over_l2 = h.hbar * h.hbar / l2;
    let z1 = h.c1 * l2 + h.c2 * hb2_over_l2;
    let z2 = C64::new(0.5 * (h.c1 * l2 - h.c2 * hb2_over_l2), -h.hbar * h.c3);
    let sqrt2 = 2.0_f64.sqrt();
    let z3 = C64::new(h.c4 * h.lambda / sqrt2, -h.hbar * h.c5 / (sqrt2 * h.lambda));
    let constant = 0.5 * (h.c1 * l2 + h.c2 * hb2_over_l2);
    Ok((QuadraticLadder { z1, z2, z3 }, constant))
}

/// Build the truncated Fock-space matrix of the ladder-basis Hamiltonian.
pub fn ladder_hamiltonian_matrix(h: &QuadraticLadder, dim: usize) -> Result<FockMatrix> {
    let a = ladder(dim)?.mat;
    let ad = a.adjoint();
    let m = &ad * &a * C64::new(h.z1, 0.0)
        + &a * &a * h.z2
        + &ad * &ad * h.z2.conj()
        + &a * h.z3
        + &ad * h.z3.conj();
    Ok(FockMatrix { dim, mat: m })
}

/// Build the (Q,P)-basis Hamiltonian matrix directly from quadrature
/// operators (cross-check partner of `to_ladder`).
pub fn qp_hamiltonian_matrix(h: &QuadraticQp, dim: usize) -> Result<FockMatrix> {
    let a = ladder(dim)?.mat;
    let ad = a.adjoint();
    let sqrt2 = 2.0_f64.sqrt();
    let q = (&a + &ad) * C64::new(h.lambda / sqrt2, 0.0);
    let p = (&a - &ad) * C64::new(0.0, -h.hbar / (sqrt2 * h.lambda));
    let m = &q * &q * C64::new(h.c1, 0.0)
        + &p * &p * C64::new(h.c2, 0.0)
        + (&q * &p + &p * &q) * C64::new(h.c3, 0.0)
        + &q * C64::new(h.c4, 0.0)
        + &p * C64::new(h.c5, 0.0);
    Ok(FockMatrix { dim, mat: m })
}

/// Bogoliubov diagonalization following the closed forms
/// z0 = sqrt(z1^2 - 4|z2|^2), U = cosh(Theta/2), V = sinh(Theta/2),
/// mu = U e^{i phi/2}, nu = V e^{i phi/2}, delta = (2 z2 z3^* - z1 z3)/z0^2.
///
/// Note the printed closed form lists |V|; condition (A.4) fixes the sign,
/// V = sinh(Theta/2) < 0.
pub fn diagonalize(h: &QuadraticLadder) -> Result<NormalForm> {
    let two_abs_z2 = 2.0 * h.z2.norm();
    let gap = h.z1 - two_abs_z2;
    if gap < 0.0 {
        return Err(Error::Unstable { z1: h.z1, two_abs_z2 });
    }
    if gap <= f64::EPSILON * h.z1.abs().max(two_abs_z2) {
        return Err(Error::Degenerate);
    }
    let z0 = (h.z1 * h.z1 - two_abs_z2 * two_abs_z2).sqrt();
    let phi = if h.z2.norm() == 0.0 { 0.0 } else { h.z2.arg() };
    let theta = ((h.z1 - two_abs_z2) / (h.z1 + two_abs_z2)).sqrt().ln();
    let u = (0.5 * (h.z1 + z0) / z0).sqrt();
    let v = -(0.5 * (h.z1 - z0) / z0).sqrt(); // sinh(theta/2), theta < 0
    let half_phase = C64::new(0.0, 0.5 * phi).exp();
    let mu = half_phase * u;
    let nu = half_phase * v;
    let z0sq = z0 * z0;
    let delta = (h.z2 * h.z3.conj() * 2.0 - h.z3 * h.z1) / z0sq;
    let c = 0.5 * (z0 - h.z1)
        + ((h.z2 * h.z3.conj() * h.z3.conj() + h.z2.conj() * h.z3 * h.z3).re
            - h.z1 * h.z3.norm_sqr())
            / z0sq;
    Ok(NormalForm { z0, c, mu, nu, delta, theta, phi })
}

/// Residuals of the three diagonalization conditions (A.2)-(A.4) under the
/// produced (mu, nu, delta); all should vanish.
pub fn diagonalization_residuals(h: &QuadraticLadder, nf: &NormalForm) -> [f64; 3] {
    let (z1, z2, z3) = (C64::new(h.z1, 0.0), h.z2, h.z3);
    let (mu, nu, delta) = (nf.mu, nf.nu, nf.delta);
    let r1 = z1 * nu.conj() * delta
        + z1 * delta.conj() * mu
        + z2.conj() * mu * delta * 2.0
        + z2 * nu.conj() * delta.conj() * 2.0
        + z3.conj() * mu
        + z3 * nu.conj();
    let r2 = z1 * mu.conj() * delta
        + z1 * delta.conj() * nu
        + z2.conj() * nu * delta * 2.0
        + z2 * mu.conj() * delta.conj() * 2.0
        + z3.conj() * nu
        + z3 * mu.conj();
    let r3 = z1 * nu.conj() * mu + z2.conj() * mu * mu + z2 * nu.conj() * nu.conj();
    [r1.norm(), r2.norm(), r3.norm()]
}

/// Compare the k lowest truncation-converged eigenvalues of the ladder
/// Hamiltonian matrix against z0 n + c; returns the max deviation. Errors
/// if doubling the dimension still moves the spectrum by more than 1e-8.
pub fn spectral_check(h: &QuadraticLadder, nf: &NormalForm, dim: usize, k: usize) -> Result<f64> {
    if !h.is_stable() {
        return Err(Error::Unstable { z1: h.z1, two_abs_z2: 2.0 * h.z2.norm() });
    }
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!("k = {k} out of range for dim {dim}")));
    }
    let lower = lowest_eigenvalues(&ladder_hamiltonian_matrix(h, dim)?.mat, k);
    let refined = lowest_eigenvalues(&ladder_hamiltonian_matrix(h, 2 * dim)?.mat, k);
    let drift = lower
        .iter()
        .zip(&refined)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-8 {
        return Err(Error::TruncationNotConverged(drift));
    }
    let mut max_err: f64 = 0.0;
    for (n, ev) in refined.iter().enumerate() {
        max_err = max_err.max((ev - (nf.z0 * n as f64 + nf.c)).abs());
    }
    Ok(max_err)
}

fn lowest_eigenvalues(m: &DMatrix<C64>, k: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.truncate(k);
    ev
}
