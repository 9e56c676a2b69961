//! Radial phase-space kick distributions g(|alpha|) and their characteristic
//! functions chi_g, including construction from an apparatus state via
//! g(|alpha|) := N |chi_{Psi^{1/2}}(alpha)|^2.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::displacement::displacement_matrix_stable;
use crate::error::{Error, Result};
use crate::fock::FockMatrix;
use crate::special::{bessel_j0, table_weights};
use crate::tol::Tolerances;

/// Radial kick density; total mass ∫ g d^2 alpha = 2 pi ∫ r g(r) dr = 1.
#[derive(Clone, Debug)]
pub enum KickKind {
    Gaussian { sigma: f64 },
    /// Normalized density samples on ascending radii, with cached
    /// integration weights and cumulative distribution for sampling.
    Tabulated {
        radii: Vec<f64>,
        density: Vec<f64>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct KickDistribution {
    pub kind: KickKind,
}

impl KickDistribution {
    /// g(s) = e^{-s^2/sigma^2} / (pi sigma^2); chi_g(r) = e^{-sigma^2 r^2}.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("gaussian kick sigma {sigma}")));
        }
        Ok(Self { kind: KickKind::Gaussian { sigma } })
    }

    /// Tabulated radial density; renormalized so the plane integral is 1.
    pub fn tabulated(radii: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if radii.len() != density.len() {
            return Err(Error::BadKickTable("radii/density length mismatch".into()));
        }
        if density.iter().any(|&d| d < 0.0 || !d.is_finite()) {
            return Err(Error::BadKickTable("density must be finite and nonnegative".into()));
        }
        if radii.first().map_or(true, |&r| r < 0.0) {
            return Err(Error::BadKickTable("radii must start at >= 0".into()));
        }
        let weights =
            table_weights(&radii).map_err(|e| Error::BadKickTable(e.to_string()))?;
        let mass: f64 = radii
            .iter()
            .zip(&density)
            .zip(&weights)
            .map(|((&r, &g), &w)| 2.0 * std::f64::consts::PI * r * g * w)
            .sum();
        if !(mass > 1e-300) || !mass.is_finite() {
            return Err(Error::BadKickTable(format!("total mass {mass}")));
        }
        let density: Vec<f64> = density.iter().map(|&g| g / mass).collect();
        let mut cumulative = vec![0.0; radii.len()];
        let mut acc = 0.0;
        for i in 0..radii.len() {
            acc += 2.0 * std::f64::consts::PI * radii[i] * density[i] * weights[i];
            cumulative[i] = acc;
        }
        Ok(Self { kind: KickKind::Tabulated { radii, density, weights, cumulative } })
    }

    /// Total plane mass (1 by construction; recomputed for diagnostics).
    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            KickKind::Gaussian { .. } => 1.0,
            KickKind::Tabulated { radii, density, weights, .. } => radii
                .iter()
                .zip(density)
                .zip(weights)
                .map(|((&r, &g), &w)| 2.0 * std::f64::consts::PI * r * g * w)
                .sum(),
        }
    }

    /// chi_g(r): closed form for the Gaussian kind, zeroth-order Hankel
    /// transform 2 pi ∫ s g(s) J0(2 s r) ds for tables.
    pub fn chi_g(&self, r: f64) -> f64 {
        match &self.kind {
            KickKind::Gaussian { sigma } => (-sigma * sigma * r * r).exp(),
            KickKind::Tabulated { radii, density, weights, .. } => radii
                .iter()
                .zip(density)
                .zip(weights)
                .map(|((&s, &g), &w)| {
                    2.0 * std::f64::consts::PI * s * g * bessel_j0(2.0 * s * r) * w
                })
                .sum(),
        }
    }

    /// Second moment ∫ |alpha|^2 g d^2 alpha (= sigma^2 for the Gaussian);
    /// sets the diffusion-limit rate kappa = gamma * m2 / 2.
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            KickKind::Gaussian { sigma } => sigma * sigma,
            KickKind::Tabulated { radii, density, weights, .. } => radii
                .iter()
                .zip(density)
                .zip(weights)
                .map(|((&r, &g), &w)| 2.0 * std::f64::consts::PI * r * r * r * g * w)
                .sum(),
        }
    }

    /// Draw a kick radius from the radial density 2 pi r g(r).
    pub fn sample_radius<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            KickKind::Gaussian { sigma } => {
                // r^2 / sigma^2 ~ Exp(1)
                let u: f64 = rng.gen::<f64>();
                sigma * (-(1.0 - u).ln()).sqrt()
            }
            KickKind::Tabulated { radii, cumulative, .. } => {
                let total = *cumulative.last().unwrap();
                let target = rng.gen::<f64>() * total;
                match cumulative.partition_point(|&c| c < target) {
                    0 => radii[0],
                    i if i >= radii.len() => *radii.last().unwrap(),
                    i => {
                        let (c0, c1) = (cumulative[i - 1], cumulative[i]);
                        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
                        radii[i - 1] + t * (radii[i] - radii[i - 1])
                    }
                }
            }
        }
    }

    /// Radius beyond which the radial density is negligible (< ~1e-14 of peak).
    pub fn support_radius(&self) -> f64 {
        match &self.kind {
            KickKind::Gaussian { sigma } => sigma * (1e14_f64.ln()).sqrt(),
            KickKind::Tabulated { radii, .. } => *radii.last().unwrap(),
        }
    }
}

/// Build the kick distribution of an apparatus state Psi:
/// g(|alpha|) = N |Tr[Psi^{1/2} D(alpha)]|^2, tabulated on a uniform radial
/// grid. Errors if |chi_{Psi^{1/2}}| depends on the phase of alpha.
pub fn kick_distribution_from_apparatus(psi: &FockMatrix, tol: &Tolerances) -> Result<KickDistribution> {
    let sqrt_psi = matrix_sqrt_psd(psi, tol)?;
    let dim = psi.dim;
    let chi_s = |alpha: C64| -> C64 {
        let d = displacement_matrix_stable(alpha, dim).expect("dim >= 2");
        let mut tot = C64::new(0.0, 0.0);
        for n in 0..dim {
            for m in 0..dim {
                tot += sqrt_psi[(n, m)] * d.mat[(m, n)];
            }
        }
        tot
    };
    let h0 = chi_s(C64::new(0.0, 0.0)).norm_sqr();
    if h0 <= 0.0 {
        return Err(Error::BadKickTable("chi at origin vanishes".into()));
    }
    // find the support radius: walk outward until |chi|^2 is negligible
    let mut rmax = 1.0;
    let cap = (2.0 * dim as f64).sqrt();
    while rmax < cap {
        let h = chi_s(C64::new(rmax, 0.0)).norm_sqr();
        if h < 1e-14 * h0 {
            break;
        }
        rmax += 0.5;
    }
    // radial symmetry check at several radii and angles; compares the
    // complex chi (a displaced apparatus keeps |chi| radial but carries an
    // angle-dependent phase, and the g(|alpha|) derivation needs chi itself
    // to be a radial function)
    let mut asym: f64 = 0.0;
    for i in 1..=4 {
        let r = rmax * i as f64 / 5.0;
        let base = chi_s(C64::new(r, 0.0));
        for &th in &[0.7, std::f64::consts::FRAC_PI_2, 2.3, std::f64::consts::PI] {
            let h = chi_s(C64::from_polar(r, th));
            asym = asym.max((h - base).norm_sqr() / h0);
        }
    }
    if asym > tol.apparatus_asymmetry {
        return Err(Error::UnsupportedApparatus(asym));
    }
    let n_samples = 801;
    let radii: Vec<f64> = (0..n_samples)
        .map(|i| rmax * i as f64 / (n_samples - 1) as f64)
        .collect();
    let density: Vec<f64> = radii
        .iter()
        .map(|&r| chi_s(C64::new(r, 0.0)).norm_sqr())
        .collect();
    KickDistribution::tabulated(radii, density)
}

/// Hermitian PSD square root by eigendecomposition; eigenvalues in
/// [-1e-10, 0) are clipped to zero, below that is an error.
pub fn matrix_sqrt_psd(m: &FockMatrix, _tol: &Tolerances) -> Result<nalgebra::DMatrix<C64>> {
    if m.hermiticity_defect() > 1e-10 {
        return Err(Error::InvalidDensity(format!(
            "hermiticity defect {:.3e}",
            m.hermiticity_defect()
        )));
    }
    let herm = (m.mat.clone() + m.mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 {
                return Err(Error::PositivityViolation(*v));
            }
            *v = 0.0;
        }
    }
    let dim = m.dim;
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..dim {
        let s = C64::new(vals[j].sqrt(), 0.0);
        for i in 0..dim {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}
