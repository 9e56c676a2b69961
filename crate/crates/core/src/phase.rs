//! Characteristic-function and Wigner-function evaluation.
//!
//! chi(eta) = Tr[rho D(eta)]; W(xi) = (2/pi) Tr[rho D(xi) P D(xi)^dagger]
//! (displaced parity), or equivalently the symplectic Fourier transform of
//! chi with kernel e^{xi eta^* - xi^* eta} and prefactor 1/pi^2.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::displacement::{apply_lower, displacement_matrix_stable};
use crate::error::{Error, Result};
use crate::fock::{FockMatrix, FockVector};
use crate::grid::{GridKind, PhaseGrid};
use crate::tol::Tolerances;

/// chi(eta) = Tr[rho D(eta)] through the cancellation-free displacement
/// elements; accurate for any eta on the truncated state.
pub fn char_function(rho: &FockMatrix, eta: C64) -> C64 {
    let d = displacement_matrix_stable(eta, rho.dim).expect("dim checked at construction");
    let mut tot = C64::new(0.0, 0.0);
    for n in 0..rho.dim {
        for m in 0..rho.dim {
            tot += rho.mat[(n, m)] * d.mat[(m, n)];
        }
    }
    tot
}

/// Pure-state shortcut chi = e^{-|eta|^2/2} <e^{eta^* a} psi | e^{-eta^* a} psi>.
/// Cheap, but only accurate while e^{2|eta||alpha|} stays far from 1/eps;
/// grid evaluation uses `char_function` instead.
pub fn char_function_pure(psi: &FockVector, eta: C64) -> C64 {
    let u = apply_lower(eta.conj(), psi);
    let v = apply_lower(-eta.conj(), psi);
    u.amp.dotc(&v.amp) * C64::new((-0.5 * eta.norm_sqr()).exp(), 0.0)
}

/// Sample chi over a square grid (Hermitian symmetry exploited: only half
/// the points are evaluated directly).
pub fn char_grid(rho: &FockMatrix, extent: f64, n_points: usize) -> Result<PhaseGrid> {
    let mut values = DMatrix::<C64>::zeros(n_points, n_points);
    let probe = PhaseGrid::new(extent, n_points, GridKind::Characteristic, values.clone())?;
    let axis = probe.axis();
    let mut filled = vec![false; n_points * n_points];
    for iy in 0..n_points {
        for ix in 0..n_points {
            if filled[iy * n_points + ix] {
                continue;
            }
            let eta = C64::new(axis[ix], axis[iy]);
            let v = char_function(rho, eta);
            values[(iy, ix)] = v;
            filled[iy * n_points + ix] = true;
            if iy >= 1 && ix >= 1 {
                let (my, mx) = (n_points - iy, n_points - ix);
                if my < n_points && mx < n_points && !filled[my * n_points + mx] {
                    values[(my, mx)] = v.conj();
                    filled[my * n_points + mx] = true;
                }
            }
        }
    }
    PhaseGrid::new(extent, n_points, GridKind::Characteristic, values)
}

/// Default chi-grid half-width for a state of maximal amplitude `max_alpha`:
/// the outer chi-peaks of a cat sit at |eta| = 2|alpha|, plus margin so the
/// boundary band clears the aliasing guard.
pub fn default_extent(max_alpha: f64) -> f64 {
    (2.0 * max_alpha + 5.0).max(6.0)
}

/// W(xi) as the expectation of the displaced parity operator.
pub fn wigner_point(rho: &FockMatrix, xi: C64) -> Result<f64> {
    let d = displacement_matrix_stable(xi, rho.dim)?;
    // (2/pi) sum_n (-1)^n <d_n| rho |d_n>, d_n = D e_n
    let m = &rho.mat * &d.mat;
    let mut tot = C64::new(0.0, 0.0);
    for n in 0..rho.dim {
        let val = d.mat.column(n).dotc(&m.column(n));
        tot += if n % 2 == 0 { val } else { -val };
    }
    tot *= C64::new(2.0 / std::f64::consts::PI, 0.0);
    if tot.im.abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!(
            "wigner imaginary residue {:.3e}",
            tot.im.abs()
        )));
    }
    Ok(tot.re)
}

/// Discretize the Eq.-style symplectic Fourier integral of a chi grid into
/// a Wigner grid. Output extent is pi * n / (4 * input extent).
pub fn wigner_grid_via_fft(chi: &PhaseGrid) -> Result<PhaseGrid> {
    wigner_grid_via_fft_tol(chi, &Tolerances::default())
}

pub fn wigner_grid_via_fft_tol(chi: &PhaseGrid, tol: &Tolerances) -> Result<PhaseGrid> {
    if chi.kind != GridKind::Characteristic {
        return Err(Error::InvalidGrid("wigner transform needs a characteristic grid".into()));
    }
    let n = chi.n_points;
    let l = chi.extent;
    let step = chi.step();

    // aliasing guard: outermost rings must carry no weight
    let peak = chi.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let band = chi.boundary_band_rms();
    if band > tol.aliasing_rel * peak {
        return Err(Error::Aliasing { band, limit: tol.aliasing_rel * peak });
    }

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut data = chi.values.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    // forward transform along eta_y (axis 0) -> frequency index = xi_x
    for ix in 0..n {
        for iy in 0..n {
            scratch[iy] = data[(iy, ix)];
        }
        fwd.process(&mut scratch);
        for iy in 0..n {
            data[(iy, ix)] = scratch[iy];
        }
    }
    // positive-sign (unnormalized inverse) transform along eta_x -> xi_y
    for iy in 0..n {
        for ix in 0..n {
            scratch[ix] = data[(iy, ix)];
        }
        inv.process(&mut scratch);
        for ix in 0..n {
            data[(iy, ix)] = scratch[ix];
        }
    }

    let freq = |i: usize| -> f64 {
        if i < n / 2 { i as f64 } else { i as f64 - n as f64 }
    };
    let xi_of = |i: usize| std::f64::consts::PI * freq(i) / (n as f64 * step);
    let pref = step * step / (std::f64::consts::PI * std::f64::consts::PI);
    // data[l, k]: l indexes xi_x, k indexes xi_y; apply phase from the grid
    // starting at -L, then reorder ascending and transpose to [iy, ix]
    let mut out = DMatrix::<C64>::zeros(n, n);
    let mut max_imag: f64 = 0.0;
    for lidx in 0..n {
        let xix = xi_of(lidx);
        for kidx in 0..n {
            let xiy = xi_of(kidx);
            let phase = C64::new(0.0, 2.0 * l * (xix - xiy)).exp();
            let w = data[(lidx, kidx)] * phase * pref;
            // ascending position of a frequency index
            let pos = |i: usize| (i + n / 2) % n;
            out[(pos(kidx), pos(lidx))] = w;
            max_imag = max_imag.max(w.im.abs());
        }
    }
    if max_imag > tol.wigner_imag {
        return Err(Error::InvalidGrid(format!(
            "wigner transform imaginary residue {max_imag:.3e}"
        )));
    }
    let extent_out = std::f64::consts::PI * n as f64 / (4.0 * l);
    PhaseGrid::new(extent_out, n, GridKind::Wigner, out)
}

/// Closed-form cat-state Wigner function,
/// W = (2N/pi)[e^{-2|xi-a|^2} + e^{-2|xi+a|^2} + 2 e^{-2|xi|^2} cos(4 Im(a^* xi))].
pub fn closed_form_cat_wigner(alpha: C64, xi: C64) -> f64 {
    let norm = 1.0 / (2.0 * (1.0 + (-2.0 * alpha.norm_sqr()).exp()));
    (2.0 * norm / std::f64::consts::PI)
        * ((-2.0 * (xi - alpha).norm_sqr()).exp()
            + (-2.0 * (xi + alpha).norm_sqr()).exp()
            + 2.0 * (-2.0 * xi.norm_sqr()).exp() * (4.0 * (alpha.conj() * xi).im).cos())
}

/// Liouville-space Parseval estimate of Tr[rho^2] from a chi grid:
/// sum |chi|^2 * cell / pi.
pub fn purity_from_char_grid(chi: &PhaseGrid) -> f64 {
    chi.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * chi.step().powi(2)
        / std::f64::consts::PI
}
