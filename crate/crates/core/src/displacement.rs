//! Displacement operator D(alpha) = e^{alpha a^dagger - alpha^* a} in the
//! truncated Fock basis, plus vector-level applications.
//!
//! Two matrix builds are provided:
//!  * `displacement_matrix` — the normal-ordered triangular product
//!    e^{-|a|^2/2} e^{alpha a^dagger} e^{-alpha^* a}. Exact in truncation but
//!    its entries cancel catastrophically once |alpha|^2 · dim gets large.
//!  * `displacement_matrix_stable` — matrix elements through the scaled
//!    associated-Laguerre recurrence; every intermediate is bounded, accurate
//!    to machine precision for any argument. Characteristic-function code
//!    uses this path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockMatrix, FockVector};

/// Normal-ordered construction of D(alpha); errors when the displaced
/// vacuum would not fit in the truncated space.
pub fn displacement_matrix(alpha: C64, dim: usize) -> Result<FockMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if alpha.norm_sqr() > dim as f64 / 4.0 {
        return Err(Error::DisplacementOutOfRange(alpha.norm_sqr(), dim));
    }
    // L = e^{alpha a^dagger} (lower triangular), U = e^{-alpha^* a} (upper)
    let mut lo = DMatrix::<C64>::identity(dim, dim);
    let mut up = DMatrix::<C64>::identity(dim, dim);
    for k in 0..dim {
        let mut val = C64::new(1.0, 0.0);
        for m in k + 1..dim {
            let j = (m - k) as f64;
            val = val * alpha * C64::new((m as f64).sqrt() / j, 0.0);
            lo[(m, k)] = val;
        }
    }
    let neg_ac = -alpha.conj();
    for n in 0..dim {
        let mut val = C64::new(1.0, 0.0);
        for k in (0..n).rev() {
            let j = (n - k) as f64;
            val = val * neg_ac * C64::new(((k + 1) as f64).sqrt() / j, 0.0);
            up[(k, n)] = val;
        }
    }
    let pref = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    Ok(FockMatrix { dim, mat: lo * up * pref })
}

/// Cancellation-free D(alpha) via the scaled associated-Laguerre recurrence
///   s_n = sqrt(n!/(n+k)!) L_n^{(k)}(|alpha|^2),
///   D_{n+k,n} = e^{-x/2} alpha^k s_n,  D_{n,n+k} = e^{-x/2} (-alpha^*)^k s_n.
pub fn displacement_matrix_stable(alpha: C64, dim: usize) -> Result<FockMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let x = alpha.norm_sqr();
    let pref = (-0.5 * x).exp();
    let mut d = DMatrix::<C64>::zeros(dim, dim);
    let mut s = vec![0.0f64; dim];
    for k in 0..dim {
        let nmax = dim - k;
        // s_0 = 1/sqrt(k!)
        let mut lk = 1.0;
        for j in 1..=k {
            lk /= (j as f64).sqrt();
        }
        s[0] = lk;
        if nmax > 1 {
            s[1] = (1.0 + k as f64 - x) * lk / ((k as f64) + 1.0).sqrt();
        }
        for n in 1..nmax.saturating_sub(1) {
            let nf = n as f64;
            let kf = k as f64;
            s[n + 1] = ((nf + 1.0) / (nf + 1.0 + kf)).sqrt()
                * ((2.0 * nf + kf + 1.0 - x) * s[n] - (nf * (nf + kf)).sqrt() * s[n - 1])
                / (nf + 1.0);
        }
        let pref_u = alpha.powu(k as u32) * pref;
        let pref_l = (-alpha.conj()).powu(k as u32) * pref;
        for n in 0..nmax {
            d[(n + k, n)] = pref_u * C64::new(s[n], 0.0);
            if k > 0 {
                d[(n, n + k)] = pref_l * C64::new(s[n], 0.0);
            }
        }
    }
    Ok(FockMatrix { dim, mat: d })
}

/// e^{beta a} |psi> by direct series accumulation. Accurate when psi has no
/// significant weight near the truncation edge.
pub fn apply_lower(beta: C64, psi: &FockVector) -> FockVector {
    let dim = psi.dim;
    let mut out = psi.amp.clone();
    let mut term = psi.amp.clone();
    for j in 1..dim {
        let mut next = DVector::<C64>::zeros(dim);
        for n in 0..dim - 1 {
            next[n] = term[n + 1] * beta * C64::new(((n + 1) as f64).sqrt() / j as f64, 0.0);
        }
        term = next;
        out += &term;
        if term.norm() < 1e-18 * out.norm().max(1.0) {
            break;
        }
    }
    FockVector { dim, amp: out }
}

/// e^{beta a^dagger} |psi> by direct series accumulation.
pub fn apply_raise(beta: C64, psi: &FockVector) -> FockVector {
    let dim = psi.dim;
    let mut out = psi.amp.clone();
    let mut term = psi.amp.clone();
    for j in 1..dim {
        let mut next = DVector::<C64>::zeros(dim);
        for n in 1..dim {
            next[n] = term[n - 1] * beta * C64::new((n as f64).sqrt() / j as f64, 0.0);
        }
        term = next;
        out += &term;
        if term.norm() < 1e-18 * out.norm().max(1.0) {
            break;
        }
    }
    FockVector { dim, amp: out }
}

/// D(alpha)|psi> = e^{-|alpha|^2/2} e^{alpha a^dagger} e^{-alpha^* a} |psi>.
pub fn apply_displacement(alpha: C64, psi: &FockVector) -> FockVector {
    let u = apply_lower(-alpha.conj(), psi);
    let mut v = apply_raise(alpha, &u);
    let pref = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v.amp *= pref;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state};
    use approx::assert_abs_diff_eq;

    #[test]
    fn d_zero_is_identity() {
        let d = displacement_matrix(C64::new(0.0, 0.0), 8).unwrap();
        assert_abs_diff_eq!((&d.mat - DMatrix::<C64>::identity(8, 8)).norm(), 0.0, epsilon = 1e-15);
        let ds = displacement_matrix_stable(C64::new(0.0, 0.0), 8).unwrap();
        assert_abs_diff_eq!((&ds.mat - DMatrix::<C64>::identity(8, 8)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_matrix_element() {
        let d = displacement_matrix(C64::new(1.0, 0.0), 32).unwrap();
        assert_abs_diff_eq!(d.mat[(0, 0)].re, (-0.5_f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.mat[(0, 0)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let alpha = C64::new(0.7, -1.1);
        let dim = 48;
        let d = displacement_matrix(alpha, dim).unwrap();
        let coh = coherent_state(alpha, dim).unwrap();
        let col = d.mat.column(0).clone_owned();
        assert!((col - &coh.amp).norm() < 1e-8);
    }

    #[test]
    fn stable_matches_normal_ordered_at_moderate_argument() {
        // |alpha| <~ 2: beyond that the normal-ordered reference loses more
        // digits to cancellation than this comparison allows
        for alpha in [C64::new(0.7, 0.3), C64::new(0.0, 2.0), C64::new(1.2, -1.0)] {
            let d1 = displacement_matrix(alpha, 40).unwrap();
            let d2 = displacement_matrix_stable(alpha, 40).unwrap();
            let dev = (&d1.mat - &d2.mat)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            // the normal-ordered corner loses digits first; interior agrees
            let dev_interior = (0..30)
                .flat_map(|m| (0..30).map(move |n| (m, n)))
                .map(|(m, n)| (d1.mat[(m, n)] - d2.mat[(m, n)]).norm())
                .fold(0.0, f64::max);
            assert!(dev_interior < 1e-9, "interior dev {dev_interior} (full {dev})");
        }
    }

    #[test]
    fn stable_large_argument_reference() {
        // reference values for <m|D(-8-8i)|n> from an extended-precision
        // associated-Laguerre evaluation
        let alpha = C64::new(-8.0, -8.0);
        let d = displacement_matrix_stable(alpha, 64).unwrap();
        // <0|D|0> = e^{-64}
        assert_abs_diff_eq!(d.mat[(0, 0)].re, (-64.0_f64).exp(), epsilon = 1e-25);
        // all entries of a unitary's truncation are bounded by 1
        let maxabs = d.mat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(maxabs <= 1.0 + 1e-12, "max |D| = {maxabs}");
    }

    #[test]
    fn conjugation_identity_on_resolved_block() {
        // D^dagger(xi) D(zeta) D(xi) = D(zeta) e^{xi^* zeta - zeta^* xi}
        let dim = 48;
        let xi = C64::new(1.0, 0.0);
        let zeta = C64::new(0.0, 1.0);
        let dxi = displacement_matrix(xi, dim).unwrap();
        let dzeta = displacement_matrix(zeta, dim).unwrap();
        let lhs = dxi.mat.adjoint() * &dzeta.mat * &dxi.mat;
        let phase = (xi.conj() * zeta - zeta.conj() * xi).exp();
        let rhs = &dzeta.mat * phase;
        let blk = dim / 2;
        let dev = (0..blk)
            .flat_map(|m| (0..blk).map(move |n| (m, n)))
            .map(|(m, n)| (lhs[(m, n)] - rhs[(m, n)]).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "block deviation {dev}");
    }

    #[test]
    fn unitary_on_resolved_block() {
        let d = displacement_matrix(C64::new(1.2, 0.4), 64).unwrap();
        let prod = d.mat.adjoint() * &d.mat;
        let blk = 32;
        let dev = (0..blk)
            .flat_map(|m| (0..blk).map(move |n| (m, n)))
            .map(|(m, n)| {
                let expect = if m == n { 1.0 } else { 0.0 };
                (prod[(m, n)] - C64::new(expect, 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "block unitarity defect {dev}");
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            displacement_matrix(C64::new(4.0, 0.0), 16),
            Err(Error::DisplacementOutOfRange(..))
        ));
    }

    #[test]
    fn apply_displacement_matches_matrix() {
        let alpha = C64::new(0.8, -0.6);
        let dim = 40;
        let psi = coherent_state(C64::new(0.5, 0.5), dim).unwrap();
        let d = displacement_matrix(alpha, dim).unwrap();
        let by_matrix = &d.mat * &psi.amp;
        let by_series = apply_displacement(alpha, &psi);
        assert!((by_matrix - by_series.amp).norm() < 1e-10);
    }

    #[test]
    fn apply_lower_on_fock_state() {
        // e^{beta a}|1> = |1> + beta|0>
        let psi = fock_state(1, 8).unwrap();
        let out = apply_lower(C64::new(0.3, 0.1), &psi);
        assert_abs_diff_eq!(out.amp[0].re, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amp[0].im, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amp[1].re, 1.0, epsilon = 1e-14);
    }
}
