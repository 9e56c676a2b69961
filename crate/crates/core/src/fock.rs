//! Truncated Fock-space linear algebra: ladder operators, quadratures,
//! coherent and cat states, density matrices, expectation values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::special::ln_factorial;
use crate::tol::Tolerances;

/// State vector in the truncated number basis; `amp[n]` multiplies |n>.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub dim: usize,
    pub amp: DVector<C64>,
}

/// Operator or density matrix in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockMatrix {
    pub dim: usize,
    pub mat: DMatrix<C64>,
}

impl FockVector {
    pub fn new(amp: DVector<C64>) -> Result<Self> {
        let dim = amp.len();
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim, amp })
    }

    pub fn norm(&self) -> f64 {
        self.amp.norm()
    }

    /// Renormalize in place; errors on (near-)zero vectors.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-150 {
            return Err(Error::InvalidParameter("cannot normalize zero vector".into()));
        }
        self.amp /= C64::new(n, 0.0);
        Ok(())
    }

    /// <self|other>.
    pub fn dot(&self, other: &FockVector) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(self.amp.dotc(&other.amp))
    }
}

impl FockMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let (r, c) = mat.shape();
        if r != c {
            return Err(Error::DimensionMismatch(r, c));
        }
        if r < 2 {
            return Err(Error::InvalidDimension(r));
        }
        Ok(Self { dim: r, mat })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self { dim, mat: DMatrix::identity(dim, dim) })
    }

    pub fn adjoint(&self) -> Self {
        Self { dim: self.dim, mat: self.mat.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// max |M - M^dagger| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> DVector<f64> {
        let herm = (self.mat.clone() + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        DVector::from_vec(ev)
    }

    /// Check the density-matrix invariants (Hermitian, unit trace, positive).
    pub fn check_density(&self, tol: &Tolerances) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > tol.hermiticity {
            return Err(Error::InvalidDensity(format!("hermiticity defect {h:.3e}")));
        }
        let t = self.trace();
        if (t - C64::new(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {t}")));
        }
        let min_ev = self.eigenvalues_hermitian()[0];
        if min_ev < tol.min_eigenvalue {
            return Err(Error::InvalidDensity(format!("min eigenvalue {min_ev:.3e}")));
        }
        Ok(())
    }

    /// Tr[rho rho].
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Annihilation operator a: entry (n-1, n) = sqrt(n).
pub fn ladder(dim: usize) -> Result<FockMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(FockMatrix { dim, mat: m })
}

/// Number operator N = a^dagger a (diagonal n).
pub fn number(dim: usize) -> Result<FockMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::new(n as f64, 0.0);
    }
    Ok(FockMatrix { dim, mat: m })
}

/// Quadrature X = (a + a^dagger)/2.
pub fn quadrature_x(dim: usize) -> Result<FockMatrix> {
    let a = ladder(dim)?;
    let m = (&a.mat + a.mat.adjoint()) * C64::new(0.5, 0.0);
    Ok(FockMatrix { dim, mat: m })
}

/// Quadrature Y = (a - a^dagger)/(2i).
pub fn quadrature_y(dim: usize) -> Result<FockMatrix> {
    let a = ladder(dim)?;
    let m = (&a.mat - a.mat.adjoint()) * C64::new(0.0, -0.5);
    Ok(FockMatrix { dim, mat: m })
}

/// Parity operator (-1)^N.
pub fn parity(dim: usize) -> Result<FockMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Ok(FockMatrix { dim, mat: m })
}

/// Number state |n>.
pub fn fock_state(n: usize, dim: usize) -> Result<FockVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if n >= dim {
        return Err(Error::InvalidParameter(format!("fock index {n} >= dim {dim}")));
    }
    let mut amp = DVector::zeros(dim);
    amp[n] = C64::new(1.0, 0.0);
    Ok(FockVector { dim, amp })
}

/// Default truncation dimension for a scenario dominated by amplitude
/// `alpha`: max(32, ceil(8 |alpha|^2)).
pub fn default_dim(alpha: C64) -> usize {
    32usize.max((8.0 * alpha.norm_sqr()).ceil() as usize)
}

fn coherent_raw(alpha: C64, dim: usize) -> (DVector<C64>, f64) {
    // amp_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!), log-space magnitudes
    let r = alpha.norm();
    let phase = if r > 0.0 { alpha / r } else { C64::new(1.0, 0.0) };
    let mut amp = DVector::zeros(dim);
    let mut captured = 0.0;
    let mut ph = C64::new(1.0, 0.0);
    for n in 0..dim {
        let logmag = -0.5 * r * r + n as f64 * r.max(1e-300).ln() - 0.5 * ln_factorial(n);
        let mag = if r == 0.0 && n > 0 { 0.0 } else { logmag.exp() };
        amp[n] = ph * C64::new(mag, 0.0);
        captured += mag * mag;
        ph *= phase;
    }
    (amp, 1.0 - captured)
}

/// Coherent state |alpha>, renormalized after truncation; errors when the
/// truncated tail mass exceeds the tolerance.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<FockVector> {
    coherent_state_tol(alpha, dim, &Tolerances::default())
}

pub fn coherent_state_tol(alpha: C64, dim: usize, tol: &Tolerances) -> Result<FockVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let (amp, tail) = coherent_raw(alpha, dim);
    if tail > tol.tail_mass {
        return Err(Error::TruncationTooSmall { dim, tail, limit: tol.tail_mass });
    }
    let mut v = FockVector { dim, amp };
    v.normalize()?;
    Ok(v)
}

/// Cat state N^{1/2}(|alpha> + |-alpha>), renormalized after truncation.
pub fn cat_state(alpha: C64, dim: usize) -> Result<FockVector> {
    cat_state_tol(alpha, dim, &Tolerances::default())
}

pub fn cat_state_tol(alpha: C64, dim: usize, tol: &Tolerances) -> Result<FockVector> {
    let plus = coherent_state_tol(alpha, dim, tol)?;
    let minus = coherent_state_tol(-alpha, dim, tol)?;
    let mut v = FockVector { dim, amp: plus.amp + minus.amp };
    v.normalize()?;
    Ok(v)
}

/// rho = |psi><psi|.
pub fn density(psi: &FockVector) -> FockMatrix {
    let mat = &psi.amp * psi.amp.adjoint();
    FockMatrix { dim: psi.dim, mat }
}

/// Tr[rho O].
pub fn expectation(rho: &FockMatrix, op: &FockMatrix) -> Result<C64> {
    if rho.dim != op.dim {
        return Err(Error::DimensionMismatch(rho.dim, op.dim));
    }
    // Tr[rho O] = sum_{n,m} rho_{nm} O_{mn}
    let mut tot = C64::new(0.0, 0.0);
    for n in 0..rho.dim {
        for m in 0..rho.dim {
            tot += rho.mat[(n, m)] * op.mat[(m, n)];
        }
    }
    Ok(tot)
}
