//! Centralized numerical tolerances.
//!
//! Every invariant check in the crate reads its threshold from here, so a
//! single record documents the full error budget.

/// Tolerance bundle; `Default` gives the strict (documented) values.
#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Unit-norm check for state vectors after truncation renormalization.
    pub state_norm: f64,
    /// Hermiticity of density matrices at construction.
    pub hermiticity: f64,
    /// Trace-one check for density matrices.
    pub trace: f64,
    /// Most negative admissible eigenvalue of a density matrix.
    pub min_eigenvalue: f64,
    /// Unitarity of operators on the resolved block.
    pub unitarity: f64,
    /// Admissible tail mass beyond the truncation dimension.
    pub tail_mass: f64,
    /// chi(0) = 1 check on characteristic grids.
    pub chi_origin: f64,
    /// Imaginary residue allowed in Wigner values.
    pub wigner_imag: f64,
    /// Boundary-band RMS of |chi| relative to peak (aliasing guard).
    pub aliasing_rel: f64,
    /// Trace drift allowed over an integration.
    pub trace_drift: f64,
    /// Hermiticity drift allowed over an integration.
    pub herm_drift: f64,
    /// Most negative eigenvalue tolerated during integration.
    pub positivity_drift: f64,
    /// Step-halving convergence audit threshold on chi probes.
    pub halving: f64,
    /// Radial asymmetry allowed in an apparatus kick density.
    pub apparatus_asymmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            state_norm: 1e-10,
            hermiticity: 1e-12,
            trace: 1e-10,
            min_eigenvalue: -1e-8,
            unitarity: 1e-10,
            tail_mass: 1e-12,
            chi_origin: 1e-10,
            wigner_imag: 1e-8,
            aliasing_rel: 1e-6,
            trace_drift: 1e-8,
            herm_drift: 1e-8,
            positivity_drift: -1e-6,
            halving: 1e-6,
            apparatus_asymmetry: 1e-6,
        }
    }
}

impl Tolerances {
    /// The documented strict profile (same as `Default`).
    pub fn strict() -> Self {
        Self::default()
    }

    /// Looser profile for quick exploratory runs; integration audits and
    /// grid guards are relaxed, construction-time invariants are not.
    pub fn fast() -> Self {
        Self {
            halving: 1e-4,
            aliasing_rel: 1e-4,
            positivity_drift: -1e-5,
            ..Self::default()
        }
    }
}
