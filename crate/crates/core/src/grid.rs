//! Phase-space grids and their CSV/JSON export.
//!
//! Convention: a grid of `n_points` per axis with half-width `extent` samples
//! x_i = -extent + (2 extent / n) * i, i = 0..n-1 (the origin is on the grid
//! for even n). `values[(iy, ix)]` holds the sample at x_ix + i*y_iy.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// What a grid holds: chi(eta) samples or W(xi) samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Characteristic,
    Wigner,
}

/// Uniform square grid of complex samples over the phase plane.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub extent: f64,
    pub n_points: usize,
    pub kind: GridKind,
    pub values: DMatrix<C64>,
}

/// Sidecar metadata written next to each CSV; round-trips bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub extent: f64,
    pub n_points: usize,
    pub kind: GridKind,
}

impl PhaseGrid {
    pub fn new(extent: f64, n_points: usize, kind: GridKind, values: DMatrix<C64>) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidParameter(format!("grid extent {extent}")));
        }
        if n_points < 2 || n_points % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid n_points {n_points} must be even and >= 2"
            )));
        }
        if values.nrows() != n_points || values.ncols() != n_points {
            return Err(Error::DimensionMismatch(values.nrows(), n_points));
        }
        Ok(Self { extent, n_points, kind, values })
    }

    /// Axis sample coordinates.
    pub fn axis(&self) -> Vec<f64> {
        let step = 2.0 * self.extent / self.n_points as f64;
        (0..self.n_points).map(|i| -self.extent + step * i as f64).collect()
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / self.n_points as f64
    }

    /// Grid point closest to `z`.
    pub fn nearest_index(&self, z: C64) -> (usize, usize) {
        let clamp = |x: f64| -> usize {
            let i = ((x + self.extent) / self.step()).round();
            i.clamp(0.0, (self.n_points - 1) as f64) as usize
        };
        (clamp(z.im), clamp(z.re))
    }

    /// Complex coordinate of the (iy, ix) sample.
    pub fn point(&self, iy: usize, ix: usize) -> C64 {
        C64::new(
            -self.extent + self.step() * ix as f64,
            -self.extent + self.step() * iy as f64,
        )
    }

    /// Kind-specific invariants (spec'd tolerances).
    pub fn check_invariants(&self, tol: &Tolerances) -> Result<()> {
        let n = self.n_points;
        match self.kind {
            GridKind::Characteristic => {
                let origin = self.values[(n / 2, n / 2)];
                if (origin - C64::new(1.0, 0.0)).norm() > tol.chi_origin {
                    return Err(Error::InvalidGrid(format!("chi(0) = {origin}")));
                }
                let mut dev: f64 = 0.0;
                for iy in 1..n {
                    for ix in 1..n {
                        let a = self.values[(iy, ix)];
                        let b = self.values[(n - iy, n - ix)];
                        dev = dev.max((a - b.conj()).norm());
                    }
                }
                if dev > 1e-10 {
                    return Err(Error::InvalidGrid(format!("hermitian symmetry defect {dev:.3e}")));
                }
            }
            GridKind::Wigner => {
                let imag = self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if imag > tol.wigner_imag {
                    return Err(Error::InvalidGrid(format!("imaginary residue {imag:.3e}")));
                }
                let integral: f64 = self.values.iter().map(|z| z.re).sum::<f64>() * self.step().powi(2);
                if (integral - 1.0).abs() > 1e-3 {
                    return Err(Error::InvalidGrid(format!("grid integral {integral}")));
                }
            }
        }
        Ok(())
    }

    /// RMS of |values| over the outermost two rings, used as aliasing guard
    /// by the Fourier path.
    pub fn boundary_band_rms(&self) -> f64 {
        let n = self.n_points;
        let mut sum = 0.0;
        let mut count = 0usize;
        for iy in 0..n {
            for ix in 0..n {
                if iy < 2 || iy >= n - 2 || ix < 2 || ix >= n - 2 {
                    sum += self.values[(iy, ix)].norm_sqr();
                    count += 1;
                }
            }
        }
        (sum / count as f64).sqrt()
    }

    /// Write the samples as `x,y,re,im` CSV plus a JSON header sidecar
    /// (same path with an extra `.json` suffix).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.n_points * self.n_points * 32);
        out.push_str("x,y,re,im\n");
        let axis = self.axis();
        for (iy, &y) in axis.iter().enumerate() {
            for (ix, &x) in axis.iter().enumerate() {
                let v = self.values[(iy, ix)];
                let _ = writeln!(out, "{x},{y},{},{}", v.re, v.im);
            }
        }
        std::fs::write(path, out)?;
        let header = GridHeader {
            extent: self.extent,
            n_points: self.n_points,
            kind: self.kind,
        };
        let json = serde_json::to_string_pretty(&header)
            .map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(header_path(path), json)?;
        Ok(())
    }

    /// Read a grid back from a CSV + JSON header pair.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(header_path(path))?;
        let header: GridHeader =
            serde_json::from_str(&json).map_err(|e| Error::Parse(e.to_string()))?;
        let body = std::fs::read_to_string(path)?;
        let n = header.n_points;
        let mut values = DMatrix::<C64>::zeros(n, n);
        let mut rows = 0usize;
        for (lineno, line) in body.lines().enumerate() {
            if lineno == 0 {
                if line != "x,y,re,im" {
                    return Err(Error::Parse(format!("unexpected CSV header '{line}'")));
                }
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("short line {lineno}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))
            };
            let _x = next()?;
            let _y = next()?;
            let re = next()?;
            let im = next()?;
            let iy = rows / n;
            let ix = rows % n;
            if iy >= n {
                return Err(Error::Parse("too many rows".into()));
            }
            values[(iy, ix)] = C64::new(re, im);
            rows += 1;
        }
        if rows != n * n {
            return Err(Error::Parse(format!("expected {} rows, got {rows}", n * n)));
        }
        PhaseGrid::new(header.extent, header.n_points, header.kind, values)
    }
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}
