//! Small special-function and quadrature toolbox: Bessel J0, Gauss–Legendre
//! nodes, and composite rules for tabulated integrands.

use crate::error::{Error, Result};

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| <= 12, Hankel asymptotic expansion beyond; absolute
/// error below ~1e-9 everywhere (series region is near machine precision).
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        // sum_k (-1)^k (x^2/4)^k / (k!)^2
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum
    } else {
        // J0(x) = sqrt(2/(pi x)) [P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)]
        // P ~ sum (-1)^k prod_{j=1}^{2k} (2j-1)^2 / ((2k)! (8x)^{2k})
        // Q ~ sum (-1)^{k+1} prod_{j=1}^{2k+1} (2j-1)^2 / ((2k+1)! (8x)^{2k+1})
        let z = 8.0 * ax;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut num = 1.0; // running product of odd squares
        let mut fact = 1.0; // running factorial
        let mut zpow = 1.0;
        for m in 1..=11 {
            num *= (2.0 * m as f64 - 1.0).powi(2);
            fact *= m as f64;
            zpow *= z;
            let term = num / (fact * zpow);
            if m % 2 == 0 {
                // even m = 2k contributes to P with sign (-1)^k
                p += if (m / 2) % 2 == 0 { term } else { -term };
            } else {
                // odd m = 2k+1 contributes to Q with sign (-1)^{k+1}
                q += if ((m - 1) / 2) % 2 == 0 { -term } else { term };
            }
        }
        let chi = ax - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial with the Chebyshev-angle initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_ab(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

/// Integration weights for samples on an ascending abscissa grid: composite
/// Simpson when the spacing is uniform and the point count is odd, composite
/// trapezoid otherwise.
pub fn table_weights(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::QuadratureFailure("table needs at least 2 points".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::QuadratureFailure("table abscissae must be ascending".into()));
    }
    let h = xs[1] - xs[0];
    let uniform = xs
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0));
    let mut w = vec![0.0; n];
    if uniform && n % 2 == 1 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == 0 || i == n - 1 {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
    } else {
        for i in 0..n - 1 {
            let hi = xs[i + 1] - xs[i];
            w[i] += 0.5 * hi;
            w[i + 1] += 0.5 * hi;
        }
    }
    Ok(w)
}

/// Natural log of n!.
pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}
