//! End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
//! line (run with `--nocapture` to see them on success).

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use phasekick::displacement::displacement_matrix_stable;
use phasekick::fock::{cat_state, coherent_state, density, fock_state};
use phasekick::lindblad::{
    integrate, DiffusionGenerator, IntegratorConfig, MeasurementGenerator, suggested_dt,
};
use phasekick::measurement::{
    evolve_char, evolve_char_point, monte_carlo_char_probe, povm_moments, sample_outcomes,
    ApparatusState, ChiSource, MeasurementModel,
};
use phasekick::phase::{
    char_function, char_function_pure, char_grid, closed_form_cat_wigner, wigner_grid_via_fft,
    wigner_point,
};
use phasekick::quadham::{diagonalize, ladder_hamiltonian_matrix, QuadraticLadder};
use phasekick::special::gauss_legendre_ab;
use phasekick::{FockMatrix, KickDistribution};

fn report(criterion: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {criterion} ({name}): {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} ({name}): {detail}");
}

/// Shared scenario for criteria 1 and 2: cat alpha = 3i, gaussian sigma = 0.5,
/// omega/gamma = 10, integrated to gamma t = 1 at dim 64.
struct CatRun {
    rho_t: FockMatrix,
    trace_drift: f64,
}

fn cat_run() -> &'static CatRun {
    static RUN: OnceLock<CatRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dim = 64;
        let (gamma, omega) = (1.0, 10.0);
        let kick = KickDistribution::gaussian(0.5).unwrap();
        let gen = MeasurementGenerator::new(omega, gamma, &kick, dim).unwrap();
        let rho0 = density(&cat_state(C64::new(0.0, 3.0), dim).unwrap());
        let cfg = IntegratorConfig::new(suggested_dt(omega, gamma, dim));
        let out = integrate(|r| gen.rhs(r), &rho0, &[1.0], &cfg).unwrap();
        let trace_drift = (out.trajectory[0].trace - 1.0).abs();
        CatRun { rho_t: out.states.into_iter().next().unwrap(), trace_drift }
    })
}

#[test]
fn criterion_1_exact_vs_oracle_chi_grid() {
    let dim = 64;
    let run = cat_run();
    let cat = cat_state(C64::new(0.0, 3.0), dim).unwrap();
    let model =
        MeasurementModel::new(1.0, 10.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
    let exact = evolve_char(&ChiSource::Pure(&cat), &model, 1.0, 8.0, 64).unwrap();
    let numeric = char_grid(&run.rho_t, 8.0, 64).unwrap();
    let dev = (&exact.grid.values - &numeric.values)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    report(1, "closed-form vs RK4 chi grid", dev <= 1e-3, format!("max deviation {dev:.3e}"));
}

#[test]
fn criterion_2_outer_peak_damping_ratio() {
    let dim = 64;
    let run = cat_run();
    let cat = cat_state(C64::new(0.0, 3.0), dim).unwrap();
    let model =
        MeasurementModel::new(1.0, 10.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
    let eta0 = C64::new(0.0, 6.0);
    let chi0 = char_function_pure(&cat, eta0).norm();
    // image of the outer peak after free rotation by omega t
    let eta_t = eta0 * C64::new(0.0, -10.0).exp();
    let expect = (-(1.0 - (-9.0_f64).exp())).exp();
    let prop = evolve_char_point(&ChiSource::Pure(&cat), &model, 1.0, eta_t)
        .unwrap()
        .norm()
        / chi0;
    let rk4 = char_function(&run.rho_t, eta_t).norm() / chi0;
    let ok = (expect - 0.367_925).abs() < 1e-6
        && (prop - expect).abs() < 1e-6
        && (rk4 - expect).abs() < 1e-3;
    report(
        2,
        "outer-peak damping ratio 0.367925",
        ok,
        format!("propagator {prop:.9}, rk4 {rk4:.6}, expected {expect:.9}"),
    );
}

#[test]
fn criterion_3_cat_wigner_closed_form() {
    let dim = 96;
    let alpha = C64::new(0.0, 3.0);
    let rho = density(&cat_state(alpha, dim).unwrap());

    let w00 = wigner_point(&rho, C64::new(0.0, 0.0)).unwrap();
    let origin_ok = (w00 - 2.0 / std::f64::consts::PI).abs() < 1e-5;

    let chi = char_grid(&rho, 12.0, 128).unwrap();
    let w = wigner_grid_via_fft(&chi).unwrap();
    let mut min_val = f64::INFINITY;
    let mut min_idx = (0usize, 0usize);
    for iy in 0..w.n_points {
        for ix in 0..w.n_points {
            let v = w.values[(iy, ix)].re;
            if v < min_val {
                min_val = v;
                min_idx = (iy, ix);
            }
        }
    }
    let xi_min = w.point(min_idx.0, min_idx.1);
    let closed_at_min = closed_form_cat_wigner(alpha, xi_min);
    let parity_at_min = wigner_point(&rho, xi_min).unwrap();
    // frozen reference: interference minimum on the real axis at xi = pi/12
    let reference = closed_form_cat_wigner(alpha, C64::new(std::f64::consts::PI / 12.0, 0.0));
    let ok = origin_ok
        && min_val < -0.5
        && (min_val - closed_at_min).abs() < 1e-4
        && (parity_at_min - closed_at_min).abs() < 1e-4
        && (reference - (-0.555_070_26)).abs() < 1e-6;
    report(
        3,
        "cat Wigner against closed form",
        ok,
        format!(
            "W(0,0) = {w00:.8}, grid min {min_val:.8} at {xi_min}, closed {closed_at_min:.8}, \
             parity {parity_at_min:.8}, reference {reference:.8}"
        ),
    );
}

#[test]
fn criterion_4_bogoliubov_spectrum() {
    let h = QuadraticLadder { z1: 2.0, z2: C64::new(0.6, 0.0), z3: C64::new(1.0, 0.0) };
    let nf = diagonalize(&h).unwrap();
    let dim = 120;
    let hm = ladder_hamiltonian_matrix(&h, dim).unwrap();
    let herm = (hm.mat.clone() + hm.mat.adjoint()) * C64::new(0.5, 0.0);
    let mut eigs: Vec<f64> =
        nalgebra::SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut spec_dev: f64 = 0.0;
    for (n, &e) in eigs.iter().take(5).enumerate() {
        spec_dev = spec_dev.max((e - (nf.z0 * n as f64 + nf.c)).abs());
    }
    let sympl = (nf.mu.norm_sqr() - nf.nu.norm_sqr() - 1.0).abs();
    let ok = (nf.z0 - 1.6).abs() < 1e-12
        && (nf.c - (-0.5125)).abs() < 1e-12
        && spec_dev < 1e-6
        && sympl < 1e-12;
    report(
        4,
        "Bogoliubov spectral check",
        ok,
        format!("z0 = {}, c = {}, spectral dev {spec_dev:.3e}, symplectic defect {sympl:.3e}", nf.z0, nf.c),
    );
}

#[test]
fn criterion_5_povm_moment_law() {
    let dim = 24;
    let rho = density(&fock_state(0, dim).unwrap());
    let psi = ApparatusState::vacuum(dim).unwrap();
    let m10 = povm_moments(&rho, &psi, 1, 0).unwrap();
    let var = povm_moments(&rho, &psi, 2, 0).unwrap() - m10 * m10;
    let quad_ok = (var - 0.5).abs() < 1e-6;

    let n = 100_000;
    let samples = sample_outcomes(&rho, &psi, n, 2024).unwrap();
    let mean: f64 = samples.iter().map(|a| a.re).sum::<f64>() / n as f64;
    let emp_var: f64 =
        samples.iter().map(|a| (a.re - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // variance of the sample variance of a Gaussian: 2 sigma^4 / (n - 1)
    let se = (2.0 * 0.25 / (n - 1) as f64).sqrt();
    let sample_ok = (emp_var - 0.5).abs() < 3.0 * se;
    report(
        5,
        "POVM variance 0.5",
        quad_ok && sample_ok,
        format!("quadrature {var:.9}, empirical {emp_var:.6} (3 se = {:.2e})", 3.0 * se),
    );
}

#[test]
fn criterion_6_diffusion_limit_scaling() {
    let dim = 32;
    let (gamma, omega) = (1.0, 2.0);
    let rho0 = density(&coherent_state(C64::new(1.0, 0.0), dim).unwrap());
    let psi0 = coherent_state(C64::new(1.0, 0.0), dim).unwrap();
    let probes = [
        C64::new(0.5, 0.0),
        C64::new(0.0, 1.0),
        C64::new(1.0, 1.0),
        C64::new(-1.5, 0.5),
        C64::new(0.0, 2.0),
    ];
    let deviation = |sigma: f64| -> f64 {
        let kappa = gamma * sigma * sigma / 2.0;
        let gen = DiffusionGenerator::new(omega, kappa, dim).unwrap();
        let cfg = IntegratorConfig::new(suggested_dt(omega, gamma, dim));
        let out = integrate(|r| gen.rhs(r), &rho0, &[1.0], &cfg).unwrap();
        let model =
            MeasurementModel::new(gamma, omega, KickDistribution::gaussian(sigma).unwrap())
                .unwrap();
        let src = ChiSource::Pure(&psi0);
        probes
            .iter()
            .map(|&eta| {
                let exact = evolve_char_point(&src, &model, 1.0, eta).unwrap();
                (char_function(&out.states[0], eta) - exact).norm()
            })
            .fold(0.0, f64::max)
    };
    let coarse = deviation(0.1);
    let fine = deviation(0.05);
    let ratio = coarse / fine;
    report(
        6,
        "diffusion-limit O(sigma^2) scaling",
        ratio >= 3.0,
        format!("deviation {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2}"),
    );
}

#[test]
fn criterion_7_property_suite() {
    let dim = 64;
    let cat = cat_state(C64::new(0.0, 3.0), dim).unwrap();
    let model =
        MeasurementModel::new(1.0, 10.0, KickDistribution::gaussian(0.5).unwrap()).unwrap();
    let src = ChiSource::Pure(&cat);
    let mut failures: Vec<String> = Vec::new();

    // normalization chi(0, t) = 1
    for t in [0.3, 1.0, 2.0] {
        let v = evolve_char_point(&src, &model, t, C64::new(0.0, 0.0)).unwrap();
        if (v - C64::new(1.0, 0.0)).norm() > 1e-10 {
            failures.push(format!("normalization at t = {t}: {v}"));
        }
    }

    // damping envelope |chi(eta, t)| <= |chi0(eta e^{i omega t})|
    for t in [0.5, 1.0] {
        for eta in [C64::new(1.0, 0.0), C64::new(0.0, 6.0), C64::new(2.0, 2.0)] {
            let now = evolve_char_point(&src, &model, t, eta).unwrap().norm();
            let free = char_function_pure(&cat, eta * C64::new(0.0, model.omega * t).exp()).norm();
            if now > free + 1e-12 {
                failures.push(format!("envelope at t = {t}, eta = {eta}"));
            }
        }
    }

    // semigroup composition
    let (t1, t2) = (0.4, 0.7);
    for eta in [C64::new(0.5, 0.5), C64::new(0.0, 2.0)] {
        let direct = evolve_char_point(&src, &model, t1 + t2, eta).unwrap();
        let mid = evolve_char_point(
            &src,
            &model,
            t1,
            eta * C64::new(0.0, model.omega * t2).exp(),
        )
        .unwrap();
        let step = mid * (-model.gamma * t2 * (1.0 - model.kick.chi_g(eta.norm()))).exp();
        if (direct - step).norm() > 1e-12 {
            failures.push(format!("semigroup at eta = {eta}: {:.3e}", (direct - step).norm()));
        }
    }

    // trace drift of the shared RK4 run (hermiticity is enforced in-loop)
    let run = cat_run();
    if run.trace_drift > 1e-8 {
        failures.push(format!("trace drift {:.3e}", run.trace_drift));
    }
    let herm = run.rho_t.hermiticity_defect();
    if herm > 1e-8 {
        failures.push(format!("hermiticity drift {herm:.3e}"));
    }

    // Kraus completeness: ∫ pi_alpha d^2 alpha = 1 on the resolved block.
    // Vacuum apparatus: pi_alpha = (1/pi) |alpha><alpha|, built from the
    // first column of D(alpha).
    {
        let kdim = 24;
        let (radii, wr) = gauss_legendre_ab(96, 0.0, 7.0);
        let n_angle = 64;
        let mut acc = DMatrix::<C64>::zeros(kdim, kdim);
        for (&r, &w) in radii.iter().zip(&wr) {
            for k in 0..n_angle {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_angle as f64;
                let d = displacement_matrix_stable(C64::from_polar(r, th), kdim).unwrap();
                let col = d.mat.column(0).clone_owned();
                let weight = w * r * 2.0 / n_angle as f64; // (1/pi) * 2 pi / n_angle
                acc += (&col * col.adjoint()) * C64::new(weight, 0.0);
            }
        }
        let mut dev: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((acc[(i, j)] - target).norm());
            }
        }
        if dev > 1e-6 {
            failures.push(format!("Kraus completeness defect {dev:.3e}"));
        }
    }

    // Monte-Carlo unravelling vs closed form at 5 probes
    {
        let mdim = 48;
        let rho0 = density(&coherent_state(C64::new(1.0, 0.0), mdim).unwrap());
        let psi0 = coherent_state(C64::new(1.0, 0.0), mdim).unwrap();
        let probes = [
            C64::new(0.5, 0.0),
            C64::new(0.0, 1.0),
            C64::new(1.0, 1.0),
            C64::new(-1.0, 0.5),
            C64::new(0.0, 2.0),
        ];
        let (means, ses) =
            monte_carlo_char_probe(&rho0, &model, 1.0, 2000, 31, &probes).unwrap();
        let srcc = ChiSource::Pure(&psi0);
        for (k, &eta) in probes.iter().enumerate() {
            let exact = evolve_char_point(&srcc, &model, 1.0, eta).unwrap();
            let dev = (means[k] - exact).norm();
            if dev > 3.0 * ses[k] {
                failures.push(format!("MC probe {eta}: dev {dev:.3e} vs 3 se {:.3e}", 3.0 * ses[k]));
            }
        }
    }

    report(7, "property suite", failures.is_empty(), failures.join("; "));
}
