//! Acceptance gate: one test per acceptance criterion, each printing a
//! single `criterion NN: PASS/FAIL` line (visible with `--nocapture`, and
//! always on failure). Tolerances are part of the contract and are not
//! loosened here; a red criterion means the claim it encodes does not hold
//! in this implementation.

use std::time::Instant;

use convect_core::basis::{
    random_field, random_field_zero_x_mean, GridField, Parity, SpectralField,
};
use convect_core::dynamics::{
    self, check_velocity_bounds, critical_rayleigh, divergence_norm, max_growth_rate, run, Scheme,
    SimParams,
};
use convect_core::energy::{
    certify_threshold, energy_identity_audit, fit_decay_rate, gronwall_check, EnergyError,
    EnergyTrace,
};
use convect_core::fd::{fd_solve_pressure, FdGridSpec};
use convect_core::pressure::{verify_estimates, PressureSolver};
use convect_core::steady::{
    conduction_pressure_ode, conduction_profile, hydrostatic_residual, DimensionalParams,
};

const PI: f64 = std::f64::consts::PI;

fn report(criterion: usize, ok: bool, detail: &str) {
    println!(
        "criterion {criterion:2}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Water-like layer shared with the steady-state checks.
fn layer() -> DimensionalParams {
    DimensionalParams {
        mu: 1e-3,
        permeability: 1e-9,
        chi: 1.4e-4,
        c_v: 1.0,
        rho0: 1000.0,
        alpha: 2e-4,
        beta: 1e-6,
        g: 9.8,
        d: 0.1,
        t_l: 20.0,
        t_u: 10.0,
        t0: 20.0,
        p0: 101325.0,
        p_bar: 0.0,
    }
}

#[test]
fn criterion_01_pressure_estimates_hold_on_random_data() {
    let start = Instant::now();
    let trunc = 16;
    let mut worst: f64 = 0.0;
    for (bi, &beta_hat) in [0.0, 1.0, 5.0].iter().enumerate() {
        let solver = PressureSolver::new(trunc, beta_hat).unwrap();
        for k in 0..200 {
            let theta =
                random_field_zero_x_mean(Parity::D, trunc, 9000 + 1000 * bi as u64 + k as u64);
            let r = 1.0 + (k % 3) as f64;
            let rep = verify_estimates(&solver, &theta, r).unwrap();
            worst = worst
                .max(rep.grad_norm / rep.grad_bound)
                .max(rep.lap_norm / rep.lap_bound);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1.0 + 1e-10 && elapsed < 10.0;
    report(
        1,
        ok,
        &format!("gradient/laplacian estimate ratio max {worst:.12} in {elapsed:.2} s"),
    );
}

#[test]
fn criterion_02_solved_velocities_are_divergence_free() {
    let trunc = 12;
    let mut worst: f64 = 0.0;
    for (idx, &(r, beta_hat)) in [
        (1.0, 0.0),
        (10.0, 1.0),
        (20.0, 0.5),
        (61.0, 0.25),
        (5.0, 5.0),
    ]
    .iter()
    .enumerate()
    {
        let solver = PressureSolver::new(trunc, beta_hat).unwrap();
        for k in 0..20 {
            let theta = random_field(Parity::D, trunc, 400 + 40 * idx as u64 + k);
            let pi = solver.solve(&theta, r).unwrap();
            let phi = dynamics::stream_function(&pi, &theta, r, beta_hat).unwrap();
            let (u, w) = dynamics::velocity(&phi);
            let div = divergence_norm(&u, &w).unwrap();
            let speed = (u.l2_norm_sq() + w.l2_norm_sq()).sqrt();
            worst = worst.max(div / speed.max(1.0));
        }
    }
    let ok = worst <= 1e-10;
    report(2, ok, &format!("max |div u| / max(1, |u|) = {worst:.3e}"));
}

#[test]
fn criterion_03_manufactured_pressure_solutions_are_recovered() {
    // Single mode at beta_hat = 0: the operator is diagonal, so the weak
    // data of Pi* = cos(pi z) cos(2 pi x) is its own Laplacian.
    let solver0 = PressureSolver::new(16, 0.0).unwrap();
    let mut target = SpectralField::zeros(Parity::B, 16);
    target.set(1, 1, 1, 0.8);
    let data = target.laplacian();
    let pi = solver0.solve_weighted_data(&data, 1.0).unwrap();
    let mut single_err: f64 = 0.0;
    for (i, m, n, c) in pi.modes() {
        single_err = single_err.max((c - target.get(i, m, n)).abs());
    }
    // Smooth random Pi* at beta_hat = 1.5, N = 24, weak-form round trip.
    let solver15 = PressureSolver::new(24, 1.5).unwrap();
    let mut smooth_rel: f64 = 0.0;
    for seed in [21u64, 22, 23] {
        let abs_err = solver15.manufactured_error(seed).unwrap();
        let mut reference = random_field(Parity::B, 24, seed);
        reference.set(1, 0, 0, 0.0);
        smooth_rel = smooth_rel.max(abs_err / reference.l2_norm());
    }
    let ok = single_err <= 1e-12 && smooth_rel <= 1e-8;
    report(
        3,
        ok,
        &format!("single-mode error {single_err:.3e}, smooth relative error {smooth_rel:.3e}"),
    );
}

#[test]
fn criterion_04_certified_threshold_and_feasibility_boundary() {
    let cert = certify_threshold(0.0, 1e-4).unwrap();
    let target = 30.0 * PI * PI / 11.0;
    let rel = (cert.r_max - target).abs() / target;
    let infeasible_at = |beta_hat: f64| {
        matches!(
            certify_threshold(beta_hat, 1e-4),
            Err(EnergyError::Infeasible { .. })
        )
    };
    let boundary = infeasible_at(1.5 * PI)
        && infeasible_at(1.5 * PI + 0.1)
        && infeasible_at(5.0)
        && !infeasible_at(1.5 * PI - 1e-9)
        && certify_threshold(1.5 * PI - 0.01, 1e-6).is_ok();
    let ok = rel <= 1e-3 && boundary;
    report(
        4,
        ok,
        &format!(
            "r_max(0) = {:.6} vs 30 pi^2/11 = {target:.6} (rel {rel:.2e}), boundary at 3 pi/2: {boundary}"
        , cert.r_max),
    );
}

#[test]
fn criterion_05_subcritical_energy_decays_inside_the_envelope() {
    let start = Instant::now();
    let r = 20.0;
    let dt = 1e-3;
    let steps = 2000;
    let mut theta0 = SpectralField::zeros(Parity::D, 16);
    theta0.set(1, 1, 1, 1e-3);
    theta0.set(-1, 1, 2, 6e-4);
    theta0.set(1, 2, 1, 4e-4);
    theta0.set(-1, 2, 3, 2e-4);
    let params = SimParams::new(r, 0.0, 16, dt, Scheme::Euler);
    let outcome = run(params, &theta0, steps, 1).unwrap();
    let samples = &outcome.samples;
    let mut monotone = true;
    for k in 10..samples.len() - 1 {
        if samples[k + 1].energy > samples[k].energy * (1.0 + 1e-13) {
            monotone = false;
            break;
        }
    }
    let cert = certify_threshold(0.0, 1e-4).unwrap();
    let exponent = cert.decay_exponent(r);
    let trace = EnergyTrace::from_samples(samples).unwrap();
    let envelope = gronwall_check(&trace, exponent, 1e-6 + dt).unwrap();
    let fit = fit_decay_rate(&trace, 0.5).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = monotone && envelope.passed && fit.sigma < 0.0 && elapsed < 30.0;
    report(
        5,
        ok,
        &format!(
            "monotone after 10 steps: {monotone}, envelope exp({exponent:.2} t) ratio {:.6}, fitted sigma {:.3}, {elapsed:.2} s",
            envelope.max_ratio, fit.sigma
        ),
    );
}

#[test]
fn criterion_06_linear_onset_matches_the_marginal_balance() {
    let rc = critical_rayleigh(0.0, 8, 1, 1e-9).unwrap();
    let target = 25.0 * PI * PI / 4.0;
    let err = (rc - target).abs();

    let run_energy_change = |r: f64| {
        let mut theta0 = SpectralField::zeros(Parity::D, 8);
        theta0.set(1, 1, 1, 1e-4);
        let params = SimParams::new(r, 0.0, 8, 1e-3, Scheme::Euler);
        let outcome = run(params, &theta0, 1000, 1000).unwrap();
        let first = outcome.samples.first().unwrap().energy;
        let last = outcome.samples.last().unwrap().energy;
        last / first
    };
    let decays = run_energy_change(55.0) < 1.0;
    let grows = run_energy_change(70.0) > 1.0;
    let ok = err <= 1e-6 && decays && grows;
    report(
        6,
        ok,
        &format!("R_c = {rc:.8} (|err| {err:.2e}), R=55 decays: {decays}, R=70 grows: {grows}"),
    );
}

#[test]
fn criterion_07_growth_rate_rises_with_compressibility() {
    // Recorded values; only the sign pattern (strict increase in beta_hat)
    // is asserted.
    let r = 61.0;
    let mut rates = Vec::new();
    for &beta_hat in &[0.0, 0.25, 0.5] {
        let solver = PressureSolver::new(12, beta_hat).unwrap();
        rates.push(max_growth_rate(&solver, r, 1).unwrap());
    }
    let ok = rates[1] > rates[0] && rates[2] > rates[1];
    report(
        7,
        ok,
        &format!(
            "rates at beta_hat 0/0.25/0.5: {:.5} / {:.5} / {:.5}",
            rates[0], rates[1], rates[2]
        ),
    );
}

#[test]
fn criterion_08_velocity_bounds_hold_on_solved_states() {
    let mut worst: f64 = 0.0;
    for (idx, &(r, beta_hat)) in [(1.0, 0.0), (1.0, 1.0), (10.0, 0.0), (10.0, 1.0)]
        .iter()
        .enumerate()
    {
        let rep = check_velocity_bounds(12, r, beta_hat, 100, 7000 + idx as u64).unwrap();
        worst = worst.max(rep.vertical_ratio_max).max(rep.gradient_ratio_max);
    }
    let ok = worst <= 1.0 + 1e-10;
    report(8, ok, &format!("max bound ratio over 400 states {worst:.12}"));
}

#[test]
fn criterion_09_finite_difference_oracle_agrees_with_the_spectral_solver() {
    // Agreement on a smooth compressible fixture at 128 x 128.
    let spec = FdGridSpec::new(128, 128, 1e-3, 10.0, 1.0);
    let theta_modes = random_field(Parity::D, 6, 97);
    let theta_grid = theta_modes.synthesize(128, 129);
    let fd_pi = fd_solve_pressure(&theta_grid, &spec).unwrap();
    let mut theta_spec = SpectralField::zeros(Parity::D, 32);
    for (i, m, n, v) in theta_modes.modes() {
        theta_spec.set(i, m, n, v);
    }
    let solver = PressureSolver::new(32, 1.0).unwrap();
    let pi_ref = solver.solve(&theta_spec, 10.0).unwrap().synthesize(128, 129);
    let mut num = 0.0;
    let mut den = 0.0;
    for a in 0..128 {
        for b in 0..129 {
            let wq = pi_ref.quad_weight(b);
            num += wq * (fd_pi.at(a, b) - pi_ref.at(a, b)).powi(2);
            den += wq * pi_ref.at(a, b).powi(2);
        }
    }
    let rel = (num / den).sqrt();

    // Convergence order on the incompressible single-mode closed form.
    let r = 9.0;
    let err_at = |cells: usize| {
        let spec = FdGridSpec::new(cells, cells, 1e-3, r, 0.0);
        let n = cells + 1;
        let mut theta = GridField::zeros(cells, n);
        let mut exact = GridField::zeros(cells, n);
        let mut exact_sq = 0.0;
        let mut err_sq = 0.0;
        for i in 0..cells {
            for j in 0..n {
                let x = i as f64 / cells as f64;
                let z = j as f64 / cells as f64;
                *theta.at_mut(i, j) = (PI * z).sin() * (2.0 * PI * x).cos();
                *exact.at_mut(i, j) = -(r / (5.0 * PI)) * (PI * z).cos() * (2.0 * PI * x).cos();
            }
        }
        let pi = fd_solve_pressure(&theta, &spec).unwrap();
        for i in 0..cells {
            for j in 0..n {
                let wq = pi.quad_weight(j);
                err_sq += wq * (pi.at(i, j) - exact.at(i, j)).powi(2);
                exact_sq += wq * exact.at(i, j).powi(2);
            }
        }
        (err_sq / exact_sq).sqrt()
    };
    let (e32, e128) = (err_at(32), err_at(128));
    let order = (e32 / e128).log2() / 2.0;
    let ok = rel <= 1e-3 && (1.8..=2.2).contains(&order);
    report(
        9,
        ok,
        &format!("relative gap {rel:.3e} at 128x128, measured order {order:.3}"),
    );
}

#[test]
fn criterion_10_discrete_energy_identity_is_respected() {
    // One decaying and one growing trajectory, sampled every step.
    let mut worst: f64 = 0.0;
    let mut all_pass = true;
    for &(r, beta_hat, amp) in &[(30.0, 0.5, 0.1), (70.0, 0.0, 0.01)] {
        let mut theta0 = SpectralField::zeros(Parity::D, 8);
        theta0.set(1, 1, 1, amp);
        theta0.set(-1, 2, 1, 0.5 * amp);
        theta0.set(1, 2, 2, 0.25 * amp);
        let params = SimParams::new(r, beta_hat, 8, 1e-3, Scheme::Euler);
        let outcome = run(params, &theta0, 300, 1).unwrap();
        let audit = energy_identity_audit(&outcome.samples, 1e-8).unwrap();
        all_pass &= audit.passed;
        worst = worst.max(audit.max_ratio);
    }
    report(
        10,
        all_pass,
        &format!("max defect/allowance ratio {worst:.3} over both runs"),
    );
}

#[test]
fn criterion_11_steady_state_oracle_is_hydrostatic() {
    let p = layer();
    let profile = conduction_profile(257, &p).unwrap();
    let residual = hydrostatic_residual(&profile.z, &profile.pressure_ode, &p).unwrap();
    let gap = profile.max_pressure_gap.unwrap();

    // Incompressible isothermal column integrates exactly.
    let mut simple = p;
    simple.beta = 0.0;
    simple.alpha = 0.0;
    let z: Vec<f64> = (0..33).map(|i| i as f64 / 32.0 * simple.d).collect();
    let pressures = conduction_pressure_ode(&z, &simple).unwrap();
    let mut exact_dev: f64 = 0.0;
    for (zi, pi) in z.iter().zip(pressures.iter()) {
        let exact = simple.p0 + simple.p_bar - simple.rho0 * simple.g * zi;
        exact_dev = exact_dev.max((pi - exact).abs() / exact.abs());
    }
    let ok = residual <= 1e-10 && exact_dev <= 1e-13;
    report(
        11,
        ok,
        &format!(
            "hydrostatic residual {residual:.3e}, closed form vs oracle gap {gap:.3e}, exact case deviation {exact_dev:.3e}"
        ),
    );
}
