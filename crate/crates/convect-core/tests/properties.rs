//! Randomized cross-module invariants. Each property encodes a structural
//! identity the solver relies on, exercised over random inputs rather than
//! hand-picked fixtures.

use convect_core::basis::{analyze, random_field, random_field_zero_x_mean, Parity};
use convect_core::coupling::{exp_cos_integral, exp_sin_integral};
use convect_core::dynamics::{advection, divergence_norm, stream_function, velocity};
use convect_core::energy::certify_threshold;
use convect_core::pressure::{verify_estimates, PressureSolver};
use convect_core::steady::{nondimensionalize, DimensionalParams};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

fn water_layer() -> DimensionalParams {
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// analyze is a left inverse of synthesize once the grid resolves
    /// products of basis functions.
    #[test]
    fn transforms_round_trip(seed in any::<u64>(), trunc in 3usize..9, cosine in any::<bool>()) {
        let parity = if cosine { Parity::B } else { Parity::D };
        let field = random_field(parity, trunc, seed);
        let pts = 2 * trunc + 3;
        let grid = field.synthesize(pts, pts);
        let back = analyze(&grid, parity, trunc).unwrap();
        let mut diff = field.clone();
        diff.add_scaled(&back, -1.0).unwrap();
        prop_assert!(diff.l2_norm() <= 1e-12 * (1.0 + field.l2_norm()));
    }

    /// Grid quadrature of the squared field reproduces the weighted
    /// coefficient norm (Parseval with weights 1, 1/2, 1/4).
    #[test]
    fn quadrature_matches_coefficient_norm(seed in any::<u64>(), trunc in 3usize..9) {
        let field = random_field(Parity::D, trunc, seed);
        let pts = 2 * trunc + 3;
        let grid = field.synthesize(pts, pts);
        let mut quad = 0.0;
        for a in 0..grid.nx {
            for b in 0..grid.nz {
                quad += grid.at(a, b) * grid.at(a, b) * grid.quad_weight(b);
            }
        }
        prop_assert!((quad.sqrt() - field.l2_norm()).abs() <= 1e-11 * (1.0 + field.l2_norm()));
    }

    /// The Galerkin advection term is skew against theta: <u.grad theta,
    /// theta> vanishes for the divergence-free velocity reconstruction.
    #[test]
    fn advection_is_skew_against_theta(
        seed in any::<u64>(),
        r in 0.0f64..80.0,
        beta_hat in 0.0f64..6.0,
    ) {
        let trunc = 6;
        let theta = random_field(Parity::D, trunc, seed);
        let solver = PressureSolver::new(trunc, beta_hat).unwrap();
        let pi = solver.solve(&theta, r).unwrap();
        let phi = stream_function(&pi, &theta, r, beta_hat).unwrap();
        let (u, w) = velocity(&phi);
        let adv = advection(&u, &w, &theta).unwrap();
        let skew = adv.inner_product(&theta).unwrap();
        let scale = (u.l2_norm_sq() + w.l2_norm_sq()).sqrt() * theta.h1_seminorm() * theta.l2_norm();
        prop_assert!(skew.abs() <= 1e-10 * scale.max(1.0), "skew {skew:.3e}");
    }

    /// Stream-function velocities are solenoidal at every compressibility.
    #[test]
    fn reconstructed_velocities_are_divergence_free(
        seed in any::<u64>(),
        r in 0.0f64..80.0,
        beta_hat in 0.0f64..6.0,
    ) {
        let trunc = 8;
        let theta = random_field(Parity::D, trunc, seed);
        let solver = PressureSolver::new(trunc, beta_hat).unwrap();
        let pi = solver.solve(&theta, r).unwrap();
        let phi = stream_function(&pi, &theta, r, beta_hat).unwrap();
        let (u, w) = velocity(&phi);
        let div = divergence_norm(&u, &w).unwrap();
        let speed = (u.l2_norm_sq() + w.l2_norm_sq()).sqrt();
        prop_assert!(div <= 1e-10 * speed.max(1.0));
    }

    /// The a priori gradient and Laplacian estimates hold at arbitrary
    /// admissible compressibility, not only at the anchor values.
    #[test]
    fn pressure_estimates_hold_at_random_compressibility(
        seed in any::<u64>(),
        r in 0.1f64..50.0,
        beta_hat in 0.0f64..6.0,
    ) {
        let trunc = 10;
        let theta = random_field_zero_x_mean(Parity::D, trunc, seed);
        let solver = PressureSolver::new(trunc, beta_hat).unwrap();
        let rep = verify_estimates(&solver, &theta, r).unwrap();
        prop_assert!(rep.grad_norm <= rep.grad_bound * (1.0 + 1e-10));
        prop_assert!(rep.lap_norm <= rep.lap_bound * (1.0 + 1e-10));
    }

    /// Solutions depend continuously on beta_hat at the incompressible
    /// limit, and always carry the zero-mean gauge.
    #[test]
    fn pressure_solution_is_continuous_and_gauged(seed in any::<u64>(), r in 0.1f64..50.0) {
        let trunc = 8;
        let theta = random_field(Parity::D, trunc, seed);
        let at_zero = PressureSolver::new(trunc, 0.0).unwrap().solve(&theta, r).unwrap();
        let near_zero = PressureSolver::new(trunc, 1e-12).unwrap().solve(&theta, r).unwrap();
        let mut diff = at_zero.clone();
        diff.add_scaled(&near_zero, -1.0).unwrap();
        prop_assert!(diff.l2_norm() <= 1e-8 * at_zero.l2_norm().max(1e-30));
        prop_assert_eq!(near_zero.get(1, 0, 0), 0.0);
    }

    /// Certified thresholds shrink as compressibility grows, and every
    /// Rayleigh number strictly inside the threshold gets a negative
    /// decay exponent.
    #[test]
    fn certificates_weaken_with_compressibility(
        lo in 0.0f64..4.0,
        gap in 0.01f64..0.7,
        frac in 0.01f64..0.99,
    ) {
        let hi = (lo + gap).min(4.7);
        let first = certify_threshold(lo, 1e-6).unwrap();
        let second = certify_threshold(hi, 1e-6).unwrap();
        prop_assert!(second.r_max <= first.r_max * (1.0 + 1e-12));
        let r = frac * first.r_max;
        prop_assert!(first.decay_exponent(r) < 0.0);
    }

    /// The dimensionless groups scale linearly in the expansion and
    /// compressibility coefficients.
    #[test]
    fn nondimensional_groups_are_homogeneous(
        alpha_scale in 0.2f64..5.0,
        beta_scale in 0.2f64..5.0,
    ) {
        let base = water_layer();
        let groups = nondimensionalize(&base).unwrap();
        let mut scaled = base;
        scaled.alpha *= alpha_scale;
        scaled.beta *= beta_scale;
        let scaled_groups = nondimensionalize(&scaled).unwrap();
        prop_assert!((scaled_groups.r - alpha_scale * groups.r).abs() <= 1e-10 * groups.r);
        prop_assert!(
            (scaled_groups.beta_hat - beta_scale * groups.beta_hat).abs()
                <= 1e-10 * groups.beta_hat
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Closed-form weighted integrals match numerical quadrature.
    #[test]
    fn exponential_trig_integrals_match_quadrature(s in -3.0f64..3.0, k in 0usize..8) {
        let pk = std::f64::consts::PI * k as f64;
        let ic = simpson(|z| (s * z).exp() * (pk * z).cos(), 4096);
        let is = simpson(|z| (s * z).exp() * (pk * z).sin(), 4096);
        prop_assert!((exp_cos_integral(k, s) - ic).abs() <= 1e-8);
        prop_assert!((exp_sin_integral(k, s) - is).abs() <= 1e-8);
    }
}
