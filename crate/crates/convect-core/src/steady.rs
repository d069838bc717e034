//! Dimensional conduction state and the nondimensionalization map.
//!
//! The motionless base state of the layer carries the linear temperature
//! profile T_b(z) = T_L - (T_L - T_U) z / d and a hydrostatic pressure p_b
//! balancing the density law rho = rho0 [1 - alpha (T - T0) + beta (p - p0)].
//! For beta > 0 the balance has a closed form; it is audited here against an
//! independent Runge-Kutta integration of the balance ODE rather than
//! trusted, and the comparison is a first-class output. At beta = 0 the
//! closed form degenerates (1/beta^2 terms) and the ODE integration is the
//! only path.
//!
//! The perturbation dynamics depends on the dimensional inputs only through
//! two groups: the Darcy-Rayleigh number R = rho0 alpha g d (T_L - T_U) K /
//! (mu k) and the compressibility number beta_hat = rho0 g d beta, with
//! k = chi / (rho0 c_V) the thermal diffusivity of the saturated medium.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Internal resolution of the pressure integrator: maximum substep d/8192.
const ODE_STEPS: f64 = 8192.0;

/// Physical inputs of the dimensional problem.
///
/// `t0` is the reference temperature of the density law. The layer's base
/// state does not constrain it; the printed closed-form pressure balances
/// the density law exactly when `t0 = t_l`, which is the conventional
/// choice. Other values are legal and show up as a recorded discrepancy
/// between the closed form and the ODE integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionalParams {
    /// Fluid viscosity mu.
    pub mu: f64,
    /// Permeability K.
    pub permeability: f64,
    /// Thermal diffusivity chi.
    pub chi: f64,
    /// Specific heat at constant volume c_V.
    pub c_v: f64,
    /// Reference density rho0.
    pub rho0: f64,
    /// Thermal expansion coefficient alpha.
    pub alpha: f64,
    /// Compressibility factor beta.
    pub beta: f64,
    /// Gravity g.
    pub g: f64,
    /// Layer depth d.
    pub d: f64,
    /// Lower and upper boundary temperatures, t_l > t_u.
    pub t_l: f64,
    pub t_u: f64,
    /// Reference temperature of the density law.
    pub t0: f64,
    /// Gauge pressure p0.
    pub p0: f64,
    /// Prescribed pressure constant; the boundary value is p(0) = p0 + p_bar.
    pub p_bar: f64,
}

impl DimensionalParams {
    /// Thermal diffusivity of the saturated medium, k = chi / (rho0 c_V).
    pub fn k(&self) -> f64 {
        self.chi / (self.rho0 * self.c_v)
    }

    /// Temperature drop across the layer.
    pub fn delta_t(&self) -> f64 {
        self.t_l - self.t_u
    }

    pub fn validate(&self) -> Result<(), SteadyError> {
        let positive = [
            (self.mu, "mu must be positive"),
            (self.permeability, "permeability must be positive"),
            (self.chi, "chi must be positive"),
            (self.c_v, "c_v must be positive"),
            (self.rho0, "rho0 must be positive"),
            (self.g, "g must be positive"),
            (self.d, "d must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SteadyError::InvalidParameter(msg));
            }
        }
        let nonnegative = [
            (self.alpha, "alpha must be non-negative"),
            (self.beta, "beta must be non-negative"),
        ];
        for (v, msg) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SteadyError::InvalidParameter(msg));
            }
        }
        if !(self.t_l > self.t_u) {
            return Err(SteadyError::InvalidParameter("t_l must exceed t_u"));
        }
        for v in [self.t0, self.p0, self.p_bar] {
            if !v.is_finite() {
                return Err(SteadyError::InvalidParameter(
                    "t0, p0, p_bar must be finite",
                ));
            }
        }
        Ok(())
    }
}

/// Errors from base-state evaluations.
#[derive(Clone, Debug, PartialEq)]
pub enum SteadyError {
    InvalidParameter(&'static str),
    /// The closed-form pressure has 1/beta^2 terms; at beta = 0 use
    /// `conduction_pressure_ode`.
    IncompressibleClosedForm,
    /// Height outside [0, d].
    OutOfLayer { z: f64, d: f64 },
    /// Grid points must be strictly increasing and inside [0, d].
    BadGrid,
    /// Residual evaluation needs a uniform grid of at least 5 points.
    NonUniformGrid,
    TooFewPoints { needed: usize, got: usize },
}

impl fmt::Display for SteadyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteadyError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            SteadyError::IncompressibleClosedForm => write!(
                f,
                "closed-form pressure is undefined at beta = 0; use conduction_pressure_ode"
            ),
            SteadyError::OutOfLayer { z, d } => {
                write!(f, "height {z} outside the layer [0, {d}]")
            }
            SteadyError::BadGrid => {
                write!(f, "grid must be strictly increasing inside [0, d]")
            }
            SteadyError::NonUniformGrid => write!(f, "residual check needs a uniform grid"),
            SteadyError::TooFewPoints { needed, got } => {
                write!(f, "need at least {needed} grid points, got {got}")
            }
        }
    }
}

/// Base-state temperature T_b(z) = T_L - (T_L - T_U) z / d.
pub fn conduction_temperature(z: f64, params: &DimensionalParams) -> Result<f64, SteadyError> {
    params.validate()?;
    if !(0.0..=params.d).contains(&z) {
        return Err(SteadyError::OutOfLayer { z, d: params.d });
    }
    Ok(params.t_l - params.delta_t() * z / params.d)
}

/// Closed-form hydrostatic pressure of the conduction state, beta > 0:
///
/// ```text
/// p_b(z) = p0 + p_bar e^{-rho0 g beta z}
///        + (1/beta^2) (alpha DT / (rho0 g d)) (1 - e^{-rho0 g beta z})
///        - (1/beta) (alpha DT z / d + 1 - e^{-rho0 g beta z})
/// ```
///
/// `1 - e^{-X}` is evaluated with `expm1`; the 1/beta and 1/beta^2 factors
/// still cancel through subtraction, costing roughly `1e-16 / beta_hat` in
/// relative accuracy, which is why beta = 0 is rejected outright.
pub fn conduction_pressure_closed_form(
    z: f64,
    params: &DimensionalParams,
) -> Result<f64, SteadyError> {
    params.validate()?;
    if params.beta == 0.0 {
        return Err(SteadyError::IncompressibleClosedForm);
    }
    if !(0.0..=params.d).contains(&z) {
        return Err(SteadyError::OutOfLayer { z, d: params.d });
    }
    let x = params.rho0 * params.g * params.beta * z;
    // 1 - e^{-x} without cancellation.
    let em = -math::expm1(-x);
    let alpha_dt = params.alpha * params.delta_t();
    Ok(params.p0
        + params.p_bar * math::exp(-x)
        + alpha_dt / (params.rho0 * params.g * params.d) * em / (params.beta * params.beta)
        - (alpha_dt * z / params.d + em) / params.beta)
}

/// Hydrostatic balance right side: p' = -rho0 g [1 - alpha (T_b - T0)
/// + beta (p - p0)].
fn pressure_slope(z: f64, p: f64, params: &DimensionalParams) -> f64 {
    let t_b = params.t_l - params.delta_t() * z / params.d;
    -params.rho0
        * params.g
        * (1.0 - params.alpha * (t_b - params.t0) + params.beta * (p - params.p0))
}

/// Integrates the hydrostatic balance from p(0) = p0 + p_bar along `z_grid`
/// with classical fourth-order Runge-Kutta, independent of the closed form.
/// Substeps are capped at d/8192, giving local errors far below 1e-12
/// relative for physical parameter ranges.
pub fn conduction_pressure_ode(
    z_grid: &[f64],
    params: &DimensionalParams,
) -> Result<Vec<f64>, SteadyError> {
    params.validate()?;
    if z_grid.is_empty() {
        return Err(SteadyError::TooFewPoints { needed: 1, got: 0 });
    }
    let mut prev = 0.0_f64;
    for &z in z_grid {
        if !(0.0..=params.d).contains(&z) || (z < prev || (z == prev && z > 0.0)) {
            return Err(SteadyError::BadGrid);
        }
        prev = z;
    }
    let h_max = params.d / ODE_STEPS;
    let mut out = Vec::with_capacity(z_grid.len());
    let mut z = 0.0_f64;
    let mut p = params.p0 + params.p_bar;
    for &target in z_grid {
        let span = target - z;
        if span > 0.0 {
            let steps = math::ceil(span / h_max) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = pressure_slope(z, p, params);
                let k2 = pressure_slope(z + 0.5 * h, p + 0.5 * h * k1, params);
                let k3 = pressure_slope(z + 0.5 * h, p + 0.5 * h * k2, params);
                let k4 = pressure_slope(z + h, p + h * k3, params);
                p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                z += h;
            }
            z = target;
        }
        out.push(p);
    }
    Ok(out)
}

/// Max over interior grid points of the hydrostatic defect
/// `|-p'(z) - rho0 g [1 - alpha (T_b - T0) + beta (p - p0)]| / (rho0 g)`,
/// with p' from the fourth-order central difference. Needs a uniform grid
/// of at least 5 points; the two points nearest each wall are not checked.
pub fn hydrostatic_residual(
    z_grid: &[f64],
    pressure: &[f64],
    params: &DimensionalParams,
) -> Result<f64, SteadyError> {
    params.validate()?;
    let n = z_grid.len();
    if n != pressure.len() || n < 5 {
        return Err(SteadyError::TooFewPoints { needed: 5, got: n.min(pressure.len()) });
    }
    let h = z_grid[1] - z_grid[0];
    if !(h > 0.0) {
        return Err(SteadyError::BadGrid);
    }
    for i in 1..n {
        if math::abs(z_grid[i] - z_grid[i - 1] - h) > 1e-9 * h {
            return Err(SteadyError::NonUniformGrid);
        }
    }
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let dp = (-pressure[i + 2] + 8.0 * pressure[i + 1] - 8.0 * pressure[i - 1]
            + pressure[i - 2])
            / (12.0 * h);
        let defect = -dp + pressure_slope(z_grid[i], pressure[i], params);
        worst = math::max(worst, math::abs(defect) / (params.rho0 * params.g));
    }
    Ok(worst)
}

/// The conduction state sampled on a uniform grid of `n` points, with the
/// closed-form/integration comparison carried alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct ConductionProfile {
    pub z: Vec<f64>,
    pub temperature: Vec<f64>,
    /// Closed-form pressure; `None` at beta = 0, where only the integration
    /// path exists.
    pub pressure_closed_form: Option<Vec<f64>>,
    /// Pressure from the Runge-Kutta balance integration.
    pub pressure_ode: Vec<f64>,
    /// max |closed form - integration| over the grid, when both exist.
    pub max_pressure_gap: Option<f64>,
}

/// Samples the conduction state on `n >= 5` uniform points spanning [0, d].
pub fn conduction_profile(
    n: usize,
    params: &DimensionalParams,
) -> Result<ConductionProfile, SteadyError> {
    params.validate()?;
    if n < 5 {
        return Err(SteadyError::TooFewPoints { needed: 5, got: n });
    }
    let z: Vec<f64> = (0..n)
        .map(|i| params.d * i as f64 / (n - 1) as f64)
        .collect();
    let temperature: Vec<f64> = z
        .iter()
        .map(|&zi| params.t_l - params.delta_t() * zi / params.d)
        .collect();
    let pressure_ode = conduction_pressure_ode(&z, params)?;
    let pressure_closed_form = if params.beta > 0.0 {
        let mut vals = Vec::with_capacity(n);
        for &zi in &z {
            vals.push(conduction_pressure_closed_form(zi, params)?);
        }
        Some(vals)
    } else {
        None
    };
    let max_pressure_gap = pressure_closed_form.as_ref().map(|cf| {
        cf.iter()
            .zip(pressure_ode.iter())
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, math::max)
    });
    Ok(ConductionProfile {
        z,
        temperature,
        pressure_closed_form,
        pressure_ode,
        max_pressure_gap,
    })
}

/// The dimensionless groups and the scales that produce them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NondimensionalGroups {
    /// Darcy-Rayleigh number R = rho0 alpha g d (T_L - T_U) K / (mu k).
    pub r: f64,
    /// Compressibility number beta_hat = rho0 g d beta.
    pub beta_hat: f64,
    /// Pressure scale P = mu k / K.
    pub pressure_scale: f64,
    /// Velocity scale U = k / d.
    pub velocity_scale: f64,
    /// Temperature scale T# = T_L - T_U.
    pub temperature_scale: f64,
    /// Time scale tau = d^2 / k.
    pub time_scale: f64,
}

/// Maps dimensional inputs to (R, beta_hat) and the associated scales.
pub fn nondimensionalize(params: &DimensionalParams) -> Result<NondimensionalGroups, SteadyError> {
    params.validate()?;
    let k = params.k();
    Ok(NondimensionalGroups {
        r: params.rho0 * params.alpha * params.g * params.d * params.delta_t()
            * params.permeability
            / (params.mu * k),
        beta_hat: params.rho0 * params.g * params.d * params.beta,
        pressure_scale: params.mu * k / params.permeability,
        velocity_scale: k / params.d,
        temperature_scale: params.delta_t(),
        time_scale: params.d * params.d / k,
    })
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    /// Water-like layer from the worked nondimensionalization example:
    /// k = chi / (rho0 c_V) = 1.4e-7 and R comes out exactly 14.
    fn reference_params() -> DimensionalParams {
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
            p0: 101_325.0,
            p_bar: 0.0,
        }
    }

    fn uniform_grid(n: usize, d: f64) -> Vec<f64> {
        (0..n).map(|i| d * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn temperature_profile_is_the_linear_interpolant() {
        let p = reference_params();
        assert_eq!(conduction_temperature(0.0, &p).unwrap(), p.t_l);
        assert_eq!(conduction_temperature(p.d, &p).unwrap(), p.t_u);
        assert_relative_eq!(
            conduction_temperature(0.5 * p.d, &p).unwrap(),
            0.5 * (p.t_l + p.t_u),
            max_relative = 1e-15
        );
        assert!(matches!(
            conduction_temperature(-0.01, &p).unwrap_err(),
            SteadyError::OutOfLayer { .. }
        ));
    }

    #[test]
    fn closed_form_boundary_value_and_incompressible_rejection() {
        let mut p = reference_params();
        p.p_bar = 250.0;
        assert_relative_eq!(
            conduction_pressure_closed_form(0.0, &p).unwrap(),
            p.p0 + p.p_bar,
            max_relative = 1e-15
        );
        p.beta = 0.0;
        assert_eq!(
            conduction_pressure_closed_form(0.5 * p.d, &p).unwrap_err(),
            SteadyError::IncompressibleClosedForm
        );
    }

    #[test]
    fn incompressible_isothermal_column_is_exactly_linear() {
        let mut p = reference_params();
        p.beta = 0.0;
        p.alpha = 0.0;
        let z = uniform_grid(33, p.d);
        let prof = conduction_pressure_ode(&z, &p).unwrap();
        for (zi, pi) in z.iter().zip(prof.iter()) {
            let exact = p.p0 + p.p_bar - p.rho0 * p.g * zi;
            assert_relative_eq!(*pi, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn incompressible_thermal_column_matches_the_quadrature() {
        // beta = 0, T0 = T_L: p' = -rho0 g (1 + alpha DT z / d), so
        // p = p(0) - rho0 g (z + alpha DT z^2 / (2 d)). The fluid is denser
        // aloft (cooler than the T0 = T_L reference), steepening the drop.
        let mut p = reference_params();
        p.beta = 0.0;
        let z = uniform_grid(17, p.d);
        let prof = conduction_pressure_ode(&z, &p).unwrap();
        let alpha_dt = p.alpha * p.delta_t();
        for (zi, pi) in z.iter().zip(prof.iter()) {
            let exact = p.p0 - p.rho0 * p.g * (zi + alpha_dt * zi * zi / (2.0 * p.d));
            assert_relative_eq!(*pi, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_agrees_with_the_independent_integration() {
        // Physical beta and an exaggerated one that bends the exponential.
        for beta in [1e-6, 1e-4] {
            let mut p = reference_params();
            p.beta = beta;
            p.p_bar = 500.0;
            p.d = 1.0;
            let z = uniform_grid(65, p.d);
            let ode = conduction_pressure_ode(&z, &p).unwrap();
            for (zi, pi) in z.iter().zip(ode.iter()) {
                let cf = conduction_pressure_closed_form(*zi, &p).unwrap();
                assert_relative_eq!(cf, *pi, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_limit_reaches_the_incompressible_profile() {
        let mut p = reference_params();
        p.d = 1.0;
        p.beta = 1e-10;
        let z = uniform_grid(9, p.d);
        let mut p0_params = p;
        p0_params.beta = 0.0;
        let incompressible = conduction_pressure_ode(&z, &p0_params).unwrap();
        for (zi, pi) in z.iter().zip(incompressible.iter()) {
            let cf = conduction_pressure_closed_form(*zi, &p).unwrap();
            assert_relative_eq!(cf, *pi, max_relative = 1e-5);
        }
    }

    #[test]
    fn integration_is_independent_of_the_grid_partition() {
        let mut p = reference_params();
        p.beta = 1e-4;
        p.d = 1.0;
        let coarse = conduction_pressure_ode(&[p.d], &p).unwrap()[0];
        let fine_grid = uniform_grid(1025, p.d);
        let fine = *conduction_pressure_ode(&fine_grid, &p).unwrap().last().unwrap();
        assert_relative_eq!(coarse, fine, max_relative = 1e-12);
    }

    #[test]
    fn hydrostatic_residual_is_tiny_on_integrated_profiles() {
        for beta in [0.0, 1e-6, 1e-4] {
            let mut p = reference_params();
            p.beta = beta;
            p.d = 1.0;
            let z = uniform_grid(257, p.d);
            let prof = conduction_pressure_ode(&z, &p).unwrap();
            let res = hydrostatic_residual(&z, &prof, &p).unwrap();
            assert!(res <= 1e-10, "beta {beta}: residual {res:.3e}");
        }
    }

    #[test]
    fn closed_form_satisfies_the_balance_it_claims() {
        // Verifies the formula against the density law with T0 = T_L, not
        // merely against the integrator.
        let mut p = reference_params();
        p.beta = 1e-4;
        p.d = 1.0;
        p.p_bar = 100.0;
        let z = uniform_grid(257, p.d);
        let prof: Vec<f64> = z
            .iter()
            .map(|&zi| conduction_pressure_closed_form(zi, &p).unwrap())
            .collect();
        let res = hydrostatic_residual(&z, &prof, &p).unwrap();
        assert!(res <= 1e-10, "residual {res:.3e}");
    }

    #[test]
    fn profile_carries_both_pressures_and_their_gap() {
        let mut p = reference_params();
        p.d = 1.0;
        let prof = conduction_profile(65, &p).unwrap();
        assert_eq!(prof.z.len(), 65);
        assert_eq!(prof.temperature[0], p.t_l);
        assert_eq!(*prof.temperature.last().unwrap(), p.t_u);
        // Linear profile: vanishing second differences.
        for w in prof.temperature.windows(3) {
            assert!((w[0] - 2.0 * w[1] + w[2]).abs() < 1e-12 * p.t_l.abs());
        }
        let gap = prof.max_pressure_gap.unwrap();
        let scale = p.rho0 * p.g * p.d;
        assert!(gap <= 1e-9 * scale, "gap {gap:.3e}");
        let mut p0_params = p;
        p0_params.beta = 0.0;
        let prof0 = conduction_profile(65, &p0_params).unwrap();
        assert!(prof0.pressure_closed_form.is_none());
        assert!(prof0.max_pressure_gap.is_none());
    }

    #[test]
    fn nondimensional_groups_match_the_worked_example() {
        let p = reference_params();
        let groups = nondimensionalize(&p).unwrap();
        // rho0 alpha g d DT K / (mu k) with k = chi / (rho0 c_V) = 1.4e-7.
        assert_relative_eq!(groups.r, 14.0, max_relative = 1e-12);
        assert_relative_eq!(groups.beta_hat, 1000.0 * 9.8 * 0.1 * 1e-6, max_relative = 1e-15);
        assert_relative_eq!(groups.pressure_scale, 1e-3 * 1.4e-7 / 1e-9, max_relative = 1e-15);
        assert_relative_eq!(groups.velocity_scale, 1.4e-7 / 0.1, max_relative = 1e-15);
        assert_eq!(groups.temperature_scale, 10.0);
        assert_relative_eq!(groups.time_scale, 0.01 / 1.4e-7, max_relative = 1e-15);
    }

    #[test]
    fn groups_are_homogeneous_in_their_drivers() {
        let p = reference_params();
        let base = nondimensionalize(&p).unwrap();
        let mut doubled = p;
        doubled.alpha *= 2.0;
        assert_relative_eq!(
            nondimensionalize(&doubled).unwrap().r,
            2.0 * base.r,
            max_relative = 1e-14
        );
        let mut doubled = p;
        doubled.beta *= 2.0;
        assert_relative_eq!(
            nondimensionalize(&doubled).unwrap().beta_hat,
            2.0 * base.beta_hat,
            max_relative = 1e-14
        );
        let mut off = p;
        off.alpha = 0.0;
        assert_eq!(nondimensionalize(&off).unwrap().r, 0.0);
        let mut off = p;
        off.beta = 0.0;
        assert_eq!(nondimensionalize(&off).unwrap().beta_hat, 0.0);
    }

    #[test]
    fn validation_rejects_unphysical_inputs() {
        let mut p = reference_params();
        p.t_u = p.t_l;
        assert!(matches!(
            nondimensionalize(&p).unwrap_err(),
            SteadyError::InvalidParameter(_)
        ));
        let mut p = reference_params();
        p.rho0 = 0.0;
        assert!(p.validate().is_err());
        let mut p = reference_params();
        p.beta = -1e-9;
        assert!(p.validate().is_err());
        let p = reference_params();
        assert!(matches!(
            conduction_pressure_ode(&[0.0, 0.2 * p.d, 0.1 * p.d], &p).unwrap_err(),
            SteadyError::BadGrid
        ));
        assert!(matches!(
            hydrostatic_residual(&[0.0, 1.0], &[0.0, 1.0], &p).unwrap_err(),
            SteadyError::TooFewPoints { .. }
        ));
        let z = vec![0.0, 0.01, 0.03, 0.04, 0.05];
        let vals = vec![0.0; 5];
        assert!(matches!(
            hydrostatic_residual(&z, &vals, &p).unwrap_err(),
            SteadyError::NonUniformGrid
        ));
    }
}
