//! Time integration of the temperature perturbation.
//!
//! Each right-side evaluation runs the chain
//!
//! ```text
//!   theta -> Pi (pressure solve) -> Phi (stream function) -> (u, w) -> u . grad theta
//! ```
//!
//! The stream function solves `Lap Phi = R theta_x - beta_hat e^{-beta_hat z}
//! Pi_x` in parity D (the curl of the momentum balance), and the velocity is
//! reconstructed as `u = -Phi_z`, `w = Phi_x`. That makes the discrete
//! velocity divergence-free identically, not merely to truncation order, so
//! the advection term is skew-symmetric against `theta` to round-off and the
//! energy budget closes.
//!
//! `u . grad theta` is a genuine parity-D trigonometric polynomial of twice
//! the truncation degree (`cos . sin` and `sin . cos` vertical products are
//! pure sines), so forming it pointwise on the dealiasing grid and projecting
//! back is the exact Galerkin truncation, with no aliasing residue.
//!
//! Diffusion is mode-diagonal and integrated implicitly; the source `w` and
//! the advection are explicit (forward Euler, or second-order
//! Crank-Nicolson/Adams-Bashforth with an Euler bootstrap step).

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::basis::{
    analyze, dealias_points, lap_eigenvalue, multiply_pointwise, BasisError, Parity, SpectralField,
};
use crate::coupling;
use crate::math;
use crate::pressure::{self, PressureError, PressureSolver};

/// Errors from dynamics-level operations.
#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsError {
    Pressure(PressureError),
    Basis(BasisError),
    /// Parameter validation failed; the message names the parameter.
    InvalidParameter(&'static str),
    /// No sign change found while bracketing the critical Rayleigh number.
    NoGrowthBracket,
    /// `|theta|` crossed the overflow guard: supercritical growth or an
    /// overlong time step.
    BlowUp { t: f64, norm: f64 },
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::Pressure(e) => write!(f, "pressure solve failed: {e}"),
            DynamicsError::Basis(e) => write!(f, "basis operation failed: {e}"),
            DynamicsError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            DynamicsError::NoGrowthBracket => {
                write!(f, "could not bracket the critical Rayleigh number")
            }
            DynamicsError::BlowUp { t, norm } => write!(
                f,
                "temperature norm {norm:.3e} exceeded the overflow guard at t = {t:.6}"
            ),
        }
    }
}

impl From<PressureError> for DynamicsError {
    fn from(e: PressureError) -> Self {
        DynamicsError::Pressure(e)
    }
}

impl From<BasisError> for DynamicsError {
    fn from(e: BasisError) -> Self {
        DynamicsError::Basis(e)
    }
}

/// Explicit/implicit splitting scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// First order: explicit sources, implicit diffusion.
    Euler,
    /// Second order: Adams-Bashforth sources, Crank-Nicolson diffusion,
    /// bootstrapped by one Euler step.
    Cnab2,
}

/// Solve `Lap Phi = r theta_x - beta_hat e^{-beta_hat z} Pi_x` for the
/// parity-D stream function. The Laplacian is mode-diagonal, so this is a
/// weighted projection of the right side followed by a division.
pub fn stream_function(
    pi: &SpectralField,
    theta: &SpectralField,
    r: f64,
    beta_hat: f64,
) -> Result<SpectralField, DynamicsError> {
    let esc = coupling::exp_sin_cos_matrix(pi.truncation(), -beta_hat);
    stream_function_with(&esc, pi, theta, r, beta_hat)
}

/// [`stream_function`] with a caller-cached `e^{-beta_hat z}` sine-cosine
/// coupling matrix.
fn stream_function_with(
    esc_minus: &DMatrix<f64>,
    pi: &SpectralField,
    theta: &SpectralField,
    r: f64,
    beta_hat: f64,
) -> Result<SpectralField, DynamicsError> {
    if pi.parity() != Parity::B || theta.parity() != Parity::D {
        return Err(PressureError::WrongParity.into());
    }
    if pi.truncation() != theta.truncation() {
        return Err(PressureError::TruncationMismatch {
            expected: pi.truncation(),
            got: theta.truncation(),
        }
        .into());
    }
    let trunc = pi.truncation();
    let side = trunc + 1;
    let pi_x = pi.dx();
    let theta_x = theta.dx();
    let mut phi = SpectralField::zeros(Parity::D, trunc);
    for f in 0..2 {
        for m in 1..side {
            // m = 0 columns vanish: both right-side terms carry an x
            // derivative.
            let px = pi_x.column(f, m);
            let tx = theta_x.column(f, m);
            let dst = phi.column_mut(f, m);
            for n in 1..side {
                let mut rhs = 0.5 * r * tx[n];
                if beta_hat != 0.0 {
                    let mut s = 0.0;
                    for (k, &v) in px.iter().enumerate() {
                        s += esc_minus[(n, k)] * v;
                    }
                    rhs -= beta_hat * s;
                }
                dst[n] = rhs / (-0.5 * lap_eigenvalue(m, n));
            }
        }
    }
    Ok(phi)
}

/// Velocity from a stream function: `u = -Phi_z`, `w = Phi_x`. The pair is
/// divergence-free identically.
pub fn velocity(phi: &SpectralField) -> (SpectralField, SpectralField) {
    (phi.dz().scaled(-1.0), phi.dx())
}

/// `|u_x + w_z|` in L2; round-off sized for stream-function velocities.
pub fn divergence_norm(u: &SpectralField, w: &SpectralField) -> Result<f64, DynamicsError> {
    if u.parity() != Parity::B || w.parity() != Parity::D {
        return Err(PressureError::WrongParity.into());
    }
    let mut div = u.dx();
    div.add_scaled(&w.dz(), 1.0).map_err(DynamicsError::Basis)?;
    Ok(div.l2_norm())
}

/// Exact Galerkin projection of `u theta_x + w theta_z` onto parity D.
///
/// The product is formed pointwise on the dealiasing grid, where the
/// quadrature integrates the degree-3N projection integrands exactly.
pub fn advection(
    u: &SpectralField,
    w: &SpectralField,
    theta: &SpectralField,
) -> Result<SpectralField, DynamicsError> {
    if u.parity() != Parity::B || w.parity() != Parity::D || theta.parity() != Parity::D {
        return Err(PressureError::WrongParity.into());
    }
    let trunc = theta.truncation();
    let pts = dealias_points(trunc);
    let ug = u.synthesize(pts, pts);
    let wg = w.synthesize(pts, pts);
    let txg = theta.dx().synthesize(pts, pts);
    let tzg = theta.dz().synthesize(pts, pts);
    let mut prod = multiply_pointwise(&ug, &txg).map_err(DynamicsError::Basis)?;
    let second = multiply_pointwise(&wg, &tzg).map_err(DynamicsError::Basis)?;
    for (a, b) in prod.values.iter_mut().zip(second.values.iter()) {
        *a += *b;
    }
    analyze(&prod, Parity::D, trunc).map_err(DynamicsError::Basis)
}

/// Parameters of a nonlinear simulation run.
#[derive(Clone, Copy, Debug)]
pub struct SimParams {
    /// Darcy-Rayleigh number.
    pub r: f64,
    /// Compressibility number, in `[0, 2 pi)`.
    pub beta_hat: f64,
    /// Spectral truncation `N`.
    pub trunc: usize,
    /// Time step.
    pub dt: f64,
    pub scheme: Scheme,
    /// Stepping aborts with [`DynamicsError::BlowUp`] once `|theta|` exceeds
    /// this.
    pub overflow_guard: f64,
}

impl SimParams {
    /// Parameters with the default overflow guard of `1e6`.
    pub fn new(r: f64, beta_hat: f64, trunc: usize, dt: f64, scheme: Scheme) -> Self {
        SimParams {
            r,
            beta_hat,
            trunc,
            dt,
            scheme,
            overflow_guard: 1e6,
        }
    }
}

/// Instantaneous diagnostics of a simulation state.
///
/// All norms are exact coefficient-space evaluations; `energy` is
/// `(R/2) |theta|^2` and `energy_rate_rhs` is its exact instantaneous rate
/// `R (<theta, w> - |grad theta|^2)` (the advection term drops out by
/// skew-symmetry, which `advection_skew` records).
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticSample {
    pub t: f64,
    pub energy: f64,
    pub theta_l2: f64,
    pub grad_theta_l2: f64,
    /// Magnitude of the full velocity vector, `sqrt(|u|^2 + |w|^2)`.
    pub u_l2: f64,
    /// `|grad pi|` for the physical pressure `pi = e^{-beta_hat z} Pi`.
    pub grad_pi_l2: f64,
    pub energy_rate_rhs: f64,
    /// `|theta_t|`, the instantaneous tendency `|w - u . grad theta + Lap theta|`.
    pub tendency_l2: f64,
    pub lap_theta_l2: f64,
    pub advection_skew: f64,
    pub divergence: f64,
}

struct Fields {
    pi: SpectralField,
    u: SpectralField,
    w: SpectralField,
    adv: SpectralField,
}

/// Time-marching state for the temperature equation.
#[derive(Debug)]
pub struct Simulation {
    params: SimParams,
    solver: PressureSolver,
    esc_minus: DMatrix<f64>,
    theta: SpectralField,
    time: f64,
    steps_taken: usize,
    prev_explicit: Option<SpectralField>,
}

impl Simulation {
    pub fn new(params: SimParams, theta0: SpectralField) -> Result<Self, DynamicsError> {
        if !(params.dt > 0.0 && params.dt.is_finite()) {
            return Err(DynamicsError::InvalidParameter("dt must be positive"));
        }
        if !(params.r >= 0.0 && params.r.is_finite()) {
            return Err(DynamicsError::InvalidParameter("r must be non-negative"));
        }
        if !(params.overflow_guard > 0.0) {
            return Err(DynamicsError::InvalidParameter(
                "overflow_guard must be positive",
            ));
        }
        if theta0.parity() != Parity::D {
            return Err(PressureError::WrongParity.into());
        }
        if theta0.truncation() != params.trunc {
            return Err(PressureError::TruncationMismatch {
                expected: params.trunc,
                got: theta0.truncation(),
            }
            .into());
        }
        let solver = PressureSolver::new(params.trunc, params.beta_hat)?;
        let esc_minus = coupling::exp_sin_cos_matrix(params.trunc, -params.beta_hat);
        Ok(Simulation {
            params,
            solver,
            esc_minus,
            theta: theta0,
            time: 0.0,
            steps_taken: 0,
            prev_explicit: None,
        })
    }

    pub fn params(&self) -> SimParams {
        self.params
    }

    pub fn theta(&self) -> &SpectralField {
        &self.theta
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    fn fields(&self) -> Result<Fields, DynamicsError> {
        let p = self.params;
        let pi = self.solver.solve(&self.theta, p.r)?;
        let phi = stream_function_with(&self.esc_minus, &pi, &self.theta, p.r, p.beta_hat)?;
        let (u, w) = velocity(&phi);
        let adv = advection(&u, &w, &self.theta)?;
        Ok(Fields { pi, u, w, adv })
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<(), DynamicsError> {
        let p = self.params;
        let flds = self.fields()?;
        // Explicit part of d theta / dt: source w minus advection.
        let mut explicit = flds.w;
        explicit
            .add_scaled(&flds.adv, -1.0)
            .map_err(DynamicsError::Basis)?;
        let dt = p.dt;
        let use_cnab2 = p.scheme == Scheme::Cnab2 && self.prev_explicit.is_some();
        let side = p.trunc + 1;
        let mut next = SpectralField::zeros(Parity::D, p.trunc);
        for f in 0..2 {
            for m in 0..side {
                if f == 1 && m == 0 {
                    continue;
                }
                let th = self.theta.column(f, m);
                let ex = explicit.column(f, m);
                let prev = self.prev_explicit.as_ref().map(|e| e.column(f, m));
                let dst = next.column_mut(f, m);
                for n in 1..side {
                    let lam = lap_eigenvalue(m, n);
                    dst[n] = if use_cnab2 {
                        let pv = prev.expect("cnab2 requires a previous step")[n];
                        ((1.0 - 0.5 * dt * lam) * th[n] + dt * (1.5 * ex[n] - 0.5 * pv))
                            / (1.0 + 0.5 * dt * lam)
                    } else {
                        (th[n] + dt * ex[n]) / (1.0 + dt * lam)
                    };
                }
            }
        }
        self.theta = next;
        self.prev_explicit = Some(explicit);
        self.time += dt;
        self.steps_taken += 1;
        let norm = self.theta.l2_norm();
        if !(norm <= p.overflow_guard) {
            return Err(DynamicsError::BlowUp {
                t: self.time,
                norm,
            });
        }
        Ok(())
    }

    /// Diagnostics of the current state. Recomputes the velocity chain, so
    /// sample at the cadence you need rather than every step for large runs.
    pub fn diagnostics(&self) -> Result<DiagnosticSample, DynamicsError> {
        let p = self.params;
        let flds = self.fields()?;
        let theta_l2 = self.theta.l2_norm();
        let grad_theta = self.theta.h1_seminorm();
        let u_sq = flds.u.l2_norm_sq() + flds.w.l2_norm_sq();
        let theta_dot_w = self
            .theta
            .inner_product(&flds.w)
            .map_err(DynamicsError::Basis)?;
        let skew = flds
            .adv
            .inner_product(&self.theta)
            .map_err(DynamicsError::Basis)?;
        let div = divergence_norm(&flds.u, &flds.w)?;
        let lap = self.theta.laplacian();
        let mut tendency = flds.w.clone();
        tendency
            .add_scaled(&flds.adv, -1.0)
            .map_err(DynamicsError::Basis)?;
        tendency.add_scaled(&lap, 1.0).map_err(DynamicsError::Basis)?;
        Ok(DiagnosticSample {
            t: self.time,
            energy: 0.5 * p.r * theta_l2 * theta_l2,
            theta_l2,
            grad_theta_l2: grad_theta,
            u_l2: math::sqrt(u_sq),
            grad_pi_l2: pressure::grad_pi_norm(&flds.pi, p.beta_hat),
            energy_rate_rhs: p.r * (theta_dot_w - grad_theta * grad_theta),
            tendency_l2: tendency.l2_norm(),
            lap_theta_l2: lap.l2_norm(),
            advection_skew: skew,
            divergence: div,
        })
    }
}

/// A completed simulation: the sampled diagnostics and the final state.
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub samples: Vec<DiagnosticSample>,
    pub theta: SpectralField,
}

/// A failed simulation with whatever diagnostics were collected before the
/// failure; blow-ups in long runs keep their history this way.
#[derive(Clone, Debug)]
pub struct RunFailure {
    pub error: DynamicsError,
    pub partial: Vec<DiagnosticSample>,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} samples collected)", self.error, self.partial.len())
    }
}

/// Run `steps` time steps from `theta0`, sampling diagnostics at `t = 0`,
/// every `sample_every` steps, and at the final state.
pub fn run(
    params: SimParams,
    theta0: &SpectralField,
    steps: usize,
    sample_every: usize,
) -> Result<SimulationRun, RunFailure> {
    let fail = |error: DynamicsError, partial: Vec<DiagnosticSample>| RunFailure { error, partial };
    if sample_every == 0 {
        return Err(fail(
            DynamicsError::InvalidParameter("sample_every must be at least 1"),
            Vec::new(),
        ));
    }
    let mut sim = match Simulation::new(params, theta0.clone()) {
        Ok(sim) => sim,
        Err(e) => return Err(fail(e, Vec::new())),
    };
    let mut samples = Vec::with_capacity(steps / sample_every + 2);
    match sim.diagnostics() {
        Ok(s) => samples.push(s),
        Err(e) => return Err(fail(e, samples)),
    }
    for k in 1..=steps {
        if let Err(e) = sim.step() {
            return Err(fail(e, samples));
        }
        if k % sample_every == 0 || k == steps {
            match sim.diagnostics() {
                Ok(s) => samples.push(s),
                Err(e) => return Err(fail(e, samples)),
            }
        }
    }
    let theta = sim.theta().clone();
    Ok(SimulationRun { samples, theta })
}

/// Dense linearized evolution matrix for horizontal mode `m` on the vertical
/// modes `n = 1..=N` of the cosine `x` flavor (the sine flavor has the same
/// spectrum by the `x`-translation symmetry):
/// `G = R W + diag(-lam_{mn})`, where `R W` maps `theta` to the linear
/// vertical velocity response through the pressure and stream solves.
pub fn growth_matrix(
    solver: &PressureSolver,
    r: f64,
    m: usize,
) -> Result<DMatrix<f64>, DynamicsError> {
    let trunc = solver.truncation();
    let beta_hat = solver.beta_hat();
    let esc = coupling::exp_sin_cos_matrix(trunc, -beta_hat);
    let mut g = DMatrix::zeros(trunc, trunc);
    for n in 1..=trunc {
        let mut unit = SpectralField::zeros(Parity::D, trunc);
        unit.set(1, m, n, 1.0);
        // w response at unit R; the solve chain is linear in R.
        if m > 0 {
            let pi = solver.solve(&unit, 1.0)?;
            let phi = stream_function_with(&esc, &pi, &unit, 1.0, beta_hat)?;
            let (_, w) = velocity(&phi);
            for np in 1..=trunc {
                g[(np - 1, n - 1)] = r * w.get(1, m, np);
            }
        }
        g[(n - 1, n - 1)] -= lap_eigenvalue(m, n);
    }
    Ok(g)
}

/// Largest real part of the linearized spectrum at horizontal mode `m`.
pub fn max_growth_rate(solver: &PressureSolver, r: f64, m: usize) -> Result<f64, DynamicsError> {
    let g = growth_matrix(solver, r, m)?;
    let eigs = g.complex_eigenvalues();
    let mut worst = f64::NEG_INFINITY;
    for e in eigs.iter() {
        worst = math::max(worst, e.re);
    }
    Ok(worst)
}

/// Critical Rayleigh number of horizontal mode `m`: the zero of
/// `max_growth_rate` in `R`, found by bisection (the rate is monotone
/// increasing in `R`). `tol` is the absolute tolerance on `R`.
pub fn critical_rayleigh(
    beta_hat: f64,
    trunc: usize,
    m: usize,
    tol: f64,
) -> Result<f64, DynamicsError> {
    if m == 0 {
        // The mean mode has no buoyancy feedback and never destabilizes.
        return Err(DynamicsError::InvalidParameter("m must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(DynamicsError::InvalidParameter("tol must be positive"));
    }
    let solver = PressureSolver::new(trunc, beta_hat)?;
    let mut lo = 0.0;
    let mut hi = 100.0;
    while max_growth_rate(&solver, hi, m)? < 0.0 {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(DynamicsError::NoGrowthBracket);
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if max_growth_rate(&solver, mid, m)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Worst-case ratios of the a priori velocity bounds over an ensemble of
/// solved states.
#[derive(Clone, Copy, Debug)]
pub struct VelocityBoundReport {
    pub samples: usize,
    /// max over samples of `|w|^2 / (gamma (|theta|^2 + |grad theta|^2))`
    /// with `gamma = max(e^{2 beta_hat}/(2 pi - beta_hat), R)`.
    pub vertical_ratio_max: f64,
    /// max over samples of `|grad u| / ((c + R) |grad theta|)` with
    /// `c = beta_hat e^{beta_hat}/(2 pi - beta_hat)
    ///    + pi e^{2 beta_hat}/(2 (2 pi - beta_hat))`.
    pub gradient_ratio_max: f64,
}

/// Measures the two a priori velocity estimates that the existence argument
/// rests on, over `samples` random temperature fields pushed through the
/// full solve chain. Both ratios must stay at or below 1 for the bounds to
/// hold; values above 1 quantify the violation.
pub fn check_velocity_bounds(
    trunc: usize,
    r: f64,
    beta_hat: f64,
    samples: usize,
    seed: u64,
) -> Result<VelocityBoundReport, DynamicsError> {
    if samples == 0 {
        return Err(DynamicsError::InvalidParameter(
            "samples must be at least 1",
        ));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(DynamicsError::InvalidParameter("r must be non-negative"));
    }
    let solver = PressureSolver::new(trunc, beta_hat)?;
    let esc = coupling::exp_sin_cos_matrix(trunc, -beta_hat);
    let two_pi = 2.0 * math::PI;
    let gamma = math::max(math::exp(2.0 * beta_hat) / (two_pi - beta_hat), r);
    let c_grad = beta_hat * math::exp(beta_hat) / (two_pi - beta_hat)
        + math::PI * math::exp(2.0 * beta_hat) / (2.0 * (two_pi - beta_hat));
    let mut vertical_ratio_max: f64 = 0.0;
    let mut gradient_ratio_max: f64 = 0.0;
    for k in 0..samples {
        let theta = crate::basis::random_field(Parity::D, trunc, seed.wrapping_add(k as u64));
        let pi = solver.solve(&theta, r)?;
        let phi = stream_function_with(&esc, &pi, &theta, r, beta_hat)?;
        let (u, w) = velocity(&phi);
        let w_sq = w.l2_norm_sq();
        let sobolev_sq = theta.l2_norm_sq() + theta.h1_seminorm_sq();
        vertical_ratio_max = math::max(vertical_ratio_max, w_sq / (gamma * sobolev_sq));
        let grad_u = math::sqrt(u.h1_seminorm_sq() + w.h1_seminorm_sq());
        let grad_theta = theta.h1_seminorm();
        gradient_ratio_max =
            math::max(gradient_ratio_max, grad_u / ((c_grad + r) * grad_theta));
    }
    Ok(VelocityBoundReport {
        samples,
        vertical_ratio_max,
        gradient_ratio_max,
    })
}
