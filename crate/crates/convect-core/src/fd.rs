//! Second-order finite-difference oracle on a small collocated grid.
//!
//! This is a deliberately plain 5-point-stencil solver for the same
//! perturbation system as the spectral code, built from different parts:
//! nodal values instead of coefficients, centered differences instead of
//! exact derivatives, a discrete Fourier transform in x (naive summed
//! tables, not an FFT) with a Thomas tridiagonal solve per wavenumber in z.
//! It exists to cross-validate the spectral solver; agreement is expected
//! only to O(h^2).
//!
//! Grid: x_i = i / nx (periodic, i = 0..nx-1), z_j = j / nz
//! (j = 0..nz, walls included), matching the layout that
//! [`SpectralField::synthesize`] produces with `nz + 1` vertical points.
//! theta takes homogeneous Dirichlet walls through odd ghost reflection;
//! Pi takes Neumann walls through even reflection.
//!
//! The x-mean pressure block (wavenumber zero) is singular like its
//! continuum counterpart: Neumann conditions determine Pi only up to a
//! constant, and the data must satisfy a compatibility condition. The
//! solver projects the data onto the range of the singular block (the
//! discarded component is O(h^2) for smooth fields), pins one unknown,
//! and fixes the constant afterwards by the zero-mean gauge over the
//! domain.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::basis::GridField;
use crate::math;

/// Grid and stepping parameters of the oracle. `nx` and `nz` count cells:
/// the grid carries `nx` periodic columns and `nz + 1` z-levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdGridSpec {
    pub nx: usize,
    pub nz: usize,
    pub dt: f64,
    pub r: f64,
    pub beta_hat: f64,
    /// Stepping aborts once the discrete L2 norm of theta exceeds this.
    pub overflow_guard: f64,
}

impl FdGridSpec {
    /// Spec with the default overflow guard of `1e6`.
    pub fn new(nx: usize, nz: usize, dt: f64, r: f64, beta_hat: f64) -> Self {
        FdGridSpec {
            nx,
            nz,
            dt,
            r,
            beta_hat,
            overflow_guard: 1e6,
        }
    }

    pub fn validate(&self) -> Result<(), FdError> {
        if self.nx < 8 || self.nz < 8 {
            return Err(FdError::InvalidParameter("nx and nz must be at least 8"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FdError::InvalidParameter("dt must be positive"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(FdError::InvalidParameter("r must be non-negative"));
        }
        if !(self.beta_hat >= 0.0 && self.beta_hat < 2.0 * math::PI) {
            return Err(FdError::InvalidParameter("beta_hat outside [0, 2 pi)"));
        }
        if !(self.overflow_guard > 0.0) {
            return Err(FdError::InvalidParameter("overflow_guard must be positive"));
        }
        Ok(())
    }

    fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    fn hz(&self) -> f64 {
        1.0 / self.nz as f64
    }
}

/// Errors from the finite-difference oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum FdError {
    InvalidParameter(&'static str),
    /// Field dimensions disagree with the grid in [`FdGridSpec`].
    GridMismatch { nx: usize, nz_points: usize },
    /// The linear solve left a residual above the gate.
    NonConvergence { residual: f64 },
    /// Discrete `|theta|` crossed the overflow guard.
    BlowUp { t: f64, norm: f64 },
}

impl fmt::Display for FdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FdError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            FdError::GridMismatch { nx, nz_points } => {
                write!(f, "field is {nx} x {nz_points}, spec grid disagrees")
            }
            FdError::NonConvergence { residual } => {
                write!(f, "pressure solve residual {residual:.3e} above 1e-10")
            }
            FdError::BlowUp { t, norm } => write!(
                f,
                "discrete theta norm {norm:.3e} exceeded the overflow guard at t = {t:.6}"
            ),
        }
    }
}

fn check_grid(field: &GridField, spec: &FdGridSpec) -> Result<(), FdError> {
    if field.nx != spec.nx || field.nz != spec.nz + 1 {
        return Err(FdError::GridMismatch {
            nx: field.nx,
            nz_points: field.nz,
        });
    }
    Ok(())
}

/// Discrete L2 norm (trapezoid in z, uniform in x) of a grid field.
pub fn grid_l2_norm(field: &GridField) -> f64 {
    let mut acc = 0.0;
    for a in 0..field.nx {
        for b in 0..field.nz {
            let v = field.at(a, b);
            acc += v * v * field.quad_weight(b);
        }
    }
    math::sqrt(acc)
}

/// Cosine/sine tables for the naive real DFT in x: wavenumbers 0..=nx/2.
struct XTransform {
    nx: usize,
    half: usize,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
}

impl XTransform {
    fn new(nx: usize) -> Self {
        let half = nx / 2;
        let mut cos_t = Vec::with_capacity((half + 1) * nx);
        let mut sin_t = Vec::with_capacity((half + 1) * nx);
        for k in 0..=half {
            for i in 0..nx {
                let arg = 2.0 * math::PI * (k * i % nx) as f64 / nx as f64;
                cos_t.push(math::cos(arg));
                sin_t.push(math::sin(arg));
            }
        }
        XTransform { nx, half, cos_t, sin_t }
    }

    /// Forward coefficients (a_k, b_k) of one z-level:
    /// f_i = sum_k a_k cos(2 pi k i / nx) + b_k sin(2 pi k i / nx).
    fn forward(&self, row: &[f64], a: &mut [f64], b: &mut [f64]) {
        let nx = self.nx as f64;
        for k in 0..=self.half {
            let base = k * self.nx;
            let mut ca = 0.0;
            let mut sb = 0.0;
            for (i, &v) in row.iter().enumerate() {
                ca += v * self.cos_t[base + i];
                sb += v * self.sin_t[base + i];
            }
            // Normalization of the real series: interior wavenumbers carry
            // the factor 2/nx, the ends 1/nx.
            let scale = if k == 0 || (self.nx % 2 == 0 && k == self.half) {
                1.0 / nx
            } else {
                2.0 / nx
            };
            a[k] = ca * scale;
            b[k] = sb * scale;
        }
    }

    fn inverse(&self, a: &[f64], b: &[f64], row: &mut [f64]) {
        for (i, out) in row.iter_mut().enumerate() {
            let mut v = 0.0;
            for k in 0..=self.half {
                let base = k * self.nx;
                v += a[k] * self.cos_t[base + i] + b[k] * self.sin_t[base + i];
            }
            *out = v;
        }
    }
}

/// Thomas algorithm on a tridiagonal system; diagonals are overwritten.
fn thomas(lower: &mut [f64], diag: &mut [f64], upper: &mut [f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

/// Rows of the vertical pressure operator for one x wavenumber:
/// second difference minus `mu` minus centered `beta_hat` d/dz, with even
/// (Neumann) ghost closure at both walls.
fn pressure_bands(spec: &FdGridSpec, mu: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = spec.nz + 1;
    let hz = spec.hz();
    let ihz2 = 1.0 / (hz * hz);
    let bh = spec.beta_hat / (2.0 * hz);
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    diag[0] = -2.0 * ihz2 - mu;
    upper[0] = 2.0 * ihz2;
    for j in 1..n - 1 {
        lower[j] = ihz2 + bh;
        diag[j] = -2.0 * ihz2 - mu;
        upper[j] = ihz2 - bh;
    }
    lower[n - 1] = 2.0 * ihz2;
    diag[n - 1] = -2.0 * ihz2 - mu;
    (lower, diag, upper)
}

fn band_residual(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    x: &[f64],
    b: &[f64],
) -> f64 {
    let n = diag.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1e-30;
    for i in 0..n {
        let mut ax = diag[i] * x[i];
        if i > 0 {
            ax += lower[i] * x[i - 1];
        }
        if i + 1 < n {
            ax += upper[i] * x[i + 1];
        }
        worst = math::max(worst, math::abs(ax - b[i]));
        scale = math::max(scale, math::abs(b[i]));
    }
    worst / scale
}

/// Centered vertical derivative of theta with odd (Dirichlet) ghosts.
fn theta_dz(theta: &GridField, spec: &FdGridSpec) -> GridField {
    let n = spec.nz + 1;
    let hz = spec.hz();
    let mut out = GridField::zeros(spec.nx, n);
    for i in 0..spec.nx {
        for j in 0..n {
            let up = if j + 1 < n { theta.at(i, j + 1) } else { -theta.at(i, n - 2) };
            let dn = if j > 0 { theta.at(i, j - 1) } else { -theta.at(i, 1) };
            *out.at_mut(i, j) = (up - dn) / (2.0 * hz);
        }
    }
    out
}

/// Solves the transformed pressure problem
/// `Lap Pi - beta_hat Pi_z = R e^{beta_hat z} theta_z` on the grid with
/// Neumann walls and zero domain mean, by x-DFT and one tridiagonal solve
/// per wavenumber. The singular mean block is deflated as described in the
/// module docs.
pub fn fd_solve_pressure(theta: &GridField, spec: &FdGridSpec) -> Result<GridField, FdError> {
    spec.validate()?;
    check_grid(theta, spec)?;
    let n = spec.nz + 1;
    let hx = spec.hx();
    // Right side on nodes.
    let tz = theta_dz(theta, spec);
    let mut rhs = GridField::zeros(spec.nx, n);
    for i in 0..spec.nx {
        for j in 0..n {
            let z = j as f64 * spec.hz();
            *rhs.at_mut(i, j) = spec.r * math::exp(spec.beta_hat * z) * tz.at(i, j);
        }
    }
    let xt = XTransform::new(spec.nx);
    let half = xt.half;
    // Transform the right side level by level.
    let mut a_hat = vec![vec![0.0; n]; half + 1];
    let mut b_hat = vec![vec![0.0; n]; half + 1];
    {
        let mut row = vec![0.0; spec.nx];
        let mut a_row = vec![0.0; half + 1];
        let mut b_row = vec![0.0; half + 1];
        for j in 0..n {
            for i in 0..spec.nx {
                row[i] = rhs.at(i, j);
            }
            xt.forward(&row, &mut a_row, &mut b_row);
            for k in 0..=half {
                a_hat[k][j] = a_row[k];
                b_hat[k][j] = b_row[k];
            }
        }
    }
    let mut worst_residual: f64 = 0.0;
    for k in 0..=half {
        // Symbol of the periodic second difference in x.
        let s = math::sin(math::PI * k as f64 / spec.nx as f64);
        let mu = 4.0 * s * s / (hx * hx);
        let skip_sine = k == 0 || (spec.nx % 2 == 0 && k == half);
        for pass in 0..2 {
            if pass == 1 && skip_sine {
                continue;
            }
            let data: &mut Vec<f64> = if pass == 0 { &mut a_hat[k] } else { &mut b_hat[k] };
            let (l0, d0, u0) = pressure_bands(spec, mu);
            if k == 0 {
                // Left null vector by the three-term recurrence of A^T y = 0.
                let mut y = vec![0.0; n];
                y[0] = 1.0;
                y[1] = -d0[0] * y[0] / l0[1];
                for j in 1..n - 1 {
                    y[j + 1] = -(u0[j - 1] * y[j - 1] + d0[j] * y[j]) / l0[j + 1];
                }
                let yb: f64 = y.iter().zip(data.iter()).map(|(a, b)| a * b).sum();
                let yy: f64 = y.iter().map(|v| v * v).sum();
                for (dst, &yv) in data.iter_mut().zip(y.iter()) {
                    *dst -= yb / yy * yv;
                }
                // Pin the top value; the discarded equation is dependent.
                let deflated = data.clone();
                let (mut l, mut d, mut u) = (l0.clone(), d0.clone(), u0.clone());
                l[n - 1] = 0.0;
                d[n - 1] = 1.0;
                u[n - 1] = 0.0;
                let mut solved = deflated.clone();
                solved[n - 1] = 0.0;
                thomas(&mut l, &mut d, &mut u, &mut solved);
                // Residual against the deflated singular system, all rows.
                let mut res: f64 = 0.0;
                let mut scale: f64 = 1e-30;
                for i in 0..n {
                    let mut ax = d0[i] * solved[i];
                    if i > 0 {
                        ax += l0[i] * solved[i - 1];
                    }
                    if i + 1 < n {
                        ax += u0[i] * solved[i + 1];
                    }
                    res = math::max(res, math::abs(ax - deflated[i]));
                    scale = math::max(scale, math::abs(deflated[i]));
                }
                worst_residual = math::max(worst_residual, res / scale);
                *data = solved;
            } else {
                let (mut l, mut d, mut u) = (l0.clone(), d0.clone(), u0.clone());
                let b_copy = data.clone();
                thomas(&mut l, &mut d, &mut u, data);
                worst_residual =
                    math::max(worst_residual, band_residual(&l0, &d0, &u0, data, &b_copy));
            }
        }
    }
    if worst_residual > 1e-10 {
        return Err(FdError::NonConvergence {
            residual: worst_residual,
        });
    }
    // Back to nodal values.
    let mut pi = GridField::zeros(spec.nx, n);
    {
        let mut row = vec![0.0; spec.nx];
        let mut a_row = vec![0.0; half + 1];
        let mut b_row = vec![0.0; half + 1];
        for j in 0..n {
            for k in 0..=half {
                a_row[k] = a_hat[k][j];
                b_row[k] = b_hat[k][j];
            }
            xt.inverse(&a_row, &b_row, &mut row);
            for i in 0..spec.nx {
                *pi.at_mut(i, j) = row[i];
            }
        }
    }
    // Zero-mean gauge over the domain.
    let mean = pi.integral();
    for v in pi.values.iter_mut() {
        *v -= mean;
    }
    Ok(pi)
}

/// Velocity from solved pressure: `u = -e^{-beta_hat z} Pi_x`,
/// `w = -e^{-beta_hat z} Pi_z + R theta`, centered differences with even
/// ghosts for Pi. `w` vanishes identically on the walls.
pub fn fd_velocity(
    pi: &GridField,
    theta: &GridField,
    spec: &FdGridSpec,
) -> Result<(GridField, GridField), FdError> {
    spec.validate()?;
    check_grid(pi, spec)?;
    check_grid(theta, spec)?;
    let n = spec.nz + 1;
    let hx = spec.hx();
    let hz = spec.hz();
    let mut u = GridField::zeros(spec.nx, n);
    let mut w = GridField::zeros(spec.nx, n);
    for i in 0..spec.nx {
        let ip = (i + 1) % spec.nx;
        let im = (i + spec.nx - 1) % spec.nx;
        for j in 0..n {
            let z = j as f64 * hz;
            let damp = math::exp(-spec.beta_hat * z);
            *u.at_mut(i, j) = -damp * (pi.at(ip, j) - pi.at(im, j)) / (2.0 * hx);
            let up = if j + 1 < n { pi.at(i, j + 1) } else { pi.at(i, n - 2) };
            let dn = if j > 0 { pi.at(i, j - 1) } else { pi.at(i, 1) };
            *w.at_mut(i, j) = -damp * (up - dn) / (2.0 * hz) + spec.r * theta.at(i, j);
        }
    }
    Ok((u, w))
}

/// Max interior node of `|u_x + w_z|`, both centered; O(h^2) for solved
/// fields.
pub fn fd_divergence(u: &GridField, w: &GridField, spec: &FdGridSpec) -> Result<f64, FdError> {
    spec.validate()?;
    check_grid(u, spec)?;
    check_grid(w, spec)?;
    let n = spec.nz + 1;
    let hx = spec.hx();
    let hz = spec.hz();
    let mut worst: f64 = 0.0;
    for i in 0..spec.nx {
        let ip = (i + 1) % spec.nx;
        let im = (i + spec.nx - 1) % spec.nx;
        for j in 1..n - 1 {
            let div = (u.at(ip, j) - u.at(im, j)) / (2.0 * hx)
                + (w.at(i, j + 1) - w.at(i, j - 1)) / (2.0 * hz);
            worst = math::max(worst, math::abs(div));
        }
    }
    Ok(worst)
}

/// Oracle state: nodal theta and elapsed time.
#[derive(Clone, Debug)]
pub struct FdState {
    pub theta: GridField,
    pub time: f64,
}

impl FdState {
    /// Zero state on the grid of the given [`FdGridSpec`].
    pub fn zeros(spec: &FdGridSpec) -> Self {
        FdState {
            theta: GridField::zeros(spec.nx, spec.nz + 1),
            time: 0.0,
        }
    }
}

/// One IMEX Euler step, mirroring the spectral stepper: explicit source and
/// centered advection, implicit diffusion by one Helmholtz solve
/// `(I - dt Lap_h) theta' = theta + dt (w - u . grad theta)` with Dirichlet
/// walls. Errs with [`FdError::BlowUp`] past the overflow guard.
pub fn fd_step(state: &FdState, spec: &FdGridSpec) -> Result<FdState, FdError> {
    spec.validate()?;
    check_grid(&state.theta, spec)?;
    let n = spec.nz + 1;
    let hx = spec.hx();
    let hz = spec.hz();
    let theta = &state.theta;
    let pi = fd_solve_pressure(theta, spec)?;
    let (u, w) = fd_velocity(&pi, theta, spec)?;
    // Explicit right side on interior nodes; walls stay pinned at zero.
    let mut rhs = GridField::zeros(spec.nx, n);
    for i in 0..spec.nx {
        let ip = (i + 1) % spec.nx;
        let im = (i + spec.nx - 1) % spec.nx;
        for j in 1..n - 1 {
            let tx = (theta.at(ip, j) - theta.at(im, j)) / (2.0 * hx);
            let tz = (theta.at(i, j + 1) - theta.at(i, j - 1)) / (2.0 * hz);
            let adv = u.at(i, j) * tx + w.at(i, j) * tz;
            *rhs.at_mut(i, j) = theta.at(i, j) + spec.dt * (w.at(i, j) - adv);
        }
    }
    // Helmholtz solve by the same x-DFT, Dirichlet rows at the walls.
    let xt = XTransform::new(spec.nx);
    let half = xt.half;
    let ihz2 = 1.0 / (hz * hz);
    let mut a_hat = vec![vec![0.0; n]; half + 1];
    let mut b_hat = vec![vec![0.0; n]; half + 1];
    {
        let mut row = vec![0.0; spec.nx];
        let mut a_row = vec![0.0; half + 1];
        let mut b_row = vec![0.0; half + 1];
        for j in 0..n {
            for i in 0..spec.nx {
                row[i] = rhs.at(i, j);
            }
            xt.forward(&row, &mut a_row, &mut b_row);
            for k in 0..=half {
                a_hat[k][j] = a_row[k];
                b_hat[k][j] = b_row[k];
            }
        }
    }
    for k in 0..=half {
        let s = math::sin(math::PI * k as f64 / spec.nx as f64);
        let mu = 4.0 * s * s / (hx * hx);
        let skip_sine = k == 0 || (spec.nx % 2 == 0 && k == half);
        for pass in 0..2 {
            if pass == 1 && skip_sine {
                continue;
            }
            let data: &mut Vec<f64> = if pass == 0 { &mut a_hat[k] } else { &mut b_hat[k] };
            let mut lower = vec![0.0; n];
            let mut diag = vec![1.0; n];
            let mut upper = vec![0.0; n];
            for j in 1..n - 1 {
                lower[j] = -spec.dt * ihz2;
                diag[j] = 1.0 + spec.dt * (mu + 2.0 * ihz2);
                upper[j] = -spec.dt * ihz2;
            }
            data[0] = 0.0;
            data[n - 1] = 0.0;
            thomas(&mut lower, &mut diag, &mut upper, data);
        }
    }
    let mut next = GridField::zeros(spec.nx, n);
    {
        let mut row = vec![0.0; spec.nx];
        let mut a_row = vec![0.0; half + 1];
        let mut b_row = vec![0.0; half + 1];
        for j in 0..n {
            for k in 0..=half {
                a_row[k] = a_hat[k][j];
                b_row[k] = b_hat[k][j];
            }
            xt.inverse(&a_row, &b_row, &mut row);
            for i in 0..spec.nx {
                *next.at_mut(i, j) = row[i];
            }
        }
    }
    let time = state.time + spec.dt;
    let norm = grid_l2_norm(&next);
    if !(norm <= spec.overflow_guard) {
        return Err(FdError::BlowUp { t: time, norm });
    }
    Ok(FdState { theta: next, time })
}

/// Discrete perturbation energy `(R/2) |theta|^2` of an oracle state.
pub fn fd_energy(state: &FdState, spec: &FdGridSpec) -> f64 {
    let norm = grid_l2_norm(&state.theta);
    0.5 * spec.r * norm * norm
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use crate::basis::{Parity, SpectralField};
    use crate::dynamics::{run, Scheme, SimParams};
    use crate::energy::{fit_decay_rate, EnergyTrace};
    use crate::pressure::PressureSolver;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn grid_gap(a: &GridField, b: &GridField) -> f64 {
        let mut diff = a.clone();
        for (d, v) in diff.values.iter_mut().zip(b.values.iter()) {
            *d -= v;
        }
        grid_l2_norm(&diff)
    }

    /// Smooth random temperature from low spectral modes, sampled on the
    /// oracle grid.
    fn smooth_theta(spec: &FdGridSpec, seed: u64) -> GridField {
        let field = crate::basis::random_field(Parity::D, 6, seed);
        field.synthesize(spec.nx, spec.nz + 1)
    }

    #[test]
    fn zero_temperature_gives_zero_pressure() {
        let spec = FdGridSpec::new(16, 16, 1e-3, 10.0, 0.7);
        let theta = GridField::zeros(16, 17);
        let pi = fd_solve_pressure(&theta, &spec).unwrap();
        for &v in &pi.values {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn incompressible_single_mode_converges_at_second_order() {
        // theta = sin(pi z) cos(2 pi x), beta_hat = 0:
        // Pi = -(R/(5 pi)) cos(pi z) cos(2 pi x).
        let r = 9.0;
        let err_at = |cells: usize| {
            let spec = FdGridSpec::new(cells, cells, 1e-3, r, 0.0);
            let n = cells + 1;
            let mut theta = GridField::zeros(cells, n);
            let mut exact = GridField::zeros(cells, n);
            for i in 0..cells {
                for j in 0..n {
                    let x = i as f64 / cells as f64;
                    let z = j as f64 / cells as f64;
                    *theta.at_mut(i, j) = (PI * z).sin() * (2.0 * PI * x).cos();
                    *exact.at_mut(i, j) = -(r / (5.0 * PI)) * (PI * z).cos() * (2.0 * PI * x).cos();
                }
            }
            let pi = fd_solve_pressure(&theta, &spec).unwrap();
            grid_gap(&pi, &exact) / grid_l2_norm(&exact)
        };
        let (e32, e64, e128) = (err_at(32), err_at(64), err_at(128));
        let order_a = (e32 / e64).log2();
        let order_b = (e64 / e128).log2();
        assert!(
            (1.8..=2.2).contains(&order_a) && (1.8..=2.2).contains(&order_b),
            "orders {order_a:.2} {order_b:.2} (errors {e32:.2e} {e64:.2e} {e128:.2e})"
        );
    }

    #[test]
    fn compressible_pressure_matches_the_spectral_solver() {
        let spec = FdGridSpec::new(128, 128, 1e-3, 10.0, 1.0);
        let field = crate::basis::random_field(Parity::D, 6, 97);
        let theta_grid = field.synthesize(spec.nx, spec.nz + 1);
        let fd_pi = fd_solve_pressure(&theta_grid, &spec).unwrap();
        // Spectral reference at high truncation, same gauge (its mean mode
        // coefficient is pinned, and the remaining basis functions all have
        // zero domain mean).
        let mut theta_spec = SpectralField::zeros(Parity::D, 32);
        for (i, m, n, v) in field.modes() {
            theta_spec.set(i, m, n, v);
        }
        let solver = PressureSolver::new(32, spec.beta_hat).unwrap();
        let pi_spec = solver.solve(&theta_spec, spec.r).unwrap();
        let pi_ref = pi_spec.synthesize(spec.nx, spec.nz + 1);
        let rel = grid_gap(&fd_pi, &pi_ref) / grid_l2_norm(&pi_ref);
        assert!(rel <= 1e-3, "relative gap {rel:.3e}");
    }

    #[test]
    fn solved_velocity_divergence_shrinks_at_second_order() {
        let div_at = |cells: usize| {
            let spec = FdGridSpec::new(cells, cells, 1e-3, 8.0, 0.9);
            let theta = smooth_theta(&spec, 11);
            let pi = fd_solve_pressure(&theta, &spec).unwrap();
            let (u, w) = fd_velocity(&pi, &theta, &spec).unwrap();
            fd_divergence(&u, &w, &spec).unwrap()
        };
        let (d32, d64) = (div_at(32), div_at(64));
        let ratio = d32 / d64;
        assert!(
            (2.5..=6.0).contains(&ratio),
            "divergence {d32:.3e} -> {d64:.3e}, ratio {ratio:.2}"
        );
    }

    #[test]
    fn zero_state_is_a_fixed_point_of_the_stepper() {
        let spec = FdGridSpec::new(8, 8, 1e-3, 30.0, 0.5);
        let state = FdState::zeros(&spec);
        let next = fd_step(&state, &spec).unwrap();
        for &v in &next.theta.values {
            assert_eq!(v, 0.0);
        }
        assert_relative_eq!(next.time, 1e-3);
    }

    #[test]
    fn subcritical_decay_rate_matches_the_spectral_run() {
        // R = 20, beta_hat = 0, single (1,1) mode at small amplitude.
        let cells = 64;
        let spec = FdGridSpec::new(cells, cells, 1e-3, 20.0, 0.0);
        let mut theta = GridField::zeros(cells, cells + 1);
        for i in 0..cells {
            for j in 0..=cells {
                let x = i as f64 / cells as f64;
                let z = j as f64 / cells as f64;
                *theta.at_mut(i, j) = 1e-4 * (PI * z).sin() * (2.0 * PI * x).cos();
            }
        }
        let mut state = FdState { theta, time: 0.0 };
        let mut times = std::vec::Vec::new();
        let mut energies = std::vec::Vec::new();
        times.push(0.0);
        energies.push(fd_energy(&state, &spec));
        for _ in 0..200 {
            state = fd_step(&state, &spec).unwrap();
            times.push(state.time);
            energies.push(fd_energy(&state, &spec));
        }
        let fd_trace = EnergyTrace::new(times, energies).unwrap();
        let fd_fit = fit_decay_rate(&fd_trace, 0.5).unwrap();

        let mut theta0 = SpectralField::zeros(Parity::D, 8);
        theta0.set(1, 1, 1, 1e-4);
        let params = SimParams::new(20.0, 0.0, 8, 1e-3, Scheme::Euler);
        let outcome = run(params, &theta0, 200, 1).unwrap();
        let sp_trace = EnergyTrace::from_samples(&outcome.samples).unwrap();
        let sp_fit = fit_decay_rate(&sp_trace, 0.5).unwrap();
        let rel = ((fd_fit.sigma - sp_fit.sigma) / sp_fit.sigma).abs();
        assert!(
            rel <= 0.05,
            "fd rate {:.4}, spectral rate {:.4}, gap {rel:.3}",
            fd_fit.sigma,
            sp_fit.sigma
        );
    }

    #[test]
    fn stepping_error_against_spectral_reference_halves_at_second_order() {
        // Advance the same smooth state a few steps on two grids and compare
        // against a resolved spectral run at identical dt.
        let steps = 20;
        let dt = 1e-3;
        let r = 30.0;
        let beta_hat = 0.4;
        let spectral_field = crate::basis::random_field(Parity::D, 4, 7);
        let mut theta0 = SpectralField::zeros(Parity::D, 16);
        for (i, m, n, v) in spectral_field.modes() {
            theta0.set(i, m, n, 0.05 * v);
        }
        let params = SimParams::new(r, beta_hat, 16, dt, Scheme::Euler);
        let reference = run(params, &theta0, steps, steps).unwrap().theta;
        let err_at = |cells: usize| {
            let spec = FdGridSpec::new(cells, cells, dt, r, beta_hat);
            let mut state = FdState {
                theta: theta0.synthesize(cells, cells + 1),
                time: 0.0,
            };
            for _ in 0..steps {
                state = fd_step(&state, &spec).unwrap();
            }
            let ref_grid = reference.synthesize(cells, cells + 1);
            grid_gap(&state.theta, &ref_grid) / grid_l2_norm(&ref_grid)
        };
        let (e32, e64) = (err_at(32), err_at(64));
        let order = (e32 / e64).log2();
        assert!(
            (1.5..=2.5).contains(&order),
            "orders from errors {e32:.3e} {e64:.3e}: {order:.2}"
        );
    }

    #[test]
    fn energy_traces_agree_and_tighten_under_refinement() {
        let dt = 2e-3;
        let steps = 50;
        let r = 25.0;
        let mut theta0 = SpectralField::zeros(Parity::D, 8);
        theta0.set(1, 1, 1, 0.2);
        theta0.set(-1, 2, 2, 0.1);
        let params = SimParams::new(r, 0.0, 8, dt, Scheme::Euler);
        let outcome = run(params, &theta0, steps, 1).unwrap();
        let gap_at = |cells: usize| {
            let spec = FdGridSpec::new(cells, cells, dt, r, 0.0);
            let mut state = FdState {
                theta: theta0.synthesize(cells, cells + 1),
                time: 0.0,
            };
            let mut worst: f64 = 0.0;
            for k in 1..=steps {
                state = fd_step(&state, &spec).unwrap();
                let fd_e = fd_energy(&state, &spec);
                let sp_e = outcome.samples[k].energy;
                worst = worst.max((fd_e - sp_e).abs() / sp_e);
            }
            worst
        };
        let (g16, g32, g64) = (gap_at(16), gap_at(32), gap_at(64));
        assert!(g64 < g32 && g32 < g16, "gaps {g16:.3e} {g32:.3e} {g64:.3e}");
        assert!(g64 < 0.01, "finest gap {g64:.3e}");
    }

    #[test]
    fn blow_up_guard_trips_on_runaway_states() {
        let mut spec = FdGridSpec::new(16, 16, 1e-2, 500.0, 0.0);
        spec.overflow_guard = 1.0;
        let mut theta = GridField::zeros(16, 17);
        for i in 0..16 {
            for j in 0..17 {
                let x = i as f64 / 16.0;
                let z = j as f64 / 16.0;
                *theta.at_mut(i, j) = 0.9 * (PI * z).sin() * (2.0 * PI * x).cos();
            }
        }
        let mut state = FdState { theta, time: 0.0 };
        let mut tripped = false;
        for _ in 0..50 {
            match fd_step(&state, &spec) {
                Ok(next) => state = next,
                Err(FdError::BlowUp { norm, .. }) => {
                    assert!(norm > 1.0);
                    tripped = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        assert!(tripped, "guard never tripped");
    }

    #[test]
    fn spec_validation_rejects_bad_grids() {
        assert!(FdGridSpec::new(4, 16, 1e-3, 1.0, 0.0).validate().is_err());
        assert!(FdGridSpec::new(16, 16, 0.0, 1.0, 0.0).validate().is_err());
        assert!(FdGridSpec::new(16, 16, 1e-3, -1.0, 0.0).validate().is_err());
        assert!(FdGridSpec::new(16, 16, 1e-3, 1.0, 6.5).validate().is_err());
        let spec = FdGridSpec::new(16, 16, 1e-3, 1.0, 0.0);
        let wrong = GridField::zeros(16, 16);
        assert!(matches!(
            fd_solve_pressure(&wrong, &spec).unwrap_err(),
            FdError::GridMismatch { .. }
        ));
    }
}
