//! Galerkin solver for the transformed pressure problem.
//!
//! With `Pi = e^{beta_hat z} pi` the momentum balance reduces to
//!
//! ```text
//!   Lap Pi - beta_hat Pi_z = R e^{beta_hat z} theta_z,   Pi_z = 0 at z = 0, 1,
//! ```
//!
//! posed in parity B. Horizontal modes decouple, so the discrete operator is
//! a dense `(N+1) x (N+1)` block per `m` (identical for both `x` flavors),
//! prefactored once:
//!
//! ```text
//!   A[(n', n)] = -lam_{mn} |cos_n|^2 delta_{nn'} + beta_hat pi n <sin_n, cos_n'>
//! ```
//!
//! The `m = 0` block carries the usual Neumann null space (constants); it is
//! solved on the zero-mean subspace by dropping the constant trial and test
//! functions and gauging the mean of `Pi` to zero. The dropped equation is
//! the compatibility condition and is satisfied to truncation order.
//!
//! Right sides and all `e^{s z}`-weighted projections go through the closed
//! forms in [`crate::coupling`]; no grid quadrature touches the exponential
//! weight.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::basis::{lap_eigenvalue, Parity, SpectralField};
use crate::coupling;
use crate::math;

/// Errors from pressure solves and estimate checks.
#[derive(Clone, Debug, PartialEq)]
pub enum PressureError {
    /// Compressibility number must satisfy `0 <= beta_hat < 2 pi`; the
    /// estimates (and the solver's coercivity argument) fail beyond.
    InvalidBetaHat { value: f64 },
    /// Truncation must be at least 1.
    TruncationTooSmall,
    /// A mode block failed to factor.
    SingularBlock { m: usize },
    /// Input field has the wrong vertical parity.
    WrongParity,
    /// Input truncation does not match the solver's.
    TruncationMismatch { expected: usize, got: usize },
    /// The a priori estimates presuppose zero horizontal mean; the input
    /// carries `m = 0` content.
    HorizontalMeanPresent,
}

impl fmt::Display for PressureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PressureError::InvalidBetaHat { value } => {
                write!(f, "beta_hat = {value} outside [0, 2 pi)")
            }
            PressureError::TruncationTooSmall => write!(f, "truncation must be at least 1"),
            PressureError::SingularBlock { m } => {
                write!(f, "pressure block m = {m} is singular")
            }
            PressureError::WrongParity => write!(f, "field has the wrong vertical parity"),
            PressureError::TruncationMismatch { expected, got } => {
                write!(f, "expected truncation {expected}, got {got}")
            }
            PressureError::HorizontalMeanPresent => {
                write!(f, "estimate check requires a zero-horizontal-mean field")
            }
        }
    }
}

/// Weak form of `Lap - beta_hat d/dz` on the parity-B vertical basis for
/// horizontal mode `m`: row `n'` tests against `cos(pi n' z)`, column `n` is
/// the trial mode `cos(pi n z)`.
pub fn assemble_block(trunc: usize, beta_hat: f64, m: usize) -> DMatrix<f64> {
    let side = trunc + 1;
    DMatrix::from_fn(side, side, |np, n| {
        let mut a = 0.0;
        if n == np {
            let cnorm = if n == 0 { 1.0 } else { 0.5 };
            a -= lap_eigenvalue(m, n) * cnorm;
        }
        // -beta_hat d/dz of cos(pi n z) contributes +beta_hat pi n sin(pi n z).
        a + beta_hat * math::PI * n as f64 * coupling::sin_cos_coupling(n, np)
    })
}

/// Prefactored per-mode pressure solver at fixed truncation and `beta_hat`.
#[derive(Debug)]
pub struct PressureSolver {
    trunc: usize,
    beta_hat: f64,
    /// LU factors indexed by `m`; the `m = 0` entry is the reduced
    /// zero-mean block (`N x N`), the rest are full `(N+1) x (N+1)`.
    blocks: Vec<LU<f64, Dyn, Dyn>>,
    /// `e^{+beta_hat z}` cosine-cosine mass matrix for right sides.
    ecc_plus: DMatrix<f64>,
}

impl PressureSolver {
    pub fn new(trunc: usize, beta_hat: f64) -> Result<Self, PressureError> {
        if !beta_hat.is_finite() || !(0.0..2.0 * math::PI).contains(&beta_hat) {
            return Err(PressureError::InvalidBetaHat { value: beta_hat });
        }
        if trunc < 1 {
            return Err(PressureError::TruncationTooSmall);
        }
        let mut blocks = Vec::with_capacity(trunc + 1);
        for m in 0..=trunc {
            let full = assemble_block(trunc, beta_hat, m);
            let lu = if m == 0 {
                full.view((1, 1), (trunc, trunc)).into_owned().lu()
            } else {
                full.lu()
            };
            if !lu.is_invertible() {
                return Err(PressureError::SingularBlock { m });
            }
            blocks.push(lu);
        }
        Ok(PressureSolver {
            trunc,
            beta_hat,
            blocks,
            ecc_plus: coupling::exp_cos_cos_matrix(trunc, beta_hat),
        })
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn beta_hat(&self) -> f64 {
        self.beta_hat
    }

    /// Solve one mode block for a full-length right side `b[n'] = <rhs,
    /// cos(pi n' z)>`. For `m = 0` the constant test equation `b[0]` is
    /// dropped and the solution gauged to zero mean.
    fn solve_block(&self, m: usize, b: &DVector<f64>) -> Result<DVector<f64>, PressureError> {
        if m == 0 {
            let reduced = b.rows(1, self.trunc).into_owned();
            let sol = self.blocks[0]
                .solve(&reduced)
                .ok_or(PressureError::SingularBlock { m })?;
            let mut full = DVector::zeros(self.trunc + 1);
            full.rows_mut(1, self.trunc).copy_from(&sol);
            Ok(full)
        } else {
            self.blocks[m]
                .solve(b)
                .ok_or(PressureError::SingularBlock { m })
        }
    }

    /// Solve with right side `scale * e^{beta_hat z} g` for parity-B data
    /// `g`; used directly by the manufactured-data paths.
    pub fn solve_weighted_data(
        &self,
        g: &SpectralField,
        scale: f64,
    ) -> Result<SpectralField, PressureError> {
        if g.parity() != Parity::B {
            return Err(PressureError::WrongParity);
        }
        if g.truncation() != self.trunc {
            return Err(PressureError::TruncationMismatch {
                expected: self.trunc,
                got: g.truncation(),
            });
        }
        let side = self.trunc + 1;
        let mut out = SpectralField::zeros(Parity::B, self.trunc);
        for f in 0..2 {
            if f == 1 {
                // sin flavor at m = 0 is structurally absent
            }
            for m in 0..side {
                if f == 1 && m == 0 {
                    continue;
                }
                let col = g.column(f, m);
                let b = DVector::from_fn(side, |np, _| {
                    let mut s = 0.0;
                    for (n, &gn) in col.iter().enumerate() {
                        s += gn * self.ecc_plus[(n, np)];
                    }
                    scale * s
                });
                let p = self.solve_block(m, &b)?;
                out.column_mut(f, m).copy_from_slice(p.as_slice());
            }
        }
        Ok(out)
    }

    /// Solve the pressure problem driven by a temperature field (parity D):
    /// right side `r e^{beta_hat z} theta_z`.
    pub fn solve(&self, theta: &SpectralField, r: f64) -> Result<SpectralField, PressureError> {
        if theta.parity() != Parity::D {
            return Err(PressureError::WrongParity);
        }
        self.solve_weighted_data(&theta.dz(), r)
    }

    /// Manufactured-solution round trip: draw a random in-space `Pi*`
    /// (respecting the `m = 0` gauge), build the exact weak-form right side
    /// `b = A p*`, solve, and return the largest coefficient error.
    pub fn manufactured_error(&self, seed: u64) -> Result<f64, PressureError> {
        let side = self.trunc + 1;
        let mut target = crate::basis::random_field(Parity::B, self.trunc, seed);
        target.set(1, 0, 0, 0.0);
        let mut worst = 0.0;
        for f in 0..2 {
            for m in 0..side {
                if f == 1 && m == 0 {
                    continue;
                }
                let a = assemble_block(self.trunc, self.beta_hat, m);
                let p_star = DVector::from_column_slice(target.column(f, m));
                let b = &a * &p_star;
                let p = self.solve_block(m, &b)?;
                for n in 0..side {
                    worst = math::max(worst, math::abs(p[n] - p_star[n]));
                }
            }
        }
        Ok(worst)
    }
}

/// Primitive-variable velocity from a transformed pressure and temperature:
/// `u = -e^{-beta_hat z} Pi_x` projected onto parity B, and
/// `w = -e^{-beta_hat z} Pi_z + R theta` projected onto parity D.
///
/// The projections are exact L2 projections computed with the closed-form
/// weighted mass matrices. Because projection does not commute with the
/// divergence, the resulting field is solenoidal only up to a small defect
/// of order `beta_hat^2` (exactly solenoidal at `beta_hat = 0`); the
/// time-stepper instead uses the stream-function reconstruction, which is
/// divergence-free to round-off at any `beta_hat`.
pub fn velocity_from(
    pi: &SpectralField,
    theta: &SpectralField,
    r: f64,
    beta_hat: f64,
) -> Result<(SpectralField, SpectralField), PressureError> {
    if pi.parity() != Parity::B || theta.parity() != Parity::D {
        return Err(PressureError::WrongParity);
    }
    if pi.truncation() != theta.truncation() {
        return Err(PressureError::TruncationMismatch {
            expected: pi.truncation(),
            got: theta.truncation(),
        });
    }
    let trunc = pi.truncation();
    let side = trunc + 1;
    let ecc = coupling::exp_cos_cos_matrix(trunc, -beta_hat);
    let ess = coupling::exp_sin_sin_matrix(trunc, -beta_hat);
    let pi_x = pi.dx();
    let pi_z = pi.dz();
    let mut u = SpectralField::zeros(Parity::B, trunc);
    let mut w = SpectralField::zeros(Parity::D, trunc);
    for f in 0..2 {
        for m in 0..side {
            if f == 1 && m == 0 {
                continue;
            }
            let px = pi_x.column(f, m);
            let pz = pi_z.column(f, m);
            let th = theta.column(f, m);
            let uc = u.column_mut(f, m);
            for n in 0..side {
                let cnorm = if n == 0 { 1.0 } else { 0.5 };
                let mut s = 0.0;
                for (k, &v) in px.iter().enumerate() {
                    s += v * ecc[(k, n)];
                }
                uc[n] = -s / cnorm;
            }
            let wc = w.column_mut(f, m);
            for n in 1..side {
                let mut s = 0.0;
                for (k, &v) in pz.iter().enumerate() {
                    s += v * ess[(k, n)];
                }
                wc[n] = -s / 0.5 + r * th[n];
            }
        }
    }
    Ok((u, w))
}

/// `|grad pi|` in L2 for the physical pressure `pi = e^{-beta_hat z} Pi`,
/// evaluated exactly from the coefficients of `Pi`:
/// `pi_x = e^{-bz} Pi_x` and `pi_z = e^{-bz} (Pi_z - beta_hat Pi)`, so the
/// squared norm is a quadratic form in the `e^{-2 beta_hat z}`-weighted
/// vertical mass matrices.
pub fn grad_pi_norm(pi: &SpectralField, beta_hat: f64) -> f64 {
    assert_eq!(pi.parity(), Parity::B, "transformed pressure has parity B");
    let trunc = pi.truncation();
    let side = trunc + 1;
    let s = -2.0 * beta_hat;
    let ecc = coupling::exp_cos_cos_matrix(trunc, s);
    let ess = coupling::exp_sin_sin_matrix(trunc, s);
    let esc = coupling::exp_sin_cos_matrix(trunc, s);
    let pi_z = pi.dz();
    let mut total = 0.0;
    for f in 0..2 {
        for m in 0..side {
            if f == 1 && m == 0 {
                continue;
            }
            let wx = if m == 0 { 1.0 } else { 0.5 };
            let p = pi.column(f, m);
            let q = pi_z.column(f, m);
            let kx = 2.0 * math::PI * m as f64;
            let mut horiz = 0.0;
            let mut vert = 0.0;
            for n in 0..side {
                for np in 0..side {
                    horiz += p[n] * ecc[(n, np)] * p[np];
                    // (q sin - beta_hat p cos)^2 expanded
                    vert += q[n] * ess[(n, np)] * q[np]
                        - 2.0 * beta_hat * q[n] * esc[(n, np)] * p[np]
                        + beta_hat * beta_hat * p[n] * ecc[(n, np)] * p[np];
                }
            }
            total += wx * (kx * kx * horiz + vert);
        }
    }
    math::sqrt(total)
}

/// Outcome of the a priori pressure estimate check.
#[derive(Clone, Debug)]
pub struct PressureEstimateReport {
    /// `|grad Pi|`.
    pub grad_norm: f64,
    /// `|Lap Pi|`.
    pub lap_norm: f64,
    /// `|e^{beta_hat z} R theta_z|`, the weighted data norm.
    pub weighted_data_norm: f64,
    /// `weighted_data_norm / (2 pi - beta_hat)`.
    pub grad_bound: f64,
    /// `2 pi weighted_data_norm / (2 pi - beta_hat)`.
    pub lap_bound: f64,
    pub grad_ok: bool,
    pub lap_ok: bool,
}

/// Solve the pressure problem and check the a priori bounds
///
/// ```text
///   |grad Pi| <= |e^{beta_hat z} R theta_z| / (2 pi - beta_hat)
///   |Lap Pi|  <= 2 pi |e^{beta_hat z} R theta_z| / (2 pi - beta_hat)
/// ```
///
/// These hold exactly for the discrete solution (not just asymptotically):
/// testing the weak form against `Pi` and `Lap Pi` and applying
/// Cauchy-Schwarz plus the Poincare bound `|Pi| <= |grad Pi| / (2 pi)` gives
/// the same chain as in the continuum. The Poincare step needs zero
/// horizontal mean, so the input must carry no `m = 0` content.
pub fn verify_estimates(
    solver: &PressureSolver,
    theta: &SpectralField,
    r: f64,
) -> Result<PressureEstimateReport, PressureError> {
    if theta.parity() != Parity::D {
        return Err(PressureError::WrongParity);
    }
    if theta.truncation() != solver.truncation() {
        return Err(PressureError::TruncationMismatch {
            expected: solver.truncation(),
            got: theta.truncation(),
        });
    }
    for (_, m, _, c) in theta.modes() {
        if m == 0 && c != 0.0 {
            return Err(PressureError::HorizontalMeanPresent);
        }
    }
    let beta_hat = solver.beta_hat();
    let pi = solver.solve(theta, r)?;
    let g = theta.dz();
    // |e^{bz} R theta_z|^2 as a quadratic form in Ecc(2 beta_hat).
    let trunc = solver.truncation();
    let side = trunc + 1;
    let ecc2 = coupling::exp_cos_cos_matrix(trunc, 2.0 * beta_hat);
    let mut data_sq = 0.0;
    for f in 0..2 {
        for m in 0..side {
            if f == 1 && m == 0 {
                continue;
            }
            let wx = if m == 0 { 1.0 } else { 0.5 };
            let col = g.column(f, m);
            for n in 0..side {
                for np in 0..side {
                    data_sq += wx * col[n] * ecc2[(n, np)] * col[np];
                }
            }
        }
    }
    let weighted_data_norm = r * math::sqrt(math::max(data_sq, 0.0));
    let denom = 2.0 * math::PI - beta_hat;
    let grad_bound = weighted_data_norm / denom;
    let lap_bound = 2.0 * math::PI * weighted_data_norm / denom;
    let grad_norm = pi.h1_seminorm();
    let lap_norm = pi.laplacian().l2_norm();
    let slack = 1.0 + 1e-12;
    Ok(PressureEstimateReport {
        grad_norm,
        lap_norm,
        weighted_data_norm,
        grad_bound,
        lap_bound,
        grad_ok: grad_norm <= grad_bound * slack,
        lap_ok: lap_norm <= lap_bound * slack,
    })
}
