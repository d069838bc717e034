//! Energy functional, certified decay thresholds, and trace diagnostics.
//!
//! The energy of a perturbation is E = (R/2)‖θ‖². Testing the temperature
//! equation against θ gives dE/dt = R(θ, w) - R‖∇θ‖²; the advection term is
//! skew and drops out. Bounding (θ, w) through the pressure estimates yields
//! a decay criterion of Gronwall type: for coupling constants M, M1, M2 in
//! admissible ranges, E(t) ≤ E(0) exp((c̃0 - c̃1) t) with c̃1 = 10π² and
//! c̃0 = R (e^{2β̂}(β̂²+1) + 4 M1). The certified threshold R_max is the
//! largest R for which c̃0 < c̃1 over the chosen constants.
//!
//! Admissibility of the constants requires A < 0 and B < 0 (see
//! `constants_from`), which pins M2 ∈ (π/(2π-β̂), 2) and M1 > 1/(2-M2).
//! The M2 interval is nonempty exactly when β̂ < 3π/2; beyond that no
//! certificate exists.

use alloc::vec::Vec;
use core::fmt;

use crate::basis::SpectralField;
use crate::dynamics::DiagnosticSample;
use crate::math;

/// Perturbation energy E = (R/2)‖θ‖².
pub fn energy(theta: &SpectralField, r: f64) -> f64 {
    0.5 * r * theta.l2_norm_sq()
}

/// Errors from trace validation and threshold certification.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergyError {
    /// Trace has no samples.
    EmptyTrace,
    /// Times and energies differ in length.
    LengthMismatch { times: usize, energies: usize },
    /// Sample times must be strictly increasing.
    NonIncreasingTimes { index: usize },
    /// Energies must be nonnegative.
    NegativeEnergy { index: usize },
    /// No admissible M2 exists: requires beta_hat < 3π/2.
    Infeasible { beta_hat: f64 },
    /// Margin must lie in (0, 1).
    InvalidMargin { margin: f64 },
    /// Margin pushes a constant outside its admissible interval.
    MarginTooLarge { beta_hat: f64, margin: f64 },
    /// beta_hat must lie in [0, 2π).
    InvalidBetaHat { value: f64 },
    /// Not enough usable samples in the requested window.
    TooFewSamples { needed: usize, got: usize },
    /// Log-linear fit hit a zero or negative energy in the window.
    DegenerateEnergy { index: usize },
    /// A scalar argument is out of range.
    InvalidParameter(&'static str),
}

impl fmt::Display for EnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyError::EmptyTrace => write!(f, "energy trace is empty"),
            EnergyError::LengthMismatch { times, energies } => write!(
                f,
                "trace length mismatch: {times} times vs {energies} energies"
            ),
            EnergyError::NonIncreasingTimes { index } => {
                write!(f, "trace times not strictly increasing at index {index}")
            }
            EnergyError::NegativeEnergy { index } => {
                write!(f, "negative energy at index {index}")
            }
            EnergyError::Infeasible { beta_hat } => write!(
                f,
                "no admissible constants at beta_hat = {beta_hat}: requires beta_hat < 3pi/2"
            ),
            EnergyError::InvalidMargin { margin } => {
                write!(f, "margin {margin} outside (0, 1)")
            }
            EnergyError::MarginTooLarge { beta_hat, margin } => write!(
                f,
                "margin {margin} leaves no interior point at beta_hat = {beta_hat}"
            ),
            EnergyError::InvalidBetaHat { value } => {
                write!(f, "beta_hat {value} outside [0, 2pi)")
            }
            EnergyError::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples in window, got {got}")
            }
            EnergyError::DegenerateEnergy { index } => {
                write!(f, "nonpositive energy at index {index} breaks log fit")
            }
            EnergyError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

/// Time series of perturbation energies.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace {
    times: Vec<f64>,
    energies: Vec<f64>,
}

impl EnergyTrace {
    /// Builds a trace, validating monotone times and nonnegative energies.
    pub fn new(times: Vec<f64>, energies: Vec<f64>) -> Result<Self, EnergyError> {
        if times.len() != energies.len() {
            return Err(EnergyError::LengthMismatch {
                times: times.len(),
                energies: energies.len(),
            });
        }
        if times.is_empty() {
            return Err(EnergyError::EmptyTrace);
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(EnergyError::NonIncreasingTimes { index: i });
            }
        }
        for (i, &e) in energies.iter().enumerate() {
            if e < 0.0 || !e.is_finite() {
                return Err(EnergyError::NegativeEnergy { index: i });
            }
        }
        Ok(EnergyTrace { times, energies })
    }

    /// Extracts (t, E) pairs from simulation diagnostics.
    pub fn from_samples(samples: &[DiagnosticSample]) -> Result<Self, EnergyError> {
        EnergyTrace::new(
            samples.iter().map(|s| s.t).collect(),
            samples.iter().map(|s| s.energy).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

/// Evaluates the sign constants (A, B, c0) for coupling choices (M, M1, M2)
/// at Rayleigh number r and compressibility beta_hat:
///
///   A  = -1 + 1/(2 M1) + M2/2
///   B  = -1 + β̂/(2π) + (1/(2M)) (1/(2π) + 1) + 1/(2 M2)
///   c0 = (R² e^{2β̂}/2)(β̂² + 1) M + 2 R² M1
///
/// A < 0 and B < 0 make the gradient terms in the energy inequality
/// dissipative; c0 is the coefficient swallowed by the Poincaré step.
pub fn constants_from(m: f64, m1: f64, m2: f64, r: f64, beta_hat: f64) -> (f64, f64, f64) {
    let two_pi = 2.0 * math::PI;
    let a = -1.0 + 1.0 / (2.0 * m1) + m2 / 2.0;
    let b = -1.0 + beta_hat / two_pi + (1.0 / (2.0 * m)) * (1.0 / two_pi + 1.0)
        + 1.0 / (2.0 * m2);
    let c0 = 0.5 * r * r * math::exp(2.0 * beta_hat) * (beta_hat * beta_hat + 1.0) * m
        + 2.0 * r * r * m1;
    (a, b, c0)
}

/// A certified exponential-decay threshold with the constants that realize it.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdCertificate {
    pub beta_hat: f64,
    pub margin: f64,
    /// Coupling constants: M2 ∈ (π/(2π-β̂), 2), M1 > 1/(2-M2), M sized so B < 0.
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    /// Sign constants at (r_max, M, M1, M2); both strictly negative.
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    /// Gronwall coefficients: decay holds while c̃0 < c̃1.
    pub c_tilde0: f64,
    pub c_tilde1: f64,
    /// Largest certified Rayleigh number for this beta_hat and margin.
    pub r_max: f64,
}

impl ThresholdCertificate {
    /// Growth coefficient c̃0(r) = r (e^{2β̂}(β̂²+1) + 4 M1) for this
    /// certificate's constants.
    pub fn c_tilde0_at(&self, r: f64) -> f64 {
        let bh = self.beta_hat;
        r * (math::exp(2.0 * bh) * (bh * bh + 1.0) + 4.0 * self.m1)
    }

    /// Certified exponent in E(t) ≤ E(0) exp((c̃0(r) - c̃1) t); negative
    /// for r below the threshold.
    pub fn decay_exponent(&self, r: f64) -> f64 {
        self.c_tilde0_at(r) - self.c_tilde1
    }
}

/// Certifies an exponential-decay threshold at the given compressibility.
///
/// The admissible region is open, so each constant is placed at relative
/// distance `margin` inside its constraint: M2 = (1+margin) π/(2π-β̂),
/// M1 = (1+margin)/(2-M2), M = (1/(2π)+1)/(1 - β̂/(2π) - 1/(2 M2)) (twice
/// the infimum that makes B < 0), and the returned threshold is shrunk by
/// the same factor, r_max = (1-margin) 10π² / (e^{2β̂}(β̂²+1) + 4 M1), so
/// that the strict inequality c̃0(r_max) < c̃1 survives.
///
/// Errors: `Infeasible` when β̂ ≥ 3π/2 (the M2 interval is empty),
/// `MarginTooLarge` when the margin overshoots the interval.
pub fn certify_threshold(
    beta_hat: f64,
    margin: f64,
) -> Result<ThresholdCertificate, EnergyError> {
    let two_pi = 2.0 * math::PI;
    if !(0.0..two_pi).contains(&beta_hat) || !beta_hat.is_finite() {
        return Err(EnergyError::InvalidBetaHat { value: beta_hat });
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(EnergyError::InvalidMargin { margin });
    }
    let m2_inf = math::PI / (two_pi - beta_hat);
    if m2_inf >= 2.0 {
        // Equivalent to beta_hat >= 3pi/2.
        return Err(EnergyError::Infeasible { beta_hat });
    }
    let m2 = m2_inf * (1.0 + margin);
    if m2 >= 2.0 {
        return Err(EnergyError::MarginTooLarge { beta_hat, margin });
    }
    let m1 = (1.0 + margin) / (2.0 - m2);
    // B = -d + (1/(2M))(1/(2pi)+1) with d = 1 - beta_hat/(2pi) - 1/(2 M2);
    // d > 0 because M2 exceeds its infimum. M at twice the borderline value
    // gives B = -d/2.
    let d = 1.0 - beta_hat / two_pi - 1.0 / (2.0 * m2);
    let m = (1.0 / two_pi + 1.0) / d;
    let r_max =
        (1.0 - margin) * 10.0 * math::PI * math::PI
            / (math::exp(2.0 * beta_hat) * (beta_hat * beta_hat + 1.0) + 4.0 * m1);
    let (a, b, c0) = constants_from(m, m1, m2, r_max, beta_hat);
    debug_assert!(a < 0.0 && b < 0.0);
    let c_tilde1 = 10.0 * math::PI * math::PI;
    let cert = ThresholdCertificate {
        beta_hat,
        margin,
        m,
        m1,
        m2,
        a,
        b,
        c0,
        c_tilde0: 0.0,
        c_tilde1,
        r_max,
    };
    let c_tilde0 = cert.c_tilde0_at(r_max);
    Ok(ThresholdCertificate { c_tilde0, ..cert })
}

/// One sample that breached the Gronwall envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallViolation {
    pub index: usize,
    pub t: f64,
    pub energy: f64,
    pub bound: f64,
}

/// Result of checking a trace against E(0) exp(exponent (t - t0)) (1 + tol).
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub passed: bool,
    /// Largest E(t_k) / (E(0) exp(exponent (t_k - t0))) over the trace;
    /// 0 when the envelope is identically zero and the trace stays at zero.
    pub max_ratio: f64,
    pub first_violation: Option<GronwallViolation>,
    pub tol: f64,
}

/// Checks every sample of `trace` against the exponential envelope grown
/// from its first sample. `tol` is the relative headroom; use at least the
/// time-discretization error of the integrator that produced the trace.
pub fn gronwall_check(
    trace: &EnergyTrace,
    exponent: f64,
    tol: f64,
) -> Result<GronwallReport, EnergyError> {
    if tol < 0.0 || !tol.is_finite() {
        return Err(EnergyError::InvalidParameter("tol must be finite and >= 0"));
    }
    let t0 = trace.times[0];
    let e0 = trace.energies[0];
    let mut max_ratio: f64 = 0.0;
    let mut first_violation = None;
    for k in 0..trace.len() {
        let envelope = e0 * math::exp(exponent * (trace.times[k] - t0));
        let bound = envelope * (1.0 + tol);
        let e = trace.energies[k];
        if envelope > 0.0 {
            max_ratio = math::max(max_ratio, e / envelope);
        } else if e > 0.0 {
            max_ratio = f64::INFINITY;
        }
        if e > bound && first_violation.is_none() {
            first_violation = Some(GronwallViolation {
                index: k,
                t: trace.times[k],
                energy: e,
                bound,
            });
        }
    }
    Ok(GronwallReport {
        passed: first_violation.is_none(),
        max_ratio,
        first_violation,
        tol,
    })
}

/// Least-squares decay rate of a trace tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Slope of log E against t; negative for decay.
    pub sigma: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Time window (first, last) the fit used.
    pub window: (f64, f64),
}

/// Fits log E(t) ~ log E(0) + sigma t over the final `tail_fraction` of the
/// trace. Requires at least 10 samples in the window, all with E > 0;
/// restricting to the tail discards integrator start-up transients.
pub fn fit_decay_rate(trace: &EnergyTrace, tail_fraction: f64) -> Result<DecayFit, EnergyError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(EnergyError::InvalidParameter("tail_fraction outside (0, 1]"));
    }
    let n = trace.len();
    let take = math::ceil((n as f64) * tail_fraction) as usize;
    let take = take.clamp(1, n);
    let start = n - take;
    if take < 10 {
        return Err(EnergyError::TooFewSamples { needed: 10, got: take });
    }
    let mut ts = Vec::with_capacity(take);
    let mut ys = Vec::with_capacity(take);
    for k in start..n {
        let e = trace.energies[k];
        if e <= 0.0 {
            return Err(EnergyError::DegenerateEnergy { index: k });
        }
        ts.push(trace.times[k]);
        ys.push(math::ln(e));
    }
    let len = take as f64;
    let t_mean = ts.iter().sum::<f64>() / len;
    let y_mean = ys.iter().sum::<f64>() / len;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for k in 0..take {
        let dt = ts[k] - t_mean;
        let dy = ys[k] - y_mean;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let sigma = sty / stt;
    // Flat data fits exactly with zero slope.
    let r_squared = if syy > 0.0 { (sty * sty) / (stt * syy) } else { 1.0 };
    Ok(DecayFit {
        sigma,
        r_squared,
        window: (ts[0], ts[take - 1]),
    })
}

/// Outcome of auditing the discrete energy identity along a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport {
    pub passed: bool,
    /// Worst defect / allowance over the audited intervals.
    pub max_ratio: f64,
    pub worst_index: usize,
    pub worst_defect: f64,
    pub worst_allowance: f64,
    pub checked: usize,
}

/// Audits the discrete energy identity on consecutive per-step samples:
/// the forward difference (E_{k+1} - E_k)/dt must match the sampled rate
/// R((θ,w) - ‖∇θ‖²) up to the stepper's first-order defect. For the Euler
/// update θ' = (θ + dt e)/(1 + dt λ) per mode (e the explicit part), exact
/// algebra gives a per-step defect of
/// (R dt/2) Σ ω (e-λθ)[(e-λθ) - 2λθ(1+dtλ)]/(1+dtλ)², and Cauchy-Schwarz
/// bounds it by (dt/2) R (‖θ_t‖² + 2 ‖θ_t‖ ‖Δθ‖). That is the first-order
/// allowance used here, plus abs_tol max(E_k, |rhs_k|, 1) for roundoff
/// (which also absorbs the advection-skew residual inside rhs). Samples
/// must be adjacent steps (sample_every = 1); the bound is derived for the
/// Euler scheme.
pub fn energy_identity_audit(
    samples: &[DiagnosticSample],
    abs_tol: f64,
) -> Result<AuditReport, EnergyError> {
    if samples.len() < 3 {
        return Err(EnergyError::TooFewSamples { needed: 3, got: samples.len() });
    }
    if abs_tol < 0.0 || !abs_tol.is_finite() {
        return Err(EnergyError::InvalidParameter("abs_tol must be finite and >= 0"));
    }
    let mut max_ratio: f64 = 0.0;
    let mut worst_index = 0;
    let mut worst_defect = 0.0;
    let mut worst_allowance = 0.0;
    let mut checked = 0;
    for k in 0..samples.len() - 1 {
        let dt = samples[k + 1].t - samples[k].t;
        if dt <= 0.0 {
            return Err(EnergyError::NonIncreasingTimes { index: k + 1 });
        }
        let s = &samples[k];
        let lhs = (samples[k + 1].energy - s.energy) / dt;
        let rhs = s.energy_rate_rhs;
        let defect = math::abs(lhs - rhs);
        // Recover R from the stored pair E = (R/2)|theta|^2.
        let r = if s.theta_l2 > 0.0 {
            2.0 * s.energy / (s.theta_l2 * s.theta_l2)
        } else {
            0.0
        };
        let first_order =
            0.5 * dt * r * (s.tendency_l2 * s.tendency_l2 + 2.0 * s.tendency_l2 * s.lap_theta_l2);
        let scale = math::max(s.energy, math::max(math::abs(rhs), 1.0));
        let allowance = first_order + abs_tol * scale;
        let ratio = if allowance > 0.0 { defect / allowance } else { f64::INFINITY };
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_index = k;
            worst_defect = defect;
            worst_allowance = allowance;
        }
        checked += 1;
    }
    Ok(AuditReport {
        passed: max_ratio <= 1.0,
        max_ratio,
        worst_index,
        worst_defect,
        worst_allowance,
        checked,
    })
}
