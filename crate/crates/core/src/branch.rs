//! Closed-form flat-voltage solution of a single branch.
//!
//! A branch with series impedance `R + jX` connects a sending bus `j` to a
//! receiving bus `k`, both held at 1 pu voltage magnitude. Given the
//! receiving-end active power `P_k`, everything else follows from the
//! practical root of a quadratic in `Q_k`:
//!
//! ```text
//! |Z|² Q_k² + 2X Q_k + (2R P_k + |Z|² P_k²) = 0
//! Δ = 1 − 2ρ(1+ρ²)(XP_k) − (1+ρ²)²(XP_k)²          ρ = R/X
//! ```
//!
//! The coefficient of support `σ = X|I|²/P_k` then gives simple expressions
//! for the current, losses, sending-end powers and the flow coefficient
//! `μ = XP_k − RQ_k = sin(δ_j − δ_k)`.
//!
//! All quantities are per-unit. Active power is oriented from `j` to `k`, so
//! `p_recv >= 0` is enforced; reverse flows are modelled by swapping buses.
//!
//! For comparison only: the linearized "DC" relation `P = (δ_j − δ_k)/X`
//! drops both the sine and the resistance. It is not offered as a mode here.

use serde::Serialize;

use crate::error::{domain, infeasible, FlowError, Result};

/// Discriminant values in `[-DISCRIMINANT_TOL, 0)` are treated as exactly zero
/// (limiting flow).
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Flow coefficients exceeding 1 (or the limiting value) by at most this much
/// are clamped before `arcsin` / the inverse power relation.
pub const MU_CLAMP_TOL: f64 = 1e-12;

/// Series impedance of one branch, with `x > 0` and `r >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchImpedance {
    r: f64,
    x: f64,
    rho: f64,
}

impl BranchImpedance {
    pub fn new(r: f64, x: f64) -> Result<Self> {
        if !r.is_finite() || !x.is_finite() {
            return Err(domain(format!("impedance must be finite (r={r}, x={x})")));
        }
        if x <= 0.0 {
            return Err(domain(format!("reactance must be positive (x={x})")));
        }
        if r < 0.0 {
            return Err(domain(format!("resistance must be nonnegative (r={r})")));
        }
        Ok(Self { r, x, rho: r / x })
    }

    /// Builds the impedance from its R/X ratio and reactance.
    pub fn from_ratio(rho: f64, x: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(domain(format!(
                "R/X ratio must be finite and nonnegative (rho={rho})"
            )));
        }
        Self::new(rho * x, x)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// R/X ratio.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `R² + X²`.
    pub fn z_squared(&self) -> f64 {
        self.r * self.r + self.x * self.x
    }

    /// `1 + ρ²`, which appears in nearly every closed form below.
    fn one_plus_rho_sq(&self) -> f64 {
        1.0 + self.rho * self.rho
    }
}

/// Same as [`BranchImpedance::new`].
pub fn make_impedance(r: f64, x: f64) -> Result<BranchImpedance> {
    BranchImpedance::new(r, x)
}

/// Complete flat-voltage operating point of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchOperatingPoint {
    pub p_recv: f64,
    pub q_recv: f64,
    pub p_send: f64,
    pub q_send: f64,
    pub current_mag: f64,
    pub sigma: f64,
    pub mu: f64,
    /// `δ_j − δ_k` in radians.
    pub phase_shift: f64,
    pub losses: f64,
}

impl BranchOperatingPoint {
    /// Reactive flow superimposed on the symmetric `±σP/2` injection,
    /// `−(ρ + ρ²σ/2)P`. Negative (against the active flow) whenever `ρ, P > 0`.
    pub fn counter_q_flow(&self, imp: &BranchImpedance) -> f64 {
        let rho = imp.rho();
        -(rho + rho * rho * self.sigma / 2.0) * self.p_recv
    }
}

/// State of a branch at its maximal flat-voltage transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowLimit {
    pub p_max: f64,
    pub q_at_limit: f64,
    pub sigma_at_limit: f64,
    pub mu_at_limit: f64,
    /// `arcsin(X/|Z|)`, equal to the phase shift at the limit.
    pub impedance_angle: f64,
}

fn check_power(p_recv: f64) -> Result<()> {
    if !p_recv.is_finite() || p_recv < 0.0 {
        return Err(domain(format!(
            "receiving power must be finite and nonnegative (p={p_recv})"
        )));
    }
    Ok(())
}

/// Discriminant `Δ` of the reactive-power quadratic, normalized so that
/// `Δ = 1` at zero flow. Negative values mean the flow exceeds the limit.
pub fn discriminant(imp: &BranchImpedance, p_recv: f64) -> f64 {
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    1.0 - 2.0 * imp.rho * a * t - a * a * t * t
}

/// `sqrt(Δ)` with small negative undershoot snapped to zero.
fn sqrt_discriminant(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    check_power(p_recv)?;
    let delta = discriminant(imp, p_recv);
    if delta < -DISCRIMINANT_TOL {
        let limit = limiting_point(imp).p_max;
        return Err(infeasible(format!(
            "receiving power {p_recv} exceeds the flat-voltage limit {limit} (discriminant {delta:.3e})"
        )));
    }
    Ok(delta.max(0.0).sqrt())
}

// Practical root via the product of roots: Q = -P(2ρ + (1+ρ²)XP) / (1 + √Δ).
// Free of the 1 − √Δ cancellation as XP → 0.
fn practical_root(imp: &BranchImpedance, p_recv: f64, sqrt_delta: f64) -> f64 {
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    -p_recv * (2.0 * imp.rho + a * t) / (1.0 + sqrt_delta)
}

// σ = 2t(1 + ρ(2ρ + at)/(1 + √Δ))/(1 + √Δ), the ratio form with P cancelled.
fn support_from_sqrt_delta(imp: &BranchImpedance, p_recv: f64, sqrt_delta: f64) -> f64 {
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    let d = 1.0 + sqrt_delta;
    2.0 * t * (1.0 + imp.rho * (2.0 * imp.rho + a * t) / d) / d
}

/// Both roots of the reactive-power quadratic: `(practical, inverted)`.
///
/// The inverted root sits on the unstable side of the Q–V curve and is
/// returned only for inspection.
pub fn receiving_q_both(imp: &BranchImpedance, p_recv: f64) -> Result<(f64, f64)> {
    let s = sqrt_discriminant(imp, p_recv)?;
    let practical = practical_root(imp, p_recv, s);
    let inverted = -(1.0 + s) / (imp.x * imp.one_plus_rho_sq());
    Ok((practical, inverted))
}

/// Receiving-end reactive power needed to hold both ends at 1 pu.
pub fn receiving_q_exact(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let s = sqrt_discriminant(imp, p_recv)?;
    Ok(practical_root(imp, p_recv, s))
}

/// Series approximation of [`receiving_q_exact`] with remainder `O((XP)³)·P`.
pub fn receiving_q_series(imp: &BranchImpedance, p_recv: f64) -> f64 {
    let rho = imp.rho;
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    -p_recv * (rho + 0.5 * a * a * t + 0.5 * rho * a * a * a * t * t)
}

/// Coefficient of support `σ = X|I|²/P_k`, zero at zero flow.
pub fn support_coefficient(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let s = sqrt_discriminant(imp, p_recv)?;
    Ok(support_from_sqrt_delta(imp, p_recv, s))
}

/// Two-term series `σ ≈ (1+ρ²)(XP) + ρ(1+ρ²)²(XP)²`.
pub fn support_coefficient_series(imp: &BranchImpedance, p_recv: f64) -> f64 {
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    a * t + imp.rho * a * a * t * t
}

/// `arcsin` with clamping of round-off excursions past ±1.
pub(crate) fn clamped_asin(mu: f64) -> Result<f64> {
    if mu.abs() > 1.0 + MU_CLAMP_TOL || mu.is_nan() {
        return Err(FlowError::Inconsistent(format!(
            "flow coefficient {mu} outside [-1, 1]"
        )));
    }
    Ok(mu.clamp(-1.0, 1.0).asin())
}

fn assemble(
    imp: &BranchImpedance,
    p_recv: f64,
    sqrt_delta: f64,
    mu: f64,
) -> Result<BranchOperatingPoint> {
    let rho = imp.rho;
    let sigma = support_from_sqrt_delta(imp, p_recv, sqrt_delta);
    let q_recv = practical_root(imp, p_recv, sqrt_delta);
    let losses = rho * sigma * p_recv;
    Ok(BranchOperatingPoint {
        p_recv,
        q_recv,
        p_send: p_recv + losses,
        q_send: q_recv + sigma * p_recv,
        current_mag: (sigma * p_recv / imp.x).sqrt(),
        sigma,
        mu,
        phase_shift: clamped_asin(mu)?,
        losses,
    })
}

/// Full flat-voltage operating point for a given receiving-end power.
pub fn solve_branch(imp: &BranchImpedance, p_recv: f64) -> Result<BranchOperatingPoint> {
    let s = sqrt_discriminant(imp, p_recv)?;
    let q_recv = practical_root(imp, p_recv, s);
    let mu = imp.x * p_recv - imp.r * q_recv;
    assemble(imp, p_recv, s, mu)
}

/// Operating point for a prescribed flow coefficient (equivalently a
/// prescribed phase shift `arcsin μ`).
///
/// Uses `√Δ = √(1−μ²) − ρμ`, which stays well conditioned at the limiting
/// flow where solving forward from `P` loses half the significant digits.
pub fn solve_branch_at_flow_coefficient(
    imp: &BranchImpedance,
    mu: f64,
) -> Result<BranchOperatingPoint> {
    let mu = checked_flow_coefficient(imp, mu)?;
    let cos_shift = ((1.0 - mu) * (1.0 + mu)).sqrt();
    let p_recv = power_at(imp, mu, cos_shift);
    let s = (cos_shift - imp.rho * mu).max(0.0);
    assemble(imp, p_recv, s, mu)
}

/// Flow coefficient `μ = XP_k − RQ_k = sin(δ_j − δ_k)`.
pub fn flow_coefficient(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let q = receiving_q_exact(imp, p_recv)?;
    Ok(imp.x * p_recv - imp.r * q)
}

fn checked_flow_coefficient(imp: &BranchImpedance, mu: f64) -> Result<f64> {
    let mu_max = 1.0 / imp.one_plus_rho_sq().sqrt();
    if !mu.is_finite() || mu < 0.0 {
        return Err(domain(format!(
            "flow coefficient must be finite and nonnegative (mu={mu})"
        )));
    }
    if mu > mu_max + MU_CLAMP_TOL {
        return Err(domain(format!(
            "flow coefficient {mu} exceeds the limiting value {mu_max} for rho={}",
            imp.rho
        )));
    }
    Ok(mu.min(mu_max))
}

// P = (1/X)/(1+ρ²)·[μ − ρ(1 − cos δ)], with 1 − cos δ = μ²/(1 + cos δ).
fn power_at(imp: &BranchImpedance, mu: f64, cos_shift: f64) -> f64 {
    let a = imp.one_plus_rho_sq();
    (mu - imp.rho * mu * mu / (1.0 + cos_shift)) / (imp.x * a)
}

/// Unique receiving-end power with flow coefficient `mu`; the inverse of
/// [`flow_coefficient`] on `[0, 1/√(1+ρ²)]`.
pub fn power_from_flow_coefficient(imp: &BranchImpedance, mu: f64) -> Result<f64> {
    let mu = checked_flow_coefficient(imp, mu)?;
    let cos_shift = ((1.0 - mu) * (1.0 + mu)).sqrt();
    Ok(power_at(imp, mu, cos_shift))
}

/// Maximal flat-voltage transfer of the branch and the state reached there.
pub fn limiting_point(imp: &BranchImpedance) -> FlowLimit {
    let a = imp.one_plus_rho_sq();
    let root_a = a.sqrt();
    // (√a − ρ)/a written as 1/(a(√a + ρ)) since (√a − ρ)(√a + ρ) = 1.
    let p_max = 1.0 / (imp.x * a * (root_a + imp.rho));
    FlowLimit {
        p_max,
        q_at_limit: -1.0 / (imp.x * a),
        sigma_at_limit: 2.0 / root_a,
        mu_at_limit: 1.0 / root_a,
        impedance_angle: (imp.x / imp.r.hypot(imp.x)).min(1.0).asin(),
    }
}

fn interior_sqrt_delta(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    check_power(p_recv)?;
    if p_recv == 0.0 {
        return Err(domain(
            "derivative form sigma/(P sqrt(delta)) needs p_recv > 0",
        ));
    }
    let delta = discriminant(imp, p_recv);
    if delta <= 0.0 {
        return Err(domain(format!(
            "receiving power {p_recv} is at or beyond the limiting flow"
        )));
    }
    Ok(delta.sqrt())
}

/// `∂σ/∂P_k = σ/(P_k √Δ)`.
pub fn dsigma_dp(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let s = interior_sqrt_delta(imp, p_recv)?;
    let a = imp.one_plus_rho_sq();
    let t = imp.x * p_recv;
    let d = 1.0 + s;
    // σ/P without the division by P.
    let sigma_over_p = 2.0 * imp.x * (1.0 + imp.rho * (2.0 * imp.rho + a * t) / d) / d;
    Ok(sigma_over_p / s)
}

/// `∂σ/∂ρ = (2X/√Δ)(1 + ρσ)(−Q_k)` at fixed `X` and `P_k`.
pub fn dsigma_drho(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let s = interior_sqrt_delta(imp, p_recv)?;
    let sigma = support_from_sqrt_delta(imp, p_recv, s);
    let q = practical_root(imp, p_recv, s);
    Ok(2.0 * imp.x / s * (1.0 + imp.rho * sigma) * (-q))
}

/// `∂σ/∂X = σ/(X √Δ)` at fixed `ρ` and `P_k`.
pub fn dsigma_dx(imp: &BranchImpedance, p_recv: f64) -> Result<f64> {
    let s = interior_sqrt_delta(imp, p_recv)?;
    let sigma = support_from_sqrt_delta(imp, p_recv, s);
    Ok(sigma / (imp.x * s))
}

/// `∂P_k/∂μ = (1/X)/(1+ρ²)·(1 − ρμ/√(1−μ²))`, positive below the limit.
pub fn dp_dmu(imp: &BranchImpedance, mu: f64) -> Result<f64> {
    let a = imp.one_plus_rho_sq();
    let mu_max = 1.0 / a.sqrt();
    if !mu.is_finite() || mu < 0.0 || mu >= mu_max {
        return Err(domain(format!("dp_dmu needs 0 <= mu < {mu_max} (mu={mu})")));
    }
    let cos_shift = ((1.0 - mu) * (1.0 + mu)).sqrt();
    Ok((1.0 - imp.rho * mu / cos_shift) / (imp.x * a))
}
