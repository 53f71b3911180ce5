//! Phasor-level verification of branch solutions.
//!
//! Nothing here uses the closed forms in [`crate::branch`]. A candidate
//! `(P_k, Q_k)` is turned back into complex voltages and currents with the
//! receiving bus as the `1∠0` reference, and the flat-voltage condition is
//! checked directly as `|V_j|² − 1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::branch::BranchImpedance;
use crate::error::{domain, infeasible, FlowError, Result};

/// Residual magnitude accepted as zero by the bisection oracle.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Iteration cap for [`bisect_receiving_q`].
pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasorState {
    pub v_recv: Complex64,
    pub v_send: Complex64,
    pub current: Complex64,
    /// Complex power into the branch at the sending bus.
    pub s_send: Complex64,
    /// Complex power out of the branch at the receiving bus.
    pub s_recv: Complex64,
}

impl PhasorState {
    /// `δ_j − δ_k`, the argument of `V_j V_k*`.
    pub fn phase_shift(&self) -> f64 {
        (self.v_send * self.v_recv.conj()).arg()
    }

    /// `Im(V_j V_k*)`, which is `XP_k − RQ_k` for any input.
    pub fn angle_product_imag(&self) -> f64 {
        (self.v_send * self.v_recv.conj()).im
    }
}

/// Rebuilds the branch phasors from the receiving-end power.
pub fn reconstruct_phasors(imp: &BranchImpedance, p_recv: f64, q_recv: f64) -> PhasorState {
    let z = Complex64::new(imp.r(), imp.x());
    let v_recv = Complex64::new(1.0, 0.0);
    let s_recv = Complex64::new(p_recv, q_recv);
    // V_k I* = S_k
    let current = (s_recv / v_recv).conj();
    let v_send = v_recv + z * current;
    PhasorState {
        v_recv,
        v_send,
        current,
        s_send: v_send * current.conj(),
        s_recv,
    }
}

/// `|V_j|² − 1` for the given receiving-end power; zero on the flat profile.
pub fn flat_residual(imp: &BranchImpedance, p_recv: f64, q_recv: f64) -> f64 {
    reconstruct_phasors(imp, p_recv, q_recv).v_send.norm_sqr() - 1.0
}

/// Finds the practical `Q_k` by bisection on [`flat_residual`].
///
/// The bracket `[−X/|Z|², 0]` runs from the vertex of the residual parabola
/// to zero, so the inverted root is never reached.
pub fn bisect_receiving_q(imp: &BranchImpedance, p_recv: f64, tol: f64) -> Result<f64> {
    if !p_recv.is_finite() || p_recv < 0.0 {
        return Err(domain(format!(
            "receiving power must be nonnegative (p={p_recv})"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(domain(format!(
            "bisection tolerance must be positive (tol={tol})"
        )));
    }
    if p_recv == 0.0 {
        return Ok(0.0);
    }

    let f = |q: f64| flat_residual(imp, p_recv, q);
    let mut lo = -imp.x() / imp.z_squared();
    let mut hi = 0.0;
    let f_lo = f(lo);
    if f_lo > RESIDUAL_TOL {
        return Err(infeasible(format!(
            "no flat-voltage reactive power for p={p_recv}: residual {f_lo:.3e} at the bracket vertex"
        )));
    }
    if f_lo >= 0.0 {
        return Ok(lo);
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        // interval down to adjacent floats
        let stalled = mid <= lo || mid >= hi;
        let f_mid = f(mid);
        if f_mid <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < tol || stalled) && f_mid.abs() < RESIDUAL_TOL {
            return Ok(mid);
        }
        if stalled {
            break;
        }
    }
    Err(FlowError::Inconsistent(format!(
        "bisection for p={p_recv} did not converge within {MAX_BISECTIONS} steps"
    )))
}

/// Solves the biquadratic in `|V_k|` given `|V_j|` and the receiving-end
/// power, returning `(high, low)` roots.
pub fn receiving_voltage_magnitude(
    v_send_mag: f64,
    imp: &BranchImpedance,
    p_recv: f64,
    q_recv: f64,
) -> Result<(f64, f64)> {
    if !v_send_mag.is_finite() || v_send_mag <= 0.0 {
        return Err(domain(format!(
            "sending voltage magnitude must be positive ({v_send_mag})"
        )));
    }
    // y = |V_k|²:  y² − b y + c = 0
    let b = v_send_mag * v_send_mag - 2.0 * (imp.r() * p_recv + imp.x() * q_recv);
    let c = imp.z_squared() * (p_recv * p_recv + q_recv * q_recv);
    let disc = b * b - 4.0 * c;
    if disc < -RESIDUAL_TOL || b < 0.0 {
        return Err(infeasible(format!(
            "no real voltage magnitude for p={p_recv}, q={q_recv} at |V_j|={v_send_mag}"
        )));
    }
    let y_high = 0.5 * (b + disc.max(0.0).sqrt());
    let y_low = if y_high > 0.0 { c / y_high } else { 0.0 };
    Ok((y_high.sqrt(), y_low.sqrt()))
}

/// Sending-end counterpart of [`receiving_voltage_magnitude`]: `|V_j|` from
/// `|V_k|` and the sending-end power, by reversing the branch orientation.
pub fn sending_voltage_magnitude(
    v_recv_mag: f64,
    imp: &BranchImpedance,
    p_send: f64,
    q_send: f64,
) -> Result<(f64, f64)> {
    receiving_voltage_magnitude(v_recv_mag, imp, -p_send, -q_send)
}
