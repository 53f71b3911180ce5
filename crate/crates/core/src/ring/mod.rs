//! Circulating flows in homogeneous ring networks.
//!
//! A ring of `n` identical branches carrying the same receiving power closes
//! on itself only if the per-branch phase shifts add up to a whole number of
//! turns, `n·arcsin μ = 2πm`. That fixes `μ = sin(2πm/n)` and, through the
//! inverse power–angle relation, a unique circulating power for each
//! admissible winding number `1 <= m <= n/4`.

mod per_unit;
mod string;

pub use per_unit::{from_per_unit, to_per_unit, PerUnitBase, Quantity};
pub use string::{solve_string, BusInjection, StringNetwork, StringSolution};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::branch::{self, BranchImpedance, BranchOperatingPoint};
use crate::error::{domain, infeasible, FlowError, Result};

/// Largest `|sum − 2πm|` still accepted as an integer winding.
pub const WINDING_TOL: f64 = 1e-9;

/// Slack on `ρ <= ρ_max` and on the per-branch `π/2` angle guard.
pub const RING_TOL: f64 = 1e-12;

/// Total angle around a cycle and the nearest winding number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub sum: f64,
    pub m: i64,
    /// `sum − 2πm`.
    pub mismatch: f64,
}

impl Winding {
    /// Whether the cycle closes to within [`WINDING_TOL`].
    pub fn is_integer(&self) -> bool {
        self.mismatch.abs() <= WINDING_TOL
    }
}

/// Adds up the angle differences around a cycle of branches.
///
/// Each difference must lie in `(−π, π]`.
pub fn winding_sum(angle_diffs: &[f64]) -> Result<Winding> {
    if let Some(bad) = angle_diffs
        .iter()
        .find(|d| !d.is_finite() || **d <= -PI || **d > PI)
    {
        return Err(domain(format!("angle difference {bad} outside (-pi, pi]")));
    }
    let sum: f64 = angle_diffs.iter().sum();
    let m = (sum / TAU).round();
    Ok(Winding {
        sum,
        m: m as i64,
        mismatch: sum - TAU * m,
    })
}

/// Rejects cycles with a single-branch angle step above `π/2`.
pub fn check_angle_steps(angle_diffs: &[f64]) -> Result<()> {
    match angle_diffs.iter().position(|d| *d > FRAC_PI_2 + RING_TOL) {
        Some(i) => Err(domain(format!(
            "branch {} angle step {} exceeds pi/2",
            i + 1,
            angle_diffs[i]
        ))),
        None => Ok(()),
    }
}

fn check_ring_size(n: u32, m: u32) -> Result<()> {
    if n < 4 {
        return Err(domain(format!("a ring needs at least 4 branches (n={n})")));
    }
    if m < 1 || m > n / 4 {
        return Err(domain(format!(
            "winding number must satisfy 1 <= m <= floor(n/4) = {} (m={m})",
            n / 4
        )));
    }
    Ok(())
}

fn ring_angle(n: u32, m: u32) -> f64 {
    TAU * f64::from(m) / f64::from(n)
}

/// Per-branch flow coefficient `sin(2πm/n)` of a homogeneous ring.
pub fn homogeneous_mu(n: u32, m: u32) -> Result<f64> {
    check_ring_size(n, m)?;
    Ok(ring_angle(n, m).sin())
}

/// Largest R/X ratio admitting winding number `m` in a ring of `n` branches.
pub fn rho_max(n: u32, m: u32) -> Result<f64> {
    let mu = homogeneous_mu(n, m)?;
    // sqrt(1/μ² − 1)
    Ok(((1.0 - mu) * (1.0 + mu)).sqrt() / mu)
}

fn check_branch_params(x: f64, rho: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain(format!("reactance must be positive (x={x})")));
    }
    if !rho.is_finite() || rho < 0.0 {
        return Err(domain(format!("R/X ratio must be nonnegative (rho={rho})")));
    }
    Ok(())
}

fn check_ratio_feasible(rho: f64, n: u32, m: u32) -> Result<f64> {
    let bound = rho_max(n, m)?;
    if rho > bound + RING_TOL {
        return Err(infeasible(format!(
            "R/X ratio {rho} exceeds rho_max = {bound} for n={n}, m={m}"
        )));
    }
    Ok(bound)
}

/// Circulating power `(1/X)/(1+ρ²)·[sin θ − ρ(1 − cos θ)]`, `θ = 2πm/n`.
pub fn circulating_power(x: f64, rho: f64, n: u32, m: u32) -> Result<f64> {
    check_branch_params(x, rho)?;
    check_ratio_feasible(rho, n, m)?;
    let theta = ring_angle(n, m);
    let half_sin = (0.5 * theta).sin();
    let one_minus_cos = 2.0 * half_sin * half_sin;
    Ok((theta.sin() - rho * one_minus_cos) / (x * (1.0 + rho * rho)))
}

/// Lossless circulating power `sin(2πm/n)/X`.
pub fn circulating_power_lossless(x: f64, n: u32, m: u32) -> Result<f64> {
    check_branch_params(x, 0.0)?;
    Ok(homogeneous_mu(n, m)? / x)
}

/// One row of the ring limit table, powers in units of `V_nom²/X_branch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingLimitRow {
    pub n: u32,
    pub rho_max: f64,
    pub p_circ_at_max: f64,
    pub q_per_branch: f64,
    pub losses_per_branch: f64,
}

/// Limiting R/X ratio and the flows at that limit for a ring of `n`
/// branches with winding number 1.
pub fn ring_limit_row(n: u32) -> Result<RingLimitRow> {
    let rho = rho_max(n, 1)?;
    let p_circ = circulating_power(1.0, rho, n, 1)?;
    let sigma = 2.0 / (1.0 + rho * rho).sqrt();
    Ok(RingLimitRow {
        n,
        rho_max: rho,
        p_circ_at_max: p_circ,
        q_per_branch: sigma * p_circ,
        losses_per_branch: rho * sigma * p_circ,
    })
}

/// Rows for `n = 4..=n_max`.
pub fn ring_limit_table(n_max: u32) -> Result<Vec<RingLimitRow>> {
    if n_max < 4 {
        return Err(domain(format!("table needs n_max >= 4 (n_max={n_max})")));
    }
    (4..=n_max).map(ring_limit_row).collect()
}

/// Homogeneous ring configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingSpec {
    n: u32,
    m: u32,
    x: f64,
    rho: f64,
}

impl RingSpec {
    /// Validates ring size, winding number (which also bounds every branch
    /// step by `π/2`) and branch parameters. Feasibility of `rho` is checked
    /// when the ring is assembled.
    pub fn new(n: u32, m: u32, x: f64, rho: f64) -> Result<Self> {
        check_ring_size(n, m)?;
        check_branch_params(x, rho)?;
        Ok(Self { n, m, x, rho })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Solved circulating-flow state of a homogeneous ring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingSolution {
    pub p_circ: f64,
    pub mu: f64,
    pub sigma: f64,
    pub per_branch_q_consumption: f64,
    pub per_branch_losses: f64,
    /// Active power each bus injects to replace the losses of the branch
    /// arriving at it.
    pub per_bus_p_injection: Vec<f64>,
    /// Reactive power each bus injects to cover the consumption of the
    /// branch arriving at it.
    pub per_bus_q_injection: Vec<f64>,
    /// `δ_{k−1} − δ_k` for branches `1..=n`.
    pub angle_steps: Vec<f64>,
    pub winding_check: i64,
    /// Circulating reactive flow against the active flow, `−(ρ + ρ²σ/2)P∘`.
    pub counter_q_flow: f64,
    /// The common state of every branch.
    pub branch: BranchOperatingPoint,
}

/// Solves the homogeneous ring and certifies its winding number.
pub fn assemble_homogeneous_ring(spec: &RingSpec) -> Result<RingSolution> {
    check_ratio_feasible(spec.rho, spec.n, spec.m)?;
    let mu = homogeneous_mu(spec.n, spec.m)?;
    let imp = BranchImpedance::from_ratio(spec.rho, spec.x)?;
    let op = branch::solve_branch_at_flow_coefficient(&imp, mu)?;

    let n = spec.n as usize;
    let angle_steps = vec![op.phase_shift; n];
    check_angle_steps(&angle_steps)?;
    let winding = winding_sum(&angle_steps)?;
    if !winding.is_integer() || winding.m != i64::from(spec.m) {
        return Err(FlowError::Inconsistent(format!(
            "ring angle steps sum to {} (winding {} off by {:.3e}), expected m={}",
            winding.sum, winding.m, winding.mismatch, spec.m
        )));
    }

    let q_consumption = op.sigma * op.p_recv;
    Ok(RingSolution {
        p_circ: op.p_recv,
        mu,
        sigma: op.sigma,
        per_branch_q_consumption: q_consumption,
        per_branch_losses: op.losses,
        per_bus_p_injection: vec![op.losses; n],
        per_bus_q_injection: vec![q_consumption; n],
        angle_steps,
        winding_check: winding.m,
        counter_q_flow: op.counter_q_flow(&imp),
        branch: op,
    })
}
