//! Branches connected end to end, solved from the downstream tail upwards.

use serde::Serialize;

use crate::branch::{self, BranchImpedance, BranchOperatingPoint};
use crate::error::{domain, infeasible, FlowError, Result};

/// A string of branches from bus 0 (head) to bus `N` (tail).
///
/// Branch `i` (0-based) links bus `i` to bus `i + 1`. `injections[i]` is the
/// active power added at intermediate bus `i + 1`, so the sending power of
/// the branch leaving that bus is the receiving power of the branch arriving
/// there plus the injection. Negative injections are loads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringNetwork {
    branches: Vec<BranchImpedance>,
    injections: Vec<f64>,
    tail_power: f64,
}

impl StringNetwork {
    pub fn new(
        branches: Vec<BranchImpedance>,
        injections: Vec<f64>,
        tail_power: f64,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(domain("a string needs at least one branch"));
        }
        if injections.len() != branches.len() - 1 {
            return Err(domain(format!(
                "{} branches need {} intermediate injections, got {}",
                branches.len(),
                branches.len() - 1,
                injections.len()
            )));
        }
        if let Some(v) = injections
            .iter()
            .chain([&tail_power])
            .find(|v| !v.is_finite())
        {
            return Err(domain(format!("non-finite power {v} in string")));
        }
        Ok(Self {
            branches,
            injections,
            tail_power,
        })
    }

    pub fn branches(&self) -> &[BranchImpedance] {
        &self.branches
    }

    pub fn injections(&self) -> &[f64] {
        &self.injections
    }

    pub fn tail_power(&self) -> f64 {
        self.tail_power
    }
}

/// Net complex power a bus injects into the network, and its voltage angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BusInjection {
    pub angle: f64,
    pub p_injection: f64,
    pub q_injection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringSolution {
    pub branches: Vec<BranchOperatingPoint>,
    /// Buses `0..=N`; bus 0 is the angle reference.
    pub buses: Vec<BusInjection>,
}

pub fn solve_string(net: &StringNetwork) -> Result<StringSolution> {
    let count = net.branches.len();
    let mut ops = Vec::with_capacity(count);
    let mut p_recv = net.tail_power;
    for idx in (0..count).rev() {
        if p_recv < 0.0 {
            return Err(infeasible(format!(
                "branch {}: implied receiving power {p_recv} is negative",
                idx + 1
            )));
        }
        let op = branch::solve_branch(&net.branches[idx], p_recv).map_err(|e| match e {
            FlowError::Infeasible(msg) => infeasible(format!("branch {}: {msg}", idx + 1)),
            other => other,
        })?;
        if idx > 0 {
            p_recv = op.p_send - net.injections[idx - 1];
        }
        ops.push(op);
    }
    ops.reverse();

    let mut buses = Vec::with_capacity(count + 1);
    let mut angle = 0.0;
    buses.push(BusInjection {
        angle,
        p_injection: ops[0].p_send,
        q_injection: ops[0].q_send,
    });
    for (i, op) in ops.iter().enumerate() {
        angle -= op.phase_shift;
        let (p_out, q_out) = ops
            .get(i + 1)
            .map_or((0.0, 0.0), |next| (next.p_send, next.q_send));
        buses.push(BusInjection {
            angle,
            p_injection: p_out - op.p_recv,
            q_injection: q_out - op.q_recv,
        });
    }
    Ok(StringSolution {
        branches: ops,
        buses,
    })
}
