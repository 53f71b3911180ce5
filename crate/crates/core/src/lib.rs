//! Exact AC power flow for network branches under a flat voltage profile.
//!
//! Every bus is held at 1 pu voltage magnitude, so a branch carrying active
//! power `P_k` into its receiving bus needs a definite reactive injection
//! and settles at a definite phase shift. This crate computes those
//! quantities in closed form and checks them against an independent phasor
//! reconstruction.
//!
//! - [`branch`]: practical reactive-power root, coefficient of support,
//!   derived flows, flow limits and the power–angle relation with its inverse.
//! - [`oracle`]: phasor reconstruction, the flat-voltage residual, a bisection
//!   solver for `Q_k` and the general voltage-magnitude biquadratic.
//! - [`ring`]: string and ring topologies, winding numbers, circulating power
//!   in homogeneous rings and per-unit conversion.
//!
//! All functions are pure; every type is `Send + Sync`.

pub mod branch;
pub mod error;
pub mod oracle;
pub mod ring;

pub use branch::{BranchImpedance, BranchOperatingPoint, FlowLimit};
pub use error::{FlowError, Result};
pub use oracle::PhasorState;
pub use ring::{PerUnitBase, RingLimitRow, RingSolution, RingSpec, StringNetwork};
