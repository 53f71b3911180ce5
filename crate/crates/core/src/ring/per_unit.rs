use serde::Serialize;

use crate::error::{domain, Result};

/// Per-unit base: nominal voltage (V) and power base (VA).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerUnitBase {
    v_nom: f64,
    s_base: f64,
    z_base: f64,
}

/// Which base a value is scaled by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Ohms, scaled by `V_nom²/S_base`.
    Impedance,
    /// Watts, vars or VA, scaled by `S_base`.
    Power,
    /// Amperes, scaled by `S_base/V_nom`.
    Current,
}

impl PerUnitBase {
    pub fn new(v_nom: f64, s_base: f64) -> Result<Self> {
        if !(v_nom.is_finite() && v_nom > 0.0) || !(s_base.is_finite() && s_base > 0.0) {
            return Err(domain(format!(
                "per-unit base needs positive v_nom and s_base (v_nom={v_nom}, s_base={s_base})"
            )));
        }
        Ok(Self {
            v_nom,
            s_base,
            z_base: v_nom * v_nom / s_base,
        })
    }

    pub fn v_nom(&self) -> f64 {
        self.v_nom
    }

    pub fn s_base(&self) -> f64 {
        self.s_base
    }

    pub fn z_base(&self) -> f64 {
        self.z_base
    }

    pub fn base_value(&self, kind: Quantity) -> f64 {
        match kind {
            Quantity::Impedance => self.z_base,
            Quantity::Power => self.s_base,
            Quantity::Current => self.s_base / self.v_nom,
        }
    }
}

pub fn to_per_unit(value_si: f64, base: &PerUnitBase, kind: Quantity) -> f64 {
    value_si / base.base_value(kind)
}

pub fn from_per_unit(value_pu: f64, base: &PerUnitBase, kind: Quantity) -> f64 {
    value_pu * base.base_value(kind)
}
