//! Validated run configuration. Serializable so a JSON report can be fed
//! back in to reproduce its rows.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_PRECISION: u8 = 6;
pub const TABLE_PRECISION: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Engineering base for SI input and output. Absent means per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiBase {
    pub v_nom: f64,
    pub s_base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    P,
    Rho,
    X,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub from: f64,
    /// Upper end; `None` means the feasibility limit for the swept variable.
    pub to: Option<f64>,
    /// Number of intervals; ignored for `n`, which steps by one.
    pub steps: Option<u32>,
    pub rho: Option<f64>,
    pub x: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<u32>,
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Branch {
        r: f64,
        x: f64,
        p: f64,
    },
    Limit {
        r: f64,
        x: f64,
    },
    Inverse {
        r: f64,
        x: f64,
        mu: f64,
    },
    Ring {
        n: u32,
        m: u32,
        x: f64,
        rho: f64,
    },
    Table {
        n_max: u32,
    },
    Sweep(SweepSpec),
    String {
        r: Vec<f64>,
        x: Vec<f64>,
        injections: Vec<f64>,
        tail: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: OutputFormat,
    pub precision: Option<u8>,
    #[serde(default)]
    pub degrees: bool,
    pub si_base: Option<SiBase>,
    /// When set, `branch` also reports the bisection oracle's `Q_k` at this
    /// tolerance.
    pub bisect_tol: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            format: OutputFormat::Csv,
            precision: None,
            degrees: false,
            si_base: None,
            bisect_tol: None,
        }
    }

    pub fn effective_precision(&self) -> u8 {
        self.precision.unwrap_or(match self.command {
            Command::Table { .. } => TABLE_PRECISION,
            _ => DEFAULT_PRECISION,
        })
    }

    /// Parameter checks that need no numerical work.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = self.precision {
            if !(1..=15).contains(&p) {
                return Err(CliError::usage(format!(
                    "precision must be in [1, 15] (got {p})"
                )));
            }
        }
        if let Some(tol) = self.bisect_tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::usage(format!(
                    "bisection tolerance must be positive (got {tol})"
                )));
            }
        }
        if let Some(base) = self.si_base {
            flatflow::PerUnitBase::new(base.v_nom, base.s_base)?;
            if matches!(self.command, Command::Table { .. }) {
                return Err(CliError::usage(
                    "table values are normalized to V_nom^2/X; SI base not applicable",
                ));
            }
        }
        match &self.command {
            Command::Sweep(s) => s.validate(),
            Command::String { r, x, .. } if r.len() != x.len() => Err(CliError::usage(format!(
                "string needs as many resistances as reactances ({} vs {})",
                r.len(),
                x.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<(), CliError> {
        if !self.from.is_finite() || self.to.is_some_and(|t| !t.is_finite()) {
            return Err(CliError::usage("sweep bounds must be finite"));
        }
        if let Some(to) = self.to {
            if to < self.from {
                return Err(CliError::usage(format!(
                    "inverted sweep range {} > {to}",
                    self.from
                )));
            }
        }
        let need = |name: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(CliError::usage(
                    format!("sweep over {:?} needs --{name}", self.var).to_lowercase(),
                ))
            }
        };
        match self.var {
            SweepVar::N => {
                need("to", self.to.is_some())?;
                need("rho", self.rho.is_some())?;
                if self.from < 0.0 || self.from.fract() != 0.0 {
                    return Err(CliError::usage(
                        "sweep over n needs a nonnegative integer --from",
                    ));
                }
            }
            _ => {
                match self.steps {
                    Some(s) if s > 0 => {}
                    _ => return Err(CliError::usage("sweep needs --steps > 0")),
                }
                match self.var {
                    SweepVar::P => {
                        need("rho", self.rho.is_some())?;
                        need("x", self.x.is_some())?;
                    }
                    SweepVar::X => {
                        need("rho", self.rho.is_some())?;
                        need("p", self.p.is_some())?;
                        need("to", self.to.is_some())?;
                    }
                    SweepVar::Rho if self.n.is_none() => {
                        need("x", self.x.is_some())?;
                        need("p", self.p.is_some())?;
                        need("to", self.to.is_some())?;
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}
