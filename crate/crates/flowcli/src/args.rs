use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Command, OutputFormat, RunConfig, SiBase, SweepSpec, SweepVar};

#[derive(Debug, Parser)]
#[command(
    name = "flowcli",
    version,
    about = "Flat-voltage branch, limit and ring-flow calculations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    pub format: OutputFormat,

    /// Decimal places in the output (1-15; default 6, or 4 for `table`)
    #[arg(long, global = true)]
    pub precision: Option<u8>,

    /// Show angles in degrees (display only)
    #[arg(long, global = true)]
    pub degrees: bool,

    /// Nominal voltage in volts; with --s-base, inputs and outputs are SI
    #[arg(long, global = true, requires = "s_base")]
    pub v_nom: Option<f64>,

    /// Power base in volt-amperes
    #[arg(long, global = true, requires = "v_nom")]
    pub s_base: Option<f64>,

    /// Also report the bisection oracle's Q_k at this tolerance (`branch`)
    #[arg(long, global = true)]
    pub bisect_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Solve one branch for a receiving-end power
    #[command(allow_negative_numbers = true)]
    Branch {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        p: f64,
    },
    /// Limiting flow of a branch
    #[command(allow_negative_numbers = true)]
    Limit {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        x: f64,
    },
    /// Receiving power for a given flow coefficient
    #[command(allow_negative_numbers = true)]
    Inverse {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        mu: f64,
    },
    /// Circulating flow of a homogeneous ring
    #[command(allow_negative_numbers = true)]
    Ring {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
    },
    /// Limiting R/X ratio and flows for rings of 4..=n_max branches
    Table {
        #[arg(long, default_value_t = 10)]
        n_max: u32,
    },
    /// Parameter sweep over p, rho, x or n
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_enum)]
        var: SweepVar,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        /// Upper end; omitted means the feasibility limit (p, or rho with --n)
        #[arg(long)]
        to: Option<f64>,
        /// Number of intervals
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
    },
    /// Branches in series, solved from the tail power upstream
    #[command(allow_negative_numbers = true)]
    String {
        /// Comma-separated reactances, head to tail
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        /// Comma-separated resistances (default all zero)
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        /// Comma-separated active injections at intermediate buses
        #[arg(long, value_delimiter = ',')]
        injections: Vec<f64>,
        #[arg(long)]
        tail: f64,
    },
    /// Re-run the configuration stored in a JSON report (`-` for stdin)
    Replay {
        #[arg(long)]
        input: PathBuf,
    },
}

impl Cli {
    /// Builds the run configuration; `None` for `replay`, whose
    /// configuration comes from its input document.
    pub fn into_config(self) -> Option<RunConfig> {
        let command = match self.command {
            Cmd::Branch { r, x, p } => Command::Branch { r, x, p },
            Cmd::Limit { r, x } => Command::Limit { r, x },
            Cmd::Inverse { r, x, mu } => Command::Inverse { r, x, mu },
            Cmd::Ring { n, m, x, rho } => Command::Ring { n, m, x, rho },
            Cmd::Table { n_max } => Command::Table { n_max },
            Cmd::Sweep {
                var,
                from,
                to,
                steps,
                rho,
                x,
                p,
                n,
                m,
            } => Command::Sweep(SweepSpec {
                var,
                from,
                to,
                steps,
                rho,
                x,
                p,
                n,
                m,
            }),
            Cmd::String {
                x,
                r,
                injections,
                tail,
            } => {
                let r = if r.is_empty() { vec![0.0; x.len()] } else { r };
                Command::String {
                    r,
                    x,
                    injections,
                    tail,
                }
            }
            Cmd::Replay { .. } => return None,
        };
        let si_base = match (self.v_nom, self.s_base) {
            (Some(v_nom), Some(s_base)) => Some(SiBase { v_nom, s_base }),
            _ => None,
        };
        Some(RunConfig {
            command,
            format: self.format,
            precision: self.precision,
            degrees: self.degrees,
            si_base,
            bisect_tol: self.bisect_tol,
        })
    }
}
