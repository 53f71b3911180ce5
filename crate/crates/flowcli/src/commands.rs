use flatflow::branch::{self, BranchImpedance, BranchOperatingPoint};
use flatflow::oracle;
use flatflow::ring::{self, to_per_unit, PerUnitBase, Quantity, RingSpec, StringNetwork};
use flatflow::FlowError;

use crate::config::{Command, RunConfig, SweepSpec, SweepVar};
use crate::error::CliError;
use crate::table::{col, Column, Kind, Table, Value};

/// Converts SI inputs to per-unit when a base is configured.
struct Inputs(Option<PerUnitBase>);

impl Inputs {
    fn impedance(&self, v: f64) -> f64 {
        self.0
            .as_ref()
            .map_or(v, |b| to_per_unit(v, b, Quantity::Impedance))
    }

    fn power(&self, v: f64) -> f64 {
        self.0
            .as_ref()
            .map_or(v, |b| to_per_unit(v, b, Quantity::Power))
    }
}

fn branch_columns() -> Vec<Column> {
    vec![
        col("r", Kind::Impedance),
        col("x", Kind::Impedance),
        col("p_recv", Kind::Power),
        col("q_recv", Kind::Power),
        col("p_send", Kind::Power),
        col("q_send", Kind::Power),
        col("current", Kind::Current),
        col("sigma", Kind::Plain),
        col("mu", Kind::Plain),
        col("delta", Kind::Angle),
        col("losses", Kind::Power),
    ]
}

fn branch_values(imp: &BranchImpedance, op: &BranchOperatingPoint) -> Vec<Value> {
    [
        imp.r(),
        imp.x(),
        op.p_recv,
        op.q_recv,
        op.p_send,
        op.q_send,
        op.current_mag,
        op.sigma,
        op.mu,
        op.phase_shift,
        op.losses,
    ]
    .into_iter()
    .map(Value::Num)
    .collect()
}

fn ring_columns() -> Vec<Column> {
    vec![
        col("n", Kind::Plain),
        col("m", Kind::Plain),
        col("x", Kind::Impedance),
        col("rho", Kind::Plain),
        col("p_circ", Kind::Power),
        col("mu", Kind::Plain),
        col("sigma", Kind::Plain),
        col("q_per_bus", Kind::Power),
        col("p_per_bus", Kind::Power),
        col("counter_q", Kind::Power),
        col("angle_step", Kind::Angle),
        col("winding", Kind::Plain),
    ]
}

fn ring_values(spec: &RingSpec) -> Result<Vec<Value>, FlowError> {
    let sol = ring::assemble_homogeneous_ring(spec)?;
    let mut row = vec![Value::Int(spec.n().into()), Value::Int(spec.m().into())];
    row.extend(
        [
            spec.x(),
            spec.rho(),
            sol.p_circ,
            sol.mu,
            sol.sigma,
            sol.per_branch_q_consumption,
            sol.per_branch_losses,
            sol.counter_q_flow,
            sol.angle_steps[0],
        ]
        .into_iter()
        .map(Value::Num),
    );
    row.push(Value::Int(sol.winding_check));
    Ok(row)
}

/// Runs the configured computation and returns its rows.
pub fn execute(config: &RunConfig) -> Result<Table, CliError> {
    config.validate()?;
    let base = match config.si_base {
        Some(b) => Some(PerUnitBase::new(b.v_nom, b.s_base)?),
        None => None,
    };
    let inputs = Inputs(base);

    match &config.command {
        Command::Branch { r, x, p } => {
            let imp = BranchImpedance::new(inputs.impedance(*r), inputs.impedance(*x))?;
            let op = branch::solve_branch(&imp, inputs.power(*p))?;
            let mut columns = branch_columns();
            let mut row = branch_values(&imp, &op);
            if let Some(tol) = config.bisect_tol {
                columns.push(col("q_oracle", Kind::Power));
                row.push(Value::Num(oracle::bisect_receiving_q(
                    &imp, op.p_recv, tol,
                )?));
            }
            let mut table = Table::new(columns);
            table.push(row);
            Ok(table)
        }
        Command::Limit { r, x } => {
            let imp = BranchImpedance::new(inputs.impedance(*r), inputs.impedance(*x))?;
            let lim = branch::limiting_point(&imp);
            let mut table = Table::new(vec![
                col("r", Kind::Impedance),
                col("x", Kind::Impedance),
                col("rho", Kind::Plain),
                col("p_max", Kind::Power),
                col("q_at_limit", Kind::Power),
                col("sigma", Kind::Plain),
                col("mu", Kind::Plain),
                col("impedance_angle", Kind::Angle),
            ]);
            table.push(
                [
                    imp.r(),
                    imp.x(),
                    imp.rho(),
                    lim.p_max,
                    lim.q_at_limit,
                    lim.sigma_at_limit,
                    lim.mu_at_limit,
                    lim.impedance_angle,
                ]
                .into_iter()
                .map(Value::Num)
                .collect(),
            );
            Ok(table)
        }
        Command::Inverse { r, x, mu } => {
            let imp = BranchImpedance::new(inputs.impedance(*r), inputs.impedance(*x))?;
            let p = branch::power_from_flow_coefficient(&imp, *mu)?;
            let mut table = Table::new(vec![
                col("r", Kind::Impedance),
                col("x", Kind::Impedance),
                col("mu", Kind::Plain),
                col("p", Kind::Power),
            ]);
            table.push(
                [imp.r(), imp.x(), *mu, p]
                    .into_iter()
                    .map(Value::Num)
                    .collect(),
            );
            Ok(table)
        }
        Command::Ring { n, m, x, rho } => {
            let spec = RingSpec::new(*n, *m, inputs.impedance(*x), *rho)?;
            let mut table = Table::new(ring_columns());
            table.push(ring_values(&spec)?);
            Ok(table)
        }
        Command::Table { n_max } => {
            let mut table = Table::new(vec![
                col("n", Kind::Plain),
                col("rho_max", Kind::Plain),
                col("p_circ", Kind::Plain),
                col("q_per_branch", Kind::Plain),
                col("p_losses_per_branch", Kind::Plain),
            ]);
            for row in ring::ring_limit_table(*n_max)? {
                table.push(vec![
                    Value::Int(row.n.into()),
                    Value::Num(row.rho_max),
                    Value::Num(row.p_circ_at_max),
                    Value::Num(row.q_per_branch),
                    Value::Num(row.losses_per_branch),
                ]);
            }
            Ok(table)
        }
        Command::Sweep(spec) => sweep(spec, &inputs),
        Command::String {
            r,
            x,
            injections,
            tail,
        } => {
            let branches = r
                .iter()
                .zip(x)
                .map(|(r, x)| BranchImpedance::new(inputs.impedance(*r), inputs.impedance(*x)))
                .collect::<Result<Vec<_>, _>>()?;
            let injections = injections.iter().map(|v| inputs.power(*v)).collect();
            let net = StringNetwork::new(branches, injections, inputs.power(*tail))?;
            let sol = ring::solve_string(&net)?;
            let mut table = Table::new(vec![
                col("bus", Kind::Plain),
                col("angle", Kind::Angle),
                col("p_injection", Kind::Power),
                col("q_injection", Kind::Power),
            ]);
            for (i, bus) in sol.buses.iter().enumerate() {
                table.push(vec![
                    Value::Int(i as i64),
                    Value::Num(bus.angle),
                    Value::Num(bus.p_injection),
                    Value::Num(bus.q_injection),
                ]);
            }
            Ok(table)
        }
    }
}

fn status_of(err: &FlowError) -> &'static str {
    match err {
        FlowError::Infeasible(_) => "infeasible",
        FlowError::Domain(_) => "domain",
        FlowError::Inconsistent(_) => "error",
    }
}

fn with_status(
    result: Result<Vec<Value>, FlowError>,
    width: usize,
    lead: Vec<Value>,
) -> Vec<Value> {
    match result {
        Ok(mut row) => {
            row.push(Value::Text("ok".into()));
            row
        }
        Err(e) => {
            let mut row = lead;
            row.resize(width - 1, Value::Missing);
            row.push(Value::Text(status_of(&e).into()));
            row
        }
    }
}

/// Evenly spaced points, last one exactly `to`.
fn grid(from: f64, to: f64, steps: u32) -> impl Iterator<Item = f64> {
    let width = to - from;
    (0..=steps).map(move |i| {
        if i == steps {
            to
        } else {
            from + width * f64::from(i) / f64::from(steps)
        }
    })
}

/// Maps a swept value to (rho, x, p).
type GridPoint = dyn Fn(f64) -> (f64, f64, f64);

fn sweep(spec: &SweepSpec, inputs: &Inputs) -> Result<Table, CliError> {
    let ring_mode =
        matches!(spec.var, SweepVar::N) || (spec.var == SweepVar::Rho && spec.n.is_some());
    if ring_mode {
        return sweep_ring(spec, inputs);
    }

    let mut columns = branch_columns();
    columns.insert(2, col("rho", Kind::Plain));
    columns.push(col("status", Kind::Plain));
    let width = columns.len();
    let mut table = Table::new(columns);

    let steps = spec.steps.unwrap_or(1);
    let rho_fixed = spec.rho.unwrap_or(0.0);
    let (to, points): (f64, Box<GridPoint>) = match spec.var {
        SweepVar::P => {
            let x = inputs.impedance(spec.x.unwrap_or(1.0));
            let to = match spec.to {
                Some(t) => inputs.power(t),
                None => {
                    let imp = BranchImpedance::from_ratio(rho_fixed, x)?;
                    branch::limiting_point(&imp).p_max
                }
            };
            (to, Box::new(move |v| (rho_fixed, x, v)))
        }
        SweepVar::X => {
            let p = inputs.power(spec.p.unwrap_or(0.0));
            (
                inputs.impedance(spec.to.unwrap_or(0.0)),
                Box::new(move |v| (rho_fixed, v, p)),
            )
        }
        SweepVar::Rho => {
            let x = inputs.impedance(spec.x.unwrap_or(1.0));
            let p = inputs.power(spec.p.unwrap_or(0.0));
            (spec.to.unwrap_or(0.0), Box::new(move |v| (v, x, p)))
        }
        SweepVar::N => unreachable!("ring sweep handled above"),
    };
    let from = match spec.var {
        SweepVar::P => inputs.power(spec.from),
        SweepVar::X => inputs.impedance(spec.from),
        _ => spec.from,
    };
    if to < from {
        return Err(CliError::usage(format!(
            "inverted sweep range {from} > {to}"
        )));
    }

    for v in grid(from, to, steps) {
        let (rho, x, p) = points(v);
        let result = BranchImpedance::from_ratio(rho, x).and_then(|imp| {
            let op = branch::solve_branch(&imp, p)?;
            let mut row = branch_values(&imp, &op);
            row.insert(2, Value::Num(rho));
            Ok(row)
        });
        let lead = vec![
            Value::Num(rho * x),
            Value::Num(x),
            Value::Num(rho),
            Value::Num(p),
        ];
        table.push(with_status(result, width, lead));
    }
    Ok(table)
}

fn sweep_ring(spec: &SweepSpec, inputs: &Inputs) -> Result<Table, CliError> {
    let mut columns = ring_columns();
    columns.push(col("status", Kind::Plain));
    let width = columns.len();
    let mut table = Table::new(columns);
    let x = inputs.impedance(spec.x.unwrap_or(1.0));
    let m = spec.m.unwrap_or(1);

    let cases: Vec<(u32, f64)> = match spec.var {
        SweepVar::N => {
            let rho = spec.rho.unwrap_or(0.0);
            let (from, to) = (spec.from as u32, spec.to.unwrap_or(spec.from) as u32);
            (from..=to).map(|n| (n, rho)).collect()
        }
        _ => {
            let n = spec.n.unwrap_or(4);
            let to = match spec.to {
                Some(t) => t,
                None => ring::rho_max(n, m)?,
            };
            if to < spec.from {
                return Err(CliError::usage(format!(
                    "inverted sweep range {} > {to}",
                    spec.from
                )));
            }
            grid(spec.from, to, spec.steps.unwrap_or(1))
                .map(|rho| (n, rho))
                .collect()
        }
    };

    for (n, rho) in cases {
        let result = RingSpec::new(n, m, x, rho).and_then(|s| ring_values(&s));
        let lead = vec![
            Value::Int(n.into()),
            Value::Int(m.into()),
            Value::Num(x),
            Value::Num(rho),
        ];
        table.push(with_status(result, width, lead));
    }
    Ok(table)
}
