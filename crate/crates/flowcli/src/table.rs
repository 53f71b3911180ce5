//! Tabular results and their CSV / JSON encodings.
//!
//! Values are held in per-unit and radians; the column [`Kind`] decides how
//! a value is converted for display (SI base, degrees) before formatting.

use std::io::Write;

use flatflow::ring::{from_per_unit, PerUnitBase, Quantity};
use serde_json::{json, Map, Number, Value as Json};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Plain,
    Power,
    Impedance,
    Current,
    Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub kind: Kind,
}

pub const fn col(name: &'static str, kind: Kind) -> Column {
    Column { name, kind }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

struct Display {
    precision: usize,
    degrees: bool,
    base: Option<PerUnitBase>,
}

impl Display {
    fn from_config(config: &RunConfig) -> Result<Self, CliError> {
        let base = match config.si_base {
            Some(b) => Some(PerUnitBase::new(b.v_nom, b.s_base)?),
            None => None,
        };
        Ok(Self {
            precision: usize::from(config.effective_precision()),
            degrees: config.degrees,
            base,
        })
    }

    fn convert(&self, v: f64, kind: Kind) -> f64 {
        let quantity = match kind {
            Kind::Angle if self.degrees => return v.to_degrees(),
            Kind::Power => Quantity::Power,
            Kind::Impedance => Quantity::Impedance,
            Kind::Current => Quantity::Current,
            Kind::Plain | Kind::Angle => return v,
        };
        match &self.base {
            Some(base) => from_per_unit(v, base, quantity),
            None => v,
        }
    }

    /// Fixed-point text, ties rounded half to even, no negative zero.
    fn format(&self, v: f64, kind: Kind) -> String {
        let s = format!("{:.*}", self.precision, self.convert(v, kind));
        match s.strip_prefix('-') {
            Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
            _ => s,
        }
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn write_csv(table: &Table, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let display = Display::from_config(config)?;
    let header: Vec<&str> = table.columns.iter().map(|c| c.name).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&table.columns)
            .map(|(v, c)| match v {
                Value::Num(x) => display.format(*x, c.kind),
                Value::Int(i) => i.to_string(),
                Value::Text(t) => csv_field(t),
                Value::Missing => String::new(),
            })
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn to_json(table: &Table, config: &RunConfig) -> Result<Json, CliError> {
    let display = Display::from_config(config)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let mut obj = Map::new();
        for (v, c) in row.iter().zip(&table.columns) {
            let cell = match v {
                Value::Num(x) => {
                    let text = display.format(*x, c.kind);
                    let rounded: f64 = text.parse().expect("formatted float parses");
                    Number::from_f64(rounded).map_or(Json::Null, Json::Number)
                }
                Value::Int(i) => Json::from(*i),
                Value::Text(t) => Json::from(t.as_str()),
                Value::Missing => Json::Null,
            };
            obj.insert(c.name.to_string(), cell);
        }
        rows.push(Json::Object(obj));
    }
    let columns: Vec<&str> = table.columns.iter().map(|c| c.name).collect();
    Ok(json!({
        "config": serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))?,
        "columns": columns,
        "rows": rows,
    }))
}

pub fn write_table(table: &Table, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match config.format {
        OutputFormat::Csv => write_csv(table, config, out),
        OutputFormat::Json => {
            let doc = to_json(table, config)?;
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.into()))?;
            writeln!(out)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, SiBase};

    fn cfg(precision: u8) -> RunConfig {
        let mut c = RunConfig::new(Command::Table { n_max: 4 });
        c.precision = Some(precision);
        c
    }

    #[test]
    fn half_even_and_negative_zero() {
        let d = Display::from_config(&cfg(2)).unwrap();
        assert_eq!(d.format(0.125, Kind::Plain), "0.12");
        assert_eq!(d.format(0.375, Kind::Plain), "0.38");
        assert_eq!(d.format(-0.001, Kind::Plain), "0.00");
        assert_eq!(d.format(-0.5, Kind::Plain), "-0.50");
    }

    #[test]
    fn degrees_and_si() {
        let mut c = RunConfig::new(Command::Limit { r: 0.0, x: 1.0 });
        c.degrees = true;
        c.precision = Some(3);
        c.si_base = Some(SiBase {
            v_nom: 100e3,
            s_base: 100e6,
        });
        let d = Display::from_config(&c).unwrap();
        assert_eq!(d.format(std::f64::consts::FRAC_PI_2, Kind::Angle), "90.000");
        assert_eq!(d.format(0.5, Kind::Power), "50000000.000");
        assert_eq!(d.format(0.4, Kind::Impedance), "40.000");
        assert_eq!(d.format(0.4, Kind::Plain), "0.400");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec![
            col("n", Kind::Plain),
            col("status", Kind::Plain),
            col("v", Kind::Plain),
        ]);
        t.push(vec![
            Value::Int(4),
            Value::Text("ok".into()),
            Value::Num(1.0),
        ]);
        t.push(vec![
            Value::Int(5),
            Value::Text("a,b".into()),
            Value::Missing,
        ]);
        let mut buf = Vec::new();
        write_csv(&t, &cfg(4), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,status,v\n4,ok,1.0000\n5,\"a,b\",\n"
        );
    }
}
