//! Reader and writer for the classic Solomon VRPTW text layout.
//!
//! ```text
//! R101
//!
//! VEHICLE
//! NUMBER     CAPACITY
//!   25         200
//!
//! CUSTOMER
//! CUST NO.  XCOORD.  YCOORD.  DEMAND  READY TIME  DUE DATE  SERVICE TIME
//!
//!     0      35       35        0        0         230         0
//!     1      41       49       10      161         171        10
//! ```

use std::fmt::Write as _;

use super::instance::{Instance, Node};
use crate::error::{Error, Result};

const BUILTIN: &[(&str, &str)] = &[
    ("R101", include_str!("../../data/solomon/R101.txt")),
    ("C101", include_str!("../../data/solomon/C101.txt")),
    ("RC101", include_str!("../../data/solomon/RC101.txt")),
];

/// Names of the Solomon instances bundled with the crate.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

/// Loads a bundled Solomon instance by (case-insensitive) name.
pub fn builtin(name: &str) -> Result<Instance> {
    let text = BUILTIN
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown built-in instance '{name}'")))?;
    parse_solomon(text)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn numbers(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("'{tok}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(parse_err(line_no, format!("expected {expected} fields, found {}", vals.len())));
    }
    Ok(vals)
}

fn as_count(line_no: usize, v: f64, what: &str) -> Result<u64> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(parse_err(line_no, format!("{what} must be a nonnegative integer, got {v}")));
    }
    Ok(v as u64)
}

pub fn parse_solomon(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut expect = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of input, expected {what}")))
    };

    let (_, name) = expect("instance name")?;
    let name = name.to_string();

    let (ln, l) = expect("VEHICLE section")?;
    if !l.eq_ignore_ascii_case("VEHICLE") {
        return Err(parse_err(ln, format!("expected 'VEHICLE', found '{l}'")));
    }
    let (ln, l) = expect("vehicle header")?;
    if !l.to_ascii_uppercase().starts_with("NUMBER") {
        return Err(parse_err(ln, format!("expected 'NUMBER CAPACITY' header, found '{l}'")));
    }
    let (ln, l) = expect("vehicle number and capacity")?;
    let v = numbers(ln, l, 2)?;
    let fleet = as_count(ln, v[0], "vehicle number")? as usize;
    let capacity = as_count(ln, v[1], "capacity")?;
    let capacity = u32::try_from(capacity).map_err(|_| parse_err(ln, "capacity too large"))?;

    let (ln, l) = expect("CUSTOMER section")?;
    if !l.eq_ignore_ascii_case("CUSTOMER") {
        return Err(parse_err(ln, format!("expected 'CUSTOMER', found '{l}'")));
    }
    let (ln, l) = expect("customer header")?;
    if !l.to_ascii_uppercase().starts_with("CUST") {
        return Err(parse_err(ln, format!("expected customer table header, found '{l}'")));
    }

    let mut nodes = Vec::new();
    for (ln, l) in lines {
        let v = numbers(ln, l, 7)?;
        let id = as_count(ln, v[0], "customer id")? as usize;
        let demand = as_count(ln, v[3], "demand")?;
        nodes.push(Node {
            id,
            x: v[1],
            y: v[2],
            demand: u32::try_from(demand).map_err(|_| parse_err(ln, "demand too large"))?,
            ready: v[4],
            due: v[5],
            service: v[6],
        });
    }
    if nodes.is_empty() {
        return Err(parse_err(0, "customer table is empty"));
    }
    Instance::new(name, nodes, capacity, fleet)
}

/// Writes an instance back in Solomon layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_solomon(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}\n\nVEHICLE\nNUMBER     CAPACITY", inst.name());
    let _ = writeln!(out, "{:>4}{:>13}\n", inst.fleet(), inst.capacity());
    let _ = writeln!(out, "CUSTOMER");
    let _ = writeln!(
        out,
        "CUST NO.   XCOORD.    YCOORD.    DEMAND   READY TIME   DUE DATE   SERVICE TIME\n"
    );
    for n in inst.nodes() {
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            n.id, n.x, n.y, n.demand, n.ready, n.due, n.service
        );
    }
    out
}
