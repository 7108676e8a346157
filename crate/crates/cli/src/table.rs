//! Plain-text tables: measures, transport plans, sweep rows, reports.

use std::fmt::Write as _;
use std::path::Path;

use foias_core::invariant::SweepRow;
use foias_core::{EmpiricalMeasure, TransportPlan};

use crate::error::CliError;

/// Digits written for every float stored in a file; enough to round-trip.
pub const FILE_DIGITS: usize = 17;

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let ds: String = mant.chars().filter(|c| *c != '.').collect();
    if exp < -4 || exp >= digits as i32 {
        let frac = ds[1..].trim_end_matches('0');
        let dot = if frac.is_empty() { "" } else { "." };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{}{dot}{frac}e{esign}{:02}", &ds[..1], exp.abs());
    }
    let (int, frac) = if exp >= 0 {
        let split = exp as usize + 1;
        (ds[..split].to_string(), ds[split..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat((-exp - 1) as usize), ds))
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Header row, then one row per atom: coordinates then weight.
pub fn measure_to_string(mu: &EmpiricalMeasure, header: &[String]) -> String {
    let mut s = String::new();
    for h in header {
        s.push_str(h);
        s.push(',');
    }
    s.push_str("weight\n");
    for (p, w) in mu.iter() {
        for c in p {
            s.push_str(&fmt_sig(*c, FILE_DIGITS));
            s.push(',');
        }
        s.push_str(&fmt_sig(w, FILE_DIGITS));
        s.push('\n');
    }
    s
}

/// Column names `x0 … x{dim-1}`.
pub fn plain_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

/// Column names for oldest-first windows: `lag{T}_x0 … lag1_x{k-1}`.
pub fn window_header(horizon: usize, elem_dim: usize) -> Vec<String> {
    (0..horizon).rev().flat_map(|lag| (0..elem_dim).map(move |i| format!("lag{}_x{i}", lag + 1))).collect()
}

/// Parses a measure table. Errors carry the 1-based line and column.
pub fn parse_measure(src: &str, origin: &str) -> Result<EmpiricalMeasure, CliError> {
    let err = |line: usize, column: usize, message: String| CliError::Parse { path: origin.into(), line, column, message };
    let mut lines = src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hl, header)) = lines.next() else {
        return Err(err(1, 1, "empty measure table".into()));
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.len() < 2 || names.last() != Some(&"weight") {
        return Err(err(hl + 1, 1, "header must name the coordinate columns followed by `weight`".into()));
    }
    let dim = names.len() - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (ln, line) in lines {
        let mut col = 1;
        let mut n = 0;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| err(ln + 1, col, format!("`{}` is not a number", field.trim())))?;
            if n < dim {
                coords.push(v);
            } else if n == dim {
                weights.push(v);
            }
            n += 1;
            col += field.chars().count() + 1;
        }
        if n != dim + 1 {
            return Err(err(ln + 1, 1, format!("expected {} fields, found {n}", dim + 1)));
        }
    }
    if weights.is_empty() {
        return Err(err(hl + 1, 1, "measure table has no atoms".into()));
    }
    EmpiricalMeasure::from_unnormalized(dim, coords, weights)
        .map_err(|e| CliError::Usage(format!("{origin}: {e}")))
}

pub fn read_measure(path: &Path) -> Result<EmpiricalMeasure, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_measure(&src, &path.display().to_string())
}

/// `row,col,mass` for every nonzero cell.
pub fn plan_to_string(plan: &TransportPlan) -> String {
    let mut s = String::from("row,col,mass\n");
    for (i, j, m) in plan.entries() {
        let _ = writeln!(s, "{i},{j},{}", fmt_sig(m, FILE_DIGITS));
    }
    s
}

pub fn sweep_to_string(rows: &[SweepRow]) -> String {
    let mut s = String::from("param,input_gap,state_gap,ratio,converged\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_sig(r.param, FILE_DIGITS),
            fmt_sig(r.input_gap, FILE_DIGITS),
            fmt_sig(r.state_gap, FILE_DIGITS),
            fmt_sig(r.ratio, FILE_DIGITS),
            r.converged
        );
    }
    s
}

/// Ordered `key = value` lines.
#[derive(Debug, Default)]
pub struct KvBlock(Vec<(String, String)>);

impl KvBlock {
    pub fn str(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.0.push((key.into(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.str(key, fmt_sig(value, FILE_DIGITS))
    }

    pub fn list(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let v: Vec<String> = values.iter().map(|x| fmt_sig(*x, FILE_DIGITS)).collect();
        self.str(key, v.join(","))
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
