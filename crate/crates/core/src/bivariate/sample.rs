//! Paired observations in the open unit square and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations (xᵢ, yᵢ), every coordinate strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn inside(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

impl PairedSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidSample(format!(
                "column lengths differ: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(i) = (0..xs.len()).find(|&i| !(inside(xs[i]) && inside(ys[i]))) {
            return Err(Error::InvalidSample(format!(
                "pair {} = ({}, {}) is outside the open unit square",
                i + 1,
                xs[i],
                ys[i]
            )));
        }
        Ok(Self { xs, ys })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Sample built from the pairs at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            xs: indices.iter().map(|&i| self.xs[i]).collect(),
            ys: indices.iter().map(|&i| self.ys[i]).collect(),
        }
    }

    /// Columns exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in self.pairs() {
            writeln!(out, "{},{}", format_g17(x), format_g17(y))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses CSV with header `x,y`. Errors name the 1-based data row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader
            .headers()
            .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?;
        if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
            return Err(Error::Parse {
                row: 0,
                message: format!("expected header \"x,y\", found {:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
            if record.len() != 2 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let parse = |field: &str| -> Result<f64> {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("invalid number {field:?}"),
                })?;
                if !inside(v) {
                    return Err(Error::Parse {
                        row,
                        message: format!("value {v} is outside (0,1)"),
                    });
                }
                Ok(v)
            };
            xs.push(parse(&record[0])?);
            ys.push(parse(&record[1])?);
        }
        Self::new(xs, ys)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// C's `%.17g`: 17 significant digits, trailing zeros removed, exponent form
/// when the decimal exponent is below −4 or at least 17.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        strip_zeros(format!("{v:.decimals$}"))
    } else {
        let mantissa = strip_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
