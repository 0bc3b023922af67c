//! Cubic-oscillator input files: UTF-8, one definition per line,
//! `name = expr` in the power-law grammar (variable `y`), plus an
//! `interval = a, b` line. Blank lines and `#` comments are ignored.
//!
//! ```text
//! # the anharmonic oscillator at n = 3, delta = 1
//! k = 0
//! h = 0
//! f = 0
//! g = 4*y^(3)
//! interval = 0.5, 2.0
//! ```

use std::collections::BTreeMap;
use std::fmt;

use superosc_core::metrisability::CubicOscSpec;
use superosc_core::numkit::expr::{parse_expr, Expr};

#[derive(Debug)]
pub enum ExprFileError {
    MissingEntry(&'static str),
    BadLine { line: usize, msg: String },
    Parse { line: usize, msg: String },
}

impl fmt::Display for ExprFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprFileError::MissingEntry(name) => write!(f, "missing `{name} = ...` line"),
            ExprFileError::BadLine { line, msg } => write!(f, "line {line}: {msg}"),
            ExprFileError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
        }
    }
}

impl std::error::Error for ExprFileError {}

pub struct CubicOscFile {
    pub k: Expr,
    pub h: Expr,
    pub f: Expr,
    pub g: Expr,
    pub interval: (f64, f64),
}

impl CubicOscFile {
    pub fn parse(text: &str) -> Result<Self, ExprFileError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once('=').ok_or(ExprFileError::BadLine {
                line: i + 1,
                msg: "expected `name = value`".into(),
            })?;
            entries.insert(name.trim().to_string(), (i + 1, value.trim().to_string()));
        }
        let take_expr = |name: &'static str| -> Result<Expr, ExprFileError> {
            let (line, src) = entries.get(name).ok_or(ExprFileError::MissingEntry(name))?;
            parse_expr(src).map_err(|e| ExprFileError::Parse {
                line: *line,
                msg: e.to_string(),
            })
        };
        let k = take_expr("k")?;
        let h = take_expr("h")?;
        let f = take_expr("f")?;
        let g = take_expr("g")?;
        let (line, src) = entries
            .get("interval")
            .ok_or(ExprFileError::MissingEntry("interval"))?;
        let parts: Vec<&str> = src.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(ExprFileError::BadLine {
                line: *line,
                msg: "interval needs `a, b`".into(),
            });
        }
        let a: f64 = parts[0].parse().map_err(|_| ExprFileError::BadLine {
            line: *line,
            msg: "bad interval endpoint".into(),
        })?;
        let b: f64 = parts[1].parse().map_err(|_| ExprFileError::BadLine {
            line: *line,
            msg: "bad interval endpoint".into(),
        })?;
        if b <= a || a.is_nan() || b.is_nan() {
            return Err(ExprFileError::BadLine {
                line: *line,
                msg: "interval must satisfy a < b".into(),
            });
        }
        Ok(CubicOscFile {
            k,
            h,
            f,
            g,
            interval: (a, b),
        })
    }

    pub fn spec(&self) -> CubicOscSpec {
        CubicOscSpec::from_exprs(&self.k, &self.h, &self.f, &self.g, "y")
    }
}
