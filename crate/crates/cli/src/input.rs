//! Input files and command-line value parsing.
//!
//! A map file holds `key = value` lines; `#` starts a comment:
//!
//! ```text
//! mode = real          # or complex
//! basis = standard
//! row = 1 0 0
//! row = 0 0.5 0
//! row = 0 0 0.3333333333333333
//! ```
//!
//! In complex mode every entry is a `re,im` pair, e.g. `row = 1,0 0,0.5 0,0`.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use sl2geo::algebra::{Mat3, SelfAdjointMap, Vec3};

/// Bad user input; reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn bad(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhiInput {
    Real(Mat3<f64>),
    Complex(Mat3<Complex64>),
}

fn number(s: &str) -> Result<f64, InputError> {
    let x: f64 = s.trim().parse().map_err(|_| bad(format!("not a number: {s:?}")))?;
    if !x.is_finite() {
        return Err(bad(format!("not a finite number: {s:?}")));
    }
    Ok(x)
}

fn complex_entry(s: &str) -> Result<Complex64, InputError> {
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(number(re)?, number(im)?)),
        None => Err(bad(format!("complex entries are written re,im: {s:?}"))),
    }
}

pub fn parse_phi(text: &str) -> Result<PhiInput, InputError> {
    let mut mode = "real".to_string();
    let mut rows: Vec<&str> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", n + 1)))?;
        let value = value.trim();
        match key.trim() {
            "mode" => mode = value.to_string(),
            "basis" if value == "standard" => {}
            "basis" => return Err(bad(format!("line {}: unsupported basis {value:?}", n + 1))),
            "row" => rows.push(value),
            k => return Err(bad(format!("line {}: unknown key {k:?}", n + 1))),
        }
    }
    if rows.len() != 3 {
        return Err(bad(format!("expected 3 rows, found {}", rows.len())));
    }
    let entries = |row: &str| -> Vec<String> { row.split_whitespace().map(str::to_string).collect() };
    match mode.as_str() {
        "real" => {
            let mut m = Mat3::zeros();
            for (i, row) in rows.iter().enumerate() {
                let e = entries(row);
                if e.len() != 3 {
                    return Err(bad(format!("row {} has {} entries", i + 1, e.len())));
                }
                for (j, s) in e.iter().enumerate() {
                    m[(i, j)] = number(s)?;
                }
            }
            SelfAdjointMap::new(m).map_err(|e| bad(format!("invalid map: {e}")))?;
            Ok(PhiInput::Real(m))
        }
        "complex" => {
            let mut m = Mat3::zeros();
            for (i, row) in rows.iter().enumerate() {
                let e = entries(row);
                if e.len() != 3 {
                    return Err(bad(format!("row {} has {} entries", i + 1, e.len())));
                }
                for (j, s) in e.iter().enumerate() {
                    m[(i, j)] = complex_entry(s)?;
                }
            }
            SelfAdjointMap::new(m).map_err(|e| bad(format!("invalid map: {e}")))?;
            Ok(PhiInput::Complex(m))
        }
        other => Err(bad(format!("unknown mode {other:?}"))),
    }
}

pub fn load_phi(path: &Path) -> Result<PhiInput, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse_phi(&text)
}

/// Comma-separated reals.
pub fn reals(s: &str, n: usize, what: &str) -> Result<Vec<f64>, InputError> {
    let v: Vec<f64> = s.split(',').map(number).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(bad(format!("{what} needs {n} comma-separated values, got {}", v.len())));
    }
    Ok(v)
}

/// `a,b,c`, each component either `x` or `re:im`.
pub fn complex_vector(s: &str) -> Result<Vec3<Complex64>, InputError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(bad(format!("--z0 needs 3 comma-separated components, got {}", parts.len())));
    }
    let mut v = Vec3::zeros();
    for (i, p) in parts.iter().enumerate() {
        v[i] = match p.split_once(':') {
            Some((re, im)) => Complex64::new(number(re)?, number(im)?),
            None => Complex64::new(number(p)?, 0.0),
        };
    }
    Ok(v)
}

pub fn real_vector(s: &str) -> Result<Vec3<f64>, InputError> {
    let v = reals(s, 3, "--z0")?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

/// Loop file: one complex time per line as `re,im`; the first and last vertex must coincide.
pub fn load_loop(path: &Path) -> Result<Vec<Complex64>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let v: Vec<Complex64> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(complex_entry)
        .collect::<Result<_, _>>()?;
    if v.len() < 3 {
        return Err(bad("a loop needs at least 3 vertices"));
    }
    if v[0] != v[v.len() - 1] {
        return Err(bad("loop is not closed: first and last vertex differ"));
    }
    Ok(v)
}
