use std::fmt::Display;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Number, Value};

use freeprob::measures::Measure;
use freeprob::Rational;

/// A command's output before it is wrapped with the resolved config.
pub struct Report {
    pub result: Value,
    pub diagnostics: Value,
    /// CSV rendering, for commands that produce grids or sweeps.
    pub csv: Option<String>,
}

/// Floats always carry 17 significant digits.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float parses"))
    } else {
        Value::String(x.to_string())
    }
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

/// An exact integer of any size, as a JSON number.
pub fn integer(n: impl Display) -> Value {
    Value::Number(Number::from_str(&n.to_string()).expect("integer parses"))
}

pub fn rational(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn rationals(rs: &[Rational]) -> Value {
    Value::Array(rs.iter().map(rational).collect())
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": float(z.re), "im": float(z.im) })
}

pub fn measure(m: &Measure) -> Value {
    let atoms: Vec<Value> = m.atoms().iter().map(|&(x, w)| json!([float(x), float(w)])).collect();
    match m.density() {
        Some(d) => json!({
            "atoms": atoms,
            "support": floats(&[d.support().0, d.support().1]),
            "edges": [d.edges().0.as_str(), d.edges().1.as_str()],
            "t": floats(&d.grid()),
            "density": floats(d.samples()),
        }),
        None => json!({ "atoms": atoms }),
    }
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}
