//! Numeric formatting and CSV emission. All CSVs are UTF-8, comma separated,
//! with a header row and `%.12g`-style numbers, so identical runs produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

const SIG: i32 = 12;

/// `printf("%.12g", x)`.
pub fn g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // The exponent is taken after rounding to SIG digits, as C does.
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Empty cell for an undefined value.
pub fn opt(x: Option<f64>) -> String {
    x.map(g).unwrap_or_default()
}

/// Buffered CSV writer with a fixed header.
pub struct Csv {
    out: BufWriter<File>,
    cols: usize,
}

impl Csv {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, cols: header.len() })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.cols);
        writeln!(self.out, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_c_printf_g12() {
        // Reference strings from C's printf("%.12g").
        let cases = [
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2f64.sqrt() * 0.25, "0.353553390593"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-2.5e-7, "-2.5e-07"),
            (100.0, "100"),
            (0.999999999999951, "1"),
            (9.9999999999995e-5, "0.0001"),
            (1e100, "1e+100"),
        ];
        for (x, want) in cases {
            assert_eq!(g(x), want, "x = {x:e}");
        }
    }

    #[test]
    fn non_finite_and_missing() {
        assert_eq!(g(f64::NAN), "nan");
        assert_eq!(g(f64::NEG_INFINITY), "-inf");
        assert_eq!(opt(None), "");
        assert_eq!(opt(Some(0.5)), "0.5");
    }
}
