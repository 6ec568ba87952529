//! Deterministic JSON and CSV output.
//!
//! Floats carry 17 significant digits (trailing zeros dropped), which is
//! enough for every `f64` to parse back to the same bits.

use std::io::{self, Write};

use serde::Serialize;

/// `x` with 17 significant digits; positional notation for moderate
/// magnitudes, exponent form otherwise.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..=16).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            let trimmed = s.trim_end_matches('0');
            s = if trimmed.ends_with('.') {
                format!("{trimmed}0")
            } else {
                trimmed.to_string()
            };
        } else {
            s.push_str(".0");
        }
        s
    } else {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

struct Formatter;

impl serde_json::ser::Formatter for Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// JSON followed by a newline.
pub fn json<T: Serialize>(report: &T) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Formatter);
    report.serialize(&mut ser).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV with a header row; every cell is already rendered to text.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> io::Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(io::Error::other)?;
    for row in rows {
        writer.write_record(row).map_err(io::Error::other)?;
    }
    writer
        .into_inner()
        .map_err(|e| io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            1.0,
            -2.5,
            0.1,
            std::f64::consts::SQRT_2,
            1.0 / 3.0,
            1e-7,
            6.02214076e23,
            123456789.0,
            f64::MIN_POSITIVE,
            f64::MAX,
        ] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(1.0), "1.0");
        assert_eq!(format_f64(std::f64::consts::SQRT_2), "1.4142135623730951");
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_f64(1e20), "1e20");
    }

    #[test]
    fn json_uses_formatter_and_nulls_non_finite() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: f64,
            c: Vec<f64>,
        }
        let bytes = json(&R {
            a: 0.1,
            b: f64::INFINITY,
            c: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\"a\":0.10000000000000001,\"b\":null,\"c\":[1.0,2.0]}\n"
        );
    }

    #[test]
    fn csv_has_header() {
        let bytes = csv(&["i", "x"], &[vec!["0".into(), "1.5".into()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "i,x\n0,1.5\n");
    }
}
