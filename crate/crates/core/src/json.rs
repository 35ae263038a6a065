//! Byte-stable JSON output: object keys sorted, floats written with 17
//! significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

#[derive(Debug, Clone, Copy)]
pub struct StableFormatter {
    pretty: bool,
    indent: usize,
    has_value: bool,
}

impl StableFormatter {
    fn new(pretty: bool) -> Self {
        Self { pretty, indent: 0, has_value: false }
    }

    fn newline<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        if self.pretty {
            w.write_all(b"\n")?;
            for _ in 0..self.indent {
                w.write_all(b"  ")?;
            }
        }
        Ok(())
    }
}

/// Formats a finite float with 17 significant digits, switching to an
/// exponent outside `1e-5 ..= 1e17`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(1) as usize;
        let s = format!("{v:.decimals$}");
        // log10 can be off by one near powers of ten; re-check the digit count.
        let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
        let significant = digits.trim_start_matches('0').len();
        if significant > 17 && decimals > 1 {
            let d = decimals - (significant - 17);
            return format!("{v:.d$}");
        }
        s
    } else {
        format!("{v:.16e}")
    }
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(if self.pretty { b": " } else { b":" })
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

fn write<T: Serialize + ?Sized>(value: &T, pretty: bool) -> serde_json::Result<Vec<u8>> {
    // Round-trip through Value so every map is a BTreeMap (sorted keys).
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, StableFormatter::new(pretty));
    value.serialize(&mut ser)?;
    if pretty {
        out.push(b'\n');
    }
    Ok(out)
}

pub fn to_stable_vec<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    write(value, false)
}

pub fn to_stable_string_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    write(value, true).map(|b| String::from_utf8(b).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn floats_use_17_significant_digits() {
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(3.0), "3.0000000000000000");
        assert_eq!(format_f64(-2.5e-7), "-2.4999999999999999e-7");
        assert_eq!(format_f64(1e20), "1.0000000000000000e20");
        assert_eq!(format_f64(0.0), "0.0");
        for v in [0.1, 1.0 / 3.0, 12345.678, 9.999999999999999e16, 1e-5, 123456789.0] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn keys_are_sorted() {
        let m: HashMap<&str, f64> = [("b", 1.0), ("a", 2.0), ("c", 0.5)].into_iter().collect();
        let s = String::from_utf8(to_stable_vec(&m).unwrap()).unwrap();
        assert_eq!(s, r#"{"a":2.0000000000000000,"b":1.0000000000000000,"c":0.50000000000000000}"#);
    }

    #[test]
    fn pretty_output_is_parseable() {
        #[derive(Serialize)]
        struct Row {
            z: Vec<u32>,
            a: Option<f64>,
            e: Vec<u8>,
        }
        let s = to_stable_string_pretty(&vec![Row { z: vec![1, 2], a: None, e: vec![] }]).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"z\"").unwrap());
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0]["z"][1], 2);
        assert!(s.contains("\"e\": []"));
    }
}
