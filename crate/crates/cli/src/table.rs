//! CSV emission with fixed-precision floats.

use std::fmt::Write as _;

/// Significant digits for floats in CSV output.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` like C's `%.{digits}g`: fixed notation for decimal exponents
/// in `[-4, digits)`, scientific otherwise, trailing zeros removed.
pub fn fmt_g(x: f64, digits: usize) -> String {
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
    // Round first, then read the exponent off the rounded value.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn num(x: f64) -> String {
    fmt_g(x, SIG_DIGITS)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV document: comment header, column header, rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(comments: &[String], columns: &[&str]) -> Self {
        let mut text = String::new();
        for c in comments {
            text.push_str(c);
            text.push('\n');
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{}", f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.5, "0.5"),
            (0.480625, "0.480625"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (123456.0, "123456"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (0.0001234, "0.0001234"),
            (1e12, "1e+12"),
            (999999999999.5, "1e+12"),
            (-0.25, "-0.25"),
            (0.0, "0"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x, 12), want, "{x}");
        }
    }

    proptest! {
        #[test]
        fn keeps_twelve_significant_digits(x in -1e6..1e6f64) {
            let s = fmt_g(x, 12);
            let back: f64 = s.parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["# a".into()], &["x", "y"]);
        c.row([num(0.5), opt(None)]);
        assert_eq!(c.finish(), "# a\nx,y\n0.5,\n");
    }
}
