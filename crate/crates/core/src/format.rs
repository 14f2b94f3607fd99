//! Number formatting for reports.

/// Formats `x` like C's `%g`: six significant digits, trailing zeros
/// dropped, exponent notation outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (0.000123456789, "0.000123457"),
            (0.0000123456, "1.23456e-05"),
            (-2.5, "-2.5"),
            (99999.95, "99999.9"),
            (999999.5, "1e+06"),
            (1.0 / 3.0, "0.333333"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(sig6(x), want, "{x}");
        }
    }

    #[test]
    fn round_trips_to_six_digits() {
        for x in [0.123456789, 98765.4321, 3.2e-9, 7.77e12] {
            let back: f64 = sig6(x).parse().unwrap();
            assert!((back - x).abs() <= 5e-6 * x.abs());
        }
    }
}
