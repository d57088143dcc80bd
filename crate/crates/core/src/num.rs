//! Canonical decimal formatting for coordinates and sizes.

/// Base-10 with at most two decimals, trailing zeros and `-0` removed.
pub fn fmt_num(v: f64) -> String {
    let mut s = format!("{v:.2}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Parses a plain decimal (optional sign, digits, optional fraction).
///
/// Exponents, `inf` and `nan` are rejected so the accepted language is the
/// one [`fmt_num`] produces plus arbitrary precision.
pub fn parse_num(s: &str) -> Option<f64> {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let ok = match frac {
        Some(f) => (digits(int) || int.is_empty()) && digits(f),
        None => digits(int),
    };
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_trailing_zeros() {
        assert_eq!(fmt_num(100.0), "100");
        assert_eq!(fmt_num(1.5), "1.5");
        assert_eq!(fmt_num(1.25), "1.25");
        assert_eq!(fmt_num(0.004), "0");
        assert_eq!(fmt_num(-0.001), "0");
        assert_eq!(fmt_num(-2.1), "-2.1");
        assert_eq!(fmt_num(12.345678), "12.35");
    }

    #[test]
    fn hundredths_roundtrip_exactly() {
        for k in -20_000i64..20_000 {
            let v = k as f64 / 100.0;
            assert_eq!(parse_num(&fmt_num(v)), Some(v), "{k}");
        }
    }

    #[test]
    fn rejects_non_plain_numbers() {
        for bad in ["", "-", "1e3", "inf", "NaN", "1.", "+1", "0x10", "1.2.3", " 1"] {
            assert_eq!(parse_num(bad), None, "{bad:?}");
        }
        assert_eq!(parse_num(".5"), Some(0.5));
    }
}
