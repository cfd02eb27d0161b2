//! CSV dialect shared by every table: comma-separated, `.` decimal, LF endings,
//! mandatory header, reals in scientific notation with 10 significant digits.

/// Scientific notation with 10 significant digits, e.g. `1.234567890e-3`.
pub fn sci(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.9e}")
    }
}

/// Parses a field written by [`sci`] (or any plain float).
pub fn parse(field: &str) -> Option<f64> {
    match field.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(sci(0.0), "0.000000000e0");
        assert_eq!(sci(-1.5e-7), "-1.500000000e-7");
        assert_eq!(sci(123456.789), "1.234567890e5");
        assert_eq!(sci(f64::INFINITY), "inf");
        assert_eq!(parse(&sci(0.1)), Some(0.1));
    }
}
