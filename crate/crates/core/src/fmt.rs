//! Number formatting shared by the CSV and report writers.

/// `%g`-style formatting with `digits` significant digits: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        let m = trim(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{:.*}", decimals, x)).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig(0.1, 9), "0.1");
        assert_eq!(sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(sig(-2.5, 9), "-2.5");
        assert_eq!(sig(123456789.0, 9), "123456789");
        assert_eq!(sig(1234567890.0, 9), "1.23456789e+09");
        assert_eq!(sig(1.5e-7, 9), "1.5e-07");
        assert_eq!(sig(0.000123, 9), "0.000123");
        assert_eq!(sig(9.9999999999, 9), "10");
        assert_eq!(sig(f64::INFINITY, 9), "inf");
    }
}
