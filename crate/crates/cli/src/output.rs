//! Text rendering of distance values.

/// Half of an integer count: `"3"` or `"3.5"`.
pub fn halved(raw: u64) -> String {
    if raw.is_multiple_of(2) {
        (raw / 2).to_string()
    } else {
        format!("{}.5", raw / 2)
    }
}

/// Twelve significant digits, trailing zeros trimmed, exponent form for very
/// large or small magnitudes (the `%.12g` convention).
pub fn weight(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let m = trim(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
