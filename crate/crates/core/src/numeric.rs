//! Exact-rational parsing and formatting shared by answer grading and the
//! arithmetic verifier.
//!
//! All values flow through [`num_rational::BigRational`]: GSM8K-style answers
//! are integers or short decimals, and verification must be an exact oracle,
//! so floating point is never used for claimed values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Currency symbols stripped from the front of a numeric literal.
const CURRENCY: &[char] = &['$', '€', '£', '¥'];

/// Parses a numeric literal into an exact rational.
///
/// Accepts an optional sign, leading currency symbol, comma thousands
/// separators, and a decimal fraction, e.g. `-$1,234.50`. A trailing `%` is
/// stripped (the operand keeps its written magnitude). Returns `None` when
/// the text is not a number.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let mut s = text.trim();
    let mut negative = false;
    if let Some(rest) = s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
        negative = true;
        s = rest.trim_start();
    } else if let Some(rest) = s.strip_prefix('+') {
        s = rest.trim_start();
    }
    s = s.trim_start_matches(CURRENCY);
    s = s.strip_suffix('%').unwrap_or(s);
    if s.is_empty() {
        return None;
    }

    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if !is_grouped_digits(int_part) {
        return None;
    }
    if !frac_part.is_empty() && !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac_part.is_empty() && s.ends_with('.') {
        return None;
    }

    let digits: String = int_part.chars().filter(|c| *c != ',').collect();
    if digits.is_empty() {
        return None;
    }
    let mut numer: BigInt = digits.parse().ok()?;
    let mut denom = BigInt::one();
    if !frac_part.is_empty() {
        let frac: BigInt = frac_part.parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        numer = numer * &scale + frac;
        denom = scale;
    }
    if negative {
        numer = -numer;
    }
    Some(BigRational::new(numer, denom))
}

/// Digits with optional well-formed comma grouping ("1,234,567").
fn is_grouped_digits(s: &str) -> bool {
    if s.is_empty() {
        return false;
    }
    if s.contains(',') {
        let mut groups = s.split(',');
        let first = groups.next().unwrap_or("");
        if first.is_empty() || first.len() > 3 || !first.bytes().all(|b| b.is_ascii_digit()) {
            return false;
        }
        groups.all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
    } else {
        s.bytes().all(|b| b.is_ascii_digit())
    }
}

/// Formats a rational exactly: integers as digits, terminating decimals in
/// decimal notation, everything else as `p/q`.
pub fn format_rational(value: &BigRational) -> String {
    format_inner(value, false)
}

/// Formats like [`format_rational`] but groups the integer part with comma
/// thousands separators, matching how chain-of-thought text usually writes
/// large results ("1,000"). Used when splicing recomputed claims back into
/// step text so that repeated rewrites of the same value are byte-stable.
pub fn format_claim(value: &BigRational) -> String {
    format_inner(value, true)
}

fn format_inner(value: &BigRational, grouped: bool) -> String {
    let sign = if value.is_negative() { "-" } else { "" };
    let abs = value.abs();
    if abs.is_integer() {
        return format!("{sign}{}", group_digits(&abs.to_integer().to_string(), grouped));
    }
    if let Some((int_digits, frac_digits)) = terminating_decimal(&abs) {
        return format!("{sign}{}.{frac_digits}", group_digits(&int_digits, grouped));
    }
    format!("{sign}{}/{}", abs.numer(), abs.denom())
}

/// Decimal expansion when the reduced denominator is of the form 2^a * 5^b.
fn terminating_decimal(abs: &BigRational) -> Option<(String, String)> {
    let mut denom = abs.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = abs.numer() * BigInt::from(10u32).pow(places) / abs.denom();
    let digits = scaled.to_string();
    let places = places as usize;
    let (int_digits, frac_digits) = if digits.len() > places {
        let (i, f) = digits.split_at(digits.len() - places);
        (i.to_string(), f.to_string())
    } else {
        ("0".to_string(), format!("{digits:0>places$}"))
    };
    // value is not an integer here, so the fraction never trims to nothing
    Some((int_digits, frac_digits.trim_end_matches('0').to_string()))
}

fn group_digits(digits: &str, grouped: bool) -> String {
    if !grouped || digits.len() <= 3 {
        return digits.to_string();
    }
    let bytes = digits.as_bytes();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let lead = digits.len() % 3;
    if lead > 0 {
        out.push_str(&digits[..lead]);
    }
    for (i, chunk) in bytes[lead..].chunks(3).enumerate() {
        if i > 0 || lead > 0 {
            out.push(',');
        }
        out.push_str(std::str::from_utf8(chunk).expect("ascii digits"));
    }
    out
}

/// Convenience for tests and reporting; exactness is never decided on f64.
pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_plain_integers_and_separators() {
        assert_eq!(parse_rational("1015"), Some(rat(1015, 1)));
        assert_eq!(parse_rational("1,015"), Some(rat(1015, 1)));
        assert_eq!(parse_rational("$1,234,567"), Some(rat(1_234_567, 1)));
        assert_eq!(parse_rational("-42"), Some(rat(-42, 1)));
        assert_eq!(parse_rational("50%"), Some(rat(50, 1)));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("15.625"), Some(rat(15625, 1000)));
        assert_eq!(parse_rational("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_rational("-3.50"), Some(rat(-7, 2)));
    }

    #[test]
    fn rejects_malformed_grouping_and_junk() {
        assert_eq!(parse_rational("1,05"), None);
        assert_eq!(parse_rational("12,34"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(parse_rational("3."), None);
    }

    #[test]
    fn formats_integers_decimals_and_fractions() {
        assert_eq!(format_rational(&rat(1000, 1)), "1000");
        assert_eq!(format_claim(&rat(1000, 1)), "1,000");
        assert_eq!(format_claim(&rat(-1, 1)), "-1");
        assert_eq!(format_rational(&rat(125, 8)), "15.625");
        assert_eq!(format_rational(&rat(1, 3)), "1/3");
        assert_eq!(format_claim(&rat(1_234_567, 1)), "1,234,567");
    }

    #[test]
    fn format_parse_round_trip() {
        for (n, d) in [(1015, 1), (-7, 2), (125, 8), (0, 1), (999_999, 1), (1, 10)] {
            let v = rat(n, d);
            assert_eq!(parse_rational(&format_claim(&v)), Some(v.clone()));
            assert_eq!(parse_rational(&format_rational(&v)), Some(v));
        }
    }

    #[test]
    fn f64_view_is_close() {
        let v = BigRational::from_f64(0.5).unwrap();
        assert!((to_f64(&v) - 0.5).abs() < 1e-15);
    }
}
