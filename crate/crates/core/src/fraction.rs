//! Exact parsing of decimal and percentage tokens.
//!
//! `"30%"`, `"0.3"` and `"3e-1"` all parse to exactly `3/10`, so a later
//! `⌈C·n⌉` never sees binary rounding noise.

use num_bigint::BigInt;
use num_traits::{Pow, ToPrimitive, Zero};

use crate::combinatorics::ExactRational;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parses an unsigned decimal, optionally in exponent form and optionally
/// suffixed with `%` (which divides by 100).
pub fn parse_fraction(input: &str) -> Result<ExactRational> {
    let err = |reason| Error::Parse {
        input: input.to_string(),
        reason,
    };
    let s = input.trim();
    let (s, percent) = match s.strip_suffix('%') {
        Some(rest) => (rest.trim_end(), true),
        None => (s, false),
    };
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| err("malformed exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err("expected an unsigned decimal number"));
    }
    let digits: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| err("no digits"))?;
    let scale = exponent - frac_part.len() as i32 - if percent { 2 } else { 0 };
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        ExactRational::from_integer(digits * ten.pow(scale as u32))
    } else {
        ExactRational::new(digits, ten.pow(scale.unsigned_abs()))
    };
    Ok(value)
}

/// Nearest scalar to an exact rational.
pub fn to_scalar<S: Scalar>(x: &ExactRational) -> S {
    if x.is_zero() {
        return S::zero();
    }
    let f = x.to_f64().unwrap_or(f64::NAN);
    S::lit(f)
}
