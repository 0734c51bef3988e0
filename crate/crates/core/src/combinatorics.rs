//! Binomial coefficients and summation in exact and logarithmic form.
//!
//! Out-of-range binomial arguments (`r < 0` or `r > m`) are zero rather than
//! an error, so a sum over a hypergeometric support stays total at its
//! boundaries.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Reduced arbitrary-precision fraction. `Ratio::new` keeps the numerator
/// and denominator coprime with a positive denominator.
pub type ExactRational = BigRational;

/// `C(m, r)` as an exact integer; zero when `r < 0` or `r > m`.
pub fn binomial_exact(m: u64, r: i64) -> BigUint {
    if r < 0 || r as u64 > m {
        return BigUint::zero();
    }
    let r = r as u64;
    let k = r.min(m - r);
    let mut acc = BigUint::one();
    // acc = C(m - k + i, i) after step i, always an integer
    for i in 1..=k {
        acc *= m - k + i;
        acc /= i;
    }
    acc
}

/// `C(m, r)` as an exact rational (denominator one).
pub fn binomial_rational(m: u64, r: i64) -> ExactRational {
    ExactRational::from_integer(BigInt::from(binomial_exact(m, r)))
}

/// Natural logarithm of a nonnegative real, with `-inf` as exact zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogReal<S> {
    ln: S,
}

impl<S: Scalar> LogReal<S> {
    /// Wraps a logarithm. `-inf` denotes zero.
    pub fn from_ln(ln: S) -> Self {
        debug_assert!(!ln.is_nan(), "LogReal from NaN");
        LogReal { ln }
    }

    /// Logarithm of `x`. Negative inputs are a logic error.
    pub fn from_value(x: S) -> Self {
        debug_assert!(x >= S::zero(), "LogReal of a negative value");
        LogReal { ln: x.ln() }
    }

    pub fn zero() -> Self {
        LogReal {
            ln: S::neg_infinity(),
        }
    }

    pub fn one() -> Self {
        LogReal { ln: S::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.ln == S::neg_infinity()
    }

    pub fn ln(&self) -> S {
        self.ln
    }

    pub fn value(&self) -> S {
        self.ln.exp()
    }

    /// `1 - self`, for values in `[0, 1]`, without forming the difference
    /// of two nearly equal numbers when `self` is small.
    pub fn complement(&self) -> S {
        if self.is_zero() {
            S::one()
        } else {
            -self.ln.exp_m1()
        }
    }
}

impl<S: Scalar> Mul for LogReal<S> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        LogReal {
            ln: self.ln + rhs.ln,
        }
    }
}

impl<S: Scalar> Div for LogReal<S> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "LogReal division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        LogReal {
            ln: self.ln - rhs.ln,
        }
    }
}

impl<S: Scalar> Add for LogReal<S> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        log_sum_exp([self, rhs])
    }
}

impl<S: Scalar> PartialOrd for LogReal<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

/// `ln Σ exp(t)` over the terms, shifted by the maximum so nothing
/// overflows. Zeros are skipped; an empty or all-zero input gives zero.
pub fn log_sum_exp<S, I>(terms: I) -> LogReal<S>
where
    S: Scalar,
    I: IntoIterator<Item = LogReal<S>>,
{
    let terms: Vec<S> = terms
        .into_iter()
        .filter(|t| !t.is_zero())
        .map(|t| t.ln)
        .collect();
    let Some(max) = terms.iter().copied().reduce(S::max) else {
        return LogReal::zero();
    };
    let sum = terms
        .iter()
        .fold(S::zero(), |acc, &t| acc + (t - max).exp());
    LogReal::from_ln(max + sum.ln())
}

// Stirling series corrections B_2j / (2j (2j - 1)).
const STIRLING: [f64; 5] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
];

// With five correction terms the first omitted one, 691/(360360 x^11), is
// below 1.1e-16 for x >= 16.
const STIRLING_MIN: u64 = 16;

/// Sum of the Stirling correction terms at `x >= 16`.
fn stirling_tail<S: Scalar>(x: S) -> S {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut acc = S::zero();
    for &c in STIRLING.iter().rev() {
        acc = acc * inv2 + S::lit(c);
    }
    acc * inv
}

fn half_ln_two_pi<S: Scalar>() -> S {
    (S::lit(2.0) * S::PI()).ln() / S::lit(2.0)
}

/// `ln Γ(x)` for `x > 0`; NaN otherwise.
///
/// Arguments below 16 are shifted upward with `Γ(x + 1) = x Γ(x)` and the
/// Stirling series is applied to the shifted argument. The series truncation
/// error is below `1.1e-16` relative; rounding of the `(x - 1/2) ln x - x`
/// leading terms dominates, at a few ulps of `ln Γ(x)`.
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    if x.is_nan() || x <= S::zero() || x.is_infinite() {
        return S::nan();
    }
    let floor = S::count(STIRLING_MIN);
    let mut z = x;
    let mut shift = S::one();
    while z < floor {
        shift = shift * z;
        z = z + S::one();
    }
    let half = S::lit(0.5);
    (z - half) * z.ln() - z + half_ln_two_pi::<S>() + stirling_tail(z) - shift.ln()
}

/// `ln m!`.
pub fn ln_factorial<S: Scalar>(m: u64) -> S {
    if m < STIRLING_MIN {
        let exact: u64 = (1..=m).product();
        return S::count(exact).ln();
    }
    let x = S::count(m);
    (x + S::lit(0.5)) * x.ln() - x + half_ln_two_pi::<S>() + stirling_tail(x)
}

// C(60, 30) < 2^57, so the multiplicative loop stays inside u128.
const EXACT_LN_BINOMIAL_MAX: u64 = 60;

/// `ln C(m, r)`, exact zero when `r < 0` or `r > m`.
///
/// With `k = min(r, m - r)`, small `m` is evaluated from the exact integer.
/// Otherwise `ln(m! / (m - k)!)` is formed as
/// `k ln m - k - (m - k + 1/2) ln(1 - k/m) + s(m) - s(m - k)`
/// where `s` is the Stirling tail, which avoids subtracting two factorials
/// of magnitude `m ln m`.
pub fn ln_binomial<S: Scalar>(m: u64, r: i64) -> LogReal<S> {
    if r < 0 || r as u64 > m {
        return LogReal::zero();
    }
    let r = r as u64;
    let k = r.min(m - r);
    if k == 0 {
        return LogReal::one();
    }
    if m <= EXACT_LN_BINOMIAL_MAX {
        let mut acc: u128 = 1;
        for i in 1..=k {
            acc = acc * u128::from(m - k + i) / u128::from(i);
        }
        let value = S::from_u128(acc).expect("binomial below 2^57");
        return LogReal::from_ln(value.ln());
    }
    // m > 60 and k <= m / 2 put m - k above the Stirling threshold.
    let mf = S::count(m);
    let kf = S::count(k);
    let rest = S::count(m - k);
    let falling = kf * mf.ln() - kf - (rest + S::lit(0.5)) * (-kf / mf).ln_1p() + stirling_tail(mf)
        - stirling_tail(rest);
    LogReal::from_ln(falling - ln_factorial::<S>(k))
}

/// Natural logarithm of a positive big integer, from its leading 64 bits.
pub fn ln_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 leading bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln` of a nonnegative exact rational as a [`LogReal`]; zero maps to zero.
pub fn ln_rational(x: &ExactRational) -> LogReal<f64> {
    assert!(!x.is_negative(), "ln of a negative rational");
    if x.is_zero() {
        return LogReal::zero();
    }
    let numer = x.numer().magnitude();
    let denom = x.denom().magnitude();
    LogReal::from_ln(ln_big(numer) - ln_big(denom))
}
