//! Scalar abstraction shared by every probability and reward computation.
//!
//! Beliefs, distributions and the closed-form bonus machinery are written
//! once against [`Scalar`] and instantiated with `f64` for planning, `f32`
//! for compact storage, or [`Exact`] rationals when an identity has to hold
//! with no rounding at all.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Exact rational scalar. `i128` leaves enough headroom for the short
/// belief chains the exact checks run on.
pub type Exact = Ratio<i128>;

pub trait Scalar:
    Num
    + Signed
    + PartialOrd
    + Copy
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + 'static
{
    /// `num / den` built without passing through binary floating point.
    fn ratio(num: i64, den: i64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::zero)
    }

    fn from_count(v: usize) -> Self {
        Self::ratio(v as i64, 1)
    }

    /// Absolute comparison with a tolerance given in `f64` units.
    fn approx_eq(self, other: Self, tol: f64) -> bool {
        (self - other).abs().to_f64_lossy() <= tol
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl Scalar for Exact {
    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn from_f64_lossy(v: f64) -> Self {
        // Decimal rounding at 1e-12 keeps denominators small.
        let scaled = (v * 1e12).round() as i128;
        Ratio::new(scaled, 1_000_000_000_000)
    }
}

/// Parses a decimal literal (`-0.85`, `10`, `1.5e-3`) into an exact ratio
/// of integers and converts it with [`Scalar::ratio`]. Returns `None` when
/// the literal is malformed or its mantissa does not fit in an `i64`.
pub fn parse_decimal<F: Scalar>(text: &str) -> Option<F> {
    let (mantissa_part, exp_part) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], Some(&text[i + 1..])),
        None => (text, None),
    };
    let (negative, digits) = match mantissa_part.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (
            false,
            mantissa_part.strip_prefix('+').unwrap_or(mantissa_part),
        ),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if digits.contains('.') && frac_part.is_empty() {
        return None;
    }
    let mut exp10: i32 = -(frac_part.len() as i32);
    if let Some(e) = exp_part {
        exp10 = exp10.checked_add(e.parse::<i32>().ok()?)?;
    }
    let mut mantissa: i64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        mantissa = mantissa
            .checked_mul(10)?
            .checked_add(c.to_digit(10)? as i64)?;
    }
    if negative {
        mantissa = -mantissa;
    }
    if exp10 >= 0 {
        let scale = 10i64.checked_pow(exp10 as u32)?;
        Some(F::ratio(mantissa.checked_mul(scale)?, 1))
    } else {
        let scale = 10i64.checked_pow((-exp10) as u32)?;
        Some(F::ratio(mantissa, scale))
    }
}
