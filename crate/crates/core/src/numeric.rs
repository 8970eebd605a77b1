//! Exact rationals and the power-of-two level arithmetic built on them.
//!
//! Every quantity here is exact: a level (scale factor) is always a power of
//! two stored by its exponent, and the key of a real `r` at level `f` is the
//! integer `floor(r * f)`, computed with a shift and one big-integer division.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("exp2_ceil is only defined for positive integers, got {0}")]
    NonPositive(BigInt),
    #[error("{0} is outside the open interval (0, 1)")]
    OutsideUnitInterval(ExactReal),
    #[error("{0} appears twice; equal values have no separating level")]
    EqualValues(ExactReal),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse `{text}`: {reason}")]
    Parse { text: String, reason: &'static str },
}

/// An exact rational number, always kept in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactReal(BigRational);

impl ExactReal {
    pub fn new(numerator: BigInt, denominator: BigInt) -> Result<Self, NumericError> {
        if denominator.is_zero() {
            return Err(NumericError::ZeroDenominator);
        }
        Ok(ExactReal(BigRational::new(numerator, denominator)))
    }

    pub fn from_integer(value: BigInt) -> Self {
        ExactReal(BigRational::from_integer(value))
    }

    pub fn ratio(numerator: i64, denominator: i64) -> Result<Self, NumericError> {
        Self::new(BigInt::from(numerator), BigInt::from(denominator))
    }

    pub fn zero() -> Self {
        ExactReal(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactReal(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// True when `0 < self < 1`.
    pub fn in_unit_interval(&self) -> bool {
        let n = self.numer();
        n.sign() == Sign::Plus && n < self.denom()
    }

    pub fn abs(&self) -> Self {
        ExactReal(self.0.abs())
    }

    /// Exact bit size of the representation (numerator plus denominator).
    pub fn bits(&self) -> u64 {
        self.numer().bits() + self.denom().bits()
    }

    fn check_unit(&self) -> Result<(), NumericError> {
        if self.in_unit_interval() {
            Ok(())
        } else {
            Err(NumericError::OutsideUnitInterval(self.clone()))
        }
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactReal({self})")
    }
}

impl Ord for ExactReal {
    // Cross-multiplication; cheaper than the generic rational comparison.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.numer(), other.numer());
        match a.sign().cmp(&b.sign()) {
            Ordering::Equal => {}
            unequal => return unequal,
        }
        if self.denom() == other.denom() {
            return a.cmp(b);
        }
        (a * other.denom()).cmp(&(b * self.denom()))
    }
}

impl PartialOrd for ExactReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<BigRational> for ExactReal {
    fn from(value: BigRational) -> Self {
        ExactReal(value)
    }
}

impl From<i64> for ExactReal {
    fn from(value: i64) -> Self {
        ExactReal::from_integer(BigInt::from(value))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl<'a> $tr<&'a ExactReal> for &'a ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: &'a ExactReal) -> ExactReal {
                ExactReal((&self.0).$method(&rhs.0))
            }
        }
        impl $tr for ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: ExactReal) -> ExactReal {
                ExactReal(self.0.$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        ExactReal(-self.0)
    }
}

/// Parses `p/q` (integers, optional sign) or a plain decimal such as `-12.375`.
/// Decimals are exact: `k` fractional digits give denominator `10^k`.
impl FromStr for ExactReal {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let err = |reason| NumericError::Parse {
            text: text.to_string(),
            reason,
        };
        if text.is_empty() {
            return Err(err("empty value"));
        }
        if let Some((p, q)) = text.split_once('/') {
            let p = parse_signed_integer(p.trim()).ok_or_else(|| err("bad numerator"))?;
            let q = parse_signed_integer(q.trim()).ok_or_else(|| err("bad denominator"))?;
            if q.is_zero() {
                return Err(err("zero denominator"));
            }
            return ExactReal::new(p, q);
        }

        let (negative, body) = match text.as_bytes()[0] {
            b'-' => (true, &text[1..]),
            b'+' => (false, &text[1..]),
            _ => (false, text),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("no digits"));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err("unexpected character"));
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(|| err("no digits"))?;
        if negative {
            numer = -numer;
        }
        let denom: BigInt = BigInt::from(10u32).pow(frac_part.len() as u32);
        ExactReal::new(numer, denom)
    }
}

fn parse_signed_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::parse_bytes(s.as_bytes(), 10)
}

/// A power-of-two multiplier `2^log2`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScaleFactor {
    log2: u64,
}

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor { log2: 0 };

    pub const fn from_log2(log2: u64) -> Self {
        ScaleFactor { log2 }
    }

    pub const fn log2(self) -> u64 {
        self.log2
    }

    /// Number of bits needed to write the factor itself.
    pub const fn bit_length(self) -> u64 {
        self.log2 + 1
    }

    pub fn value(self) -> BigUint {
        BigUint::one() << self.log2
    }

    pub const fn double(self) -> Self {
        ScaleFactor {
            log2: self.log2 + 1,
        }
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.log2)
    }
}

impl fmt::Debug for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaleFactor(2^{})", self.log2)
    }
}

/// Exponent of the smallest power of two that is `>= m`, for `m >= 1`.
pub(crate) fn ceil_log2(m: &BigUint) -> u64 {
    debug_assert!(!m.is_zero());
    let bits = m.bits();
    // A power of two has exactly one set bit, the top one.
    if m.trailing_zeros() == Some(bits - 1) {
        bits - 1
    } else {
        bits
    }
}

/// Smallest power of two that is at least `m`.
pub fn exp2_ceil(m: &BigInt) -> Result<ScaleFactor, NumericError> {
    if m.sign() != Sign::Plus {
        return Err(NumericError::NonPositive(m.clone()));
    }
    Ok(ScaleFactor::from_log2(ceil_log2(m.magnitude())))
}

/// `floor(r * f)` for `0 < r < 1`; the result lies in `[0, f - 1]`.
pub fn floor_scale(r: &ExactReal, f: ScaleFactor) -> Result<BigUint, NumericError> {
    r.check_unit()?;
    Ok(floor_scale_unchecked(r, f))
}

/// [`floor_scale`] without the range check; callers guarantee `0 < r < 1`.
pub(crate) fn floor_scale_unchecked(r: &ExactReal, f: ScaleFactor) -> BigUint {
    (r.numer().magnitude() << f.log2()) / r.denom().magnitude()
}

/// `floor(1 / |r1 - r2|)` without normalizing the difference.
fn floor_inverse_gap(r1: &ExactReal, r2: &ExactReal) -> BigUint {
    let cross = r1.numer() * r2.denom() - r2.numer() * r1.denom();
    let dens = r1.denom().magnitude() * r2.denom().magnitude();
    dens / cross.magnitude()
}

/// The separating factor `2 * exp2_ceil(floor(1 / |r1 - r2|))`.
///
/// At this level the two values always receive different keys.
pub fn separating_level(r1: &ExactReal, r2: &ExactReal) -> Result<ScaleFactor, NumericError> {
    r1.check_unit()?;
    r2.check_unit()?;
    if r1 == r2 {
        return Err(NumericError::EqualValues(r1.clone()));
    }
    Ok(separating_level_unchecked(r1, r2))
}

pub(crate) fn separating_level_unchecked(r1: &ExactReal, r2: &ExactReal) -> ScaleFactor {
    // |r1 - r2| < 1 inside the unit interval, so the inverse gap is >= 1.
    let m = floor_inverse_gap(r1, r2);
    ScaleFactor::from_log2(ceil_log2(&m)).double()
}

/// Whether the two values share a key at level `l`.
pub fn match_at_level(r1: &ExactReal, r2: &ExactReal, l: ScaleFactor) -> Result<bool, NumericError> {
    Ok(floor_scale(r1, l)? == floor_scale(r2, l)?)
}

/// Key at a coarser level derived from the key at a finer one.
pub(crate) fn coarsen(key: &BigUint, from: ScaleFactor, to: ScaleFactor) -> BigUint {
    debug_assert!(to <= from);
    key >> (from.log2() - to.log2())
}
