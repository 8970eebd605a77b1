use num_bigint::BigInt;

use crate::numeric::ExactReal;

use super::ConvertError;

/// The order-preserving affine map `x -> (x - lo + delta) / span` used to
/// bring inputs strictly inside `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transform {
    pub lo: ExactReal,
    pub hi: ExactReal,
    pub delta: ExactReal,
    /// `(hi - lo) + 2 * delta`.
    pub span: ExactReal,
}

impl Transform {
    pub fn apply(&self, x: &ExactReal) -> ExactReal {
        let shift = &self.delta - &self.lo;
        Affine::new(&shift, &self.span).apply(x)
    }

    /// Maps a unit-interval value back to original units.
    pub fn invert(&self, y: &ExactReal) -> ExactReal {
        &(&(y * &self.span) + &self.lo) - &self.delta
    }
}

/// `x -> (x + shift) / span` with a single reduction per value.
struct Affine {
    shift_num: BigInt,
    shift_den: BigInt,
    span_num: BigInt,
    span_den: BigInt,
}

impl Affine {
    fn new(shift: &ExactReal, span: &ExactReal) -> Self {
        Affine {
            shift_num: shift.numer().clone(),
            shift_den: shift.denom().clone(),
            span_num: span.numer().clone(),
            span_den: span.denom().clone(),
        }
    }

    fn apply(&self, x: &ExactReal) -> ExactReal {
        let num = (x.numer() * &self.shift_den + &self.shift_num * x.denom()) * &self.span_den;
        let den = x.denom() * &self.shift_den * &self.span_num;
        ExactReal::new(num, den).expect("span is positive")
    }
}

/// Maps `values` into `(0, 1)` with `delta = max((hi - lo) / n, 1)`.
pub fn preprocess(values: &[ExactReal]) -> Result<(Vec<ExactReal>, Transform), ConvertError> {
    let (first, rest) = values.split_first().ok_or(ConvertError::EmptyInput)?;
    let (mut lo, mut hi) = (first, first);
    for v in rest {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    let range = hi - lo;
    let n = ExactReal::from_integer(BigInt::from(values.len()));
    let delta = (&range / &n).max(ExactReal::one());
    let span = &range + &(&delta + &delta);
    let transform = Transform {
        lo: lo.clone(),
        hi: hi.clone(),
        delta,
        span,
    };
    let affine = Affine::new(&(&transform.delta - &transform.lo), &transform.span);
    let mapped = values.iter().map(|v| affine.apply(v)).collect();
    Ok((mapped, transform))
}
