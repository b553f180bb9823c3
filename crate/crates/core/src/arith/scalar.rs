use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use super::ArithError;

/// Exact integer coefficient type for the decision procedure. Fixed-width
/// implementations report overflow instead of wrapping.
pub trait Scalar:
    Clone
    + Ord
    + Hash
    + Debug
    + Display
    + Zero
    + One
    + Signed
    + Integer
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + Send
    + Sync
    + 'static
{
    fn from_i128(v: i128) -> Option<Self>;
    fn to_i128(&self) -> Option<i128>;
}

impl Scalar for i64 {
    fn from_i128(v: i128) -> Option<Self> {
        i64::try_from(v).ok()
    }
    fn to_i128(&self) -> Option<i128> {
        Some(*self as i128)
    }
}

impl Scalar for i128 {
    fn from_i128(v: i128) -> Option<Self> {
        Some(v)
    }
    fn to_i128(&self) -> Option<i128> {
        Some(*self)
    }
}

impl Scalar for BigInt {
    fn from_i128(v: i128) -> Option<Self> {
        Some(BigInt::from(v))
    }
    fn to_i128(&self) -> Option<i128> {
        ToPrimitive::to_i128(self)
    }
}

pub(crate) fn add<T: Scalar>(a: &T, b: &T) -> Result<T, ArithError> {
    a.checked_add(b).ok_or(ArithError::Overflow)
}

pub(crate) fn sub<T: Scalar>(a: &T, b: &T) -> Result<T, ArithError> {
    a.checked_sub(b).ok_or(ArithError::Overflow)
}

pub(crate) fn mul<T: Scalar>(a: &T, b: &T) -> Result<T, ArithError> {
    a.checked_mul(b).ok_or(ArithError::Overflow)
}

pub(crate) fn neg<T: Scalar>(a: &T) -> Result<T, ArithError> {
    sub(&T::zero(), a)
}

pub(crate) fn lift<T: Scalar>(v: i128) -> Result<T, ArithError> {
    T::from_i128(v).ok_or(ArithError::Overflow)
}

/// `⌈a / b⌉` for `b > 0`.
pub(crate) fn div_ceil<T: Scalar>(a: &T, b: &T) -> Result<T, ArithError> {
    neg(&neg(a)?.div_floor(b))
}
