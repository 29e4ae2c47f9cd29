//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar usable throughout the feature, sampling and model code: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal fits scalar")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wei per ether.
pub const WEI_PER_ETH: f64 = 1e18;

/// Converts a wei amount to ether in the target scalar.
#[inline]
pub fn wei_to_eth<F: Scalar>(wei: u128) -> F {
    F::lit(wei as f64 / WEI_PER_ETH)
}

/// Signed variant of [`wei_to_eth`].
#[inline]
pub fn signed_wei_to_eth<F: Scalar>(wei: i128) -> F {
    F::lit(wei as f64 / WEI_PER_ETH)
}

/// `num / den`, or zero when the denominator is zero.
#[inline]
pub fn safe_div<F: Scalar>(num: F, den: F) -> F {
    if den == F::zero() {
        F::zero()
    } else {
        num / den
    }
}
