//! Scalar abstraction for the numeric core.
//!
//! Everything geometric in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. The CLI pipeline and the on-disk weight
//! format run at `f64`; feature tensors are exchanged as `f32` and both
//! instantiations are exercised by the test suite.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Copy + Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants and config values.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
