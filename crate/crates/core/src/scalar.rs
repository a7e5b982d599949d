//! Scalar abstraction for the numeric kernels.
//!
//! Everything that does arithmetic (model forward/backward, losses, the
//! Bradley-Terry fit) is generic over [`Real`] so the same code runs in `f32`
//! or `f64`. The pipeline and all file formats use `f64`.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by every kernel in this crate.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` (how configs and RNG draws enter
    /// generic code).
    fn from_f64_c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts into any Real")
    }

    /// Conversion back to `f64` for reports and serialization.
    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("any Real converts into f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + std::iter::Sum
        + std::fmt::Debug
        + Send
        + Sync
        + 'static
{
}

/// Logistic sigmoid, stable on both tails.
pub fn sigmoid<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

/// `ln(1 + exp(x))` without overflow for large `x`.
pub fn softplus<R: Real>(x: R) -> R {
    if x > R::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log sigmoid(x) = -softplus(-x)`.
pub fn log_sigmoid<R: Real>(x: R) -> R {
    -softplus(-x)
}
