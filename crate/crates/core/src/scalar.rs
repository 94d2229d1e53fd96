use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the toolkit is generic over (`f32` or `f64`).
///
/// Everything numeric goes through nalgebra's `RealField`; the extra
/// bounds let us move literal tolerances in and residuals out as `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn nan() -> Self {
        Self::lit(f64::NAN)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn max_of<T: Real>(acc: T, v: T) -> T {
    // NaN poisons the maximum so that it never hides behind a finite value.
    if v.is_nan() || acc.is_nan() {
        T::nan()
    } else if v > acc {
        v
    } else {
        acc
    }
}

pub(crate) trait NanExt {
    fn is_nan(&self) -> bool;
}

impl<T: Real> NanExt for T {
    fn is_nan(&self) -> bool {
        self.partial_cmp(self).is_none()
    }
}
