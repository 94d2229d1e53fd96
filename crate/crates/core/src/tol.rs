use crate::scalar::Real;

/// Thresholds for rank and inclusion decisions on point subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinTol<T> {
    /// Singular values below `rank_rel * sigma_max` are treated as zero.
    pub rank_rel: T,
    /// Absolute floor under which a singular value is zero regardless of scale.
    pub rank_abs: T,
    /// Largest accepted `|B + B^T|` (Frobenius) for a Poisson tensor value.
    pub antisym: T,
}

impl<T: Real> Default for LinTol<T> {
    fn default() -> Self {
        Self {
            rank_rel: T::lit(1e-9),
            rank_abs: T::lit(1e-12),
            antisym: T::lit(1e-10),
        }
    }
}

/// All numerical knobs in one place; defaults are tuned for `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    pub lin: LinTol<T>,
    /// Residual threshold for pass/fail decisions.
    pub tol: T,
    /// Relative central-difference step (scaled by `max(1, |x|)`).
    pub fd_step: T,
    pub jacobi_tol: T,
    /// Constraint residual accepted as "on the submanifold".
    pub memb_tol: T,
    /// Gauss-Newton projection target.
    pub project_tol: T,
    pub clamp_tol: T,
    /// Constraint jacobian singular values below this are a rank drop.
    pub singular_tol: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            lin: LinTol::default(),
            tol: T::lit(1e-8),
            fd_step: T::lit(1e-5),
            jacobi_tol: T::lit(1e-5),
            memb_tol: T::lit(1e-8),
            project_tol: T::lit(1e-10),
            clamp_tol: T::lit(1e-6),
            singular_tol: T::lit(1e-8),
        }
    }
}
