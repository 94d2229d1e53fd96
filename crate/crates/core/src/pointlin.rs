//! Linear algebra of subspaces at a single manifold point.
//!
//! Tangent and cotangent spaces are both identified with `R^n` through the
//! chart, so a covector and a vector are the same column type; the `dual`
//! flag on [`Subspace`] keeps the two from being mixed up.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{max_of, Real};
use crate::tol::LinTol;

/// A linear subspace of `R^n` (tangent) or `(R^n)^*` (cotangent) stored
/// through an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T: Real> {
    ambient_dim: usize,
    basis: DMatrix<T>,
    dual: bool,
}

/// Thin singular value decomposition `m = U diag(σ) Vᵀ`, values descending.
///
/// Computed from the symmetric eigenproblem of `[[0, m], [mᵀ, 0]]`, whose
/// eigenpairs are `±σ` with vectors `(u, ±v)/√2`. nalgebra's bidiagonal SVD
/// loses accuracy on rank-deficient input, the symmetric solver does not.
#[derive(Clone, Debug)]
pub struct ThinSvd<T: Real> {
    pub values: Vec<T>,
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
}

pub fn thin_svd<T: Real>(m: &DMatrix<T>) -> ThinSvd<T> {
    let (n, k) = m.shape();
    let p = n.min(k);
    if p == 0 {
        return ThinSvd {
            values: Vec::new(),
            u: DMatrix::zeros(n, 0),
            v: DMatrix::zeros(k, 0),
        };
    }
    let mut jw = DMatrix::zeros(n + k, n + k);
    jw.view_mut((0, n), (n, k)).copy_from(m);
    jw.view_mut((n, 0), (k, n)).copy_from(&m.transpose());
    let eig = jw.symmetric_eigen();
    let mut order: Vec<usize> = (0..n + k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let root2 = T::lit(std::f64::consts::SQRT_2);
    let top = &order[..p];
    ThinSvd {
        values: top.iter().map(|&i| max_of(eig.eigenvalues[i], T::zero())).collect(),
        u: DMatrix::from_fn(n, p, |r, c| eig.eigenvectors[(r, top[c])] * root2),
        v: DMatrix::from_fn(k, p, |r, c| eig.eigenvectors[(n + r, top[c])] * root2),
    }
}

fn rank_cut<T: Real>(values: &[T], tol: &LinTol<T>) -> T {
    let smax = values.iter().copied().fold(T::zero(), max_of);
    max_of(tol.rank_rel * smax, tol.rank_abs)
}

/// Number of singular values of `m` above the rank threshold.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>, tol: &LinTol<T>) -> usize {
    let svd = thin_svd(m);
    let cut = rank_cut(&svd.values, tol);
    svd.values.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis of the column span of `m`.
pub fn orthonormal_span<T: Real>(m: &DMatrix<T>, tol: &LinTol<T>) -> DMatrix<T> {
    let svd = thin_svd(m);
    let cut = rank_cut(&svd.values, tol);
    let keep = svd.values.iter().filter(|&&s| s > cut).count();
    svd.u.columns(0, keep).into_owned()
}

/// Minimum-norm least-squares solution of `m x = r`, dropping singular
/// values at or below `cutoff`.
pub fn pseudo_solve<T: Real>(m: &DMatrix<T>, r: &DVector<T>, cutoff: T) -> DVector<T> {
    let svd = thin_svd(m);
    let mut x = DVector::zeros(m.ncols());
    for (i, &s) in svd.values.iter().enumerate() {
        if s > cutoff {
            let coeff = svd.u.column(i).dot(r) / s;
            x += svd.v.column(i) * coeff;
        }
    }
    x
}

impl<T: Real> Subspace<T> {
    pub fn zero(ambient_dim: usize, dual: bool) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            dual,
        }
    }

    pub fn full(ambient_dim: usize, dual: bool) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            dual,
        }
    }

    /// Span of the columns of `m`; dependent columns are dropped.
    pub fn from_columns(m: &DMatrix<T>, dual: bool, tol: &LinTol<T>) -> Self {
        Self {
            ambient_dim: m.nrows(),
            basis: orthonormal_span(m, tol),
            dual,
        }
    }

    pub fn span(ambient_dim: usize, vectors: &[DVector<T>], dual: bool, tol: &LinTol<T>) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    got: v.len(),
                    context: "subspace spanning vector",
                });
            }
        }
        let m = DMatrix::from_fn(ambient_dim, vectors.len(), |r, c| vectors[c][r]);
        Ok(Self::from_columns(&m, dual, tol))
    }

    /// Span of coordinate axes, e.g. `coordinate(4, &[1], false)` is `span{e_2}`.
    pub fn coordinate(ambient_dim: usize, axes: &[usize], dual: bool) -> Self {
        let mut basis = DMatrix::zeros(ambient_dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            basis[(a, c)] = T::one();
        }
        Self {
            ambient_dim,
            basis,
            dual,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<T>> {
        (0..self.dim()).map(|c| self.basis.column(c).into_owned()).collect()
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.transpose()
    }

    /// Distance from `v` to the subspace.
    pub fn residual_of(&self, v: &DVector<T>) -> T {
        let proj = &self.basis * (self.basis.transpose() * v);
        (v - proj).norm()
    }

    pub fn contains(&self, v: &DVector<T>, tol: T) -> bool {
        self.residual_of(v) < tol
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: other.ambient_dim,
                context: "subspace ambient dimension",
            });
        }
        if self.dual != other.dual {
            return Err(Error::FlagMismatch);
        }
        Ok(())
    }
}

/// All (co)vectors vanishing on `v`. The result has the opposite flag.
pub fn annihilator<T: Real>(v: &Subspace<T>, tol: &LinTol<T>) -> Subspace<T> {
    let n = v.ambient_dim;
    if v.dim() == 0 {
        return Subspace::full(n, !v.dual);
    }
    if v.dim() == n {
        return Subspace::zero(n, !v.dual);
    }
    let complement = DMatrix::identity(n, n) - v.projector();
    Subspace::from_columns(&complement, !v.dual, tol)
}

/// `|B + B^T|` in the Frobenius norm.
pub fn antisymmetry_defect<T: Real>(b: &DMatrix<T>) -> T {
    (b + b.transpose()).norm()
}

/// `B^sharp(W) = span{B alpha : alpha in W}` for a cotangent subspace `W`.
pub fn sharp_image<T: Real>(b: &DMatrix<T>, w: &Subspace<T>, tol: &LinTol<T>) -> Result<Subspace<T>> {
    let n = w.ambient_dim;
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.nrows(),
            context: "Poisson tensor size",
        });
    }
    if !w.dual {
        return Err(Error::FlagMismatch);
    }
    let defect = antisymmetry_defect(b);
    if defect > tol.antisym * max_of(T::one(), b.norm()) {
        return Err(Error::NotAntisymmetric { norm: defect.as_f64() });
    }
    if w.dim() == 0 {
        return Ok(Subspace::zero(n, false));
    }
    Ok(Subspace::from_columns(&(b * &w.basis), false, tol))
}

pub fn subspace_sum<T: Real>(u: &Subspace<T>, v: &Subspace<T>, tol: &LinTol<T>) -> Result<Subspace<T>> {
    u.check_compatible(v)?;
    let n = u.ambient_dim;
    let joined = DMatrix::from_fn(n, u.dim() + v.dim(), |r, c| {
        if c < u.dim() {
            u.basis[(r, c)]
        } else {
            v.basis[(r, c - u.dim())]
        }
    });
    Ok(Subspace::from_columns(&joined, u.dual, tol))
}

/// `U ∩ V = (U° + V°)°`.
pub fn subspace_intersect<T: Real>(u: &Subspace<T>, v: &Subspace<T>, tol: &LinTol<T>) -> Result<Subspace<T>> {
    u.check_compatible(v)?;
    let sum = subspace_sum(&annihilator(u, tol), &annihilator(v, tol), tol)?;
    Ok(annihilator(&sum, tol))
}

/// Largest distance from a unit basis vector of `u` to `v`.
pub fn inclusion_residual<T: Real>(u: &Subspace<T>, v: &Subspace<T>) -> Result<T> {
    u.check_compatible(v)?;
    Ok(u.basis_vectors()
        .iter()
        .map(|b| v.residual_of(b))
        .fold(T::zero(), max_of))
}

pub fn is_subspace_of<T: Real>(u: &Subspace<T>, v: &Subspace<T>, tol: T) -> Result<bool> {
    Ok(inclusion_residual(u, v)? < tol)
}

/// Sine of the largest principal angle between `u` and `v`; `1` when the
/// dimensions differ.
pub fn subspace_distance<T: Real>(u: &Subspace<T>, v: &Subspace<T>) -> Result<T> {
    u.check_compatible(v)?;
    if u.dim() != v.dim() {
        return Ok(T::one());
    }
    if u.dim() == 0 {
        return Ok(T::zero());
    }
    let n = u.ambient_dim;
    let off = (DMatrix::identity(n, n) - v.projector()) * &u.basis;
    Ok(thin_svd(&off).values.iter().copied().fold(T::zero(), max_of))
}

/// Compares `B♯((B♯(V°))°)` against `V ∩ T_m L` and returns their distance.
pub fn verify_characteristic_identity<T: Real>(
    b: &DMatrix<T>,
    v: &Subspace<T>,
    leaf_tangent: &Subspace<T>,
    tol: &LinTol<T>,
) -> Result<T> {
    if v.dual || leaf_tangent.dual {
        return Err(Error::FlagMismatch);
    }
    let inner = sharp_image(b, &annihilator(v, tol), tol)?;
    let lhs = sharp_image(b, &annihilator(&inner, tol), tol)?;
    let rhs = subspace_intersect(v, leaf_tangent, tol)?;
    subspace_distance(&lhs, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> LinTol<f64> {
        LinTol::default()
    }

    fn canonical4() -> DMatrix<f64> {
        // (q1, q2, p1, p2): B dp_i = ∂q_i, B dq_i = -∂p_i
        let mut b = DMatrix::zeros(4, 4);
        b[(0, 2)] = 1.0;
        b[(1, 3)] = 1.0;
        b[(2, 0)] = -1.0;
        b[(3, 1)] = -1.0;
        b
    }

    fn lie_poisson_at(mu: [f64; 3]) -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, -mu[2], mu[1], mu[2], 0.0, -mu[0], -mu[1], mu[0], 0.0])
    }

    #[test]
    fn annihilator_of_full_and_zero() {
        let full = Subspace::<f64>::full(3, false);
        let ann = annihilator(&full, &tol());
        assert_eq!(ann.dim(), 0);
        assert!(ann.is_dual());
        let zero = Subspace::<f64>::zero(3, false);
        assert_eq!(annihilator(&zero, &tol()).dim(), 3);
    }

    #[test]
    fn annihilator_of_axis() {
        let v = Subspace::<f64>::coordinate(3, &[0], false);
        let ann = annihilator(&v, &tol());
        let expect = Subspace::coordinate(3, &[1, 2], true);
        assert!(subspace_distance(&ann, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn span_rejects_wrong_length() {
        let err = Subspace::<f64>::span(3, &[DVector::from_vec(vec![1.0, 0.0])], false, &tol());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sharp_canonical_dq1() {
        let w = Subspace::coordinate(4, &[0], true);
        let img = sharp_image(&canonical4(), &w, &tol()).unwrap();
        let expect = Subspace::coordinate(4, &[2], false);
        assert!(subspace_distance(&img, &expect).unwrap() < 1e-12);
        let zero = sharp_image(&canonical4(), &Subspace::zero(4, true), &tol()).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn sharp_lie_poisson() {
        let w = Subspace::coordinate(3, &[1], true);
        let img = sharp_image(&lie_poisson_at([0.0, 0.0, 1.0]), &w, &tol()).unwrap();
        let expect = Subspace::coordinate(3, &[0], false);
        assert!(subspace_distance(&img, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn sharp_rejects_symmetric_tensor() {
        let b = DMatrix::<f64>::identity(3, 3);
        let w = Subspace::full(3, true);
        match sharp_image(&b, &w, &tol()) {
            Err(Error::NotAntisymmetric { norm }) => assert!((norm - 2.0 * 3f64.sqrt()).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            sharp_image(&canonical4(), &Subspace::full(4, false), &tol()),
            Err(Error::FlagMismatch)
        );
    }

    #[test]
    fn sum_intersect_inclusion() {
        let e1 = Subspace::<f64>::coordinate(3, &[0], false);
        let e2 = Subspace::coordinate(3, &[1], false);
        assert_eq!(subspace_sum(&e1, &e2, &tol()).unwrap().dim(), 2);

        let a = Subspace::coordinate(3, &[0, 1], false);
        let b = Subspace::coordinate(3, &[1, 2], false);
        let i = subspace_intersect(&a, &b, &tol()).unwrap();
        assert!(subspace_distance(&i, &e2).unwrap() < 1e-12);

        let diag = Subspace::span(3, &[DVector::from_vec(vec![1.0, 1.0, 0.0])], false, &tol()).unwrap();
        assert!(is_subspace_of(&diag, &a, 1e-10).unwrap());
        assert!(!is_subspace_of(&diag, &b, 1e-10).unwrap());
        assert_eq!(
            subspace_sum(&a, &Subspace::coordinate(3, &[0], true), &tol()),
            Err(Error::FlagMismatch)
        );
    }

    #[test]
    fn characteristic_identity_examples() {
        let v = Subspace::coordinate(4, &[0], false);
        let leaf = Subspace::full(4, false);
        assert!(verify_characteristic_identity(&canonical4(), &v, &leaf, &tol()).unwrap() < 1e-12);
        let full = Subspace::full(4, false);
        assert!(verify_characteristic_identity(&canonical4(), &full, &leaf, &tol()).unwrap() < 1e-12);

        let b = lie_poisson_at([0.0, 0.0, 1.0]);
        let leaf = Subspace::coordinate(3, &[0, 1], false);
        let v = Subspace::coordinate(3, &[0], false);
        assert!(verify_characteristic_identity(&b, &v, &leaf, &tol()).unwrap() < 1e-12);
    }

    #[test]
    fn distance_of_unequal_dims_is_one() {
        let a = Subspace::<f64>::coordinate(3, &[0], false);
        let b = Subspace::coordinate(3, &[0, 1], false);
        assert_eq!(subspace_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let tol = LinTol::<f32> {
            rank_rel: 1e-5,
            rank_abs: 1e-6,
            antisym: 1e-5,
        };
        let v = Subspace::<f32>::coordinate(3, &[0], false);
        let ann = annihilator(&v, &tol);
        assert_eq!(ann.dim(), 2);
        assert!(subspace_distance(&annihilator(&ann, &tol), &v).unwrap() < 1e-5);
    }
}
