//! Scalar fields, vector fields and maps on coordinate charts.
//!
//! Each carries an evaluator and an optional analytic derivative; when the
//! derivative is missing it falls back to central differences with step
//! `fd_step * max(1, |x|)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

pub type ScalarFn<T> = dyn Fn(&DVector<T>) -> T + Send + Sync;
pub type VectorFn<T> = dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync;
pub type MatrixFn<T> = dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync;

pub fn default_fd_step<T: Real>() -> T {
    T::lit(1e-5)
}

fn fd_h<T: Real>(step: T, x: &DVector<T>) -> T {
    let s = x.norm();
    step * if s > T::one() { s } else { T::one() }
}

/// Central-difference gradient of `f` at `x` with absolute step `h`.
pub fn central_gradient<T: Real>(f: &ScalarFn<T>, x: &DVector<T>, h: T) -> DVector<T> {
    let two_h = h + h;
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / two_h
    })
}

/// Central-difference jacobian (rows: outputs, columns: inputs).
pub fn central_jacobian<T: Real>(f: &VectorFn<T>, x: &DVector<T>, h: T) -> DMatrix<T> {
    let two_h = h + h;
    let cols: Vec<DVector<T>> = (0..x.len())
        .map(|j| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            (f(&xp) - f(&xm)) / two_h
        })
        .collect();
    let rows = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, x.len(), |r, c| cols[c][r])
}

/// A real-valued function on `R^dim`.
#[derive(Clone)]
pub struct ScalarField<T: Real> {
    dim: usize,
    eval: Arc<ScalarFn<T>>,
    grad: Option<Arc<VectorFn<T>>>,
    fd_step: T,
}

impl<T: Real> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .finish()
    }
}

impl<T: Real> ScalarField<T> {
    pub fn new(dim: usize, eval: impl Fn(&DVector<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            grad: None,
            fd_step: default_fd_step(),
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_fd_step(mut self, step: T) -> Self {
        self.fd_step = step;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fd_step(&self) -> T {
        self.fd_step
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, x: &DVector<T>) -> T {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        match &self.grad {
            Some(g) => g(x),
            None => central_gradient(self.eval.as_ref(), x, fd_h(self.fd_step, x)),
        }
    }

    /// Central-difference gradient with an explicit absolute step, ignoring
    /// any analytic gradient.
    pub fn fd_gradient(&self, x: &DVector<T>, h: T) -> DVector<T> {
        central_gradient(self.eval.as_ref(), x, h)
    }

    /// Drops the analytic gradient so every derivative is a finite difference.
    pub fn without_gradient(mut self) -> Self {
        self.grad = None;
        self
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::new(dim, move |_| c).with_gradient(move |_| DVector::zeros(dim))
    }

    /// `x ↦ x[i]`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        Self::new(dim, move |x| x[i]).with_gradient(move |_| {
            let mut g = DVector::zeros(dim);
            g[i] = T::one();
            g
        })
    }

    /// `x ↦ ½ xᵀ A x + bᵀ x + c` with `A` symmetrized.
    pub fn quadratic(a: DMatrix<T>, b: DVector<T>, c: T) -> Self {
        let dim = b.len();
        let sym = (&a + a.transpose()) * T::lit(0.5);
        let sym2 = sym.clone();
        let b2 = b.clone();
        Self::new(dim, move |x| {
            (x.transpose() * &sym * x)[(0, 0)] * T::lit(0.5) + b.dot(x) + c
        })
        .with_gradient(move |x| &sym2 * x + &b2)
    }

    /// Linear function `x ↦ a·x`.
    pub fn linear(a: DVector<T>) -> Self {
        let dim = a.len();
        Self::quadratic(DMatrix::zeros(dim, dim), a, T::zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let (f2, g2) = (self.clone(), other.clone());
        Self::new(self.dim, move |x| f.value(x) + g.value(x))
            .with_gradient(move |x| f2.gradient(x) + g2.gradient(x))
            .with_fd_step(self.fd_step)
    }

    pub fn scale(&self, k: T) -> Self {
        let (f, f2) = (self.clone(), self.clone());
        Self::new(self.dim, move |x| f.value(x) * k)
            .with_gradient(move |x| f2.gradient(x) * k)
            .with_fd_step(self.fd_step)
    }

    /// Pointwise product with the product-rule gradient.
    pub fn mul(&self, other: &Self) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let (f2, g2) = (self.clone(), other.clone());
        Self::new(self.dim, move |x| f.value(x) * g.value(x))
            .with_gradient(move |x| f2.gradient(x) * g2.value(x) + g2.gradient(x) * f2.value(x))
            .with_fd_step(self.fd_step)
    }

    /// Pullback `f ∘ m` with the chain-rule gradient `Jmᵀ ∇f`.
    pub fn pullback(&self, m: &VectorMap<T>) -> Self {
        let (f, f2, m1, m2) = (self.clone(), self.clone(), m.clone(), m.clone());
        Self::new(m.in_dim(), move |x| f.value(&m1.value(x)))
            .with_gradient(move |x| m2.jacobian(x).transpose() * f2.gradient(&m2.value(x)))
            .with_fd_step(self.fd_step)
    }
}

/// A smooth map `R^in_dim → R^out_dim`.
#[derive(Clone)]
pub struct VectorMap<T: Real> {
    in_dim: usize,
    out_dim: usize,
    eval: Arc<VectorFn<T>>,
    jac: Option<Arc<MatrixFn<T>>>,
    fd_step: T,
}

impl<T: Real> fmt::Debug for VectorMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorMap")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("analytic_jac", &self.jac.is_some())
            .finish()
    }
}

impl<T: Real> VectorMap<T> {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        eval: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            in_dim,
            out_dim,
            eval: Arc::new(eval),
            jac: None,
            fd_step: default_fd_step(),
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_fd_step(mut self, step: T) -> Self {
        self.fd_step = step;
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, |x| x.clone()).with_jacobian(move |_| DMatrix::identity(dim, dim))
    }

    /// `x ↦ A x + b`.
    pub fn affine(a: DMatrix<T>, b: DVector<T>) -> Self {
        let (in_dim, out_dim) = (a.ncols(), a.nrows());
        let a2 = a.clone();
        Self::new(in_dim, out_dim, move |x| &a * x + &b).with_jacobian(move |_| a2.clone())
    }

    pub fn linear(a: DMatrix<T>) -> Self {
        let rows = a.nrows();
        Self::affine(a, DVector::zeros(rows))
    }

    /// Stacks scalar fields into a map `R^dim → R^k`.
    pub fn from_components(dim: usize, comps: Vec<ScalarField<T>>) -> Self {
        let k = comps.len();
        let c1 = comps.clone();
        Self::new(dim, k, move |x| DVector::from_fn(k, |i, _| c1[i].value(x))).with_jacobian(move |x| {
            let mut j = DMatrix::zeros(k, dim);
            for (i, c) in comps.iter().enumerate() {
                j.set_row(i, &c.gradient(x).transpose());
            }
            j
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn fd_step(&self) -> T {
        self.fd_step
    }

    pub fn value(&self, x: &DVector<T>) -> DVector<T> {
        (self.eval)(x)
    }

    pub fn jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        match &self.jac {
            Some(j) => j(x),
            None => self.fd_jacobian(x, fd_h(self.fd_step, x)),
        }
    }

    pub fn fd_jacobian(&self, x: &DVector<T>, h: T) -> DMatrix<T> {
        let j = central_jacobian(self.eval.as_ref(), x, h);
        if j.nrows() == self.out_dim {
            j
        } else {
            DMatrix::zeros(self.out_dim, self.in_dim)
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &VectorMap<T>) -> Self {
        let (a, b, a2, b2) = (self.clone(), other.clone(), self.clone(), other.clone());
        Self::new(self.in_dim, other.out_dim, move |x| b.value(&a.value(x)))
            .with_jacobian(move |x| b2.jacobian(&a2.value(x)) * a2.jacobian(x))
            .with_fd_step(self.fd_step)
    }

    /// Component `i` as a scalar field.
    pub fn component(&self, i: usize) -> ScalarField<T> {
        let (m, m2) = (self.clone(), self.clone());
        ScalarField::new(self.in_dim, move |x| m.value(x)[i])
            .with_gradient(move |x| m2.jacobian(x).row(i).transpose())
            .with_fd_step(self.fd_step)
    }
}

/// A vector field on `R^dim` (a square [`VectorMap`] read as tangent vectors).
#[derive(Clone, Debug)]
pub struct VectorField<T: Real> {
    map: VectorMap<T>,
}

impl<T: Real> VectorField<T> {
    pub fn new(dim: usize, eval: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static) -> Self {
        Self {
            map: VectorMap::new(dim, dim, eval),
        }
    }

    pub fn from_map(map: VectorMap<T>) -> Self {
        assert_eq!(map.in_dim(), map.out_dim(), "vector field must be square");
        Self { map }
    }

    pub fn with_jacobian(self, jac: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        Self {
            map: self.map.with_jacobian(jac),
        }
    }

    pub fn with_fd_step(self, step: T) -> Self {
        Self {
            map: self.map.with_fd_step(step),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| DVector::zeros(dim)).with_jacobian(move |_| DMatrix::zeros(dim, dim))
    }

    pub fn constant(v: DVector<T>) -> Self {
        let dim = v.len();
        Self::new(dim, move |_| v.clone()).with_jacobian(move |_| DMatrix::zeros(dim, dim))
    }

    /// `x ↦ A x`.
    pub fn linear(a: DMatrix<T>) -> Self {
        Self::from_map(VectorMap::linear(a))
    }

    pub fn dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn value(&self, x: &DVector<T>) -> DVector<T> {
        self.map.value(x)
    }

    pub fn jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        self.map.jacobian(x)
    }

    pub fn as_map(&self) -> &VectorMap<T> {
        &self.map
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b, a2, b2) = (self.clone(), other.clone(), self.clone(), other.clone());
        Self::new(self.dim(), move |x| a.value(x) + b.value(x))
            .with_jacobian(move |x| a2.jacobian(x) + b2.jacobian(x))
            .with_fd_step(self.map.fd_step())
    }

    pub fn scale(&self, k: T) -> Self {
        let (a, a2) = (self.clone(), self.clone());
        Self::new(self.dim(), move |x| a.value(x) * k)
            .with_jacobian(move |x| a2.jacobian(x) * k)
            .with_fd_step(self.map.fd_step())
    }
}
