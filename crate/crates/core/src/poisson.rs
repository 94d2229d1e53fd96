//! Poisson tensors, brackets, Hamiltonian vector fields and the structural
//! checks (Jacobi identity, Casimirs, Lie brackets of vector fields).
//!
//! Sign conventions: on `T*R^n` with coordinates `(q, p)` the tensor is
//! `[[0, I], [-I, 0]]`, so `X_H = B dH` gives `q̇ = ∂H/∂p`, `ṗ = -∂H/∂q`.
//! On `so(3)*` the minus bracket `{f, g}(μ) = -μ·(∇f × ∇g)` is used.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::field::{MatrixFn, ScalarField, VectorField};
use crate::scalar::{max_of, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureKind {
    CanonicalSymplectic,
    LiePoisson,
    Custom,
}

/// An antisymmetric two-tensor field `x ↦ B(x)` on `R^dim`.
#[derive(Clone)]
pub struct PoissonStructure<T: Real> {
    dim: usize,
    tensor: Arc<MatrixFn<T>>,
    kind: StructureKind,
    casimirs: Vec<ScalarField<T>>,
}

impl<T: Real> fmt::Debug for PoissonStructure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonStructure")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("casimirs", &self.casimirs.len())
            .finish()
    }
}

/// `[[0, I], [-I, 0]]` of size `2n`.
pub fn canonical_matrix<T: Real>(n: usize) -> DMatrix<T> {
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        b[(i, n + i)] = T::one();
        b[(n + i, i)] = -T::one();
    }
    b
}

/// `B(μ)_ij = -ε_ijk μ_k`.
pub fn lie_poisson_so3_matrix<T: Real>(mu: &DVector<T>) -> DMatrix<T> {
    let (a, b, c) = (mu[0], mu[1], mu[2]);
    let z = T::zero();
    DMatrix::from_row_slice(3, 3, &[z, -c, b, c, z, -a, -b, a, z])
}

impl<T: Real> PoissonStructure<T> {
    pub fn custom(dim: usize, tensor: impl Fn(&DVector<T>) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            tensor: Arc::new(tensor),
            kind: StructureKind::Custom,
            casimirs: Vec::new(),
        }
    }

    /// Canonical structure on `T*R^n = R^{2n}`.
    pub fn canonical(n: usize) -> Self {
        let b = canonical_matrix(n);
        Self {
            dim: 2 * n,
            tensor: Arc::new(move |_| b.clone()),
            kind: StructureKind::CanonicalSymplectic,
            casimirs: Vec::new(),
        }
    }

    /// Minus Lie-Poisson structure on `so(3)*` with Casimir `|μ|²`.
    pub fn lie_poisson_so3() -> Self {
        let casimir = ScalarField::new(3, |x: &DVector<T>| x.norm_squared()).with_gradient(|x| x * T::lit(2.0));
        Self {
            dim: 3,
            tensor: Arc::new(|x| lie_poisson_so3_matrix(x)),
            kind: StructureKind::LiePoisson,
            casimirs: vec![casimir],
        }
    }

    pub fn with_kind(mut self, kind: StructureKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_casimir(mut self, c: ScalarField<T>) -> Self {
        self.casimirs.push(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn casimirs(&self) -> &[ScalarField<T>] {
        &self.casimirs
    }

    pub fn tensor(&self, x: &DVector<T>) -> DMatrix<T> {
        (self.tensor)(x)
    }

    /// `B♯(x) α`.
    pub fn sharp(&self, x: &DVector<T>, alpha: &DVector<T>) -> DVector<T> {
        self.tensor(x) * alpha
    }
}

/// `{f, g}(x) = df(x)ᵀ B(x) dg(x)`.
pub fn bracket_at<T: Real>(b: &PoissonStructure<T>, f: &ScalarField<T>, g: &ScalarField<T>, x: &DVector<T>) -> T {
    f.gradient(x).dot(&(b.tensor(x) * g.gradient(x)))
}

/// The bracket as a new scalar field; its own gradient is a finite difference.
pub fn bracket<T: Real>(b: &PoissonStructure<T>, f: &ScalarField<T>, g: &ScalarField<T>) -> ScalarField<T> {
    let (b, f, g) = (b.clone(), f.clone(), g.clone());
    let step = f.fd_step();
    ScalarField::new(b.dim(), move |x| bracket_at(&b, &f, &g, x)).with_fd_step(step)
}

/// `X_H = B♯ dH`.
pub fn hamiltonian_field<T: Real>(b: &PoissonStructure<T>, h: &ScalarField<T>) -> VectorField<T> {
    let (b, h) = (b.clone(), h.clone());
    let step = h.fd_step();
    VectorField::new(b.dim(), move |x| b.tensor(x) * h.gradient(x)).with_fd_step(step)
}

/// Largest `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|` over the sample points.
pub fn jacobi_residual<T: Real>(
    b: &PoissonStructure<T>,
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    h: &ScalarField<T>,
    points: &[DVector<T>],
) -> T {
    let t1 = bracket(b, f, &bracket(b, g, h));
    let t2 = bracket(b, g, &bracket(b, h, f));
    let t3 = bracket(b, h, &bracket(b, f, g));
    points
        .iter()
        .map(|x| (t1.value(x) + t2.value(x) + t3.value(x)).abs())
        .fold(T::zero(), max_of)
}

/// Jacobi residual over all triples of coordinate functions.
pub fn coordinate_jacobi_residual<T: Real>(b: &PoissonStructure<T>, points: &[DVector<T>], fd_step: T) -> T {
    let n = b.dim();
    let coords: Vec<ScalarField<T>> = (0..n)
        .map(|i| ScalarField::coordinate(n, i).with_fd_step(fd_step))
        .collect();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                worst = max_of(worst, jacobi_residual(b, &coords[i], &coords[j], &coords[k], points));
            }
        }
    }
    worst
}

/// Largest `|B(x) + B(x)ᵀ|` over the points.
pub fn antisymmetry_residual<T: Real>(b: &PoissonStructure<T>, points: &[DVector<T>]) -> T {
    points
        .iter()
        .map(|x| crate::pointlin::antisymmetry_defect(&b.tensor(x)))
        .fold(T::zero(), max_of)
}

/// `[X, Y](x) = JY(x) X(x) - JX(x) Y(x)`.
pub fn lie_bracket<T: Real>(x: &VectorField<T>, y: &VectorField<T>) -> VectorField<T> {
    let (xf, yf) = (x.clone(), y.clone());
    VectorField::new(x.dim(), move |p| {
        yf.jacobian(p) * xf.value(p) - xf.jacobian(p) * yf.value(p)
    })
}

/// Largest `|B(x) dC(x)|`; zero for a Casimir.
pub fn casimir_residual<T: Real>(b: &PoissonStructure<T>, c: &ScalarField<T>, points: &[DVector<T>]) -> T {
    points
        .iter()
        .map(|x| b.sharp(x, &c.gradient(x)).norm())
        .fold(T::zero(), max_of)
}

/// Rigid-body energy `Σ μ_i² / (2 I_i)` on `so(3)*`.
pub fn rigid_body_hamiltonian<T: Real>(inertia: [T; 3]) -> ScalarField<T> {
    let half = T::lit(0.5);
    ScalarField::new(3, move |m| {
        (0..3).fold(T::zero(), |acc, i| acc + m[i] * m[i] * half / inertia[i])
    })
    .with_gradient(move |m| DVector::from_fn(3, |i, _| m[i] / inertia[i]))
}
