//! Catalog group actions on configuration space, their cotangent lifts,
//! momentum maps, isotropy types, and the reduction checks built on them.
//!
//! Phase coordinates are `(q, p)`; a matrix group element `g` acts by
//! `(q, p) ↦ (g q, g⁻ᵀ p)` and an algebra element `ξ` generates
//! `ξ_P(q, p) = (ξ q, -ξᵀ p)`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::chsys::{FiberMap, Trajectory};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorMap};
use crate::pointlin::{numerical_rank, Subspace};
use crate::poisson::{bracket_at, rigid_body_hamiltonian, PoissonStructure};
use crate::reduce::{
    characteristic_distribution, classify_submanifold, leaf_tangent, reducibility_check, Classification, Distribution,
    DistributionClaims, ReducibilityReport, Submanifold,
};
use crate::sampling::Sampler;
use crate::scalar::{max_of, Real};
use crate::tol::{LinTol, Tolerances};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Rotations of `R²`.
    S1,
    /// Rotations of `R³`.
    SO3,
    /// The one-element group on `R^n`.
    Trivial,
    Product(Box<GroupKind>, Box<GroupKind>),
}

/// A linear matrix group acting on `R^n`, described by a basis of its
/// Lie algebra.
#[derive(Clone, Debug)]
pub struct GroupAction<T: Real> {
    kind: GroupKind,
    config_dim: usize,
    algebra: Vec<DMatrix<T>>,
}

pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(T::zero(), -v[2], v[1], v[2], T::zero(), -v[0], -v[1], v[0], T::zero())
}

fn hat_dyn<T: Real>(v: &Vector3<T>) -> DMatrix<T> {
    DMatrix::from_fn(3, 3, |i, j| hat(v)[(i, j)])
}

impl<T: Real> GroupAction<T> {
    pub fn s1() -> Self {
        let xi = DMatrix::from_row_slice(2, 2, &[T::zero(), -T::one(), T::one(), T::zero()]);
        Self {
            kind: GroupKind::S1,
            config_dim: 2,
            algebra: vec![xi],
        }
    }

    pub fn so3() -> Self {
        let algebra = (0..3)
            .map(|k| {
                let mut e = Vector3::zeros();
                e[k] = T::one();
                hat_dyn(&e)
            })
            .collect();
        Self {
            kind: GroupKind::SO3,
            config_dim: 3,
            algebra,
        }
    }

    pub fn trivial(config_dim: usize) -> Self {
        Self {
            kind: GroupKind::Trivial,
            config_dim,
            algebra: Vec::new(),
        }
    }

    /// `G1 × G2` acting block-diagonally on `R^{n1} × R^{n2}`.
    pub fn product(a: &Self, b: &Self) -> Self {
        let n = a.config_dim + b.config_dim;
        let mut algebra = Vec::with_capacity(a.algebra.len() + b.algebra.len());
        for xi in &a.algebra {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((0, 0), (a.config_dim, a.config_dim)).copy_from(xi);
            algebra.push(m);
        }
        for xi in &b.algebra {
            let mut m = DMatrix::zeros(n, n);
            m.view_mut((a.config_dim, a.config_dim), (b.config_dim, b.config_dim))
                .copy_from(xi);
            algebra.push(m);
        }
        Self {
            kind: GroupKind::Product(Box::new(a.kind.clone()), Box::new(b.kind.clone())),
            config_dim: n,
            algebra,
        }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn config_dim(&self) -> usize {
        self.config_dim
    }

    pub fn phase_dim(&self) -> usize {
        2 * self.config_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra.len()
    }

    pub fn algebra_basis(&self) -> &[DMatrix<T>] {
        &self.algebra
    }

    pub fn algebra_element(&self, coeffs: &[T]) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.config_dim, self.config_dim);
        for (c, xi) in coeffs.iter().zip(&self.algebra) {
            m += xi * *c;
        }
        m
    }

    /// `exp(Σ c_k ξ_k)`.
    pub fn element(&self, coeffs: &[T]) -> DMatrix<T> {
        self.algebra_element(coeffs).exp()
    }

    /// Action of `g` on phase space: `diag(g, g⁻ᵀ)`.
    pub fn lifted_matrix(&self, g: &DMatrix<T>) -> DMatrix<T> {
        let n = self.config_dim;
        let inv_t = g
            .clone()
            .try_inverse()
            .map(|m| m.transpose())
            .unwrap_or_else(|| DMatrix::from_element(n, n, T::nan()));
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(g);
        m.view_mut((n, n), (n, n)).copy_from(&inv_t);
        m
    }

    pub fn act(&self, g: &DMatrix<T>, x: &DVector<T>) -> DVector<T> {
        self.lifted_matrix(g) * x
    }

    /// Matrix of the infinitesimal generator `ξ_P = diag(ξ, -ξᵀ)`.
    pub fn generator_matrix(&self, xi: &DMatrix<T>) -> DMatrix<T> {
        let n = self.config_dim;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(xi);
        m.view_mut((n, n), (n, n)).copy_from(&(-xi.transpose()));
        m
    }

    pub fn generator_field(&self, coeffs: &[T]) -> VectorField<T> {
        VectorField::linear(self.generator_matrix(&self.algebra_element(coeffs)))
    }

    /// Generators of the basis elements, spanning the orbit directions.
    pub fn orbit_distribution(&self) -> Distribution<T> {
        let gens = self
            .algebra
            .iter()
            .map(|xi| VectorField::linear(self.generator_matrix(xi)))
            .collect();
        Distribution::new(self.phase_dim(), gens).with_claims(DistributionClaims {
            poisson: false,
            integrable: true,
            g_invariant: true,
        })
    }

    /// Seeded group elements with algebra coordinates in `[-π, π]`.
    pub fn sample_elements(&self, count: usize, seed: u64) -> Vec<DMatrix<T>> {
        let mut s = Sampler::new(seed);
        (0..count)
            .map(|_| {
                let c: Vec<T> = (0..self.algebra_dim())
                    .map(|_| s.uniform(-std::f64::consts::PI, std::f64::consts::PI))
                    .collect();
                self.element(&c)
            })
            .collect()
    }

    /// Human-readable isotropy type for an isotropy algebra of dimension `d`.
    pub fn isotropy_label(&self, d: usize) -> String {
        match (&self.kind, d) {
            (_, 0) => "trivial".into(),
            (GroupKind::S1, 1) => "S1".into(),
            (GroupKind::SO3, 1) => "SO(2)".into(),
            (GroupKind::SO3, 3) => "SO(3)".into(),
            (_, d) => format!("isotropy-dim-{d}"),
        }
    }
}

pub enum InvariantObject<'a, T: Real> {
    Scalar(&'a ScalarField<T>),
    /// Equivariance `F(g·x) = g·F(x)`.
    FiberMap(&'a FiberMap<T>),
    Submanifold(&'a Submanifold<T>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport<T> {
    pub invariant: bool,
    pub max_residual: T,
}

/// Invariance under the sampled group elements at the sampled points.
/// Points off a submanifold are ignored.
pub fn is_invariant<T: Real>(
    action: &GroupAction<T>,
    object: InvariantObject<'_, T>,
    group_samples: &[DMatrix<T>],
    points: &[DVector<T>],
    tol: &Tolerances<T>,
) -> InvarianceReport<T> {
    let mut worst = T::zero();
    let limit = match object {
        InvariantObject::Submanifold(_) => tol.memb_tol,
        _ => tol.tol,
    };
    for g in group_samples {
        let lg = action.lifted_matrix(g);
        for x in points {
            let gx = &lg * x;
            let r = match &object {
                InvariantObject::Scalar(f) => (f.value(&gx) - f.value(x)).abs(),
                InvariantObject::FiberMap(m) => (m.value(&gx) - &lg * m.value(x)).norm(),
                InvariantObject::Submanifold(w) => {
                    if !w.contains(x, tol) {
                        continue;
                    }
                    w.membership_residual(&gx)
                }
            };
            worst = max_of(worst, r);
        }
    }
    InvarianceReport {
        invariant: worst < limit,
        max_residual: worst,
    }
}

/// `dim g_z = dim g - rank[ξ_1,P(z), ..., ξ_m,P(z)]`.
pub fn isotropy_dim<T: Real>(action: &GroupAction<T>, z: &DVector<T>, tol: &LinTol<T>) -> usize {
    let m = action.algebra_dim();
    if m == 0 {
        return 0;
    }
    let mut cols = DMatrix::zeros(action.phase_dim(), m);
    for (k, xi) in action.algebra.iter().enumerate() {
        cols.set_column(k, &(action.generator_matrix(xi) * z));
    }
    m - numerical_rank(&cols, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub label: String,
    pub isotropy_dim: usize,
    /// Indices into the input point list.
    pub members: Vec<usize>,
}

/// Groups points by isotropy type, in order of first appearance.
pub fn stratify<T: Real>(action: &GroupAction<T>, points: &[DVector<T>], tol: &LinTol<T>) -> Vec<Stratum> {
    let mut strata: Vec<Stratum> = Vec::new();
    for (i, z) in points.iter().enumerate() {
        let d = isotropy_dim(action, z, tol);
        match strata.iter_mut().find(|s| s.isotropy_dim == d) {
            Some(s) => s.members.push(i),
            None => strata.push(Stratum {
                label: action.isotropy_label(d),
                isotropy_dim: d,
                members: vec![i],
            }),
        }
    }
    strata
}

/// The standard momentum map of a cotangent-lifted linear action,
/// `⟨J(q, p), ξ⟩ = pᵀ ξ q`.
#[derive(Clone, Debug)]
pub struct MomentumMap<T: Real> {
    action: GroupAction<T>,
}

impl<T: Real> MomentumMap<T> {
    pub fn new(action: &GroupAction<T>) -> Self {
        Self { action: action.clone() }
    }

    pub fn action(&self) -> &GroupAction<T> {
        &self.action
    }

    pub fn pairing(&self, xi: &DMatrix<T>, x: &DVector<T>) -> T {
        let n = self.action.config_dim;
        let (q, p) = (x.rows(0, n), x.rows(n, n));
        p.dot(&(xi * q))
    }

    pub fn value(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(
            self.action.algebra_dim(),
            self.action.algebra.iter().map(|xi| self.pairing(xi, x)),
        )
    }

    /// Component `J_ξ` with its analytic gradient `(ξᵀ p, ξ q)`.
    pub fn component_field(&self, xi: &DMatrix<T>) -> ScalarField<T> {
        let n = self.action.config_dim;
        let (a, b) = (xi.clone(), xi.clone());
        let this = self.clone();
        ScalarField::new(2 * n, move |x| this.pairing(&a, x)).with_gradient(move |x| {
            let (q, p) = (x.rows(0, n), x.rows(n, n));
            let gq = b.transpose() * p;
            let gp = &b * q;
            DVector::from_fn(2 * n, |i, _| if i < n { gq[i] } else { gp[i - n] })
        })
    }

    pub fn components(&self) -> Vec<ScalarField<T>> {
        self.action.algebra.iter().map(|xi| self.component_field(xi)).collect()
    }

    /// `max |dJ_k · X_H|` with `X_H = B∇H`.
    pub fn noether_residual(&self, b: &PoissonStructure<T>, h: &ScalarField<T>, points: &[DVector<T>]) -> T {
        let comps = self.components();
        let mut worst = T::zero();
        for x in points {
            let xh = b.sharp(x, &h.gradient(x));
            for c in &comps {
                worst = max_of(worst, c.gradient(x).dot(&xh).abs());
            }
        }
        worst
    }

    /// `max |J_ξ(g·x) - J_{g⁻¹ξg}(x)|` over basis elements, group samples
    /// and points.
    pub fn equivariance_residual(&self, group_samples: &[DMatrix<T>], points: &[DVector<T>]) -> T {
        let mut worst = T::zero();
        for g in group_samples {
            let ginv = match g.clone().try_inverse() {
                Some(m) => m,
                None => return T::nan(),
            };
            let lg = self.action.lifted_matrix(g);
            for xi in &self.action.algebra {
                let conj = &ginv * xi * g;
                for x in points {
                    let r = self.pairing(xi, &(&lg * x)) - self.pairing(&conj, x);
                    worst = max_of(worst, r.abs());
                }
            }
        }
        worst
    }

    /// Largest change of any component along a trajectory.
    pub fn drift(&self, traj: &Trajectory<T>) -> T {
        let Some(first) = traj.states.first() else {
            return T::zero();
        };
        let j0 = self.value(first);
        traj.states
            .iter()
            .map(|x| (self.value(x) - &j0).abs().max())
            .fold(T::zero(), max_of)
    }
}

/// Constraint description of `J⁻¹(μ)` for the catalog actions. For `SO(3)`
/// the fiber is taken in its rotation-invariant form `|J|² = |μ|²`.
pub fn momentum_fiber<T: Real>(action: &GroupAction<T>, mu: &DVector<T>) -> Result<Submanifold<T>> {
    let jm = MomentumMap::new(action);
    let n = action.phase_dim();
    if mu.len() != action.algebra_dim() {
        return Err(Error::DimensionMismatch {
            expected: action.algebra_dim(),
            got: mu.len(),
            context: "momentum value",
        });
    }
    match action.kind() {
        GroupKind::S1 => {
            let c = jm
                .component_field(&action.algebra[0])
                .add(&ScalarField::constant(n, -mu[0]));
            Ok(Submanifold::from_constraints(n, vec![c]))
        }
        GroupKind::SO3 => {
            let comps = jm.components();
            let sq = comps
                .iter()
                .fold(ScalarField::constant(n, -mu.norm_squared()), |acc, c| {
                    acc.add(&c.mul(c))
                });
            Ok(Submanifold::from_constraints(n, vec![sq]))
        }
        GroupKind::Trivial => Ok(Submanifold::full_space(n)),
        GroupKind::Product(..) => Err(Error::NonCatalogAction("momentum fiber of a product action".into())),
    }
}

/// Seeded points on `J⁻¹(μ)`. For `SO(3)` with `μ = 0` the fiber is the
/// singular set `q ∥ p`, which is sampled directly.
pub fn sample_momentum_fiber<T: Real>(
    action: &GroupAction<T>,
    mu: &DVector<T>,
    count: usize,
    half_width: f64,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<Vec<DVector<T>>> {
    let w = momentum_fiber(action, mu)?;
    if *action.kind() == GroupKind::SO3 && mu.norm() == T::zero() {
        let mut s = Sampler::new(seed);
        return Ok((0..count)
            .map(|i| {
                let q: DVector<T> = s.point(3, half_width);
                let lambda: T = s.uniform(-2.0, 2.0);
                let (q, p) = if i % 4 == 3 {
                    (DVector::zeros(3), q)
                } else {
                    (q.clone(), q * lambda)
                };
                DVector::from_fn(6, |k, _| if k < 3 { q[k] } else { p[k - 3] })
            })
            .collect());
    }
    Ok(w.sample(count, half_width, seed, tol))
}

#[derive(Clone, Debug)]
pub struct FiberCoisotropy<T: Real> {
    pub fiber: Submanifold<T>,
    pub classification: Classification,
}

/// Classifies `J⁻¹(μ)` in the canonical structure at the given points.
pub fn momentum_fiber_coisotropy<T: Real>(
    action: &GroupAction<T>,
    mu: &DVector<T>,
    points: &[DVector<T>],
    tol: &Tolerances<T>,
) -> Result<FiberCoisotropy<T>> {
    let fiber = momentum_fiber(action, mu)?;
    let b = PoissonStructure::canonical(action.config_dim());
    let lin = tol.lin;
    let bb = b.clone();
    let leaf = move |z: &DVector<T>| leaf_tangent(&bb, z, &lin);
    let classification = classify_submanifold(&b, &fiber, points, &leaf, tol)?;
    Ok(FiberCoisotropy { fiber, classification })
}

/// `J_r(θ) = I - (1 - cos t)/t² θ̂ + (t - sin t)/t³ θ̂²`, `t = |θ|`.
pub fn right_jacobian<T: Real>(theta: &Vector3<T>) -> Matrix3<T> {
    let t = theta.norm();
    let (a, b) = if t < T::lit(1e-4) {
        let t2 = t * t;
        (T::lit(0.5) - t2 / T::lit(24.0), T::lit(1.0 / 6.0) - t2 / T::lit(120.0))
    } else {
        ((T::one() - t.cos()) / (t * t), (t - t.sin()) / (t * t * t))
    };
    let h = hat(theta);
    Matrix3::identity() - h * a + h * h * b
}

/// Body momentum `Π = J_r(θ)⁻ᵀ p` on the exponential chart of `T*SO(3)`,
/// valid for `|θ| < π`.
pub fn body_momentum<T: Real>(x: &DVector<T>) -> Result<Vector3<T>> {
    if x.len() != 6 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: x.len(),
            context: "T*SO(3) chart point",
        });
    }
    let theta = Vector3::new(x[0], x[1], x[2]);
    if theta.norm() >= T::pi() {
        return Err(Error::ChartInvalid(format!(
            "|theta| = {} outside the chart",
            theta.norm().as_f64()
        )));
    }
    let p = Vector3::new(x[3], x[4], x[5]);
    right_jacobian(&theta)
        .transpose()
        .lu()
        .solve(&p)
        .ok_or(Error::SingularJacobian)
}

/// `(θ, p) ↦ Π` as a map `R⁶ → R³`; NaN outside the chart.
pub fn body_projection<T: Real>() -> VectorMap<T> {
    VectorMap::new(6, 3, |x| match body_momentum(x) {
        Ok(pi) => DVector::from_column_slice(pi.as_slice()),
        Err(_) => DVector::from_element(3, T::nan()),
    })
}

/// Inverse of [`body_momentum`] at fixed `θ`: `p = J_r(θ)ᵀ Π`.
pub fn chart_point<T: Real>(theta: &Vector3<T>, pi: &Vector3<T>) -> DVector<T> {
    let p = right_jacobian(theta).transpose() * pi;
    DVector::from_fn(6, |i, _| if i < 3 { theta[i] } else { p[i - 3] })
}

/// `max |{f∘π, g∘π}_can - {f, g}_{LP}∘π|` for functions on `so(3)*`.
pub fn lie_poisson_check<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>, points: &[DVector<T>]) -> Result<T> {
    let proj = body_projection::<T>();
    let up = PoissonStructure::canonical(3);
    let down = PoissonStructure::lie_poisson_so3();
    let (fu, gu) = (f.pullback(&proj), g.pullback(&proj));
    let mut worst = T::zero();
    for x in points {
        let pi = body_momentum(x)?;
        let mu = DVector::from_column_slice(pi.as_slice());
        let r = bracket_at(&up, &fu, &gu, x) - bracket_at(&down, f, g, &mu);
        worst = max_of(worst, r.abs());
    }
    Ok(worst)
}

/// Invariants of the `S¹` action on `T*R²`:
/// `(|q|², |p|², q·p, q1 p2 - q2 p1)`.
pub fn s1_invariants<T: Real>(x: &DVector<T>) -> [T; 4] {
    let (q1, q2, p1, p2) = (x[0], x[1], x[2], x[3]);
    [
        q1 * q1 + q2 * q2,
        p1 * p1 + p2 * p2,
        q1 * p1 + q2 * p2,
        q1 * p2 - q2 * p1,
    ]
}

/// The Hilbert map `T*R² → R⁴` with its analytic jacobian.
pub fn s1_hilbert_map<T: Real>() -> VectorMap<T> {
    VectorMap::new(4, 4, |x| DVector::from_row_slice(&s1_invariants(x))).with_jacobian(|x| {
        let two = T::lit(2.0);
        let (q1, q2, p1, p2) = (x[0], x[1], x[2], x[3]);
        let z = T::zero();
        DMatrix::from_row_slice(
            4,
            4,
            &[
                two * q1,
                two * q2,
                z,
                z,
                z,
                z,
                two * p1,
                two * p2,
                p1,
                p2,
                q1,
                q2,
                p2,
                -p1,
                -q2,
                q1,
            ],
        )
    })
}

/// Structure constants: `{σ_i, σ_j} = Σ_k c_k σ_k`, indices in `0..4`.
fn s1_constants<T: Real>(i: usize, j: usize) -> [T; 4] {
    let z = T::zero();
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    match (i, j) {
        (0, 1) => [z, z, four, z],
        (1, 0) => [z, z, -four, z],
        (0, 2) => [two, z, z, z],
        (2, 0) => [-two, z, z, z],
        (1, 2) => [z, -two, z, z],
        (2, 1) => [z, two, z, z],
        _ => [z; 4],
    }
}

/// `{σ_i, σ_j}` as coefficients of a linear combination of invariants;
/// indices are 1-based.
pub fn singular_reduced_bracket_s1<T: Real>(i: usize, j: usize) -> Result<[T; 4]> {
    if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
        return Err(Error::Index(format!(
            "invariant indices must lie in 1..=4, got ({i}, {j})"
        )));
    }
    Ok(s1_constants(i - 1, j - 1))
}

/// `σ1 σ2 - σ3² - σ4²`, which vanishes on the image of the Hilbert map.
pub fn s1_relation<T: Real>() -> ScalarField<T> {
    ScalarField::new(4, |s| s[0] * s[1] - s[2] * s[2] - s[3] * s[3]).with_gradient(|s| {
        let two = T::lit(2.0);
        DVector::from_row_slice(&[s[1], s[0], -two * s[2], -two * s[3]])
    })
}

/// The linear Poisson structure on `R⁴` carrying the invariant brackets.
pub fn s1_reduced_structure<T: Real>() -> PoissonStructure<T> {
    PoissonStructure::custom(4, |s| {
        DMatrix::from_fn(4, 4, |i, j| {
            let c = s1_constants::<T>(i, j);
            c[0] * s[0] + c[1] * s[1] + c[2] * s[2] + c[3] * s[3]
        })
    })
    .with_casimir(ScalarField::coordinate(4, 3))
    .with_casimir(s1_relation())
}

/// `max |{σ_i∘h, σ_j∘h}_can(x) - Σ c_k σ_k(x)|` with 1-based indices.
pub fn validate_singular_bracket<T: Real>(i: usize, j: usize, points: &[DVector<T>]) -> Result<T> {
    let c = singular_reduced_bracket_s1::<T>(i, j)?;
    let h = s1_hilbert_map::<T>();
    let (fi, fj) = (h.component(i - 1), h.component(j - 1));
    let b = PoissonStructure::canonical(2);
    let mut worst = T::zero();
    for x in points {
        let s = s1_invariants(x);
        let rhs = c[0] * s[0] + c[1] * s[1] + c[2] * s[2] + c[3] * s[3];
        worst = max_of(worst, (bracket_at(&b, &fi, &fj, x) - rhs).abs());
    }
    Ok(worst)
}

/// Largest relation defect on the image of the sample points.
pub fn s1_relation_residual<T: Real>(points: &[DVector<T>]) -> T {
    let rel = s1_relation::<T>();
    points
        .iter()
        .map(|x| rel.value(&DVector::from_row_slice(&s1_invariants(x))).abs())
        .fold(T::zero(), max_of)
}

/// Matching upstairs and downstairs reducibility data related by a
/// quotient projection.
#[derive(Clone, Debug)]
pub struct CrossCheck<T: Real> {
    pub name: String,
    pub up_structure: PoissonStructure<T>,
    pub up_w: Submanifold<T>,
    pub up_d: Distribution<T>,
    pub down_structure: PoissonStructure<T>,
    pub down_w: Submanifold<T>,
    pub down_d: Distribution<T>,
    pub projection: VectorMap<T>,
    /// Upstairs samples on `up_w`.
    pub points: Vec<DVector<T>>,
}

#[derive(Clone, Debug)]
pub struct CrossCheckReport<T> {
    pub upstairs: ReducibilityReport<T>,
    pub downstairs: ReducibilityReport<T>,
    pub agree: bool,
}

impl<T: Real> CrossCheckReport<T> {
    pub fn max_residual(&self) -> T {
        max_of(self.upstairs.max_residual, self.downstairs.max_residual)
    }
}

/// Runs the reducibility criterion on both sides and compares verdicts.
pub fn reduction_crosscheck<T: Real>(cc: &CrossCheck<T>, tol: &Tolerances<T>) -> Result<CrossCheckReport<T>> {
    let down_points: Vec<_> = cc.points.iter().map(|x| cc.projection.value(x)).collect();
    if down_points.iter().any(|y| y.iter().any(|v| !v.is_finite())) {
        return Err(Error::ChartInvalid("projection left its chart".into()));
    }
    let upstairs = reducibility_check(&cc.up_structure, &cc.up_w, &cc.up_d, &cc.points, tol)?;
    let downstairs = reducibility_check(&cc.down_structure, &cc.down_w, &cc.down_d, &down_points, tol)?;
    let agree = upstairs.verdict == downstairs.verdict;
    Ok(CrossCheckReport {
        upstairs,
        downstairs,
        agree,
    })
}

/// `S¹` on `T*R²` restricted to `J = j` (`j ≠ 0`, free), `D` the orbit
/// directions; downstairs the invariant space with `σ4 = j` on the
/// relation variety and `D = 0`.
pub fn s1_crosscheck<T: Real>(j: T, count: usize, seed: u64, tol: &Tolerances<T>) -> Result<CrossCheck<T>> {
    let action = GroupAction::<T>::s1();
    let up_w = momentum_fiber(&action, &DVector::from_element(1, j))?;
    let points = up_w.sample(count, 2.0, seed, tol);
    let down_w = Submanifold::from_constraints(
        4,
        vec![
            ScalarField::coordinate(4, 3).add(&ScalarField::constant(4, -j)),
            s1_relation(),
        ],
    );
    Ok(CrossCheck {
        name: "s1-free-region".into(),
        up_structure: PoissonStructure::canonical(2),
        up_d: action.orbit_distribution(),
        up_w,
        down_structure: s1_reduced_structure(),
        down_w,
        down_d: Distribution::zero(4),
        projection: s1_hilbert_map(),
        points,
    })
}

/// Free rigid body on the exponential chart of `T*SO(3)` restricted to an
/// energy and Casimir level through `pi0`, with the characteristic
/// distribution on both sides.
pub fn rigid_body_crosscheck<T: Real>(
    inertia: [T; 3],
    pi0: Vector3<T>,
    count: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<CrossCheck<T>> {
    let h = rigid_body_hamiltonian(inertia);
    let c = ScalarField::new(3, |m: &DVector<T>| m.norm_squared()).with_gradient(|m: &DVector<T>| m * T::lit(2.0));
    let p0 = DVector::from_column_slice(pi0.as_slice());
    let (e, cv) = (h.value(&p0), c.value(&p0));
    let down_w = Submanifold::from_constraints(
        3,
        vec![
            h.add(&ScalarField::constant(3, -e)),
            c.add(&ScalarField::constant(3, -cv)),
        ],
    );
    let down_structure = PoissonStructure::lie_poisson_so3();
    let down_d = characteristic_distribution(&down_structure, &down_w)?;

    let proj = body_projection::<T>();
    let up_w = Submanifold::from_constraints(
        6,
        vec![
            h.pullback(&proj).add(&ScalarField::constant(6, -e)),
            c.pullback(&proj).add(&ScalarField::constant(6, -cv)),
        ],
    );
    let up_structure = PoissonStructure::canonical(3);
    let up_d = characteristic_distribution(&up_structure, &up_w)?;

    let mut s = Sampler::new(seed);
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count && attempts < 20 * count.max(1) {
        attempts += 1;
        let guess = p0.clone() + s.point::<T>(3, 0.5);
        let Ok(pi) = down_w.project(&guess, tol) else {
            continue;
        };
        let theta: DVector<T> = s.point(3, 1.0);
        let theta = Vector3::new(theta[0], theta[1], theta[2]);
        points.push(chart_point(&theta, &Vector3::new(pi[0], pi[1], pi[2])));
    }
    Ok(CrossCheck {
        name: "rigid-body".into(),
        up_structure,
        up_w,
        up_d,
        down_structure,
        down_w,
        down_d,
        projection: proj,
        points,
    })
}

/// Trivial group: the quotient is the identity and both sides coincide.
pub fn trivial_crosscheck<T: Real>(
    b: &PoissonStructure<T>,
    w: &Submanifold<T>,
    d: &Distribution<T>,
    points: Vec<DVector<T>>,
) -> CrossCheck<T> {
    CrossCheck {
        name: "trivial-group".into(),
        up_structure: b.clone(),
        up_w: w.clone(),
        up_d: d.clone(),
        down_structure: b.clone(),
        down_w: w.clone(),
        down_d: d.clone(),
        projection: VectorMap::identity(b.dim()),
        points,
    }
}

/// At a point `z`, every sampled isotropy element `k` should satisfy
/// `k·B(z)α = B(z)(k⁻ᵀα)` for the lifted action. Returns the largest defect
/// and the number of isotropy elements found.
pub fn fixed_point_equivariance<T: Real>(
    action: &GroupAction<T>,
    b: &PoissonStructure<T>,
    z: &DVector<T>,
    group_samples: &[DMatrix<T>],
    covectors: &[DVector<T>],
    tol: &Tolerances<T>,
) -> (T, usize) {
    let bz = b.tensor(z);
    let mut worst = T::zero();
    let mut found = 0;
    for g in group_samples {
        let lg = action.lifted_matrix(g);
        if (&lg * z - z).norm() >= tol.tol {
            continue;
        }
        found += 1;
        let lg_inv_t = match lg.clone().try_inverse() {
            Some(m) => m.transpose(),
            None => return (T::nan(), found),
        };
        for a in covectors {
            let r = (&lg * (&bz * a) - &bz * (&lg_inv_t * a)).norm();
            worst = max_of(worst, r);
        }
    }
    (worst, found)
}

/// Verdict for a momentum-fiber classification: coisotropic on every
/// regular point.
pub fn fiber_verdict(c: &Classification) -> Verdict {
    use crate::reduce::{AggregateClass, SubmanifoldClass};
    match c.aggregate {
        AggregateClass::Uniform(SubmanifoldClass::Coisotropic) => Verdict::Pass,
        AggregateClass::DegeneratePointsOnly => Verdict::DegeneratePointsOnly,
        _ => Verdict::Fail,
    }
}

/// A subspace of `R^{2n}` spanned by the orbit directions at `z`.
pub fn orbit_tangent<T: Real>(action: &GroupAction<T>, z: &DVector<T>, tol: &LinTol<T>) -> Subspace<T> {
    action.orbit_distribution().fiber_at(z, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsys::{integrate, Method};
    use crate::poisson::hamiltonian_field;
    use crate::reduce::{AggregateClass, SubmanifoldClass};
    use crate::sampling::sample_box;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn s1_rotation_and_generator() {
        let a = GroupAction::<f64>::s1();
        let g = a.element(&[std::f64::consts::FRAC_PI_2]);
        let x = v(&[1.0, 0.0, 0.0, 1.0]);
        assert!((a.act(&g, &x) - v(&[0.0, 1.0, -1.0, 0.0])).norm() < 1e-12);
        let gen = a.generator_field(&[1.0]);
        assert!((gen.value(&x) - v(&[0.0, 1.0, -1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn invariance_examples() {
        let a = GroupAction::<f64>::s1();
        let gs = a.sample_elements(8, 1);
        let pts = sample_box::<f64>(4, 10, 2.0, 2);
        let e = ScalarField::quadratic(DMatrix::identity(4, 4), DVector::zeros(4), 0.0);
        assert!(is_invariant(&a, InvariantObject::Scalar(&e), &gs, &pts, &tol()).max_residual < 1e-10);
        let q1 = ScalarField::coordinate(4, 0);
        let r = is_invariant(&a, InvariantObject::Scalar(&q1), &gs, &pts, &tol());
        assert!(!r.invariant);

        let damping = FiberMap::fiber_affine(
            2,
            DMatrix::from_row_slice(2, 4, &[0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, -0.5]),
            DVector::zeros(2),
        );
        assert!(is_invariant(&a, InvariantObject::FiberMap(&damping), &gs, &pts, &tol()).invariant);

        let w = Submanifold::from_constraints(
            4,
            vec![MomentumMap::new(&a).components()[0].add(&ScalarField::constant(4, -1.0))],
        );
        let on_w = w.sample(10, 2.0, 3, &tol());
        assert!(is_invariant(&a, InvariantObject::Submanifold(&w), &gs, &on_w, &tol()).invariant);
    }

    #[test]
    fn isotropy_and_strata() {
        let a = GroupAction::<f64>::so3();
        let lin = LinTol::default();
        assert_eq!(isotropy_dim(&a, &v(&[0.0; 6]), &lin), 3);
        assert_eq!(isotropy_dim(&a, &v(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]), &lin), 1);
        assert_eq!(isotropy_dim(&a, &v(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), &lin), 0);
        let s = stratify(
            &a,
            &[
                v(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
                v(&[0.0; 6]),
                v(&[0.0, 2.0, 0.0, 0.0, 1.0, 0.0]),
            ],
            &lin,
        );
        let labels: Vec<_> = s.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["trivial", "SO(3)", "SO(2)"]);

        let s1 = GroupAction::<f64>::s1();
        assert_eq!(isotropy_dim(&s1, &v(&[0.0; 4]), &lin), 1);
        assert_eq!(isotropy_dim(&s1, &v(&[1.0, 0.0, 0.0, 0.0]), &lin), 0);
        assert_eq!(isotropy_dim(&GroupAction::<f64>::trivial(2), &v(&[1.0; 4]), &lin), 0);
    }

    #[test]
    fn momentum_examples() {
        let s1 = MomentumMap::new(&GroupAction::<f64>::s1());
        assert_eq!(s1.value(&v(&[1.0, 0.0, 0.0, 1.0]))[0], 1.0);
        let so3 = MomentumMap::new(&GroupAction::<f64>::so3());
        let x = v(&[1.0, 2.0, 3.0, -1.0, 0.5, 2.0]);
        let q = Vector3::new(1.0, 2.0, 3.0);
        let p = Vector3::new(-1.0, 0.5, 2.0);
        let j = so3.value(&x);
        assert!((Vector3::new(j[0], j[1], j[2]) - q.cross(&p)).norm() < 1e-12);
        let gs = GroupAction::<f64>::so3().sample_elements(5, 9);
        let pts = sample_box::<f64>(6, 5, 2.0, 10);
        assert!(so3.equivariance_residual(&gs, &pts) < 1e-10);
    }

    #[test]
    fn noether_for_invariant_hamiltonian() {
        let a = GroupAction::<f64>::s1();
        let jm = MomentumMap::new(&a);
        let b = PoissonStructure::canonical(2);
        let h = ScalarField::new(4, |x: &DVector<f64>| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            0.5 * (x[2] * x[2] + x[3] * x[3]) + 0.25 * r2 * r2
        });
        assert!(jm.noether_residual(&b, &h, &sample_box(4, 10, 1.0, 11)) < 1e-8);
        let traj = integrate(
            &hamiltonian_field(&b, &h),
            &v(&[1.0, 0.0, 0.2, 0.7]),
            5.0,
            1e-2,
            Method::Rk4,
        )
        .unwrap();
        assert!(jm.drift(&traj) < 1e-8);
    }

    #[test]
    fn momentum_fibers_are_coisotropic() {
        let t = tol();
        let so3 = GroupAction::<f64>::so3();
        let mu = v(&[0.0, 0.0, 1.0]);
        let pts = sample_momentum_fiber(&so3, &mu, 20, 2.0, 12, &t).unwrap();
        assert_eq!(pts.len(), 20);
        let c = momentum_fiber_coisotropy(&so3, &mu, &pts, &t).unwrap();
        assert_eq!(
            c.classification.aggregate,
            AggregateClass::Uniform(SubmanifoldClass::Coisotropic)
        );

        let zero = v(&[0.0; 3]);
        let pts = sample_momentum_fiber(&so3, &zero, 8, 2.0, 13, &t).unwrap();
        let c = momentum_fiber_coisotropy(&so3, &zero, &pts, &t).unwrap();
        assert_eq!(c.classification.aggregate, AggregateClass::DegeneratePointsOnly);
        assert_eq!(fiber_verdict(&c.classification), Verdict::DegeneratePointsOnly);

        let s1 = GroupAction::<f64>::s1();
        let one = v(&[1.0]);
        let pts = sample_momentum_fiber(&s1, &one, 10, 2.0, 14, &t).unwrap();
        let c = momentum_fiber_coisotropy(&s1, &one, &pts, &t).unwrap();
        assert_eq!(fiber_verdict(&c.classification), Verdict::Pass);
    }

    #[test]
    fn body_chart_matches_lie_poisson() {
        let mut s = Sampler::new(15);
        let pts: Vec<DVector<f64>> = (0..10)
            .map(|_| {
                let th: DVector<f64> = s.point(3, 1.0);
                let pi: DVector<f64> = s.point(3, 2.0);
                chart_point(&Vector3::new(th[0], th[1], th[2]), &Vector3::new(pi[0], pi[1], pi[2]))
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let r =
                    lie_poisson_check(&ScalarField::coordinate(3, i), &ScalarField::coordinate(3, j), &pts).unwrap();
                assert!(r < 1e-6, "({i},{j}) {r}");
            }
        }
        let far = v(&[4.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(body_momentum(&far), Err(Error::ChartInvalid(_))));
    }

    #[test]
    fn singular_s1_bracket_examples() {
        assert_eq!(singular_reduced_bracket_s1::<f64>(1, 2).unwrap(), [0.0, 0.0, 4.0, 0.0]);
        assert_eq!(singular_reduced_bracket_s1::<f64>(4, 1).unwrap(), [0.0; 4]);
        assert!(matches!(singular_reduced_bracket_s1::<f64>(5, 1), Err(Error::Index(_))));
        let pts = sample_box::<f64>(4, 10, 2.0, 16);
        for i in 1..=4 {
            for j in 1..=4 {
                assert!(validate_singular_bracket(i, j, &pts).unwrap() < 1e-10);
            }
        }
        assert!(s1_relation_residual(&pts) < 1e-12);
    }

    #[test]
    fn crosschecks_agree() {
        let t = tol();
        let s1 = s1_crosscheck(1.0, 10, 17, &t).unwrap();
        let r = reduction_crosscheck(&s1, &t).unwrap();
        assert!(r.agree && r.upstairs.verdict == Verdict::Pass, "{:?}", r.max_residual());

        let rb = rigid_body_crosscheck([1.0, 2.0, 3.0], Vector3::new(1.0, 0.5, 0.2), 10, 18, &t).unwrap();
        assert_eq!(rb.points.len(), 10);
        let r = reduction_crosscheck(&rb, &t).unwrap();
        assert!(r.agree && r.upstairs.verdict == Verdict::Pass, "{:?}", r.max_residual());

        let b = PoissonStructure::canonical(1);
        let w = Submanifold::full_space(2);
        let triv = trivial_crosscheck(&b, &w, &Distribution::zero(2), sample_box(2, 5, 1.0, 19));
        assert!(reduction_crosscheck(&triv, &t).unwrap().agree);
    }

    #[test]
    fn equivariance_at_fixed_point() {
        let a = GroupAction::<f64>::so3();
        let b = PoissonStructure::canonical(3);
        let mut gs = a.sample_elements(5, 20);
        gs.push(DMatrix::identity(3, 3));
        let covs = sample_box::<f64>(6, 4, 1.0, 21);
        let (r, found) = fixed_point_equivariance(&a, &b, &v(&[0.0; 6]), &gs, &covs, &tol());
        assert_eq!(found, 6);
        assert!(r < 1e-10);
    }

    #[test]
    fn product_action_blocks() {
        let p = GroupAction::<f64>::product(&GroupAction::s1(), &GroupAction::trivial(1));
        assert_eq!((p.config_dim(), p.algebra_dim()), (3, 1));
        assert!(momentum_fiber(&p, &v(&[1.0])).is_err());
    }
}
