//! CH-equivalence: cotangent lifts of configuration diffeomorphisms, the
//! matching conditions, recovery of the matching control law and a
//! closed-loop conjugacy check.
//!
//! Orientation follows the lift: `φ: Q1 → Q2`, `φ*: T*Q2 → T*Q1` and
//! `φ_* = (φ⁻¹)*: T*Q1 → T*Q2`.

use nalgebra::{DMatrix, DVector};

use crate::chsys::{closed_loop_field, integrate, Actuation, CHSystem, Method};
use crate::error::{Error, Result};
use crate::field::{VectorField, VectorMap};
use crate::pointlin::{numerical_rank, Subspace};
use crate::poisson::PoissonStructure;
use crate::reduce::Submanifold;
use crate::scalar::{max_of, Real};
use crate::tol::Tolerances;

/// A diffeomorphism of configuration charts with its inverse.
#[derive(Clone, Debug)]
pub struct Diffeo<T: Real> {
    pub forward: VectorMap<T>,
    pub inverse: VectorMap<T>,
}

impl<T: Real> Diffeo<T> {
    pub fn new(forward: VectorMap<T>, inverse: VectorMap<T>) -> Self {
        Self { forward, inverse }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(VectorMap::identity(n), VectorMap::identity(n))
    }

    /// `q ↦ A q`; fails if `A` is singular.
    pub fn linear(a: DMatrix<T>) -> Result<Self> {
        let inv = a.clone().try_inverse().ok_or(Error::SingularJacobian)?;
        Ok(Self::new(VectorMap::linear(a), VectorMap::linear(inv)))
    }

    pub fn dim(&self) -> usize {
        self.forward.in_dim()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Diffeo<T>) -> Self {
        Self::new(self.forward.then(&next.forward), next.inverse.then(&self.inverse))
    }
}

/// `φ*` together with `φ_*`, both as maps on phase charts.
#[derive(Clone, Debug)]
pub struct CotangentLiftMap<T: Real> {
    base_dim: usize,
    phi_star: VectorMap<T>,
    phi_lower: VectorMap<T>,
}

impl<T: Real> CotangentLiftMap<T> {
    /// Wraps arbitrary phase maps, e.g. a candidate that is not a lift.
    pub fn from_maps(base_dim: usize, phi_star: VectorMap<T>, phi_lower: VectorMap<T>) -> Self {
        Self {
            base_dim,
            phi_star,
            phi_lower,
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// `φ*: T*Q2 → T*Q1`.
    pub fn pull(&self, x2: &DVector<T>) -> DVector<T> {
        self.phi_star.value(x2)
    }

    /// `φ_*: T*Q1 → T*Q2`.
    pub fn push(&self, x1: &DVector<T>) -> DVector<T> {
        self.phi_lower.value(x1)
    }

    /// `Tφ*` at `x2` applied to `v`.
    pub fn tangent(&self, x2: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        self.phi_star.jacobian(x2) * v
    }

    pub fn phi_star(&self) -> &VectorMap<T> {
        &self.phi_star
    }

    pub fn phi_lower(&self) -> &VectorMap<T> {
        &self.phi_lower
    }
}

fn split<T: Real>(x: &DVector<T>, n: usize) -> (DVector<T>, DVector<T>) {
    (x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
}

fn join<T: Real>(q: &DVector<T>, p: &DVector<T>) -> DVector<T> {
    let n = q.len();
    DVector::from_fn(2 * n, |i, _| if i < n { q[i] } else { p[i - n] })
}

/// `∂/∂q (Dφ(q)ᵀ p̄)` at fixed `p̄`, by central differences of `Dφ`.
fn covector_hessian<T: Real>(phi: &VectorMap<T>, q: &DVector<T>, pb: &DVector<T>) -> DMatrix<T> {
    let n = q.len();
    let h = phi.fd_step() * max_of(T::one(), q.norm());
    let two_h = h + h;
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut a = q.clone();
        let mut b = q.clone();
        a[k] += h;
        b[k] -= h;
        let col = (phi.jacobian(&a).transpose() * pb - phi.jacobian(&b).transpose() * pb) / two_h;
        out.set_column(k, &col);
    }
    out
}

/// `φ*(q̄, p̄) = (φ⁻¹(q̄), Dφ(φ⁻¹(q̄))ᵀ p̄)`; `check_points` in `Q1` are
/// screened for singular `Dφ`.
pub fn cotangent_lift<T: Real>(
    phi: &Diffeo<T>,
    check_points: &[DVector<T>],
    tol: &Tolerances<T>,
) -> Result<CotangentLiftMap<T>> {
    let n = phi.dim();
    let mut lin = tol.lin;
    lin.rank_abs = max_of(lin.rank_abs, tol.singular_tol);
    for q in check_points {
        if numerical_rank(&phi.forward.jacobian(q), &lin) < n {
            return Err(Error::SingularJacobian);
        }
    }
    let (fwd, inv) = (phi.forward.clone(), phi.inverse.clone());
    let (fwd_j, inv_j) = (phi.forward.clone(), phi.inverse.clone());
    let phi_star = VectorMap::new(2 * n, 2 * n, move |x2| {
        let (qb, pb) = split(x2, n);
        let q = inv.value(&qb);
        let p = fwd.jacobian(&q).transpose() * pb;
        join(&q, &p)
    })
    .with_jacobian(move |x2| {
        let (qb, pb) = split(x2, n);
        let q = inv_j.value(&qb);
        let dphi = fwd_j.jacobian(&q);
        let dinv = dphi
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(n, n, T::nan()));
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&dinv);
        j.view_mut((n, 0), (n, n))
            .copy_from(&(covector_hessian(&fwd_j, &q, &pb) * &dinv));
        j.view_mut((n, n), (n, n)).copy_from(&dphi.transpose());
        j
    });
    let (fwd2, fwd2_j) = (phi.forward.clone(), phi.forward.clone());
    let phi_lower = VectorMap::new(2 * n, 2 * n, move |x1| {
        let (q, p) = split(x1, n);
        let qb = fwd2.value(&q);
        let pb = fwd2
            .jacobian(&q)
            .transpose()
            .lu()
            .solve(&p)
            .unwrap_or_else(|| DVector::from_element(n, T::nan()));
        join(&qb, &pb)
    })
    .with_jacobian(move |x1| {
        let (q, p) = split(x1, n);
        let dphi = fwd2_j.jacobian(&q);
        let dinv_t = dphi
            .clone()
            .try_inverse()
            .map(|m| m.transpose())
            .unwrap_or_else(|| DMatrix::from_element(n, n, T::nan()));
        let pb = &dinv_t * p;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&dphi);
        j.view_mut((n, 0), (n, n))
            .copy_from(&(-&dinv_t * covector_hessian(&fwd2_j, &q, &pb)));
        j.view_mut((n, n), (n, n)).copy_from(&dinv_t);
        j
    });
    Ok(CotangentLiftMap {
        base_dim: n,
        phi_star,
        phi_lower,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorMatching<T> {
    pub holds: bool,
    /// `max |Jφ* B2 Jφ*ᵀ - B1∘φ*|` over coordinate pairs and points.
    pub poisson_residual: T,
    /// `max |c1(φ*(x̄))|` over the sample points lying on `W2`.
    pub w_forward_residual: T,
    /// `max |c2(φ_*(x))|` over the `W1` samples (coverage in reverse).
    pub w_reverse_residual: T,
    pub points_on_w2: usize,
}

/// Tensor matching: `φ*` is Poisson and `W1 = φ*(W2)`.
#[allow(clippy::too_many_arguments)]
pub fn check_tensor_matching<T: Real>(
    lift: &CotangentLiftMap<T>,
    b1: &PoissonStructure<T>,
    b2: &PoissonStructure<T>,
    w1: &Submanifold<T>,
    w2: &Submanifold<T>,
    points2: &[DVector<T>],
    w1_samples: &[DVector<T>],
    tol: &Tolerances<T>,
) -> TensorMatching<T> {
    let mut poisson = T::zero();
    let mut forward = T::zero();
    let mut on_w2 = 0;
    for x2 in points2 {
        let j = lift.phi_star.jacobian(x2);
        let x1 = lift.pull(x2);
        let pushed = &j * b2.tensor(x2) * j.transpose();
        poisson = max_of(poisson, (pushed - b1.tensor(&x1)).abs().max());
        if w2.contains(x2, tol) {
            on_w2 += 1;
            forward = max_of(forward, w1.membership_residual(&x1));
        }
    }
    let reverse = w1_samples
        .iter()
        .map(|x1| w2.membership_residual(&lift.push(x1)))
        .fold(T::zero(), max_of);
    TensorMatching {
        holds: poisson < tol.tol && forward < tol.memb_tol && reverse < tol.memb_tol,
        poisson_residual: poisson,
        w_forward_residual: forward,
        w_reverse_residual: reverse,
        points_on_w2: on_w2,
    }
}

/// Transports system 2's lift of `act` through `Tφ*` to the point `x1`.
fn transported_lift<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys2: &CHSystem<T>,
    act: &Actuation<T>,
    x1: &DVector<T>,
) -> Result<DVector<T>> {
    let x2 = lift.push(x1);
    let x_h2 = sys2.hamiltonian_field();
    let v2 = act.lift(sys2.base_dim, &x_h2, &x2, sys2.reading, &sys2.tol)?;
    Ok(lift.tangent(&x2, &v2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingRhs<T: Real> {
    pub vector: DVector<T>,
    pub base_norm: T,
}

/// Right-hand side of the control-law relation at `x1 ∈ T*Q1`:
/// `-X_{H1} - vlift(F1) + Tφ*(X_{H2}) + vlift(φ* F2 φ_*)`.
pub fn matching_rhs<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys1: &CHSystem<T>,
    sys2: &CHSystem<T>,
    x1: &DVector<T>,
) -> Result<MatchingRhs<T>> {
    let x_h1 = sys1.hamiltonian_field();
    let x2 = lift.push(x1);
    let mut v = -x_h1.value(x1);
    if let Some(f1) = &sys1.force {
        v -= f1.lift(sys1.base_dim, &x_h1, x1, sys1.reading, &sys1.tol)?;
    }
    v += lift.tangent(&x2, &sys2.hamiltonian_field().value(&x2));
    if let Some(f2) = &sys2.force {
        v += transported_lift(lift, sys2, f2, x1)?;
    }
    let base_norm = v.rows(0, lift.base_dim).norm();
    Ok(MatchingRhs { vector: v, base_norm })
}

/// Fiber vectors attainable by `W1`-valued controls.
#[derive(Clone, Debug, PartialEq)]
pub enum AttainableSet<T: Real> {
    Full,
    /// A linear family: a subspace of the fiber `R^{N-n}`.
    Subspace(Subspace<T>),
    /// Componentwise bounds on the fiber vector.
    Box {
        lo: DVector<T>,
        hi: DVector<T>,
    },
}

impl<T: Real> AttainableSet<T> {
    /// Distance from the fiber vector `v` to the set.
    pub fn residual(&self, v: &DVector<T>) -> T {
        match self {
            AttainableSet::Full => T::zero(),
            AttainableSet::Subspace(s) => s.residual_of(v),
            AttainableSet::Box { lo, hi } => {
                let mut sq = T::zero();
                for i in 0..v.len() {
                    let d = if v[i] < lo[i] {
                        lo[i] - v[i]
                    } else if v[i] > hi[i] {
                        v[i] - hi[i]
                    } else {
                        T::zero()
                    };
                    sq += d * d;
                }
                sq.sqrt()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForceMatching<T> {
    pub holds: bool,
    pub max_base_norm: T,
    pub max_attainability_residual: T,
}

/// Force matching: the mismatch is vertical and its fiber part is attainable.
pub fn check_force_matching<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys1: &CHSystem<T>,
    sys2: &CHSystem<T>,
    points1: &[DVector<T>],
    attainable: &AttainableSet<T>,
    tol: &Tolerances<T>,
) -> Result<ForceMatching<T>> {
    let n = lift.base_dim;
    let mut base = T::zero();
    let mut attain = T::zero();
    for x1 in points1 {
        let rhs = matching_rhs(lift, sys1, sys2, x1)?;
        base = max_of(base, rhs.base_norm);
        let fiber = rhs.vector.rows(n, rhs.vector.len() - n).into_owned();
        attain = max_of(attain, attainable.residual(&fiber));
    }
    Ok(ForceMatching {
        holds: base < tol.tol && attain < tol.tol,
        max_base_norm: base,
        max_attainability_residual: attain,
    })
}

/// `vlift(u1)(x1) = RHS(x1) + vlift(φ* u2 φ_*)(x1)`.
pub fn solve_control_law<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys1: &CHSystem<T>,
    sys2: &CHSystem<T>,
    u2: Option<&Actuation<T>>,
    x1: &DVector<T>,
) -> Result<DVector<T>> {
    let rhs = matching_rhs(lift, sys1, sys2, x1)?;
    if rhs.base_norm >= sys1.tol.tol {
        return Err(Error::NotVertical {
            base_norm: rhs.base_norm.as_f64(),
        });
    }
    let mut v = rhs.vector;
    v.rows_mut(0, lift.base_dim).fill(T::zero());
    if let Some(u2) = u2 {
        v += transported_lift(lift, sys2, u2, x1)?;
        v.rows_mut(0, lift.base_dim).fill(T::zero());
    }
    Ok(v)
}

/// The solved control law as a vertical actuation on system 1.
pub fn solved_control<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys1: &CHSystem<T>,
    sys2: &CHSystem<T>,
    u2: Option<&Actuation<T>>,
) -> Actuation<T> {
    let (lift, s1, s2, u2) = (lift.clone(), sys1.clone(), sys2.clone(), u2.cloned());
    let n = s1.phase_dim();
    Actuation::Vertical(VectorField::new(n, move |x| {
        solve_control_law(&lift, &s1, &s2, u2.as_ref(), x).unwrap_or_else(|_| DVector::from_element(n, T::nan()))
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugacyReport<T> {
    /// `max_t |φ*(x2(t)) - x1(t)|`.
    pub trajectory_residual: T,
    /// `max |X1(φ*(x2)) - Tφ* X2(x2)|` along system 2's trajectory.
    pub field_residual: T,
}

/// Integrates both closed loops from `x0_2` and `φ*(x0_2)` and compares.
#[allow(clippy::too_many_arguments)]
pub fn verify_conjugacy<T: Real>(
    lift: &CotangentLiftMap<T>,
    sys1: &CHSystem<T>,
    u1: &Actuation<T>,
    sys2: &CHSystem<T>,
    u2: &Actuation<T>,
    x0_2: &DVector<T>,
    t_final: T,
    dt: T,
) -> Result<ConjugacyReport<T>> {
    let f1 = closed_loop_field(sys1, Some(u1))?;
    let f2 = closed_loop_field(sys2, Some(u2))?;
    let traj2 = integrate(&f2, x0_2, t_final, dt, Method::Rk4)?;
    let traj1 = integrate(&f1, &lift.pull(x0_2), t_final, dt, Method::Rk4)?;
    let mut traj_res = T::zero();
    let mut field_res = T::zero();
    for (x2, x1) in traj2.states.iter().zip(&traj1.states) {
        let mapped = lift.pull(x2);
        traj_res = max_of(traj_res, (&mapped - x1).norm());
        let lhs = f1.value(&mapped);
        let rhs = lift.tangent(x2, &f2.value(x2));
        field_res = max_of(field_res, (lhs - rhs).norm());
    }
    Ok(ConjugacyReport {
        trajectory_residual: traj_res,
        field_residual: field_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::sampling::sample_box;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn oscillator(k: f64, m: f64) -> CHSystem<f64> {
        // H = k q²/2 + m p²/2
        let a = DMatrix::from_row_slice(2, 2, &[k, 0.0, 0.0, m]);
        CHSystem::new(
            1,
            PoissonStructure::canonical(1),
            ScalarField::quadratic(a, DVector::zeros(2), 0.0),
        )
    }

    fn stiffening(c: f64) -> Actuation<f64> {
        Actuation::Vertical(VectorField::linear(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -c, 0.0])))
    }

    fn none() -> Actuation<f64> {
        Actuation::Vertical(VectorField::zero(2))
    }

    #[test]
    fn lift_examples() {
        let id = cotangent_lift(&Diffeo::<f64>::identity(2), &[], &tol()).unwrap();
        let x = v(&[0.3, -0.2, 1.0, 2.0]);
        assert_eq!(id.pull(&x), x);

        let scale = cotangent_lift(&Diffeo::linear(DMatrix::from_element(1, 1, 2.0)).unwrap(), &[], &tol()).unwrap();
        assert!((scale.pull(&v(&[3.0, 5.0])) - v(&[1.5, 10.0])).norm() < 1e-14);

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let lin = cotangent_lift(&Diffeo::linear(a.clone()).unwrap(), &[], &tol()).unwrap();
        let (qb, pb) = (v(&[0.7, -1.1]), v(&[0.2, 0.9]));
        let got = lin.pull(&join(&qb, &pb));
        let expect = join(&(a.clone().try_inverse().unwrap() * &qb), &(a.transpose() * &pb));
        assert!((got - expect).norm() < 1e-12);
        // Canonical one-form p dq is preserved: p̄·dq̄ = p·dq for dq̄ = A dq.
        let x2 = join(&qb, &pb);
        assert!((lin.push(&lin.pull(&x2)) - x2).norm() < 1e-12);
    }

    #[test]
    fn singular_jacobian_rejected() {
        let fold = Diffeo::new(
            VectorMap::new(1, 1, |q: &DVector<f64>| v(&[q[0].powi(3)])),
            VectorMap::new(1, 1, |q: &DVector<f64>| v(&[q[0].cbrt()])),
        );
        assert!(matches!(
            cotangent_lift(&fold, &[v(&[0.0])], &tol()),
            Err(Error::SingularJacobian)
        ));
    }

    #[test]
    fn lifts_compose_contravariantly() {
        let phi1 = Diffeo::new(
            VectorMap::new(2, 2, |q: &DVector<f64>| v(&[q[0] + q[1].powi(3), q[1]])),
            VectorMap::new(2, 2, |q: &DVector<f64>| v(&[q[0] - q[1].powi(3), q[1]])),
        );
        let phi2 = Diffeo::linear(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).unwrap();
        let l1 = cotangent_lift(&phi1, &[], &tol()).unwrap();
        let l2 = cotangent_lift(&phi2, &[], &tol()).unwrap();
        let l12 = cotangent_lift(&phi1.then(&phi2), &[], &tol()).unwrap();
        for x in sample_box::<f64>(4, 10, 1.0, 3) {
            assert!((l12.pull(&x) - l1.pull(&l2.pull(&x))).norm() < 1e-8);
        }
    }

    #[test]
    fn tensor_matching_examples() {
        let b = PoissonStructure::<f64>::canonical(1);
        let full = Submanifold::full_space(2);
        let pts = sample_box::<f64>(2, 10, 2.0, 4);
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let r = check_tensor_matching(&id, &b, &b, &full, &full, &pts, &pts, &tol());
        assert!(r.holds && r.poisson_residual < 1e-9);

        let nonlinear = Diffeo::new(
            VectorMap::new(2, 2, |q: &DVector<f64>| v(&[q[0] + q[1].sin(), q[1]]))
                .with_jacobian(|q: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[1.0, q[1].cos(), 0.0, 1.0])),
            VectorMap::new(2, 2, |q: &DVector<f64>| v(&[q[0] - q[1].sin(), q[1]])),
        );
        let l = cotangent_lift(&nonlinear, &[], &tol()).unwrap();
        let b2 = PoissonStructure::canonical(2);
        let full4 = Submanifold::full_space(4);
        let pts4 = sample_box::<f64>(4, 10, 1.0, 5);
        let r = check_tensor_matching(&l, &b2, &b2, &full4, &full4, &pts4, &pts4, &tol());
        assert!(r.poisson_residual < 1e-8, "{}", r.poisson_residual);

        let bogus = CotangentLiftMap::from_maps(
            1,
            VectorMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])),
            VectorMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5])),
        );
        let r = check_tensor_matching(&bogus, &b, &b, &full, &full, &pts, &pts, &tol());
        assert!(!r.holds);
        assert!((r.poisson_residual - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tensor_matching_detects_control_subset_mismatch() {
        let b = PoissonStructure::<f64>::canonical(1);
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let w1 = Submanifold::coordinate_zero(2, &[1]);
        let w2 = Submanifold::coordinate_zero(2, &[0]);
        let pts = vec![v(&[0.0, 1.0])];
        let r = check_tensor_matching(&id, &b, &b, &w1, &w2, &pts, &[v(&[1.0, 0.0])], &tol());
        assert!(!r.holds);
        assert_eq!(r.points_on_w2, 1);
        assert_eq!(r.w_forward_residual, 1.0);
    }

    #[test]
    fn matching_rhs_examples() {
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let s = oscillator(1.0, 1.0);
        let x = v(&[0.6, -0.4]);
        assert!(matching_rhs(&id, &s, &s, &x).unwrap().vector.norm() < 1e-9);

        let s2 = oscillator(1.0, 1.0).with_force(stiffening(1.0));
        let r = matching_rhs(&id, &s, &s2, &x).unwrap();
        assert!((r.vector - v(&[0.0, -0.6])).norm() < 1e-9);

        // φ(q) = 2q, H2 = H1 ∘ φ* = q̄²/8 + 2 p̄².
        let scale = cotangent_lift(&Diffeo::linear(DMatrix::from_element(1, 1, 2.0)).unwrap(), &[], &tol()).unwrap();
        let s2 = oscillator(0.25, 4.0);
        for x in sample_box::<f64>(2, 10, 2.0, 6) {
            let r = matching_rhs(&scale, &s, &s2, &x).unwrap();
            assert!(r.base_norm < 1e-8 && r.vector.norm() < 1e-8);
        }
    }

    #[test]
    fn force_matching_examples() {
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let s = oscillator(1.0, 1.0);
        let s2 = oscillator(1.0, 1.0).with_force(stiffening(1.0));
        let pts = sample_box::<f64>(2, 10, 2.0, 7);
        assert!(
            check_force_matching(&id, &s, &s, &pts, &AttainableSet::Full, &tol())
                .unwrap()
                .holds
        );
        assert!(
            check_force_matching(&id, &s, &s2, &pts, &AttainableSet::Full, &tol())
                .unwrap()
                .holds
        );
        let none_att = AttainableSet::Subspace(Subspace::zero(1, false));
        assert!(
            !check_force_matching(&id, &s, &s2, &pts, &none_att, &tol())
                .unwrap()
                .holds
        );
        let bounded = AttainableSet::Box {
            lo: v(&[-10.0]),
            hi: v(&[10.0]),
        };
        assert!(
            check_force_matching(&id, &s, &s2, &pts, &bounded, &tol())
                .unwrap()
                .holds
        );

        // Mismatched kinetic energy leaves a base component.
        let s3 = oscillator(1.0, 2.0);
        let r = check_force_matching(&id, &s, &s3, &pts, &AttainableSet::Full, &tol()).unwrap();
        assert!(!r.holds && r.max_base_norm > 0.1);
        assert!(matches!(
            solve_control_law(&id, &s, &s3, None, &v(&[0.0, 1.0])),
            Err(Error::NotVertical { .. })
        ));
    }

    #[test]
    fn control_law_examples() {
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let s = oscillator(1.0, 1.0);
        let s2 = oscillator(1.0, 1.0).with_force(stiffening(1.0));
        let x = v(&[0.6, -0.4]);
        let u1 = solve_control_law(&id, &s, &s2, Some(&none()), &x).unwrap();
        assert!((u1 - v(&[0.0, -0.6])).norm() < 1e-9);

        let u2 = stiffening(0.3);
        let u1 = solve_control_law(&id, &s, &s, Some(&u2), &x).unwrap();
        assert!((u1 - v(&[0.0, -0.18])).norm() < 1e-9);
    }

    #[test]
    fn conjugacy_with_identical_systems() {
        let id = cotangent_lift(&Diffeo::identity(1), &[], &tol()).unwrap();
        let s = oscillator(1.0, 1.0);
        let r = verify_conjugacy(&id, &s, &none(), &s, &none(), &v(&[1.0, 0.0]), 5.0, 1e-2).unwrap();
        assert!(r.trajectory_residual < 1e-12 && r.field_residual < 1e-9);
    }

    #[test]
    fn conjugacy_with_solved_and_zeroed_control() {
        let scale = cotangent_lift(&Diffeo::linear(DMatrix::from_element(1, 1, 2.0)).unwrap(), &[], &tol()).unwrap();
        let s1 = oscillator(1.0, 1.0);
        // H2 = 2 p̄² + k q̄²/8 with k = 2, plus damping -0.1 p̄.
        let damping = Actuation::Vertical(VectorField::linear(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 0.0, 0.0, -0.1],
        )));
        let s2 = oscillator(0.25 * 2.0, 4.0).with_force(damping);
        let u1 = solved_control(&scale, &s1, &s2, Some(&none()));
        let x0 = v(&[1.0, 0.3]);
        let good = verify_conjugacy(&scale, &s1, &u1, &s2, &none(), &x0, 10.0, 1e-3).unwrap();
        assert!(good.trajectory_residual < 1e-6, "{}", good.trajectory_residual);
        assert!(good.field_residual < 1e-6);
        let bad = verify_conjugacy(&scale, &s1, &none(), &s2, &none(), &x0, 10.0, 1e-3).unwrap();
        assert!(bad.trajectory_residual > 0.1);
    }
}
