//! Controlled Hamiltonian systems: fiber-preserving maps, vertical lifts,
//! closed-loop fields, fixed-step integration and conservation diagnostics.
//!
//! Phase points are `x = (q, p)` with the first `base_dim` entries on the
//! base. A reduced phase space with no base (e.g. `so(3)*`) has
//! `base_dim = 0` and every vector is vertical.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorMap};
use crate::poisson::{hamiltonian_field, PoissonStructure};
use crate::reduce::Submanifold;
use crate::scalar::{max_of, NanExt, Real};
use crate::tol::Tolerances;

/// A map `E → E` over the identity of the base: `π ∘ M = π`.
#[derive(Clone, Debug)]
pub struct FiberMap<T: Real> {
    base_dim: usize,
    map: VectorMap<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberCheck<T> {
    pub preserving: bool,
    pub max_residual: T,
}

fn base_part<T: Real>(x: &DVector<T>, n: usize) -> DVector<T> {
    x.rows(0, n).into_owned()
}

impl<T: Real> FiberMap<T> {
    pub fn new(base_dim: usize, map: VectorMap<T>) -> Self {
        Self { base_dim, map }
    }

    pub fn identity(base_dim: usize, phase_dim: usize) -> Self {
        Self::new(base_dim, VectorMap::identity(phase_dim))
    }

    /// `(q, p) ↦ (q, 0)`; its vertical lift is zero for every field whose
    /// base component vanishes, and in general contributes no force.
    pub fn zero_fiber(base_dim: usize, phase_dim: usize) -> Self {
        let mut a = nalgebra::DMatrix::zeros(phase_dim, phase_dim);
        for i in 0..base_dim {
            a[(i, i)] = T::one();
        }
        Self::new(base_dim, VectorMap::linear(a))
    }

    /// `(q, p) ↦ (q, M x + c)` for an `(N - n) × N` matrix `M`.
    pub fn fiber_affine(base_dim: usize, m: nalgebra::DMatrix<T>, c: DVector<T>) -> Self {
        let phase_dim = m.ncols();
        let mut a = nalgebra::DMatrix::zeros(phase_dim, phase_dim);
        for i in 0..base_dim {
            a[(i, i)] = T::one();
        }
        a.view_mut((base_dim, 0), (phase_dim - base_dim, phase_dim))
            .copy_from(&m);
        let mut b = DVector::zeros(phase_dim);
        b.rows_mut(base_dim, phase_dim - base_dim).copy_from(&c);
        Self::new(base_dim, VectorMap::affine(a, b))
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn phase_dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn map(&self) -> &VectorMap<T> {
        &self.map
    }

    pub fn value(&self, x: &DVector<T>) -> DVector<T> {
        self.map.value(x)
    }

    pub fn base_residual(&self, x: &DVector<T>) -> T {
        (base_part(&self.value(x), self.base_dim) - base_part(x, self.base_dim)).norm()
    }
}

pub fn is_fiber_preserving<T: Real>(m: &FiberMap<T>, points: &[DVector<T>], tol: T) -> FiberCheck<T> {
    let max_residual = points.iter().map(|x| m.base_residual(x)).fold(T::zero(), max_of);
    FiberCheck {
        preserving: max_residual < tol,
        max_residual,
    }
}

/// Which tangent vector is pushed through `TM` before taking the vertical part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LiftReading {
    /// `T_xM · X(x)`.
    #[default]
    Pushforward,
    /// `T_xM · X(M(x))`.
    AtImage,
}

/// `vlift(M)X(x)`: the fiber component of the pushed-forward vector,
/// transported back to `x` along the straight fiber segment (identity on
/// fiber components).
pub fn vertical_lift<T: Real>(
    m: &FiberMap<T>,
    x_field: &VectorField<T>,
    x: &DVector<T>,
    reading: LiftReading,
    tol: &Tolerances<T>,
) -> Result<DVector<T>> {
    let residual = m.base_residual(x);
    if residual.is_nan() || residual >= tol.tol {
        return Err(Error::NotFiberPreserving {
            residual: residual.as_f64(),
        });
    }
    let tangent = match reading {
        LiftReading::Pushforward => x_field.value(x),
        LiftReading::AtImage => x_field.value(&m.value(x)),
    };
    let pushed = m.map.jacobian(x) * tangent;
    let mut out = pushed;
    out.rows_mut(0, m.base_dim).fill(T::zero());
    Ok(out)
}

/// A force or control contribution: either a fiber map whose vertical lift
/// is taken along `X_H`, or an already-vertical field given directly.
#[derive(Clone, Debug)]
pub enum Actuation<T: Real> {
    Map(FiberMap<T>),
    Vertical(VectorField<T>),
}

impl<T: Real> Actuation<T> {
    /// Vertical vector contributed at `x`.
    pub fn lift(
        &self,
        base_dim: usize,
        x_h: &VectorField<T>,
        x: &DVector<T>,
        reading: LiftReading,
        tol: &Tolerances<T>,
    ) -> Result<DVector<T>> {
        match self {
            Actuation::Map(m) => vertical_lift(m, x_h, x, reading, tol),
            Actuation::Vertical(f) => {
                let mut v = f.value(x);
                let base_norm = base_part(&v, base_dim).norm();
                if base_norm >= tol.tol {
                    return Err(Error::NotVertical {
                        base_norm: base_norm.as_f64(),
                    });
                }
                v.rows_mut(0, base_dim).fill(T::zero());
                Ok(v)
            }
        }
    }
}

/// The 5-tuple: phase space Poisson structure, Hamiltonian, force, control
/// subset, and an optional control law.
#[derive(Clone, Debug)]
pub struct CHSystem<T: Real> {
    pub base_dim: usize,
    pub structure: PoissonStructure<T>,
    pub hamiltonian: ScalarField<T>,
    pub force: Option<Actuation<T>>,
    pub control_subset: Submanifold<T>,
    pub control_law: Option<Actuation<T>>,
    pub reading: LiftReading,
    pub tol: Tolerances<T>,
}

impl<T: Real> CHSystem<T> {
    pub fn new(base_dim: usize, structure: PoissonStructure<T>, hamiltonian: ScalarField<T>) -> Self {
        let n = structure.dim();
        Self {
            base_dim,
            structure,
            hamiltonian,
            force: None,
            control_subset: Submanifold::full_space(n),
            control_law: None,
            reading: LiftReading::default(),
            tol: Tolerances::default(),
        }
    }

    pub fn with_force(mut self, f: Actuation<T>) -> Self {
        self.force = Some(f);
        self
    }

    pub fn with_control_subset(mut self, w: Submanifold<T>) -> Self {
        self.control_subset = w;
        self
    }

    pub fn with_control_law(mut self, u: Actuation<T>) -> Self {
        self.control_law = Some(u);
        self
    }

    pub fn with_reading(mut self, reading: LiftReading) -> Self {
        self.reading = reading;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn phase_dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn hamiltonian_field(&self) -> VectorField<T> {
        hamiltonian_field(&self.structure, &self.hamiltonian)
    }

    /// Clamps a fiber-map control value onto `W`: projected when within
    /// `clamp_tol`, rejected otherwise.
    pub fn clamp_control(&self, value: &DVector<T>) -> Result<DVector<T>> {
        let w = &self.control_subset;
        if w.is_full_space() {
            return Ok(value.clone());
        }
        let r = w.membership_residual(value);
        if r > self.tol.clamp_tol {
            return Err(Error::OffSubmanifold { residual: r.as_f64() });
        }
        w.project(value, &self.tol)
    }

    fn clamped(&self, u: &Actuation<T>) -> Actuation<T> {
        match u {
            Actuation::Map(m) if !self.control_subset.is_full_space() => {
                let (sys, inner) = (self.clone(), m.clone());
                let n = m.phase_dim();
                let map = VectorMap::new(n, n, move |x| {
                    sys.clamp_control(&inner.value(x))
                        .unwrap_or_else(|_| DVector::from_element(n, T::nan()))
                });
                Actuation::Map(FiberMap::new(m.base_dim(), map))
            }
            other => other.clone(),
        }
    }

    /// Closed-loop vector `X_H + vlift(F) + vlift(u)` at `x`.
    pub fn closed_loop_value(&self, u: Option<&Actuation<T>>, x: &DVector<T>) -> Result<DVector<T>> {
        let u = u.or(self.control_law.as_ref()).ok_or(Error::MissingControl)?;
        let u = self.clamped(u);
        let x_h = self.hamiltonian_field();
        let mut v = x_h.value(x);
        if let Some(f) = &self.force {
            v += f.lift(self.base_dim, &x_h, x, self.reading, &self.tol)?;
        }
        v += u.lift(self.base_dim, &x_h, x, self.reading, &self.tol)?;
        Ok(v)
    }
}

/// The closed-loop dynamics as a vector field. Points where a lift fails
/// evaluate to NaN, which [`integrate`] reports with the step index.
pub fn closed_loop_field<T: Real>(sys: &CHSystem<T>, u: Option<&Actuation<T>>) -> Result<VectorField<T>> {
    let u = u.or(sys.control_law.as_ref()).ok_or(Error::MissingControl)?.clone();
    let sys = sys.clone();
    let n = sys.phase_dim();
    Ok(VectorField::new(n, move |x| {
        sys.closed_loop_value(Some(&u), x)
            .unwrap_or_else(|_| DVector::from_element(n, T::nan()))
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Midpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &DVector<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// CSV with columns `t, x1..xN[, H, C1..]`.
    pub fn to_csv(&self, diag: Option<&Diagnostics<T>>) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        if let Some(d) = diag {
            out.push_str(",H");
            for k in 1..=d.casimirs.len() {
                let _ = write!(out, ",C{k}");
            }
        }
        out.push('\n');
        for (i, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{}", t.as_f64());
            for v in s.iter() {
                let _ = write!(out, ",{}", v.as_f64());
            }
            if let Some(d) = diag {
                let _ = write!(out, ",{}", d.energy[i].as_f64());
                for c in &d.casimirs {
                    let _ = write!(out, ",{}", c[i].as_f64());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, diag: Option<&Diagnostics<T>>) -> String {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            x: Vec<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            energy: Option<f64>,
            #[serde(skip_serializing_if = "Vec::is_empty")]
            casimirs: Vec<f64>,
        }
        let rows: Vec<Row> = self
            .times
            .iter()
            .zip(&self.states)
            .enumerate()
            .map(|(i, (t, s))| Row {
                t: t.as_f64(),
                x: s.iter().map(|v| v.as_f64()).collect(),
                energy: diag.map(|d| d.energy[i].as_f64()),
                casimirs: diag
                    .map(|d| d.casimirs.iter().map(|c| c[i].as_f64()).collect())
                    .unwrap_or_default(),
            })
            .collect();
        serde_json::to_string(&rows).expect("trajectory rows serialize")
    }
}

fn step<T: Real>(f: &VectorField<T>, x: &DVector<T>, h: T, method: Method) -> DVector<T> {
    let half = T::lit(0.5);
    match method {
        Method::Midpoint => {
            let k1 = f.value(x);
            let k2 = f.value(&(x + &k1 * (h * half)));
            x + k2 * h
        }
        Method::Rk4 => {
            let k1 = f.value(x);
            let k2 = f.value(&(x + &k1 * (h * half)));
            let k3 = f.value(&(x + &k2 * (h * half)));
            let k4 = f.value(&(x + &k3 * h));
            let sixth = h / T::lit(6.0);
            x + (k1 + (k2 + k3) * T::lit(2.0) + k4) * sixth
        }
    }
}

/// Fixed-step integration on `[0, t_final]`. The step is shrunk uniformly
/// to `t_final / ceil(t_final / dt)` so the grid ends exactly at `t_final`.
pub fn integrate<T: Real>(
    field: &VectorField<T>,
    x0: &DVector<T>,
    t_final: T,
    dt: T,
    method: Method,
) -> Result<Trajectory<T>> {
    if dt.is_nan() || t_final.is_nan() || dt <= T::zero() || t_final < T::zero() {
        return Err(Error::InvalidStep(format!(
            "dt = {}, t_final = {}",
            dt.as_f64(),
            t_final.as_f64()
        )));
    }
    let mut traj = Trajectory {
        times: vec![T::zero()],
        states: vec![x0.clone()],
    };
    if t_final == T::zero() {
        return Ok(traj);
    }
    let ratio = (t_final / dt).as_f64();
    let steps = ((ratio - 1e-9).ceil() as usize).max(1);
    let h = t_final / T::lit(steps as f64);
    let mut x = x0.clone();
    for k in 1..=steps {
        x = step(field, &x, h, method);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        traj.times.push(h * T::lit(k as f64));
        traj.states.push(x.clone());
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics<T> {
    pub energy: Vec<T>,
    /// One series per declared Casimir of the phase structure.
    pub casimirs: Vec<Vec<T>>,
    pub max_energy_drift: T,
    pub max_casimir_drift: Vec<T>,
    /// Energy never rises by more than `1e-12 · max(1, |H|)` between steps.
    pub energy_nonincreasing: bool,
    /// `max |dH · X|` along the trajectory when the generating field is given.
    pub energy_rate: Option<T>,
}

fn drift<T: Real>(series: &[T]) -> T {
    let first = series.first().copied().unwrap_or(T::zero());
    series.iter().map(|&v| (v - first).abs()).fold(T::zero(), max_of)
}

pub fn diagnostics<T: Real>(traj: &Trajectory<T>, sys: &CHSystem<T>, field: Option<&VectorField<T>>) -> Diagnostics<T> {
    let energy: Vec<T> = traj.states.iter().map(|x| sys.hamiltonian.value(x)).collect();
    let casimirs: Vec<Vec<T>> = sys
        .structure
        .casimirs()
        .iter()
        .map(|c| traj.states.iter().map(|x| c.value(x)).collect())
        .collect();
    let slack = T::lit(1e-12);
    let energy_nonincreasing = energy.windows(2).all(|w| {
        let scale = max_of(T::one(), w[0].abs());
        w[1] <= w[0] + slack * scale
    });
    let energy_rate = field.map(|f| {
        traj.states
            .iter()
            .map(|x| sys.hamiltonian.gradient(x).dot(&f.value(x)).abs())
            .fold(T::zero(), max_of)
    });
    Diagnostics {
        max_energy_drift: drift(&energy),
        max_casimir_drift: casimirs.iter().map(|c| drift(c)).collect(),
        energy,
        casimirs,
        energy_nonincreasing,
        energy_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::rigid_body_hamiltonian;
    use crate::sampling::sample_box;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn oscillator() -> CHSystem<f64> {
        let h = ScalarField::quadratic(DMatrix::identity(2, 2), DVector::zeros(2), 0.0);
        CHSystem::new(1, PoissonStructure::canonical(1), h)
    }

    fn no_op() -> Actuation<f64> {
        Actuation::Vertical(VectorField::zero(2))
    }

    #[test]
    fn fiber_preservation() {
        let pts = sample_box::<f64>(2, 10, 2.0, 1);
        let id = FiberMap::identity(1, 2);
        let c = is_fiber_preserving(&id, &pts, 1e-12);
        assert!(c.preserving && c.max_residual == 0.0);
        let shift = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), v(&[0.7]));
        assert!(is_fiber_preserving(&shift, &pts, 1e-12).preserving);
        let shear = FiberMap::new(1, VectorMap::new(2, 2, |x: &DVector<f64>| v(&[x[0] + x[1], x[1]])));
        let at = v(&[0.2, -1.5]);
        let c = is_fiber_preserving(&shear, &[at], 1e-12);
        assert!(!c.preserving);
        assert!((c.max_residual - 1.5).abs() < 1e-15);
    }

    #[test]
    fn vertical_lift_examples() {
        let sys = oscillator();
        let x_h = sys.hamiltonian_field();
        let tol = Tolerances::default();
        let x = v(&[0.8, -0.3]);
        let id = FiberMap::identity(1, 2);
        let l = vertical_lift(&id, &x_h, &x, LiftReading::Pushforward, &tol).unwrap();
        assert!((l - v(&[0.0, -0.8])).norm() < 1e-12);

        let zero = VectorField::zero(2);
        assert_eq!(
            vertical_lift(&id, &zero, &x, LiftReading::Pushforward, &tol)
                .unwrap()
                .norm(),
            0.0
        );

        let double = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[0.0, 2.0]), v(&[0.0]));
        let l = vertical_lift(&double, &x_h, &x, LiftReading::Pushforward, &tol).unwrap();
        assert!((l - v(&[0.0, -1.6])).norm() < 1e-12);

        let shear = FiberMap::new(1, VectorMap::new(2, 2, |x: &DVector<f64>| v(&[x[0] + x[1], x[1]])));
        assert!(matches!(
            vertical_lift(&shear, &x_h, &x, LiftReading::Pushforward, &tol),
            Err(Error::NotFiberPreserving { .. })
        ));
    }

    #[test]
    fn readings_agree_for_identity_and_differ_otherwise() {
        let sys = oscillator();
        let x_h = sys.hamiltonian_field();
        let tol = Tolerances::default();
        let x = v(&[0.8, -0.3]);
        let id = FiberMap::identity(1, 2);
        let a = vertical_lift(&id, &x_h, &x, LiftReading::Pushforward, &tol).unwrap();
        let b = vertical_lift(&id, &x_h, &x, LiftReading::AtImage, &tol).unwrap();
        assert!((a - b).norm() < 1e-12);
        let double = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[0.0, 2.0]), v(&[0.0]));
        let a = vertical_lift(&double, &x_h, &x, LiftReading::Pushforward, &tol).unwrap();
        let b = vertical_lift(&double, &x_h, &x, LiftReading::AtImage, &tol).unwrap();
        // X_H at x has p-velocity -q = -0.8; at M(x) = (0.8, -0.6) it is also -0.8.
        assert!((a - b).norm() < 1e-12);
        let bump = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[0.0]));
        let a = vertical_lift(&bump, &x_h, &x, LiftReading::Pushforward, &tol).unwrap();
        let b = vertical_lift(&bump, &x_h, &x, LiftReading::AtImage, &tol).unwrap();
        assert!((a - b).norm() > 0.1);
    }

    #[test]
    fn closed_loop_examples() {
        let sys = oscillator();
        let x = v(&[0.4, 1.1]);
        let plain = sys.closed_loop_value(Some(&no_op()), &x).unwrap();
        assert!((plain - sys.hamiltonian_field().value(&x)).norm() < 1e-15);

        let double = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[0.0, 2.0]), v(&[0.0]));
        let forced = sys.clone().with_force(Actuation::Map(double));
        let val = forced.closed_loop_value(Some(&no_op()), &x).unwrap();
        assert!((val - v(&[1.1, -1.2])).norm() < 1e-12);

        assert!(matches!(closed_loop_field(&sys, None), Err(Error::MissingControl)));

        let inertia = [1.0, 2.0, 3.0];
        let eps = 0.1;
        let rb = CHSystem::new(0, PoissonStructure::lie_poisson_so3(), rigid_body_hamiltonian(inertia));
        let damping = Actuation::Vertical(VectorField::linear(DMatrix::identity(3, 3) * -eps));
        let mu = v(&[0.5, -1.0, 2.0]);
        let got = rb.closed_loop_value(Some(&damping), &mu).unwrap();
        let omega = v(&[0.5, -0.5, 2.0 / 3.0]);
        assert!((got - (mu.cross(&omega) - &mu * eps)).norm() < 1e-12);
    }

    #[test]
    fn control_clamping() {
        // W = {p = 0.5}; control maps onto it up to a tiny offset.
        let w = Submanifold::from_constraints(
            2,
            vec![ScalarField::coordinate(2, 1).add(&ScalarField::constant(2, -0.5))],
        );
        let sys = oscillator().with_control_subset(w);
        let near = FiberMap::fiber_affine(1, DMatrix::zeros(1, 2), v(&[0.5 + 1e-9]));
        let far = FiberMap::fiber_affine(1, DMatrix::zeros(1, 2), v(&[0.9]));
        let x = v(&[0.3, 0.2]);
        assert!(sys.closed_loop_value(Some(&Actuation::Map(near)), &x).is_ok());
        let f = closed_loop_field(&sys, Some(&Actuation::Map(far))).unwrap();
        assert!(f.value(&x).iter().all(|c| c.is_nan()));
        assert_eq!(
            integrate(&f, &x, 1.0, 0.1, Method::Rk4),
            Err(Error::NonFinite { step: 1 })
        );
    }

    #[test]
    fn rk4_rotation_returns_home() {
        let f = VectorField::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let tau = std::f64::consts::TAU;
        let traj = integrate(&f, &v(&[1.0, 0.0]), tau, tau / 1000.0, Method::Rk4).unwrap();
        assert_eq!(traj.len(), 1001);
        assert!((traj.final_state() - v(&[1.0, 0.0])).norm() < 1e-8);
        assert!((traj.times.last().unwrap() - tau).abs() < 1e-12);
        let zero = integrate(&f, &v(&[1.0, 0.0]), 0.0, 0.1, Method::Rk4).unwrap();
        assert_eq!(zero.states, vec![v(&[1.0, 0.0])]);
        assert!(integrate(&f, &v(&[1.0, 0.0]), 1.0, 0.0, Method::Rk4).is_err());
    }

    #[test]
    fn rk4_is_fourth_order_and_midpoint_second() {
        let f = VectorField::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let exact = v(&[1f64.cos(), -1f64.sin()]);
        let err =
            |dt: f64, m: Method| (integrate(&f, &v(&[1.0, 0.0]), 1.0, dt, m).unwrap().final_state() - &exact).norm();
        let rk = (err(0.1, Method::Rk4) / err(0.05, Method::Rk4)).log2();
        let mp = (err(0.1, Method::Midpoint) / err(0.05, Method::Midpoint)).log2();
        assert!(rk > 3.8 && rk < 4.3, "rk4 order {rk}");
        assert!(mp > 1.8 && mp < 2.3, "midpoint order {mp}");
    }

    #[test]
    fn diagnostics_examples() {
        let sys = oscillator();
        let f = closed_loop_field(&sys, Some(&no_op())).unwrap();
        let traj = integrate(&f, &v(&[1.0, 0.5]), 10.0, 1e-3, Method::Rk4).unwrap();
        let d = diagnostics(&traj, &sys, Some(&f));
        assert!(d.max_energy_drift < 1e-9);
        assert!(d.energy_rate.unwrap() < 1e-12);

        let flat = CHSystem::new(1, PoissonStructure::canonical(1), ScalarField::constant(2, 3.0));
        let d = diagnostics(&traj, &flat, None);
        assert_eq!(d.max_energy_drift, 0.0);

        let eps = 0.2;
        let damped = sys.with_force(Actuation::Vertical(VectorField::linear(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 0.0, 0.0, -eps],
        ))));
        let f = closed_loop_field(&damped, Some(&no_op())).unwrap();
        let traj = integrate(&f, &v(&[1.0, 0.0]), 10.0, 1e-3, Method::Rk4).unwrap();
        let d = diagnostics(&traj, &damped, None);
        assert!(d.energy_nonincreasing);
        assert!(d.energy.last().unwrap() < &(0.5 * d.energy[0]));
    }

    #[test]
    fn damping_as_fiber_map() {
        // M(q, p) = (q, -ε q) lifts X_H = (p, -q) to (0, -ε p).
        let eps = 0.3;
        let sys = oscillator();
        let m = FiberMap::fiber_affine(1, DMatrix::from_row_slice(1, 2, &[-eps, 0.0]), v(&[0.0]));
        let l = vertical_lift(
            &m,
            &sys.hamiltonian_field(),
            &v(&[0.4, 2.0]),
            LiftReading::Pushforward,
            &sys.tol,
        )
        .unwrap();
        assert!((l - v(&[0.0, -eps * 2.0])).norm() < 1e-12);
    }

    #[test]
    fn rigid_body_casimir_conserved() {
        let rb = CHSystem::new(
            0,
            PoissonStructure::lie_poisson_so3(),
            rigid_body_hamiltonian([1.0, 2.0, 3.0]),
        );
        let f = closed_loop_field(&rb, Some(&Actuation::Vertical(VectorField::zero(3)))).unwrap();
        let traj = integrate(&f, &v(&[1.0, 0.01, 0.0]), 100.0, 1e-3, Method::Rk4).unwrap();
        let d = diagnostics(&traj, &rb, None);
        assert!(d.max_casimir_drift[0] < 1e-8, "drift {}", d.max_casimir_drift[0]);
    }

    #[test]
    fn trajectory_export() {
        let rb = CHSystem::new(
            0,
            PoissonStructure::lie_poisson_so3(),
            rigid_body_hamiltonian([1.0, 2.0, 3.0]),
        );
        let f = rb.hamiltonian_field();
        let traj = integrate(&f, &v(&[1.0, 0.0, 0.0]), 0.2, 0.1, Method::Rk4).unwrap();
        let d = diagnostics(&traj, &rb, None);
        let csv = traj.to_csv(Some(&d));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,x2,x3,H,C1"));
        assert_eq!(lines.next(), Some("0,1,0,0,0.5,1"));
        assert_eq!(csv.lines().count(), 4);
        let json: serde_json::Value = serde_json::from_str(&traj.to_json(Some(&d))).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 3);
        assert_eq!(json[0]["energy"], 0.5);
    }
}
