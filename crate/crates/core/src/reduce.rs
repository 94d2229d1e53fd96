//! Control subsets, distributions and the pointwise reducibility machinery.
//!
//! The reducibility criterion is evaluated fiberwise: at each `z ∈ W` the
//! differentials of `D`-invariant functions are taken to be `D(z)°` and the
//! ones that are also constant on `W` span the annihilator of
//! `T_zW + D(z)`, so the test is `B♯(D(z)°) ⊆ T_zW + D(z)`.

use nalgebra::{DMatrix, DVector};

use crate::chsys::{integrate, Method};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorMap};
use crate::pointlin::{
    annihilator, inclusion_residual, numerical_rank, pseudo_solve, sharp_image, subspace_intersect, subspace_sum,
    Subspace,
};
use crate::poisson::{bracket_at, lie_bracket, PoissonStructure};
use crate::sampling::Sampler;
use crate::scalar::{max_of, Real};
use crate::tol::{LinTol, Tolerances};
use crate::verdict::Verdict;

const PROJECT_MAX_ITERS: usize = 50;

/// An embedded submanifold of `R^N`, given by a constraint `c: R^N → R^k`
/// with regular zero level and/or a parametrization `R^d → R^N`.
#[derive(Clone, Debug)]
pub struct Submanifold<T: Real> {
    ambient_dim: usize,
    constraint: Option<VectorMap<T>>,
    param: Option<VectorMap<T>>,
}

impl<T: Real> Submanifold<T> {
    pub fn full_space(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            constraint: Some(VectorMap::new(ambient_dim, 0, |_| DVector::zeros(0))),
            param: None,
        }
    }

    pub fn from_constraint_map(map: VectorMap<T>) -> Self {
        Self {
            ambient_dim: map.in_dim(),
            constraint: Some(map),
            param: None,
        }
    }

    /// Zero set of the given scalar constraints.
    pub fn from_constraints(ambient_dim: usize, constraints: Vec<ScalarField<T>>) -> Self {
        Self::from_constraint_map(VectorMap::from_components(ambient_dim, constraints))
    }

    /// Coordinate subspace `{x_i = 0 for i in axes}`.
    pub fn coordinate_zero(ambient_dim: usize, axes: &[usize]) -> Self {
        Self::from_constraints(
            ambient_dim,
            axes.iter().map(|&i| ScalarField::coordinate(ambient_dim, i)).collect(),
        )
    }

    pub fn from_parametrization(param: VectorMap<T>) -> Self {
        Self {
            ambient_dim: param.out_dim(),
            constraint: None,
            param: Some(param),
        }
    }

    pub fn with_parametrization(mut self, param: VectorMap<T>) -> Self {
        self.param = Some(param);
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn constraint(&self) -> Option<&VectorMap<T>> {
        self.constraint.as_ref()
    }

    pub fn parametrization(&self) -> Option<&VectorMap<T>> {
        self.param.as_ref()
    }

    pub fn codim(&self) -> usize {
        match (&self.constraint, &self.param) {
            (Some(c), _) => c.out_dim(),
            (None, Some(p)) => self.ambient_dim - p.in_dim(),
            (None, None) => 0,
        }
    }

    pub fn is_full_space(&self) -> bool {
        self.codim() == 0
    }

    /// `|c(z)|`. A parametrization-only submanifold cannot be tested and
    /// reports zero.
    pub fn membership_residual(&self, z: &DVector<T>) -> T {
        match &self.constraint {
            Some(c) => c.value(z).norm(),
            None => T::zero(),
        }
    }

    pub fn contains(&self, z: &DVector<T>, tol: &Tolerances<T>) -> bool {
        self.membership_residual(z) < tol.memb_tol
    }

    pub(crate) fn require_member(&self, z: &DVector<T>, tol: &Tolerances<T>) -> Result<()> {
        let r = self.membership_residual(z);
        if r < tol.memb_tol {
            Ok(())
        } else {
            Err(Error::OffSubmanifold { residual: r.as_f64() })
        }
    }

    /// Conormal space `(T_zW)°`, spanned by the constraint gradients.
    pub fn conormal_at(&self, z: &DVector<T>, tol: &Tolerances<T>) -> Result<Subspace<T>> {
        let c = self.constraint.as_ref().ok_or(Error::NoConstraint)?;
        let k = c.out_dim();
        if k == 0 {
            return Ok(Subspace::zero(self.ambient_dim, true));
        }
        let jt = c.jacobian(z).transpose();
        let rank_tol = LinTol {
            rank_abs: max_of(tol.lin.rank_abs, tol.singular_tol),
            ..tol.lin
        };
        let rank = numerical_rank(&jt, &rank_tol);
        if rank < k {
            return Err(Error::RankDeficient { rank, expected: k });
        }
        Ok(Subspace::from_columns(&jt, true, &tol.lin))
    }

    /// `T_zW` as the kernel of the constraint jacobian.
    pub fn tangent_at(&self, z: &DVector<T>, tol: &Tolerances<T>) -> Result<Subspace<T>> {
        if self.constraint.is_none() && self.param.is_none() {
            return Ok(Subspace::full(self.ambient_dim, false));
        }
        Ok(annihilator(&self.conormal_at(z, tol)?, &tol.lin))
    }

    /// `T_{φ(s)}W` as the column span of the parametrization jacobian.
    pub fn tangent_at_param(&self, s: &DVector<T>, tol: &Tolerances<T>) -> Result<Subspace<T>> {
        let p = self.param.as_ref().ok_or(Error::NoConstraint)?;
        Ok(Subspace::from_columns(&p.jacobian(s), false, &tol.lin))
    }

    /// Gauss-Newton projection of `z` onto the constraint zero set
    /// (minimum-norm steps, at most 50 iterations).
    pub fn project(&self, z: &DVector<T>, tol: &Tolerances<T>) -> Result<DVector<T>> {
        let c = match &self.constraint {
            Some(c) if c.out_dim() > 0 => c,
            _ => return Ok(z.clone()),
        };
        let mut x = z.clone();
        for _ in 0..PROJECT_MAX_ITERS {
            let r = c.value(&x);
            if r.norm() < tol.project_tol {
                return Ok(x);
            }
            let j = c.jacobian(&x);
            if numerical_rank(
                &j,
                &LinTol {
                    rank_abs: tol.singular_tol,
                    ..tol.lin
                },
            ) == 0
            {
                return Err(Error::SingularJacobian);
            }
            x -= pseudo_solve(&j, &r, tol.singular_tol);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::OffSubmanifold { residual: f64::NAN });
            }
        }
        let r = c.value(&x).norm();
        if r < tol.memb_tol {
            Ok(x)
        } else {
            Err(Error::OffSubmanifold { residual: r.as_f64() })
        }
    }

    /// Seeded points on `W`: parameters drawn from the box when a
    /// parametrization exists, otherwise ambient seeds projected onto `W`.
    pub fn sample(&self, count: usize, half_width: f64, seed: u64, tol: &Tolerances<T>) -> Vec<DVector<T>> {
        let mut sampler = Sampler::new(seed);
        if let (None, Some(p)) = (&self.constraint, &self.param) {
            return (0..count)
                .map(|_| p.value(&sampler.point(p.in_dim(), half_width)))
                .collect();
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < 20 * count.max(1) {
            attempts += 1;
            let seed_pt = sampler.point(self.ambient_dim, half_width);
            if let Ok(z) = self.project(&seed_pt, tol) {
                out.push(z);
            }
        }
        out
    }
}

/// Self-declared properties of a distribution (not verified here).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistributionClaims {
    pub poisson: bool,
    pub integrable: bool,
    pub g_invariant: bool,
}

/// A distribution spanned pointwise by a finite family of vector fields.
#[derive(Clone, Debug)]
pub struct Distribution<T: Real> {
    dim: usize,
    generators: Vec<VectorField<T>>,
    pub claims: DistributionClaims,
}

impl<T: Real> Distribution<T> {
    pub fn new(dim: usize, generators: Vec<VectorField<T>>) -> Self {
        Self {
            dim,
            generators,
            claims: DistributionClaims::default(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    /// Span of constant coordinate fields `∂x_i`.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Self {
        let gens = axes
            .iter()
            .map(|&i| {
                let mut e = DVector::zeros(dim);
                e[i] = T::one();
                VectorField::constant(e)
            })
            .collect();
        Self::new(dim, gens)
    }

    pub fn with_claims(mut self, claims: DistributionClaims) -> Self {
        self.claims = claims;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[VectorField<T>] {
        &self.generators
    }

    pub fn fiber_at(&self, z: &DVector<T>, tol: &LinTol<T>) -> Subspace<T> {
        let m = DMatrix::from_fn(self.dim, self.generators.len(), |_, _| T::zero());
        let mut m = m;
        for (c, g) in self.generators.iter().enumerate() {
            m.set_column(c, &g.value(z));
        }
        Subspace::from_columns(&m, false, tol)
    }
}

/// `D_W(z) = D(z) ∩ T_zW`.
pub fn dw_fiber<T: Real>(
    d: &Distribution<T>,
    w: &Submanifold<T>,
    z: &DVector<T>,
    tol: &Tolerances<T>,
) -> Result<Subspace<T>> {
    w.require_member(z, tol)?;
    subspace_intersect(&d.fiber_at(z, &tol.lin), &w.tangent_at(z, tol)?, &tol.lin)
}

#[derive(Clone, Debug, PartialEq)]
pub enum SkipReason {
    RankDeficient { rank: usize, expected: usize },
    OffSubmanifold { residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointOutcome<T> {
    pub index: usize,
    pub residual: T,
    pub passed: bool,
    pub distribution_rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducibilityReport<T> {
    pub verdict: Verdict,
    pub points: Vec<PointOutcome<T>>,
    pub skipped: Vec<(usize, SkipReason)>,
    pub max_residual: T,
    /// Points where `dim D(z)` is below the largest rank seen.
    pub rank_drop_points: Vec<usize>,
}

impl<T> ReducibilityReport<T> {
    pub fn tested(&self) -> usize {
        self.points.len()
    }
}

/// Pointwise criterion `B♯(D(z)°) ⊆ T_zW + D(z)` at every sample.
pub fn reducibility_check<T: Real>(
    b: &PoissonStructure<T>,
    w: &Submanifold<T>,
    d: &Distribution<T>,
    points: &[DVector<T>],
    tol: &Tolerances<T>,
) -> Result<ReducibilityReport<T>> {
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for (index, z) in points.iter().enumerate() {
        let memb = w.membership_residual(z);
        if memb >= tol.memb_tol {
            skipped.push((
                index,
                SkipReason::OffSubmanifold {
                    residual: memb.as_f64(),
                },
            ));
            continue;
        }
        let tw = match w.tangent_at(z, tol) {
            Ok(t) => t,
            Err(Error::RankDeficient { rank, expected }) => {
                skipped.push((index, SkipReason::RankDeficient { rank, expected }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let dz = d.fiber_at(z, &tol.lin);
        let delta = annihilator(&dz, &tol.lin);
        let lhs = sharp_image(&b.tensor(z), &delta, &tol.lin)?;
        let rhs = subspace_sum(&tw, &dz, &tol.lin)?;
        let residual = inclusion_residual(&lhs, &rhs)?;
        outcomes.push(PointOutcome {
            index,
            residual,
            passed: residual < tol.tol,
            distribution_rank: dz.dim(),
        });
    }
    let max_rank = outcomes.iter().map(|o| o.distribution_rank).max().unwrap_or(0);
    let rank_drop_points = outcomes
        .iter()
        .filter(|o| o.distribution_rank < max_rank)
        .map(|o| o.index)
        .collect();
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    Ok(ReducibilityReport {
        verdict: Verdict::aggregate(outcomes.len(), failed),
        max_residual: outcomes.iter().map(|o| o.residual).fold(T::zero(), max_of),
        points: outcomes,
        skipped,
        rank_drop_points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubmanifoldClass {
    Coisotropic,
    Cosymplectic,
    Neither,
    /// Constraint jacobian drops rank; excluded from the aggregate.
    Singular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregateClass {
    Uniform(SubmanifoldClass),
    Mixed,
    DegeneratePointsOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub per_point: Vec<SubmanifoldClass>,
    pub aggregate: AggregateClass,
}

impl Classification {
    pub fn count(&self, class: SubmanifoldClass) -> usize {
        self.per_point.iter().filter(|&&c| c == class).count()
    }
}

/// Tangent space of the symplectic leaf through `z`: `B♯(z)(T*_z)`.
pub fn leaf_tangent<T: Real>(b: &PoissonStructure<T>, z: &DVector<T>, tol: &LinTol<T>) -> Result<Subspace<T>> {
    sharp_image(&b.tensor(z), &Subspace::full(b.dim(), true), tol)
}

/// Coisotropic (`B♯(TW°) ⊆ TW`), cosymplectic (`B♯(TW°) ∩ TW = 0` and
/// `TW + TL = TP`) or neither, at each point.
pub fn classify_submanifold<T: Real>(
    b: &PoissonStructure<T>,
    w: &Submanifold<T>,
    points: &[DVector<T>],
    leaf_tangent_at: &dyn Fn(&DVector<T>) -> Result<Subspace<T>>,
    tol: &Tolerances<T>,
) -> Result<Classification> {
    let n = w.ambient_dim();
    let mut per_point = Vec::with_capacity(points.len());
    for z in points {
        let conormal = match w.conormal_at(z, tol) {
            Ok(c) => c,
            Err(Error::RankDeficient { .. }) => {
                per_point.push(SubmanifoldClass::Singular);
                continue;
            }
            Err(e) => return Err(e),
        };
        let tw = annihilator(&conormal, &tol.lin);
        let image = sharp_image(&b.tensor(z), &conormal, &tol.lin)?;
        let class = if inclusion_residual(&image, &tw)? < tol.tol {
            SubmanifoldClass::Coisotropic
        } else {
            let meet = subspace_intersect(&image, &tw, &tol.lin)?;
            let spans = subspace_sum(&tw, &leaf_tangent_at(z)?, &tol.lin)?;
            if meet.is_zero() && spans.dim() == n {
                SubmanifoldClass::Cosymplectic
            } else {
                SubmanifoldClass::Neither
            }
        };
        per_point.push(class);
    }
    let mut regular = per_point.iter().filter(|&&c| c != SubmanifoldClass::Singular);
    let aggregate = match regular.next() {
        None => AggregateClass::DegeneratePointsOnly,
        Some(&first) => {
            if regular.all(|&c| c == first) {
                AggregateClass::Uniform(first)
            } else {
                AggregateClass::Mixed
            }
        }
    };
    Ok(Classification { per_point, aggregate })
}

/// `D = B♯((TW)°)` with one generator `z ↦ B(z) ∇c_i(z)` per constraint.
pub fn characteristic_distribution<T: Real>(b: &PoissonStructure<T>, w: &Submanifold<T>) -> Result<Distribution<T>> {
    let c = w.constraint().ok_or(Error::NoConstraint)?;
    let gens = (0..c.out_dim())
        .map(|i| {
            let (b, ci) = (b.clone(), c.component(i));
            VectorField::new(b.dim(), move |z| b.sharp(z, &ci.gradient(z)))
        })
        .collect();
    Ok(Distribution::new(w.ambient_dim(), gens))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBracketSample<T> {
    pub at_first: T,
    pub at_second: T,
    pub residual: T,
}

fn check_invariant<T: Real>(
    f: &ScalarField<T>,
    d: &Distribution<T>,
    z: &DVector<T>,
    tol: &Tolerances<T>,
) -> Result<()> {
    let grad = f.gradient(z);
    for v in d.fiber_at(z, &tol.lin).basis_vectors() {
        let dd = grad.dot(&v);
        if dd.abs() >= tol.tol {
            return Err(Error::NotInvariant {
                derivative: dd.as_f64(),
            });
        }
    }
    Ok(())
}

/// Evaluates `{F, G}_B` at two representatives `m`, `m2` of the same leaf
/// of `D_W`; agreement certifies the reduced bracket is well defined there.
#[allow(clippy::too_many_arguments)]
pub fn reduced_bracket_sample<T: Real>(
    b: &PoissonStructure<T>,
    w: &Submanifold<T>,
    d: &Distribution<T>,
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    m: &DVector<T>,
    m2: &DVector<T>,
    tol: &Tolerances<T>,
) -> Result<ReducedBracketSample<T>> {
    for z in [m, m2] {
        w.require_member(z, tol)?;
        check_invariant(f, d, z, tol)?;
        check_invariant(g, d, z, tol)?;
    }
    let a = bracket_at(b, f, g, m);
    let c = bracket_at(b, f, g, m2);
    Ok(ReducedBracketSample {
        at_first: a,
        at_second: c,
        residual: (a - c).abs(),
    })
}

/// Moves `z` along the flow of `field` for time `t`; the result stays on
/// the integral leaf through `z`.
pub fn flow_along<T: Real>(field: &VectorField<T>, z: &DVector<T>, t: T, steps: usize) -> Result<DVector<T>> {
    if t == T::zero() {
        return Ok(z.clone());
    }
    let dt = t.abs() / T::lit(steps.max(1) as f64);
    let signed = if t < T::zero() {
        field.scale(-T::one())
    } else {
        field.clone()
    };
    let traj = integrate(&signed, z, t.abs(), dt, Method::Rk4)?;
    Ok(traj.final_state().clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvolutivityReport<T> {
    pub involutive: bool,
    pub worst_residual: T,
}

/// Distance of every `[X_i, X_j](z)` to `D(z)` must stay below `tol`.
pub fn involutivity_check<T: Real>(
    d: &Distribution<T>,
    points: &[DVector<T>],
    tol: T,
    lin: &LinTol<T>,
) -> InvolutivityReport<T> {
    let gens = d.generators();
    let brackets: Vec<VectorField<T>> = (0..gens.len())
        .flat_map(|i| ((i + 1)..gens.len()).map(move |j| (i, j)))
        .map(|(i, j)| lie_bracket(&gens[i], &gens[j]))
        .collect();
    let mut worst = T::zero();
    for z in points {
        let fiber = d.fiber_at(z, lin);
        for br in &brackets {
            worst = max_of(worst, fiber.residual_of(&br.value(z)));
        }
    }
    InvolutivityReport {
        involutive: worst < tol,
        worst_residual: worst,
    }
}

/// Rank at `z` of drift, controls and their iterated brackets, where
/// `depth` counts the fields in a bracket word (depth 1: no brackets).
pub fn accessibility_rank<T: Real>(
    drift: &VectorField<T>,
    controls: &[VectorField<T>],
    z: &DVector<T>,
    depth: usize,
    lin: &LinTol<T>,
) -> usize {
    let base: Vec<VectorField<T>> = std::iter::once(drift.clone()).chain(controls.iter().cloned()).collect();
    let mut all = base.clone();
    let mut level = base.clone();
    for _ in 1..depth.max(1) {
        let next: Vec<VectorField<T>> = base
            .iter()
            .flat_map(|x| level.iter().map(move |y| lie_bracket(x, y)))
            .collect();
        all.extend(next.iter().cloned());
        level = next;
    }
    let n = drift.dim();
    let mut m = DMatrix::zeros(n, all.len());
    for (c, f) in all.iter().enumerate() {
        m.set_column(c, &f.value(z));
    }
    numerical_rank(&m, lin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointlin::subspace_distance;
    use crate::sampling::sample_box;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    // R^4 coordinates are (q1, q2, p1, p2).
    fn on_w(w: &Submanifold<f64>, n: usize, seed: u64) -> Vec<DVector<f64>> {
        w.sample(n, 2.0, seed, &tol())
    }

    #[test]
    fn dw_fiber_examples() {
        let w = Submanifold::coordinate_zero(4, &[1, 3]);
        let d = Distribution::coordinate(4, &[1, 3]);
        let z = v(&[0.5, 0.0, -1.0, 0.0]);
        assert!(dw_fiber(&d, &w, &z, &tol()).unwrap().is_zero());

        let w2 = Submanifold::coordinate_zero(4, &[3]);
        let d2 = Distribution::coordinate(4, &[1]);
        let f = dw_fiber(&d2, &w2, &z, &tol()).unwrap();
        assert!(subspace_distance(&f, &Subspace::coordinate(4, &[1], false)).unwrap() < 1e-12);

        let inside = Distribution::coordinate(4, &[0, 2]);
        let f = dw_fiber(&inside, &w, &z, &tol()).unwrap();
        assert!(subspace_distance(&f, &inside.fiber_at(&z, &tol().lin)).unwrap() < 1e-12);

        let off = v(&[0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            dw_fiber(&d, &w, &off, &tol()),
            Err(Error::OffSubmanifold { .. })
        ));
    }

    #[test]
    fn reducibility_examples() {
        let b = PoissonStructure::<f64>::canonical(2);
        let cosym = Submanifold::coordinate_zero(4, &[1, 3]);
        let d = characteristic_distribution(&b, &cosym).unwrap();
        let r = reducibility_check(&b, &cosym, &d, &on_w(&cosym, 20, 1), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.tested(), 20);

        let coiso = Submanifold::coordinate_zero(4, &[3]);
        let d = characteristic_distribution(&b, &coiso).unwrap();
        let r = reducibility_check(&b, &coiso, &d, &on_w(&coiso, 20, 2), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        let b2 = PoissonStructure::<f64>::canonical(1);
        let line = Submanifold::coordinate_zero(2, &[0]);
        let r = reducibility_check(&b2, &line, &Distribution::zero(2), &on_w(&line, 10, 3), &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducibility_skips_degenerate_points() {
        let b = PoissonStructure::<f64>::canonical(1);
        // c = q² has a rank-deficient gradient on its zero set.
        let w = Submanifold::from_constraints(
            2,
            vec![ScalarField::coordinate(2, 0).mul(&ScalarField::coordinate(2, 0))],
        );
        let pts = vec![v(&[0.0, 1.0]), v(&[0.0, -2.0])];
        let r = reducibility_check(&b, &w, &Distribution::zero(2), &pts, &tol()).unwrap();
        assert_eq!(r.verdict, Verdict::DegeneratePointsOnly);
        assert_eq!(r.skipped.len(), 2);
    }

    #[test]
    fn classification_examples() {
        let b = PoissonStructure::<f64>::canonical(2);
        let leaf = |z: &DVector<f64>| leaf_tangent(&PoissonStructure::canonical(2), z, &LinTol::default());
        let coiso = Submanifold::coordinate_zero(4, &[3]);
        let c = classify_submanifold(&b, &coiso, &on_w(&coiso, 10, 4), &leaf, &tol()).unwrap();
        assert_eq!(c.aggregate, AggregateClass::Uniform(SubmanifoldClass::Coisotropic));

        let cosym = Submanifold::coordinate_zero(4, &[1, 3]);
        let c = classify_submanifold(&b, &cosym, &on_w(&cosym, 10, 5), &leaf, &tol()).unwrap();
        assert_eq!(c.aggregate, AggregateClass::Uniform(SubmanifoldClass::Cosymplectic));

        let b2 = PoissonStructure::<f64>::canonical(1);
        let leaf2 = |z: &DVector<f64>| leaf_tangent(&PoissonStructure::canonical(1), z, &LinTol::default());
        let line = Submanifold::coordinate_zero(2, &[0]);
        let c = classify_submanifold(&b2, &line, &on_w(&line, 5, 6), &leaf2, &tol()).unwrap();
        assert_eq!(c.aggregate, AggregateClass::Uniform(SubmanifoldClass::Coisotropic));

        // q1 = p1 = q2 = 0 is isotropic but neither coisotropic nor cosymplectic.
        let iso = Submanifold::coordinate_zero(4, &[0, 1, 2]);
        let c = classify_submanifold(&b, &iso, &on_w(&iso, 5, 7), &leaf, &tol()).unwrap();
        assert_eq!(c.aggregate, AggregateClass::Uniform(SubmanifoldClass::Neither));
    }

    #[test]
    fn classification_is_parametrization_invariant() {
        // The same hyperplane p2 = 0 written as p2 = 0 and as 3·p2 + p2³ = 0.
        let b = PoissonStructure::<f64>::canonical(2);
        let leaf = |z: &DVector<f64>| leaf_tangent(&PoissonStructure::canonical(2), z, &LinTol::default());
        let w1 = Submanifold::coordinate_zero(4, &[3]);
        let p2 = ScalarField::coordinate(4, 3);
        let w2 = Submanifold::from_constraints(4, vec![p2.scale(3.0).add(&p2.mul(&p2).mul(&p2))]);
        let pts = on_w(&w1, 15, 8);
        let c1 = classify_submanifold(&b, &w1, &pts, &leaf, &tol()).unwrap();
        let c2 = classify_submanifold(&b, &w2, &pts, &leaf, &tol()).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn characteristic_distribution_examples() {
        let b = PoissonStructure::<f64>::canonical(2);
        let w = Submanifold::coordinate_zero(4, &[3]);
        let d = characteristic_distribution(&b, &w).unwrap();
        assert_eq!(d.generators().len(), 1);
        let z = v(&[0.1, 0.2, 0.3, 0.0]);
        assert_eq!(d.generators()[0].value(&z), v(&[0.0, 1.0, 0.0, 0.0]));

        let full = Submanifold::<f64>::full_space(4);
        assert!(characteristic_distribution(&b, &full).unwrap().generators().is_empty());

        // |q × p|² in T*R³: generator matches B ∇c with ∇c by hand.
        let b3 = PoissonStructure::<f64>::canonical(3);
        let c = ScalarField::new(6, |x: &DVector<f64>| {
            let q = x.fixed_rows::<3>(0).into_owned();
            let p = x.fixed_rows::<3>(3).into_owned();
            q.cross(&p).norm_squared()
        });
        let w = Submanifold::from_constraints(6, vec![c]);
        let d = characteristic_distribution(&b3, &w).unwrap();
        let x = v(&[1.0, 0.2, -0.3, 0.1, 0.9, 0.4]);
        let q = x.fixed_rows::<3>(0).into_owned();
        let p = x.fixed_rows::<3>(3).into_owned();
        let l = q.cross(&p);
        // ∂/∂q |q×p|² = 2 p × L, ∂/∂p = 2 L × q
        let dq = p.cross(&l) * 2.0;
        let dp = l.cross(&q) * 2.0;
        let expect = v(&[dp[0], dp[1], dp[2], -dq[0], -dq[1], -dq[2]]);
        assert!((d.generators()[0].value(&x) - expect).norm() < 1e-8);
    }

    #[test]
    fn reduced_bracket_examples() {
        let b = PoissonStructure::<f64>::canonical(2);
        let w = Submanifold::coordinate_zero(4, &[3]);
        let d = characteristic_distribution(&b, &w).unwrap();
        let q1 = ScalarField::coordinate(4, 0);
        let p1 = ScalarField::coordinate(4, 2);
        let m = v(&[0.3, -1.0, 0.7, 0.0]);
        let m2 = v(&[0.3, 2.5, 0.7, 0.0]);
        let s = reduced_bracket_sample(&b, &w, &d, &q1, &p1, &m, &m2, &tol()).unwrap();
        assert_eq!((s.at_first, s.at_second, s.residual), (1.0, 1.0, 0.0));

        let c = ScalarField::constant(4, 2.0);
        let s = reduced_bracket_sample(&b, &w, &d, &c, &p1, &m, &m2, &tol()).unwrap();
        assert_eq!((s.at_first, s.at_second), (0.0, 0.0));

        let bad = q1.add(&ScalarField::coordinate(4, 1));
        match reduced_bracket_sample(&b, &w, &d, &bad, &p1, &m, &m2, &tol()) {
            Err(Error::NotInvariant { derivative }) => assert!((derivative - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flow_along_stays_on_leaf() {
        let g = VectorField::constant(v(&[0.0, 1.0, 0.0, 0.0]));
        let z = flow_along(&g, &v(&[1.0, 0.0, 2.0, 0.0]), -1.5, 10).unwrap();
        assert!((z - v(&[1.0, -1.5, 2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn involutivity_examples() {
        let pts = sample_box::<f64>(3, 10, 1.0, 9);
        let lin = LinTol::default();
        assert!(involutivity_check(&Distribution::coordinate(3, &[0, 1]), &pts, 1e-8, &lin).involutive);

        let x = VectorField::constant(v(&[1.0, 0.0, 0.0]));
        let y = VectorField::new(3, |p: &DVector<f64>| v(&[0.0, 1.0, p[0]]));
        let mut with_origin = pts.clone();
        with_origin.push(v(&[0.0, 0.0, 0.0]));
        let r = involutivity_check(&Distribution::new(3, vec![x, y.clone()]), &with_origin, 1e-8, &lin);
        assert!(!r.involutive);
        assert!(r.worst_residual >= 1.0 - 1e-9);

        assert!(involutivity_check(&Distribution::new(3, vec![y]), &pts, 1e-8, &lin).involutive);
    }

    #[test]
    fn accessibility_examples() {
        let lin = LinTol {
            rank_rel: 1e-6,
            ..LinTol::default()
        };
        let drift = VectorField::<f64>::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let ctrl = VectorField::constant(v(&[0.0, 1.0]));
        for z in [v(&[0.0, 0.0]), v(&[0.4, -1.1])] {
            assert_eq!(accessibility_rank(&drift, std::slice::from_ref(&ctrl), &z, 2, &lin), 2);
        }
        assert_eq!(
            accessibility_rank(&VectorField::zero(2), &[VectorField::zero(2)], &v(&[1.0, 1.0]), 3, &lin),
            0
        );

        let x = VectorField::constant(v(&[1.0, 0.0, 0.0]));
        let y = VectorField::new(3, |p: &DVector<f64>| v(&[0.0, 1.0, p[0]]));
        let zero = VectorField::zero(3);
        let z = v(&[0.2, 0.1, -0.5]);
        assert_eq!(accessibility_rank(&zero, &[x.clone(), y.clone()], &z, 1, &lin), 2);
        assert_eq!(accessibility_rank(&zero, &[x, y], &z, 2, &lin), 3);
    }

    #[test]
    fn projection_lands_on_sphere() {
        let w = Submanifold::from_constraints(3, vec![ScalarField::new(3, |x: &DVector<f64>| x.norm_squared() - 1.0)]);
        for z in w.sample(10, 2.0, 11, &tol()) {
            assert!((z.norm() - 1.0).abs() < 1e-10);
        }
    }
}
