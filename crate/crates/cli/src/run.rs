//! Executes scenario checks through the toolkit modules.
//!
//! Each check is first *prepared* (all specs built and dimension-checked,
//! which is where configuration errors surface) and then run. Errors raised
//! by a module while running are recorded on that check only.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use chpoisson::chsys::{closed_loop_field, diagnostics, integrate, Actuation, Method};
use chpoisson::equiv::{check_force_matching, check_tensor_matching, cotangent_lift, solved_control, verify_conjugacy};
use chpoisson::pointlin::{annihilator, verify_characteristic_identity};
use chpoisson::poisson::{antisymmetry_residual, coordinate_jacobi_residual, hamiltonian_field};
use chpoisson::reduce::{
    accessibility_rank, classify_submanifold, flow_along, involutivity_check, leaf_tangent, reduced_bracket_sample,
    reducibility_check, AggregateClass, SubmanifoldClass,
};
use chpoisson::sampling::{sample_box, Sampler};
use chpoisson::symmetry::{
    body_momentum, chart_point, fiber_verdict, fixed_point_equivariance, is_invariant, lie_poisson_check,
    momentum_fiber_coisotropy, reduction_crosscheck, rigid_body_crosscheck, s1_crosscheck, s1_invariants,
    s1_reduced_structure, s1_relation_residual, sample_momentum_fiber, stratify, trivial_crosscheck,
    validate_singular_bracket, InvariantObject, MomentumMap,
};
use chpoisson::{Error, PoissonStructure, ScalarField, Subspace, Tolerances, VectorField, Verdict};
use nalgebra::{DVector, Vector3};

use crate::build::{self, check_len, positive};
use crate::error::{BuildResult, ConfigError};
use crate::scenario::*;

/// Everything a check needs besides its own spec.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub tol: Tolerances<f64>,
    pub seed: u64,
    pub count: usize,
    pub half_width: f64,
    /// JSON path of the check body, used to label configuration errors.
    pub path: String,
}

impl Ctx {
    pub fn new(s: &Scenario, index: usize, tol: &Tolerances<f64>) -> Self {
        let check = &s.checks[index];
        Self {
            tol: *tol,
            seed: check_seed(s.seed, index),
            count: check.samples.unwrap_or(s.sampling.count),
            half_width: s.sampling.half_width,
            path: format!("checks[{index}].check.{}", check.check.name()),
        }
    }

    fn at(&self, field: &str) -> String {
        format!("{}.{field}", self.path)
    }
}

/// Per-check seed so that adding a check does not perturb the others.
fn check_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub points_tested: usize,
    pub points_skipped: usize,
    pub max_residual: f64,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
    /// Trajectory CSV for simulation checks.
    pub trajectory: Option<String>,
    pub error: Option<String>,
}

impl Outcome {
    fn new(tested: usize, skipped: usize, residual: f64, verdict: Verdict) -> Self {
        Self {
            points_tested: tested,
            points_skipped: skipped,
            max_residual: residual,
            verdict,
            metrics: BTreeMap::new(),
            trajectory: None,
            error: None,
        }
    }

    fn failed(message: String) -> Self {
        let mut o = Self::new(0, 0, f64::NAN, Verdict::Fail);
        o.error = Some(message);
        o
    }

    fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.to_string(), v);
        self
    }
}

pub type Job = Box<dyn FnOnce() -> chpoisson::Result<Outcome>>;

/// NaN-propagating maximum.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Runs one check; never panics and never aborts the scenario.
pub fn run_check(check: &CheckSpec, ctx: &Ctx) -> Outcome {
    let job = match prepare(check, ctx) {
        Ok(job) => job,
        Err(e) => return Outcome::failed(e.to_string()),
    };
    match catch_unwind(AssertUnwindSafe(job)) {
        Ok(Ok(o)) => o,
        Ok(Err(e)) => Outcome::failed(e.to_string()),
        Err(_) => Outcome::failed("check panicked".into()),
    }
}

fn structure_on(
    ctx: &Ctx,
    s: &StructureSpec,
    w: &SubmanifoldSpec,
) -> BuildResult<(PoissonStructure<f64>, chpoisson::reduce::Submanifold<f64>)> {
    let b = build::structure(&ctx.at("structure"), s)?;
    let w = build::submanifold(&ctx.at("submanifold"), w)?;
    check_len(&ctx.at("submanifold"), w.ambient_dim(), b.dim())?;
    Ok((b, w))
}

fn expected_class(c: ClassSpec) -> SubmanifoldClass {
    match c {
        ClassSpec::Coisotropic => SubmanifoldClass::Coisotropic,
        ClassSpec::Cosymplectic => SubmanifoldClass::Cosymplectic,
        ClassSpec::Neither => SubmanifoldClass::Neither,
    }
}

fn timing(ctx: &Ctx, t_final: f64, dt: f64) -> BuildResult<()> {
    positive(&ctx.at("dt"), dt)?;
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(ConfigError::new(ctx.at("t_final"), "must be finite and non-negative"));
    }
    Ok(())
}

fn same_phase(ctx: &Ctx, a: &chpoisson::chsys::CHSystem<f64>, b: &chpoisson::chsys::CHSystem<f64>) -> BuildResult<()> {
    check_len(&ctx.at("system2.structure"), b.phase_dim(), a.phase_dim())?;
    check_len(&ctx.at("system2.base_dim"), b.base_dim, a.base_dim)?;
    if 2 * a.base_dim != a.phase_dim() {
        return Err(ConfigError::new(
            ctx.at("system1.base_dim"),
            "cotangent lifts need a cotangent-bundle phase space (phase dim = 2 * base dim)",
        ));
    }
    Ok(())
}

/// Builds every object the check needs and returns the deferred computation.
pub fn prepare(check: &CheckSpec, ctx: &Ctx) -> BuildResult<Job> {
    let tol = ctx.tol;
    let (count, hw, seed) = (ctx.count, ctx.half_width, ctx.seed);
    match &check.check {
        CheckKind::PoissonStructure { structure } => {
            let b = build::structure(&ctx.at("structure"), structure)?;
            Ok(Box::new(move || {
                let pts = sample_box(b.dim(), count, hw, seed);
                let anti = antisymmetry_residual(&b, &pts);
                let jac = coordinate_jacobi_residual(&b, &pts, tol.fd_step);
                let ok = anti < tol.lin.antisym && jac < tol.jacobi_tol;
                Ok(Outcome::new(pts.len(), 0, worst(anti, jac), Verdict::from_bool(ok))
                    .metric("antisymmetry", anti)
                    .metric("jacobi", jac))
            }))
        }

        CheckKind::CharacteristicIdentity { structure, leaf } => {
            let b = build::structure(&ctx.at("structure"), structure)?;
            let n = b.dim();
            if *leaf == LeafSpec::Sphere {
                check_len(&ctx.at("structure"), n, 3)?;
            }
            let leaf = *leaf;
            Ok(Box::new(move || {
                let lin = tol.lin;
                let pts = sample_box(n, count, hw, seed);
                let mut sampler = Sampler::new(seed.rotate_left(17));
                let mut res = 0.0;
                let mut dims = BTreeMap::new();
                for z in &pts {
                    let k = (sampler.uniform::<f64>(0.0, (n + 1) as f64) as usize).min(n);
                    let cols = sampler.points::<f64>(n, k, 1.0);
                    let v = Subspace::span(n, &cols, false, &lin)?;
                    *dims.entry(v.dim()).or_insert(0usize) += 1;
                    let tl = match leaf {
                        LeafSpec::SharpImage => leaf_tangent(&b, z, &lin)?,
                        LeafSpec::Sphere => {
                            let normal = Subspace::span(n, std::slice::from_ref(z), false, &lin)?;
                            Subspace::from_columns(annihilator(&normal, &lin).basis(), false, &lin)
                        }
                    };
                    res = worst(res, verify_characteristic_identity(&b.tensor(z), &v, &tl, &lin)?);
                }
                let mut o = Outcome::new(pts.len(), 0, res, Verdict::from_bool(res < tol.tol));
                for (d, c) in dims {
                    o = o.metric(&format!("subspaces_dim_{d}"), c as f64);
                }
                Ok(o)
            }))
        }

        CheckKind::Reducibility {
            structure,
            submanifold,
            distribution,
        } => {
            let (b, w) = structure_on(ctx, structure, submanifold)?;
            let d = build::distribution(&ctx.at("distribution"), distribution, Some(&b), Some(&w))?;
            check_len(&ctx.at("distribution"), d.dim(), b.dim())?;
            Ok(Box::new(move || {
                let pts = w.sample(count, hw, seed, &tol);
                let r = reducibility_check(&b, &w, &d, &pts, &tol)?;
                Ok(Outcome::new(r.tested(), r.skipped.len(), r.max_residual, r.verdict)
                    .metric("rank_drop_points", r.rank_drop_points.len() as f64))
            }))
        }

        CheckKind::Classify {
            structure,
            submanifold,
            expect,
        } => {
            let (b, w) = structure_on(ctx, structure, submanifold)?;
            let expected = expected_class(*expect);
            Ok(Box::new(move || {
                let pts = w.sample(count, hw, seed, &tol);
                let (bb, lin) = (b.clone(), tol.lin);
                let leaf = move |z: &DVector<f64>| leaf_tangent(&bb, z, &lin);
                let c = classify_submanifold(&b, &w, &pts, &leaf, &tol)?;
                let singular = c.count(SubmanifoldClass::Singular);
                let mismatched = c
                    .per_point
                    .iter()
                    .filter(|&&k| k != SubmanifoldClass::Singular && k != expected)
                    .count();
                let verdict = match c.aggregate {
                    AggregateClass::DegeneratePointsOnly => Verdict::DegeneratePointsOnly,
                    AggregateClass::Uniform(k) => Verdict::from_bool(k == expected),
                    AggregateClass::Mixed => Verdict::Fail,
                };
                Ok(Outcome::new(pts.len() - singular, singular, mismatched as f64, verdict)
                    .metric("coisotropic", c.count(SubmanifoldClass::Coisotropic) as f64)
                    .metric("cosymplectic", c.count(SubmanifoldClass::Cosymplectic) as f64)
                    .metric("neither", c.count(SubmanifoldClass::Neither) as f64))
            }))
        }

        CheckKind::ReducedBracket {
            structure,
            submanifold,
            distribution,
            f,
            g,
            pairs,
            flow_time,
        } => {
            let (b, w) = structure_on(ctx, structure, submanifold)?;
            let d = build::distribution(&ctx.at("distribution"), distribution, Some(&b), Some(&w))?;
            check_len(&ctx.at("distribution"), d.dim(), b.dim())?;
            let fs = build::function(&ctx.at("f"), f)?;
            let gs = build::function(&ctx.at("g"), g)?;
            build::expect_dim(&ctx.at("f"), &fs, b.dim())?;
            build::expect_dim(&ctx.at("g"), &gs, b.dim())?;
            if *pairs == 0 {
                return Err(ConfigError::new(ctx.at("pairs"), "must be positive"));
            }
            if !(flow_time.is_finite() && *flow_time >= 0.0) {
                return Err(ConfigError::new(ctx.at("flow_time"), "must be finite and non-negative"));
            }
            let (pairs, flow_time) = (*pairs, *flow_time);
            Ok(Box::new(move || {
                let ms = w.sample(pairs, hw, seed, &tol);
                let mut sampler = Sampler::new(seed.rotate_left(29));
                let (mut res, mut tested, mut skipped, mut failed) = (0.0, 0, 0, 0);
                for m in &ms {
                    // Second representative: move along the leaf of D through m.
                    let mut m2 = m.clone();
                    for gen in d.generators() {
                        let t = if flow_time > 0.0 {
                            sampler.uniform::<f64>(-flow_time, flow_time)
                        } else {
                            0.0
                        };
                        m2 = flow_along(gen, &m2, t, 200)?;
                    }
                    match reduced_bracket_sample(&b, &w, &d, &fs, &gs, m, &m2, &tol) {
                        Ok(s) => {
                            tested += 1;
                            if s.residual.is_nan() || s.residual >= tol.tol {
                                failed += 1;
                            }
                            res = worst(res, s.residual);
                        }
                        Err(Error::OffSubmanifold { .. }) | Err(Error::RankDeficient { .. }) => skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
                skipped += pairs - ms.len();
                Ok(Outcome::new(tested, skipped, res, Verdict::aggregate(tested, failed)))
            }))
        }

        CheckKind::Simulate {
            system,
            control,
            x0,
            t_final,
            dt,
            method,
            expect,
        } => {
            let sys = build::system(&ctx.at("system"), system, &tol)?;
            let n = sys.phase_dim();
            let u = match control {
                Some(c) => {
                    let (u, dim) = build::actuation(&ctx.at("control"), c)?;
                    check_len(&ctx.at("control"), dim, n)?;
                    u
                }
                None => Actuation::Vertical(VectorField::zero(n)),
            };
            check_len(&ctx.at("x0"), x0.len(), n)?;
            timing(ctx, *t_final, *dt)?;
            let x0 = build::vector(x0);
            let (t_final, dt, expect) = (*t_final, *dt, expect.clone());
            let method = match method {
                MethodSpec::Rk4 => Method::Rk4,
                MethodSpec::Midpoint => Method::Midpoint,
            };
            Ok(Box::new(move || {
                let field = closed_loop_field(&sys, Some(&u))?;
                let traj = integrate(&field, &x0, t_final, dt, method)?;
                let diag = diagnostics(&traj, &sys, Some(&field));
                let cas = diag.max_casimir_drift.iter().copied().fold(0.0, worst);
                let mut ok = true;
                if let Some(m) = expect.max_energy_drift {
                    ok &= diag.max_energy_drift <= m;
                }
                if let Some(m) = expect.max_casimir_drift {
                    ok &= cas <= m;
                }
                if let Some(e) = expect.energy_nonincreasing {
                    ok &= diag.energy_nonincreasing == e;
                }
                let residual = if expect.max_casimir_drift.is_some() {
                    cas
                } else {
                    diag.max_energy_drift
                };
                let mut o = Outcome::new(traj.len(), 0, residual, Verdict::from_bool(ok))
                    .metric("energy_drift", diag.max_energy_drift)
                    .metric("energy_nonincreasing", flag(diag.energy_nonincreasing))
                    .metric("final_energy", diag.energy.last().copied().unwrap_or(f64::NAN));
                if !diag.max_casimir_drift.is_empty() {
                    o = o.metric("casimir_drift", cas);
                }
                o.trajectory = Some(traj.to_csv(Some(&diag)));
                Ok(o)
            }))
        }

        CheckKind::Involutivity {
            distribution,
            dim,
            expect_involutive,
        } => {
            let d = build::distribution(&ctx.at("distribution"), distribution, None, None)?;
            check_len(&ctx.at("distribution"), d.dim(), *dim)?;
            let expect = *expect_involutive;
            Ok(Box::new(move || {
                let pts = sample_box(d.dim(), count, hw, seed);
                let r = involutivity_check(&d, &pts, tol.jacobi_tol, &tol.lin);
                Ok(Outcome::new(
                    pts.len(),
                    0,
                    r.worst_residual,
                    Verdict::from_bool(r.involutive == expect),
                )
                .metric("involutive", flag(r.involutive)))
            }))
        }

        CheckKind::Accessibility {
            drift,
            controls,
            depth,
            expect_rank,
        } => {
            let x = build::field(&ctx.at("drift"), drift)?;
            let mut us = Vec::with_capacity(controls.len());
            for (i, c) in controls.iter().enumerate() {
                let here = ctx.at(&format!("controls[{i}]"));
                let u = build::field(&here, c)?;
                check_len(&here, u.dim(), x.dim())?;
                us.push(u);
            }
            if *depth == 0 {
                return Err(ConfigError::new(ctx.at("depth"), "must be at least 1"));
            }
            let (depth, expect) = (*depth, *expect_rank);
            Ok(Box::new(move || {
                // Nested finite-difference brackets carry noise near 1e-8.
                let mut lin = tol.lin;
                lin.rank_rel = lin.rank_rel.max(1e-6);
                let pts = sample_box(x.dim(), count, hw, seed);
                let (mut failed, mut res) = (0, 0.0f64);
                let (mut lo, mut hi) = (usize::MAX, 0);
                for z in &pts {
                    let r = accessibility_rank(&x, &us, z, depth, &lin);
                    lo = lo.min(r);
                    hi = hi.max(r);
                    failed += usize::from(r != expect);
                    res = res.max((r as f64 - expect as f64).abs());
                }
                Ok(Outcome::new(pts.len(), 0, res, Verdict::aggregate(pts.len(), failed))
                    .metric("min_rank", lo as f64)
                    .metric("max_rank", hi as f64))
            }))
        }

        CheckKind::MomentumFiber { group, mu } => {
            let a = build::group(&ctx.at("group"), group)?;
            check_len(&ctx.at("mu"), mu.len(), a.algebra_dim())?;
            let mu = build::vector(mu);
            Ok(Box::new(move || {
                let pts = sample_momentum_fiber(&a, &mu, count, hw, seed, &tol)?;
                let fc = momentum_fiber_coisotropy(&a, &mu, &pts, &tol)?;
                let c = &fc.classification;
                let singular = c.count(SubmanifoldClass::Singular);
                let off = c.count(SubmanifoldClass::Cosymplectic) + c.count(SubmanifoldClass::Neither);
                Ok(
                    Outcome::new(pts.len() - singular, singular, off as f64, fiber_verdict(c))
                        .metric("coisotropic", c.count(SubmanifoldClass::Coisotropic) as f64)
                        .metric("neither", c.count(SubmanifoldClass::Neither) as f64)
                        .metric("singular", singular as f64),
                )
            }))
        }

        CheckKind::ReductionCrosscheck { pair } => {
            type Maker = Box<dyn FnOnce() -> chpoisson::Result<chpoisson::symmetry::CrossCheck<f64>>>;
            let make: Maker = match pair {
                CrossCase::S1Free { momentum } => {
                    if *momentum == 0.0 || !momentum.is_finite() {
                        return Err(ConfigError::new(
                            ctx.at("pair.s1_free.momentum"),
                            "the free region needs a nonzero momentum",
                        ));
                    }
                    let j = *momentum;
                    Box::new(move || s1_crosscheck(j, count, seed, &tol))
                }
                CrossCase::RigidBody { inertia, body_momentum } => {
                    for (i, v) in inertia.iter().enumerate() {
                        positive(&ctx.at(&format!("pair.rigid_body.inertia[{i}]")), *v)?;
                    }
                    let (inertia, pi0) = (*inertia, Vector3::from(*body_momentum));
                    if pi0.norm() == 0.0 {
                        return Err(ConfigError::new(
                            ctx.at("pair.rigid_body.body_momentum"),
                            "must be nonzero",
                        ));
                    }
                    Box::new(move || rigid_body_crosscheck(inertia, pi0, count, seed, &tol))
                }
                CrossCase::Trivial {
                    structure,
                    submanifold,
                    distribution,
                } => {
                    let here = format!("{}.pair.trivial", ctx.path);
                    let b = build::structure(&format!("{here}.structure"), structure)?;
                    let w = build::submanifold(&format!("{here}.submanifold"), submanifold)?;
                    check_len(&format!("{here}.submanifold"), w.ambient_dim(), b.dim())?;
                    let d = build::distribution(&format!("{here}.distribution"), distribution, Some(&b), Some(&w))?;
                    check_len(&format!("{here}.distribution"), d.dim(), b.dim())?;
                    Box::new(move || {
                        let pts = w.sample(count, hw, seed, &tol);
                        Ok(trivial_crosscheck(&b, &w, &d, pts))
                    })
                }
            };
            Ok(Box::new(move || {
                let cc = make()?;
                let r = reduction_crosscheck(&cc, &tol)?;
                let (up, down) = (&r.upstairs, &r.downstairs);
                Ok(Outcome::new(
                    up.tested() + down.tested(),
                    up.skipped.len() + down.skipped.len(),
                    r.max_residual(),
                    Verdict::from_bool(r.agree),
                )
                .metric("upstairs_pass", flag(up.verdict.is_pass()))
                .metric("downstairs_pass", flag(down.verdict.is_pass()))
                .metric("upstairs_residual", up.max_residual)
                .metric("downstairs_residual", down.max_residual))
            }))
        }

        CheckKind::Matching {
            system1,
            system2,
            diffeo,
            attainable,
        } => {
            let s1 = build::system(&ctx.at("system1"), system1, &tol)?;
            let s2 = build::system(&ctx.at("system2"), system2, &tol)?;
            same_phase(ctx, &s1, &s2)?;
            let phi = build::diffeo(&ctx.at("diffeo"), diffeo)?;
            check_len(&ctx.at("diffeo"), phi.dim(), s1.base_dim)?;
            let att = build::attainable(&ctx.at("attainable"), attainable)?;
            Ok(Box::new(move || {
                let n = s1.phase_dim();
                let qs = sample_box(s1.base_dim, count.min(16), hw, seed);
                let lift = cotangent_lift(&phi, &qs, &tol)?;
                let pts2 = sample_box(n, count, hw, seed.rotate_left(7));
                let pts1 = sample_box(n, count, hw, seed.rotate_left(11));
                let w1s = s1.control_subset.sample(count, hw, seed.rotate_left(13), &tol);
                let tm = check_tensor_matching(
                    &lift,
                    &s1.structure,
                    &s2.structure,
                    &s1.control_subset,
                    &s2.control_subset,
                    &pts2,
                    &w1s,
                    &tol,
                );
                let fm = check_force_matching(&lift, &s1, &s2, &pts1, &att, &tol)?;
                let res = [
                    tm.poisson_residual,
                    tm.w_forward_residual,
                    tm.w_reverse_residual,
                    fm.max_base_norm,
                    fm.max_attainability_residual,
                ]
                .into_iter()
                .fold(0.0, worst);
                Ok(Outcome::new(
                    pts1.len() + pts2.len(),
                    0,
                    res,
                    Verdict::from_bool(tm.holds && fm.holds),
                )
                .metric("tensor_matching", flag(tm.holds))
                .metric("force_matching", flag(fm.holds))
                .metric("poisson_residual", tm.poisson_residual)
                .metric("base_norm", fm.max_base_norm)
                .metric("attainability_residual", fm.max_attainability_residual))
            }))
        }

        CheckKind::Conjugacy {
            system1,
            system2,
            diffeo,
            u1,
            u2,
            x0,
            t_final,
            dt,
            expect,
            threshold,
        } => {
            let s1 = build::system(&ctx.at("system1"), system1, &tol)?;
            let s2 = build::system(&ctx.at("system2"), system2, &tol)?;
            same_phase(ctx, &s1, &s2)?;
            let n = s1.phase_dim();
            let phi = build::diffeo(&ctx.at("diffeo"), diffeo)?;
            check_len(&ctx.at("diffeo"), phi.dim(), s1.base_dim)?;
            let (u2, dim) = build::actuation(&ctx.at("u2"), u2)?;
            check_len(&ctx.at("u2"), dim, n)?;
            let given = match u1 {
                ControlSpec::Given(spec) => {
                    let (u, dim) = build::actuation(&ctx.at("u1.given"), spec)?;
                    check_len(&ctx.at("u1.given"), dim, n)?;
                    Some(u)
                }
                _ => None,
            };
            check_len(&ctx.at("x0"), x0.len(), n)?;
            timing(ctx, *t_final, *dt)?;
            positive(&ctx.at("threshold"), *threshold)?;
            let (u1, x0) = (u1.clone(), build::vector(x0));
            let (t_final, dt, expect, threshold) = (*t_final, *dt, *expect, *threshold);
            Ok(Box::new(move || {
                let lift = cotangent_lift(&phi, &[], &tol)?;
                let u1 = match (u1, given) {
                    (ControlSpec::Solved, _) => solved_control(&lift, &s1, &s2, Some(&u2)),
                    (ControlSpec::Zero, _) => Actuation::Vertical(VectorField::zero(n)),
                    (ControlSpec::Given(_), g) => g.expect("built during preparation"),
                };
                let r = verify_conjugacy(&lift, &s1, &u1, &s2, &u2, &x0, t_final, dt)?;
                let res = r.trajectory_residual;
                let ok = match expect {
                    ConjugacyExpect::Conjugate => res < threshold,
                    ConjugacyExpect::Distinct => res > threshold,
                };
                let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize + 1;
                Ok(Outcome::new(steps, 0, res, Verdict::from_bool(ok)).metric("field_residual", r.field_residual))
            }))
        }

        CheckKind::LiePoisson { threshold } => {
            positive(&ctx.at("threshold"), *threshold)?;
            let threshold = *threshold;
            Ok(Box::new(move || {
                let mut s = Sampler::new(seed);
                let pts: Vec<DVector<f64>> = (0..count)
                    .map(|_| {
                        // |θ| ≤ √3 keeps the exponential chart valid.
                        let th = Vector3::from_iterator(s.point::<f64>(3, 1.0).iter().copied());
                        let pi = Vector3::from_iterator(s.point::<f64>(3, hw).iter().copied());
                        chart_point(&th, &pi)
                    })
                    .collect();
                for x in &pts {
                    body_momentum(x)?;
                }
                let mut fs: Vec<ScalarField<f64>> = (0..3).map(|i| ScalarField::coordinate(3, i)).collect();
                let casimir = PoissonStructure::<f64>::lie_poisson_so3().casimirs()[0].clone();
                fs.push(casimir);
                let mut res = 0.0;
                let mut pairs = 0;
                for i in 0..fs.len() {
                    for j in (i + 1)..fs.len() {
                        res = worst(res, lie_poisson_check(&fs[i], &fs[j], &pts)?);
                        pairs += 1;
                    }
                }
                Ok(Outcome::new(pts.len(), 0, res, Verdict::from_bool(res < threshold))
                    .metric("function_pairs", pairs as f64))
            }))
        }

        CheckKind::SingularS1 {} => Ok(Box::new(move || {
            let pts = sample_box(4, count, hw, seed);
            let mut brackets = 0.0;
            for i in 1..=4 {
                for j in (i + 1)..=4 {
                    brackets = worst(brackets, validate_singular_bracket(i, j, &pts)?);
                }
            }
            let relation = s1_relation_residual(&pts);
            let red = s1_reduced_structure::<f64>();
            let images: Vec<DVector<f64>> = pts.iter().map(|x| DVector::from_row_slice(&s1_invariants(x))).collect();
            let casimir = red
                .casimirs()
                .iter()
                .map(|c| chpoisson::poisson::casimir_residual(&red, c, &images))
                .fold(0.0, worst);
            let res = worst(worst(brackets, relation), casimir);
            Ok(Outcome::new(pts.len(), 0, res, Verdict::from_bool(res < tol.tol))
                .metric("bracket_residual", brackets)
                .metric("relation_residual", relation)
                .metric("casimir_residual", casimir))
        })),

        CheckKind::Noether {
            group,
            hamiltonian,
            x0,
            t_final,
            dt,
            threshold,
        } => {
            let a = build::group(&ctx.at("group"), group)?;
            let h = build::function(&ctx.at("hamiltonian"), hamiltonian)?;
            build::expect_dim(&ctx.at("hamiltonian"), &h, a.phase_dim())?;
            check_len(&ctx.at("x0"), x0.len(), a.phase_dim())?;
            timing(ctx, *t_final, *dt)?;
            positive(&ctx.at("threshold"), *threshold)?;
            let x0 = build::vector(x0);
            let (t_final, dt, threshold) = (*t_final, *dt, *threshold);
            Ok(Box::new(move || {
                let b = PoissonStructure::canonical(a.config_dim());
                let jm = MomentumMap::new(&a);
                let pts = sample_box(a.phase_dim(), count, hw, seed);
                let pointwise = jm.noether_residual(&b, &h, &pts);
                let traj = integrate(&hamiltonian_field(&b, &h), &x0, t_final, dt, Method::Rk4)?;
                let drift = jm.drift(&traj);
                let res = worst(pointwise, drift);
                Ok(
                    Outcome::new(pts.len() + traj.len(), 0, res, Verdict::from_bool(res < threshold))
                        .metric("pointwise", pointwise)
                        .metric("drift", drift),
                )
            }))
        }

        CheckKind::FixedPointEquivariance {
            group,
            point,
            group_samples,
        } => {
            let a = build::group(&ctx.at("group"), group)?;
            check_len(&ctx.at("point"), point.len(), a.phase_dim())?;
            let (z, gcount) = (build::vector(point), *group_samples);
            Ok(Box::new(move || {
                let b = PoissonStructure::canonical(a.config_dim());
                let gs = a.sample_elements(gcount, seed);
                let cov = sample_box(a.phase_dim(), count, hw, seed.rotate_left(5));
                let (res, found) = fixed_point_equivariance(&a, &b, &z, &gs, &cov, &tol);
                let verdict = if found == 0 {
                    Verdict::DegeneratePointsOnly
                } else {
                    Verdict::from_bool(res < tol.tol)
                };
                Ok(Outcome::new(found, gs.len() - found, res, verdict))
            }))
        }

        CheckKind::MomentumEquivariance { group, group_samples } => {
            let a = build::group(&ctx.at("group"), group)?;
            let gcount = *group_samples;
            Ok(Box::new(move || {
                let gs = a.sample_elements(gcount, seed);
                let pts = sample_box(a.phase_dim(), count, hw, seed.rotate_left(5));
                let res = MomentumMap::new(&a).equivariance_residual(&gs, &pts);
                Ok(Outcome::new(pts.len(), 0, res, Verdict::from_bool(res < tol.tol)))
            }))
        }

        CheckKind::Invariance {
            group,
            target,
            group_samples,
        } => {
            let a = build::group(&ctx.at("group"), group)?;
            let n = a.phase_dim();
            enum Target {
                Function(ScalarField<f64>),
                Map(chpoisson::chsys::FiberMap<f64>),
                Sub(chpoisson::reduce::Submanifold<f64>),
            }
            let target = match target {
                InvarianceTarget::Function { function } => {
                    let here = ctx.at("target.function.function");
                    let f = build::function(&here, function)?;
                    build::expect_dim(&here, &f, n)?;
                    Target::Function(f)
                }
                InvarianceTarget::FiberMap { map } => {
                    let here = ctx.at("target.fiber_map.map");
                    match build::actuation(&here, map)? {
                        (Actuation::Map(m), dim) => {
                            check_len(&here, dim, n)?;
                            Target::Map(m)
                        }
                        _ => {
                            return Err(ConfigError::new(
                                here,
                                "needs a fiber-preserving map, not a vertical field",
                            ))
                        }
                    }
                }
                InvarianceTarget::Submanifold { submanifold } => {
                    let here = ctx.at("target.submanifold.submanifold");
                    let w = build::submanifold(&here, submanifold)?;
                    check_len(&here, w.ambient_dim(), n)?;
                    Target::Sub(w)
                }
            };
            let gcount = *group_samples;
            Ok(Box::new(move || {
                let gs = a.sample_elements(gcount, seed);
                let (pts, object) = match &target {
                    Target::Function(f) => (
                        sample_box(n, count, hw, seed.rotate_left(5)),
                        InvariantObject::Scalar(f),
                    ),
                    Target::Map(m) => (
                        sample_box(n, count, hw, seed.rotate_left(5)),
                        InvariantObject::FiberMap(m),
                    ),
                    Target::Sub(w) => (
                        w.sample(count, hw, seed.rotate_left(5), &tol),
                        InvariantObject::Submanifold(w),
                    ),
                };
                let r = is_invariant(&a, object, &gs, &pts, &tol);
                Ok(Outcome::new(
                    pts.len(),
                    0,
                    r.max_residual,
                    Verdict::from_bool(r.invariant),
                ))
            }))
        }

        CheckKind::Stratify {
            group,
            points,
            expect_labels,
        } => {
            let a = build::group(&ctx.at("group"), group)?;
            check_len(&ctx.at("expect_labels"), expect_labels.len(), points.len())?;
            let mut pts = Vec::with_capacity(points.len());
            for (i, p) in points.iter().enumerate() {
                check_len(&ctx.at(&format!("points[{i}]")), p.len(), a.phase_dim())?;
                pts.push(build::vector(p));
            }
            let expect = expect_labels.clone();
            Ok(Box::new(move || {
                let strata = stratify(&a, &pts, &tol.lin);
                let mut labels = vec![String::new(); pts.len()];
                for s in &strata {
                    for &m in &s.members {
                        labels[m] = s.label.clone();
                    }
                }
                let failed = labels.iter().zip(&expect).filter(|(l, e)| l != e).count();
                Ok(
                    Outcome::new(pts.len(), 0, failed as f64, Verdict::aggregate(pts.len(), failed))
                        .metric("strata", strata.len() as f64),
                )
            }))
        }
    }
}
