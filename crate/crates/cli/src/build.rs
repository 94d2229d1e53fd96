//! Builtin library: turns schema specs into toolkit objects, checking
//! dimensions on the way. Errors carry the JSON path of the offending value.

use chpoisson::chsys::{Actuation, CHSystem, FiberMap, LiftReading};
use chpoisson::equiv::{AttainableSet, Diffeo};
use chpoisson::poisson::rigid_body_hamiltonian;
use chpoisson::reduce::{characteristic_distribution, Distribution, Submanifold};
use chpoisson::symmetry::{momentum_fiber, s1_reduced_structure, GroupAction, MomentumMap};
use chpoisson::{PoissonStructure, ScalarField, Subspace, Tolerances, VectorField};
use nalgebra::{DMatrix, DVector};

use crate::error::{BuildResult, ConfigError};
use crate::scenario::*;

fn err<T>(path: &str, message: impl Into<String>) -> BuildResult<T> {
    Err(ConfigError::new(path, message))
}

pub fn check_len(path: &str, got: usize, expected: usize) -> BuildResult<()> {
    if got == expected {
        Ok(())
    } else {
        err(path, format!("expected length {expected}, got {got}"))
    }
}

pub fn positive(path: &str, v: f64) -> BuildResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        err(path, format!("must be positive and finite, got {v}"))
    }
}

pub fn matrix(path: &str, rows: &[Vec<f64>]) -> BuildResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return err(path, "matrix must be non-empty");
    }
    for (i, row) in rows.iter().enumerate() {
        check_len(&format!("{path}[{i}]"), row.len(), c)?;
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn square(path: &str, rows: &[Vec<f64>]) -> BuildResult<DMatrix<f64>> {
    let m = matrix(path, rows)?;
    if m.nrows() != m.ncols() {
        return err(path, format!("matrix must be square, got {}x{}", m.nrows(), m.ncols()));
    }
    Ok(m)
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn group(path: &str, spec: &GroupSpec) -> BuildResult<GroupAction<f64>> {
    Ok(match spec {
        GroupSpec::S1 => GroupAction::s1(),
        GroupSpec::So3 => GroupAction::so3(),
        GroupSpec::Trivial(n) => {
            if *n == 0 {
                return err(path, "trivial group needs a positive configuration dimension");
            }
            GroupAction::trivial(*n)
        }
        GroupSpec::Product(a, b) => GroupAction::product(&group(path, a)?, &group(path, b)?),
    })
}

fn polynomial(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> ScalarField<f64> {
    let grad_terms = terms.clone();
    ScalarField::new(dim, move |x: &DVector<f64>| {
        terms
            .iter()
            .map(|(c, pw)| {
                c * pw
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| x[i].powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    })
    .with_gradient(move |x| {
        DVector::from_fn(dim, |d, _| {
            grad_terms
                .iter()
                .filter(|(_, pw)| pw[d] > 0)
                .map(|(c, pw)| {
                    let rest: f64 = pw
                        .iter()
                        .enumerate()
                        .map(|(i, &k)| {
                            if i == d {
                                x[i].powi(k as i32 - 1)
                            } else {
                                x[i].powi(k as i32)
                            }
                        })
                        .product();
                    c * pw[d] as f64 * rest
                })
                .sum()
        })
    })
}

pub fn function(path: &str, spec: &FunctionSpec) -> BuildResult<ScalarField<f64>> {
    let f = match spec {
        FunctionSpec::Coordinate { dim, index } => {
            if index >= dim {
                return err(
                    &format!("{path}.index"),
                    format!("index {index} out of range for dimension {dim}"),
                );
            }
            ScalarField::coordinate(*dim, *index)
        }
        FunctionSpec::Constant { dim, value } => ScalarField::constant(*dim, *value),
        FunctionSpec::Quadratic {
            matrix: m,
            linear,
            constant,
        } => {
            let a = square(&format!("{path}.matrix"), m)?;
            let n = a.nrows();
            let b = match linear {
                Some(b) => {
                    check_len(&format!("{path}.linear"), b.len(), n)?;
                    vector(b)
                }
                None => DVector::zeros(n),
            };
            ScalarField::quadratic(a, b, *constant)
        }
        FunctionSpec::Polynomial { dim, terms } => {
            for (i, t) in terms.iter().enumerate() {
                check_len(&format!("{path}.terms[{i}].powers"), t.powers.len(), *dim)?;
            }
            polynomial(*dim, terms.iter().map(|t| (t.coeff, t.powers.clone())).collect())
        }
        FunctionSpec::RigidBodyEnergy { inertia } => {
            for (i, v) in inertia.iter().enumerate() {
                positive(&format!("{path}.inertia[{i}]"), *v)?;
            }
            rigid_body_hamiltonian(*inertia)
        }
        FunctionSpec::NormSquared { dim } => {
            ScalarField::quadratic(DMatrix::identity(*dim, *dim) * 2.0, DVector::zeros(*dim), 0.0)
        }
        FunctionSpec::Momentum { group: g, component } => {
            let a = group(&format!("{path}.group"), g)?;
            if *component >= a.algebra_dim() {
                return err(
                    &format!("{path}.component"),
                    format!(
                        "component {component} out of range for algebra dimension {}",
                        a.algebra_dim()
                    ),
                );
            }
            MomentumMap::new(&a).components().swap_remove(*component)
        }
        FunctionSpec::MomentumNormSquared { group: g } => {
            let a = group(&format!("{path}.group"), g)?;
            let n = a.phase_dim();
            MomentumMap::new(&a)
                .components()
                .iter()
                .fold(ScalarField::constant(n, 0.0), |acc, c| acc.add(&c.mul(c)))
        }
        FunctionSpec::Sum { terms } => combine(path, "terms", terms, |a, b| a.add(b))?,
        FunctionSpec::Product { factors } => combine(path, "factors", factors, |a, b| a.mul(b))?,
        FunctionSpec::Scaled { factor, base } => function(&format!("{path}.base"), base)?.scale(*factor),
    };
    Ok(f)
}

fn combine(
    path: &str,
    key: &str,
    parts: &[FunctionSpec],
    op: impl Fn(&ScalarField<f64>, &ScalarField<f64>) -> ScalarField<f64>,
) -> BuildResult<ScalarField<f64>> {
    let mut acc: Option<ScalarField<f64>> = None;
    for (i, p) in parts.iter().enumerate() {
        let here = format!("{path}.{key}[{i}]");
        let f = function(&here, p)?;
        acc = Some(match acc {
            None => f,
            Some(a) => {
                check_len(&here, f.dim(), a.dim())?;
                op(&a, &f)
            }
        });
    }
    acc.ok_or_else(|| ConfigError::new(format!("{path}.{key}"), "needs at least one entry"))
}

pub fn expect_dim(path: &str, f: &ScalarField<f64>, dim: usize) -> BuildResult<()> {
    if f.dim() == dim {
        Ok(())
    } else {
        err(path, format!("function is defined on R^{}, expected R^{dim}", f.dim()))
    }
}

pub fn structure(path: &str, spec: &StructureSpec) -> BuildResult<PoissonStructure<f64>> {
    Ok(match spec {
        StructureSpec::Canonical { n } => {
            if *n == 0 {
                return err(&format!("{path}.n"), "configuration dimension must be positive");
            }
            PoissonStructure::canonical(*n)
        }
        StructureSpec::LiePoissonSo3 => PoissonStructure::lie_poisson_so3(),
        StructureSpec::S1Invariants => s1_reduced_structure(),
        StructureSpec::Entries { dim, upper } => {
            let mut entries = Vec::with_capacity(upper.len());
            for (k, e) in upper.iter().enumerate() {
                let here = format!("{path}.upper[{k}]");
                if e.i >= e.j || e.j >= *dim {
                    return err(&here, format!("need i < j < {dim}, got ({}, {})", e.i, e.j));
                }
                let f = function(&format!("{here}.value"), &e.value)?;
                expect_dim(&format!("{here}.value"), &f, *dim)?;
                entries.push((e.i, e.j, f));
            }
            let n = *dim;
            PoissonStructure::custom(n, move |x| {
                let mut b = DMatrix::zeros(n, n);
                for (i, j, f) in &entries {
                    let v = f.value(x);
                    b[(*i, *j)] += v;
                    b[(*j, *i)] -= v;
                }
                b
            })
        }
    })
}

pub fn submanifold(path: &str, spec: &SubmanifoldSpec) -> BuildResult<Submanifold<f64>> {
    match spec {
        SubmanifoldSpec::Full { dim } => Ok(Submanifold::full_space(*dim)),
        SubmanifoldSpec::CoordinateZero { dim, axes } => {
            if let Some(a) = axes.iter().find(|&&a| a >= *dim) {
                return err(
                    &format!("{path}.axes"),
                    format!("axis {a} out of range for dimension {dim}"),
                );
            }
            Ok(Submanifold::coordinate_zero(*dim, axes))
        }
        SubmanifoldSpec::LevelSet { dim, constraints } => {
            if constraints.is_empty() {
                return err(&format!("{path}.constraints"), "needs at least one constraint");
            }
            let mut cs = Vec::with_capacity(constraints.len());
            for (i, c) in constraints.iter().enumerate() {
                let here = format!("{path}.constraints[{i}]");
                let f = function(&here, c)?;
                expect_dim(&here, &f, *dim)?;
                cs.push(f);
            }
            Ok(Submanifold::from_constraints(*dim, cs))
        }
        SubmanifoldSpec::MomentumFiber { group: g, mu } => {
            let a = group(&format!("{path}.group"), g)?;
            momentum_fiber(&a, &vector(mu)).map_err(|e| ConfigError::new(path, e.to_string()))
        }
    }
}

pub fn field(path: &str, spec: &FieldSpec) -> BuildResult<VectorField<f64>> {
    Ok(match spec {
        FieldSpec::Zero { dim } => VectorField::zero(*dim),
        FieldSpec::Constant { value } => VectorField::constant(vector(value)),
        FieldSpec::Linear { matrix: m } => VectorField::linear(square(&format!("{path}.matrix"), m)?),
        FieldSpec::Affine { matrix: m, offset } => {
            let a = square(&format!("{path}.matrix"), m)?;
            check_len(&format!("{path}.offset"), offset.len(), a.nrows())?;
            VectorField::from_map(chpoisson::VectorMap::affine(a, vector(offset)))
        }
        FieldSpec::Hamiltonian {
            structure: s,
            function: f,
        } => {
            let b = structure(&format!("{path}.structure"), s)?;
            let h = function(&format!("{path}.function"), f)?;
            expect_dim(&format!("{path}.function"), &h, b.dim())?;
            chpoisson::poisson::hamiltonian_field(&b, &h)
        }
        FieldSpec::Generator { group: g, coeffs } => {
            let a = group(&format!("{path}.group"), g)?;
            check_len(&format!("{path}.coeffs"), coeffs.len(), a.algebra_dim())?;
            a.generator_field(coeffs)
        }
    })
}

/// `b` and `w` are needed only by the characteristic distribution.
pub fn distribution(
    path: &str,
    spec: &DistributionSpec,
    b: Option<&PoissonStructure<f64>>,
    w: Option<&Submanifold<f64>>,
) -> BuildResult<Distribution<f64>> {
    Ok(match spec {
        DistributionSpec::Zero { dim } => Distribution::zero(*dim),
        DistributionSpec::Coordinate { dim, axes } => {
            if let Some(a) = axes.iter().find(|&&a| a >= *dim) {
                return err(
                    &format!("{path}.axes"),
                    format!("axis {a} out of range for dimension {dim}"),
                );
            }
            Distribution::coordinate(*dim, axes)
        }
        DistributionSpec::Characteristic => match (b, w) {
            (Some(b), Some(w)) if !w.is_full_space() => {
                characteristic_distribution(b, w).map_err(|e| ConfigError::new(path, e.to_string()))?
            }
            _ => {
                return err(
                    path,
                    "characteristic distribution needs a structure and a constrained submanifold",
                )
            }
        },
        DistributionSpec::Fields { fields } => {
            let mut gens = Vec::with_capacity(fields.len());
            for (i, f) in fields.iter().enumerate() {
                gens.push(field(&format!("{path}.fields[{i}]"), f)?);
            }
            let Some(dim) = gens.first().map(VectorField::dim) else {
                return err(&format!("{path}.fields"), "needs at least one field");
            };
            for (i, g) in gens.iter().enumerate() {
                check_len(&format!("{path}.fields[{i}]"), g.dim(), dim)?;
            }
            Distribution::new(dim, gens)
        }
        DistributionSpec::Orbits { group: g } => group(&format!("{path}.group"), g)?.orbit_distribution(),
    })
}

pub fn actuation(path: &str, spec: &ActuationSpec) -> BuildResult<(Actuation<f64>, usize)> {
    let fiber_block = |base: usize, phase: usize| -> BuildResult<()> {
        if base > phase {
            return err(path, format!("base dimension {base} exceeds phase dimension {phase}"));
        }
        Ok(())
    };
    Ok(match spec {
        ActuationSpec::Identity { base_dim, phase_dim } => {
            fiber_block(*base_dim, *phase_dim)?;
            (Actuation::Map(FiberMap::identity(*base_dim, *phase_dim)), *phase_dim)
        }
        ActuationSpec::ZeroFiber { base_dim, phase_dim } => {
            fiber_block(*base_dim, *phase_dim)?;
            (Actuation::Map(FiberMap::zero_fiber(*base_dim, *phase_dim)), *phase_dim)
        }
        ActuationSpec::FiberAffine {
            base_dim,
            matrix: m,
            offset,
        } => {
            let m = matrix(&format!("{path}.matrix"), m)?;
            let phase = m.ncols();
            fiber_block(*base_dim, phase)?;
            check_len(&format!("{path}.matrix"), m.nrows(), phase - base_dim)?;
            check_len(&format!("{path}.offset"), offset.len(), phase - base_dim)?;
            (
                Actuation::Map(FiberMap::fiber_affine(*base_dim, m, vector(offset))),
                phase,
            )
        }
        ActuationSpec::Damping {
            base_dim,
            phase_dim,
            coefficient,
        } => {
            fiber_block(*base_dim, *phase_dim)?;
            let a = DMatrix::from_fn(*phase_dim, *phase_dim, |i, j| {
                if i == j && i >= *base_dim {
                    -coefficient
                } else {
                    0.0
                }
            });
            (Actuation::Vertical(VectorField::linear(a)), *phase_dim)
        }
        ActuationSpec::VerticalLinear { base_dim, matrix: m } => {
            let a = square(&format!("{path}.matrix"), m)?;
            fiber_block(*base_dim, a.nrows())?;
            if a.rows(0, *base_dim).iter().any(|v| *v != 0.0) {
                return err(&format!("{path}.matrix"), "base rows of a vertical field must be zero");
            }
            let n = a.nrows();
            (Actuation::Vertical(VectorField::linear(a)), n)
        }
        ActuationSpec::RigidBodyDamping { inertia, coefficient } => {
            for (i, v) in inertia.iter().enumerate() {
                positive(&format!("{path}.inertia[{i}]"), *v)?;
            }
            let (inertia, c) = (*inertia, *coefficient);
            let field = VectorField::new(3, move |x| {
                let mu = nalgebra::Vector3::new(x[0], x[1], x[2]);
                let omega = mu.component_div(&nalgebra::Vector3::from(inertia));
                let v = mu.cross(&mu.cross(&omega)) * c;
                DVector::from_column_slice(v.as_slice())
            });
            (Actuation::Vertical(field), 3)
        }
        ActuationSpec::None { phase_dim } => (Actuation::Vertical(VectorField::zero(*phase_dim)), *phase_dim),
    })
}

pub fn system(path: &str, spec: &SystemSpec, tol: &Tolerances<f64>) -> BuildResult<CHSystem<f64>> {
    let b = structure(&format!("{path}.structure"), &spec.structure)?;
    let n = b.dim();
    if spec.base_dim > n {
        return err(&format!("{path}.base_dim"), format!("exceeds phase dimension {n}"));
    }
    let h = function(&format!("{path}.hamiltonian"), &spec.hamiltonian)?;
    expect_dim(&format!("{path}.hamiltonian"), &h, n)?;
    let mut sys = CHSystem::new(spec.base_dim, b, h).with_tolerances(*tol);
    if let Some(f) = &spec.force {
        let here = format!("{path}.force");
        let (act, dim) = actuation(&here, f)?;
        check_len(&here, dim, n)?;
        sys = sys.with_force(act);
    }
    if let Some(w) = &spec.control_subset {
        let here = format!("{path}.control_subset");
        let w = submanifold(&here, w)?;
        check_len(&here, w.ambient_dim(), n)?;
        sys = sys.with_control_subset(w);
    }
    Ok(sys.with_reading(match spec.reading {
        ReadingSpec::Pushforward => LiftReading::Pushforward,
        ReadingSpec::AtImage => LiftReading::AtImage,
    }))
}

pub fn diffeo(path: &str, spec: &DiffeoSpec) -> BuildResult<Diffeo<f64>> {
    match spec {
        DiffeoSpec::Identity { dim } => Ok(Diffeo::identity(*dim)),
        DiffeoSpec::Linear { matrix: m } => {
            let a = square(&format!("{path}.matrix"), m)?;
            Diffeo::linear(a).map_err(|_| ConfigError::new(format!("{path}.matrix"), "matrix is singular"))
        }
    }
}

pub fn attainable(path: &str, spec: &AttainableSpec) -> BuildResult<AttainableSet<f64>> {
    Ok(match spec {
        AttainableSpec::Full => AttainableSet::Full,
        AttainableSpec::Subspace { columns, fiber_dim } => {
            if columns.is_empty() {
                AttainableSet::Subspace(Subspace::zero(*fiber_dim, false))
            } else {
                for (i, c) in columns.iter().enumerate() {
                    check_len(&format!("{path}.columns[{i}]"), c.len(), *fiber_dim)?;
                }
                let m = DMatrix::from_fn(*fiber_dim, columns.len(), |i, j| columns[j][i]);
                AttainableSet::Subspace(Subspace::from_columns(&m, false, &Default::default()))
            }
        }
        AttainableSpec::Box { lo, hi } => {
            check_len(&format!("{path}.hi"), hi.len(), lo.len())?;
            AttainableSet::Box {
                lo: vector(lo),
                hi: vector(hi),
            }
        }
    })
}

/// Scenario tolerances layered over the library defaults.
pub fn tolerances(spec: &TolSpec) -> BuildResult<Tolerances<f64>> {
    let mut t = Tolerances::<f64>::default();
    let fields = [
        ("tolerances.tol", spec.tol, &mut t.tol),
        ("tolerances.fd_step", spec.fd_step, &mut t.fd_step),
        ("tolerances.jacobi_tol", spec.jacobi_tol, &mut t.jacobi_tol),
        ("tolerances.memb_tol", spec.memb_tol, &mut t.memb_tol),
        ("tolerances.rank_rel", spec.rank_rel, &mut t.lin.rank_rel),
        ("tolerances.rank_abs", spec.rank_abs, &mut t.lin.rank_abs),
    ];
    for (path, value, slot) in fields {
        if let Some(v) = value {
            positive(path, v)?;
            *slot = v;
        }
    }
    Ok(t)
}

/// Collects every configuration problem without running anything.
pub fn validate(s: &Scenario) -> Vec<ConfigError> {
    let mut errors = Vec::new();
    let tol = match tolerances(&s.tolerances) {
        Ok(t) => t,
        Err(e) => {
            errors.push(e);
            Default::default()
        }
    };
    if s.sampling.count == 0 {
        errors.push(ConfigError::new("sampling.count", "must be positive"));
    }
    if let Err(e) = positive("sampling.half_width", s.sampling.half_width) {
        errors.push(e);
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, c) in s.checks.iter().enumerate() {
        if !seen.insert(c.id.as_str()) {
            errors.push(ConfigError::new(
                format!("checks[{i}].id"),
                format!("duplicate check id `{}`", c.id),
            ));
        }
        let ctx = crate::run::Ctx::new(s, i, &tol);
        if let Err(e) = crate::run::prepare(c, &ctx) {
            errors.push(e);
        }
    }
    errors
}
