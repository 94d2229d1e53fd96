//! JSON scenario schema.
//!
//! Every function, field and map in a scenario names an entry of the
//! builtin library (see [`crate::build`]) and carries only coefficient data.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Required so that every run is reproducible.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: TolSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_count() -> usize {
    100
}

fn default_half_width() -> f64 {
    2.0
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            count: default_count(),
            half_width: default_half_width(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobi_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memb_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_abs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSpec {
    S1,
    So3,
    Trivial(usize),
    Product(Box<GroupSpec>, Box<GroupSpec>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Scalar functions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Coordinate {
        dim: usize,
        index: usize,
    },
    Constant {
        dim: usize,
        value: f64,
    },
    /// `½ xᵀAx + bᵀx + c`.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    Polynomial {
        dim: usize,
        terms: Vec<Monomial>,
    },
    RigidBodyEnergy {
        inertia: [f64; 3],
    },
    NormSquared {
        dim: usize,
    },
    Momentum {
        group: GroupSpec,
        component: usize,
    },
    MomentumNormSquared {
        group: GroupSpec,
    },
    Sum {
        terms: Vec<FunctionSpec>,
    },
    Product {
        factors: Vec<FunctionSpec>,
    },
    Scaled {
        factor: f64,
        base: Box<FunctionSpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub i: usize,
    pub j: usize,
    pub value: FunctionSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSpec {
    Canonical {
        n: usize,
    },
    LiePoissonSo3,
    /// Linear structure on the invariants of `S¹` acting on `T*R²`.
    S1Invariants,
    /// Upper-triangle entries `B_ij(x)`, `i < j`; the rest is filled by
    /// antisymmetry.
    Entries {
        dim: usize,
        upper: Vec<EntrySpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubmanifoldSpec {
    Full { dim: usize },
    CoordinateZero { dim: usize, axes: Vec<usize> },
    LevelSet { dim: usize, constraints: Vec<FunctionSpec> },
    MomentumFiber { group: GroupSpec, mu: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero {
        dim: usize,
    },
    Constant {
        value: Vec<f64>,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    /// `x ↦ A x + b`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Hamiltonian {
        structure: StructureSpec,
        function: FunctionSpec,
    },
    Generator {
        group: GroupSpec,
        coeffs: Vec<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Zero {
        dim: usize,
    },
    Coordinate {
        dim: usize,
        axes: Vec<usize>,
    },
    /// `B♯((TW)°)` for the check's structure and submanifold.
    Characteristic,
    Fields {
        fields: Vec<FieldSpec>,
    },
    Orbits {
        group: GroupSpec,
    },
}

/// Forces and controls.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ActuationSpec {
    Identity {
        base_dim: usize,
        phase_dim: usize,
    },
    ZeroFiber {
        base_dim: usize,
        phase_dim: usize,
    },
    /// `(q, p) ↦ (q, M x + c)`.
    FiberAffine {
        base_dim: usize,
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// Vertical field `-c` times the fiber coordinates.
    Damping {
        base_dim: usize,
        phase_dim: usize,
        coefficient: f64,
    },
    /// Vertical field `x ↦ A x`; rows of the base block must vanish.
    VerticalLinear {
        base_dim: usize,
        matrix: Vec<Vec<f64>>,
    },
    /// `c μ × (μ × I⁻¹μ)` on `so(3)*`: dissipates energy, keeps `|μ|²`.
    RigidBodyDamping {
        inertia: [f64; 3],
        coefficient: f64,
    },
    None {
        phase_dim: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadingSpec {
    #[default]
    Pushforward,
    AtImage,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub base_dim: usize,
    pub structure: StructureSpec,
    pub hamiltonian: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<ActuationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_subset: Option<SubmanifoldSpec>,
    #[serde(default)]
    pub reading: ReadingSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffeoSpec {
    Identity { dim: usize },
    Linear { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AttainableSpec {
    Full,
    Subspace { columns: Vec<Vec<f64>>, fiber_dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSpec {
    Coisotropic,
    Cosymplectic,
    Neither,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSpec {
    /// `B♯` of the whole cotangent space at the point.
    #[default]
    SharpImage,
    /// The sphere `μ^⊥` through the point (coadjoint orbits of `so(3)*`).
    Sphere,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    #[default]
    Rk4,
    Midpoint,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimExpect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_energy_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_casimir_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_nonincreasing: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSpec {
    /// Solve the matching relation for system 1's control.
    Solved,
    /// No control on system 1.
    Zero,
    Given(ActuationSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugacyExpect {
    /// Residual below the threshold.
    Conjugate,
    /// Residual above the threshold.
    Distinct,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossCase {
    S1Free {
        #[serde(default = "one")]
        momentum: f64,
    },
    RigidBody {
        inertia: [f64; 3],
        body_momentum: [f64; 3],
    },
    Trivial {
        structure: StructureSpec,
        submanifold: SubmanifoldSpec,
        distribution: DistributionSpec,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InvarianceTarget {
    Function { function: FunctionSpec },
    FiberMap { map: ActuationSpec },
    Submanifold { submanifold: SubmanifoldSpec },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub id: String,
    /// Overrides `sampling.count` for this check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub check: CheckKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckKind {
    PoissonStructure {
        structure: StructureSpec,
    },
    CharacteristicIdentity {
        structure: StructureSpec,
        #[serde(default)]
        leaf: LeafSpec,
    },
    Reducibility {
        structure: StructureSpec,
        submanifold: SubmanifoldSpec,
        distribution: DistributionSpec,
    },
    Classify {
        structure: StructureSpec,
        submanifold: SubmanifoldSpec,
        expect: ClassSpec,
    },
    ReducedBracket {
        structure: StructureSpec,
        submanifold: SubmanifoldSpec,
        distribution: DistributionSpec,
        f: FunctionSpec,
        g: FunctionSpec,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "one")]
        flow_time: f64,
    },
    Simulate {
        system: SystemSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        control: Option<ActuationSpec>,
        x0: Vec<f64>,
        t_final: f64,
        dt: f64,
        #[serde(default)]
        method: MethodSpec,
        #[serde(default)]
        expect: SimExpect,
    },
    Involutivity {
        distribution: DistributionSpec,
        dim: usize,
        expect_involutive: bool,
    },
    Accessibility {
        drift: FieldSpec,
        controls: Vec<FieldSpec>,
        depth: usize,
        expect_rank: usize,
    },
    MomentumFiber {
        group: GroupSpec,
        mu: Vec<f64>,
    },
    ReductionCrosscheck {
        pair: CrossCase,
    },
    Matching {
        system1: SystemSpec,
        system2: SystemSpec,
        diffeo: DiffeoSpec,
        attainable: AttainableSpec,
    },
    Conjugacy {
        system1: SystemSpec,
        system2: SystemSpec,
        diffeo: DiffeoSpec,
        u1: ControlSpec,
        u2: ActuationSpec,
        x0: Vec<f64>,
        t_final: f64,
        dt: f64,
        expect: ConjugacyExpect,
        threshold: f64,
    },
    LiePoisson {
        #[serde(default = "lie_poisson_threshold")]
        threshold: f64,
    },
    SingularS1 {},
    Noether {
        group: GroupSpec,
        hamiltonian: FunctionSpec,
        x0: Vec<f64>,
        t_final: f64,
        dt: f64,
        threshold: f64,
    },
    FixedPointEquivariance {
        group: GroupSpec,
        point: Vec<f64>,
        #[serde(default = "default_group_samples")]
        group_samples: usize,
    },
    MomentumEquivariance {
        group: GroupSpec,
        #[serde(default = "default_group_samples")]
        group_samples: usize,
    },
    Invariance {
        group: GroupSpec,
        target: InvarianceTarget,
        #[serde(default = "default_group_samples")]
        group_samples: usize,
    },
    Stratify {
        group: GroupSpec,
        points: Vec<Vec<f64>>,
        expect_labels: Vec<String>,
    },
}

fn lie_poisson_threshold() -> f64 {
    1e-6
}

fn default_pairs() -> usize {
    20
}

fn default_group_samples() -> usize {
    16
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::PoissonStructure { .. } => "poisson_structure",
            CheckKind::CharacteristicIdentity { .. } => "characteristic_identity",
            CheckKind::Reducibility { .. } => "reducibility",
            CheckKind::Classify { .. } => "classify",
            CheckKind::ReducedBracket { .. } => "reduced_bracket",
            CheckKind::Simulate { .. } => "simulate",
            CheckKind::Involutivity { .. } => "involutivity",
            CheckKind::Accessibility { .. } => "accessibility",
            CheckKind::MomentumFiber { .. } => "momentum_fiber",
            CheckKind::ReductionCrosscheck { .. } => "reduction_crosscheck",
            CheckKind::Matching { .. } => "matching",
            CheckKind::Conjugacy { .. } => "conjugacy",
            CheckKind::LiePoisson { .. } => "lie_poisson",
            CheckKind::SingularS1 {} => "singular_s1",
            CheckKind::Noether { .. } => "noether",
            CheckKind::FixedPointEquivariance { .. } => "fixed_point_equivariance",
            CheckKind::MomentumEquivariance { .. } => "momentum_equivariance",
            CheckKind::Invariance { .. } => "invariance",
            CheckKind::Stratify { .. } => "stratify",
        }
    }

    /// The property a passing check certifies.
    pub fn anchor(&self) -> &'static str {
        match self {
            CheckKind::PoissonStructure { .. } => "antisymmetry and Jacobi identity of the tensor",
            CheckKind::CharacteristicIdentity { .. } => "B#((B#(V°))°) = V ∩ T(leaf)",
            CheckKind::Reducibility { .. } => "B#(D°) ⊆ TW + D at every sample",
            CheckKind::Classify { .. } => "coisotropic / cosymplectic type of W",
            CheckKind::ReducedBracket { .. } => "reduced bracket independent of representative",
            CheckKind::Simulate { .. } => "closed-loop energy and Casimir behaviour",
            CheckKind::Involutivity { .. } => "generators closed under Lie bracket",
            CheckKind::Accessibility { .. } => "accessibility rank of drift and controls",
            CheckKind::MomentumFiber { .. } => "momentum fiber over a coadjoint orbit is coisotropic",
            CheckKind::ReductionCrosscheck { .. } => "reducibility agrees upstairs and on the quotient",
            CheckKind::Matching { .. } => "lift is Poisson, control sets match, mismatch is attainable",
            CheckKind::Conjugacy { .. } => "closed loops conjugate under the cotangent lift",
            CheckKind::LiePoisson { .. } => "body-momentum projection is a Poisson map",
            CheckKind::SingularS1 {} => "invariant brackets close on the Hilbert invariants",
            CheckKind::Noether { .. } => "momentum conserved along invariant flows",
            CheckKind::FixedPointEquivariance { .. } => "B# equivariant under the isotropy group",
            CheckKind::MomentumEquivariance { .. } => "momentum map is coadjoint equivariant",
            CheckKind::Invariance { .. } => "invariance under the group action",
            CheckKind::Stratify { .. } => "orbit-type labels of the sample points",
        }
    }
}

/// Parses scenario text, reporting the JSON path of the first schema error.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ConfigError>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        vec![ConfigError::new(path, e.into_inner().to_string())]
    })?;
    let errors = crate::build::validate(&scenario);
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(errors)
    }
}
