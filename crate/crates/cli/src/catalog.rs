//! Built-in example scenarios, embedded at compile time.

const ENTRIES: &[(&str, &str)] = &[
    (
        "harmonic_oscillator",
        include_str!("../catalog/harmonic_oscillator.json"),
    ),
    ("poisson_structures", include_str!("../catalog/poisson_structures.json")),
    ("coisotropic_r4", include_str!("../catalog/coisotropic_r4.json")),
    ("cosymplectic_r4", include_str!("../catalog/cosymplectic_r4.json")),
    ("counterexample_r2", include_str!("../catalog/counterexample_r2.json")),
    (
        "characteristic_reduction",
        include_str!("../catalog/characteristic_reduction.json"),
    ),
    ("momentum_fiber_so3", include_str!("../catalog/momentum_fiber_so3.json")),
    ("rigid_body_damping", include_str!("../catalog/rigid_body_damping.json")),
    (
        "s1_singular_reduction",
        include_str!("../catalog/s1_singular_reduction.json"),
    ),
    (
        "reduction_crosscheck",
        include_str!("../catalog/reduction_crosscheck.json"),
    ),
    (
        "conjugate_oscillators",
        include_str!("../catalog/conjugate_oscillators.json"),
    ),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(n, _)| *n).collect()
}

pub fn text(name: &str) -> Option<&'static str> {
    ENTRIES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
