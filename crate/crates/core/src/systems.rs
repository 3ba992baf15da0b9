//! Systems shipped with the crate, as JSON system files.

pub const EXAMPLE1: &str = include_str!("../systems/example1.json");
pub const INTEGRATOR: &str = include_str!("../systems/integrator.json");
pub const UNCONTROLLABLE: &str = include_str!("../systems/uncontrollable.json");
pub const AFFINE: &str = include_str!("../systems/affine.json");
/// `x+ = f(x)` without inputs in `f`; fails the input-rank condition.
pub const DRIFT_ONLY: &str = include_str!("../systems/drift_only.json");

/// `(name, json)` of every valid bundled system.
pub const VALID: [(&str, &str); 4] = [
    ("example1", EXAMPLE1),
    ("integrator", INTEGRATOR),
    ("uncontrollable", UNCONTROLLABLE),
    ("affine", AFFINE),
];
