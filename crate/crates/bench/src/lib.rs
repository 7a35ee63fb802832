//! Fixtures shared by the benchmarks in `benches/`.

use staticlab::config::lookup;
use staticlab::statics::StaticModel;

/// Builds a registry model; panics on unknown names.
pub fn model(name: &str) -> StaticModel {
    lookup(name)
        .and_then(|s| s.build())
        .unwrap_or_else(|e| panic!("building {name}: {e}"))
}

/// An interior sample point of `m`.
pub fn interior_point(m: &StaticModel) -> Vec<f64> {
    let pts = m.sample_points(3, 1);
    pts[pts.len() / 2].clone()
}
