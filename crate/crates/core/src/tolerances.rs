//! Tolerances shared by the checks, the CLI and the acceptance suite.
//!
//! Quantities built from at most two metric derivatives are held to the
//! `*_LOW_ORDER` bounds; anything containing third or fourth derivatives
//! (Cotton, Bach, divergences of D) uses the looser `*_HIGH_ORDER` bounds.

/// Riemann symmetries, Weyl trace-freeness and other <= 2nd-derivative identities.
pub const SYMMETRY_LOW_ORDER: f64 = 1e-8;
/// Same identities in finite-difference mode, or for 3rd/4th-order tensors.
pub const SYMMETRY_HIGH_ORDER: f64 = 1e-5;

/// Golden curvature values (scalar curvature of unit S^3, S^1 x S^2).
pub const GOLDEN_SCALAR: f64 = 1e-7;
/// Weyl tensor of any 3-dimensional metric.
pub const WEYL_3D: f64 = 1e-8;
/// Residual of the Weyl divergence / Cotton relation.
pub const WEYL_DIVERGENCE: f64 = 1e-5;
/// Agreement between the two Bach tensor formulas.
pub const BACH_ROUTES: f64 = 1e-5;
/// Bach tensor on Bach-flat catalog members.
pub const BACH_FLAT: f64 = 3e-5;
/// Augmented Cotton tensor on Bach-flat catalog members.
pub const D_FLAT: f64 = 1e-5;

/// Trace identity n Phi = f tr S - Laplacian f.
pub const TRACE_IDENTITY: f64 = 1e-8;
/// Closed-form static potentials on S^3, S^1 x S^2.
pub const STATIC_EXACT: f64 = 1e-8;
/// Vacuum static residual on every catalog entry.
pub const VACUUM_STATIC: f64 = 1e-6;
/// Unified equation residual for manufactured models.
pub const UNIFIED_RESIDUAL: f64 = 1e-6;
/// Two routes for Psi.
pub const PSI_ROUTES: f64 = 1e-8;
/// Closed form of D against its definition.
pub const D_ROUTES: f64 = 1e-5;
/// Pointwise Bach rewrite in terms of D.
pub const BACH_REWRITE: f64 = 1e-4;
/// Guard on |f| for divisions by f and f^2.
pub const F_MIN: f64 = 1e-3;

/// Level-set |D|^2 identity, relative to 1 + |LHS|.
pub const LEVELSET_IDENTITY: f64 = 1e-5;
/// Variation of R, Laplacian f, H, R^Sigma, R_nn along a slice.
pub const CONSTANCY: f64 = 1e-6;
/// Gauss and contracted Codazzi residuals.
pub const GAUSS_CODAZZI: f64 = 1e-5;
/// W(n, ., ., n) on D-flat Bach-flat models.
pub const WEYL_NORMAL: f64 = 1e-4;
/// Einstein-slice deviation and slice constant against (n-2) k.
pub const EINSTEIN_SLICE: f64 = 1e-5;
/// Minimum |grad f| for a regular value.
pub const REGULAR_GRADIENT: f64 = 1e-6;

/// Integral identities, relative to 1 + |RHS|.
pub const INTEGRAL_IDENTITY: f64 = 1e-4;
/// Individual sides that must vanish in C = 0 regimes.
pub const INTEGRAL_VANISHING: f64 = 1e-5;
/// Pointwise boundary flux n^i f^j D_ijk.
pub const BOUNDARY_FLUX: f64 = 1e-10;

/// Drift of the first integrals a, k.
pub const FIRST_INTEGRAL_DRIFT: f64 = 1e-8;
/// Periodic orbit closure error.
pub const PERIODIC_CLOSURE: f64 = 1e-8;
/// Substitution residual of f = c r' into the f-equation.
pub const F_PROPORTIONAL: f64 = 1e-8;

/// Default absolute tolerance for the Taylor integrator.
pub const ODE_TOL: f64 = 1e-13;
