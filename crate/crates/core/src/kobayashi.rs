//! The ODE system for warped vacuum static metrics `ds^2 + r(s)^2 g_E`:
//!
//! ```text
//! f'' + (n-1)(r'/r) f' + R f/(n-1) = 0,     r' f' - r'' f = 0,
//! ```
//!
//! its first integrals `a = r^{n-1} r'' + c r^n` and
//! `k = r'^2 + c r^2 + 2a/(n-2) r^{2-n}` (with `c = R/(n(n-1))`), periodic
//! warps found by shooting, and the catalog of classified examples.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Profile;
use crate::jet::Jet;
use crate::config::{Construction, ModelSpec, ProfileSpec};
use crate::geometry::{Coordinate, FiberFactor};
use crate::ode::{integrate, SolutionProfile, TaylorOptions, TaylorSystem, Trajectory};
use crate::statics::{ModelKind, StaticModel};

/// Parameters `(n, R, a)` of the reduced warp equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KobayashiParams {
    pub n: usize,
    pub scalar: f64,
    pub a: f64,
}

impl KobayashiParams {
    pub fn new(n: usize, scalar: f64, a: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Dimension(n));
        }
        Ok(KobayashiParams { n, scalar, a })
    }

    /// `c = R/(n(n-1))`.
    pub fn c(&self) -> f64 {
        let n = self.n as f64;
        self.scalar / (n * (n - 1.0))
    }

    /// `r'' = (a - c r^n) r^{1-n}`.
    pub fn warp_acceleration(&self, r: f64) -> f64 {
        let n = self.n as i32;
        (self.a - self.c() * r.powi(n)) * r.powi(1 - n)
    }

    /// `V(r) = c r^2 + 2a/(n-2) r^{2-n}`, so that `k = r'^2 + V(r)`.
    pub fn potential(&self, r: f64) -> f64 {
        let n = self.n as f64;
        self.c() * r * r + 2.0 * self.a / (n - 2.0) * r.powf(2.0 - n)
    }

    /// Minimum of `V` on `r > 0`, when there is one: `r*^n = a/c`.
    pub fn well(&self) -> Option<(f64, f64)> {
        let c = self.c();
        if c > 0.0 && self.a > 0.0 {
            let r = (self.a / c).powf(1.0 / self.n as f64);
            Some((r, self.potential(r)))
        } else {
            None
        }
    }
}

/// `(r, r')` with `r'' = (a - c r^n) r^{1-n}`.
pub struct WarpEquation(pub KobayashiParams);

impl TaylorSystem for WarpEquation {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _s: &Jet, u: &[Jet]) -> Vec<Jet> {
        let p = &self.0;
        let n = p.n as i32;
        let r = &u[0];
        let acc = &(&(r.powi(n) * -p.c()) + p.a) * &r.powi(n - 1).recip();
        vec![u[1].clone(), acc]
    }
}

/// The full system on `(r, r', f, f')`.
pub struct KobayashiSystem(pub KobayashiParams);

impl TaylorSystem for KobayashiSystem {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, s: &Jet, u: &[Jet]) -> Vec<Jet> {
        let p = &self.0;
        let nf = p.n as f64;
        let w = WarpEquation(*p).rhs(s, &u[..2]);
        let mu = &u[1] * &u[0].recip();
        let fpp = &(&(&mu * &u[3]) * -(nf - 1.0)) - &(&u[2] * (p.scalar / (nf - 1.0)));
        vec![u[1].clone(), w[1].clone(), u[3].clone(), fpp]
    }
}

/// A point on a trajectory of the full system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeState {
    pub s: f64,
    pub r: f64,
    pub dr: f64,
    pub f: f64,
    pub df: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstIntegrals {
    pub a: f64,
    pub k: f64,
}

/// `a` and `k` from `(r, r', r'')`.
pub fn integrals_from_acceleration(n: usize, scalar: f64, r: f64, dr: f64, ddr: f64) -> FirstIntegrals {
    let nf = n as f64;
    let c = scalar / (nf * (nf - 1.0));
    let a = r.powi(n as i32 - 1) * ddr + c * r.powi(n as i32);
    let k = dr * dr + c * r * r + 2.0 * a / (nf - 2.0) * r.powf(2.0 - nf);
    FirstIntegrals { a, k }
}

/// First integrals of a state, with `r''` taken from the second equation
/// (`r'' = r' f'/f`). `None` where `|f|` is too small for that division.
pub fn first_integrals(state: &OdeState, n: usize, scalar: f64, f_floor: f64) -> Option<FirstIntegrals> {
    if state.f.abs() < f_floor {
        return None;
    }
    let ddr = state.dr * state.df / state.f;
    Some(integrals_from_acceleration(n, scalar, state.r, state.dr, ddr))
}

/// Drift of the first integrals along a trajectory of [`KobayashiSystem`].
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub samples: usize,
    pub used: usize,
    pub a0: f64,
    pub k0: f64,
    pub drift_a: f64,
    pub drift_k: f64,
    /// `max |f'' + (n-1)(r'/r) f' + R f/(n-1)|` with `f = r'`, i.e. the
    /// substitution residual of `f` proportional to `r'`.
    pub substitution: f64,
}

impl DriftReport {
    /// Drift relative to `1 + |a| + |k|`.
    pub fn relative(&self) -> f64 {
        self.drift_a.max(self.drift_k) / (1.0 + self.a0.abs() + self.k0.abs())
    }
}

/// Integrates the full system from `(r0, r0', f = r0', f' = r0'')` over
/// `span` and measures the first integrals at `samples` points.
pub fn drift_check(p: KobayashiParams, r0: f64, dr0: f64, span: f64, samples: usize) -> Result<(Trajectory, DriftReport)> {
    let ddr0 = p.warp_acceleration(r0);
    let guard = |u: &[f64]| (u[0] <= 1e-8).then(|| "warp collapsed (r -> 0)".to_string());
    let t = integrate(&KobayashiSystem(p), 0.0, &[r0, dr0, dr0, ddr0], span, TaylorOptions::default(), Some(&guard))?;
    let pts = t.samples(samples);
    let fmax = pts.iter().fold(0.0f64, |m, (_, u)| m.max(u[2].abs()));
    let mut used = 0;
    let (mut amin, mut amax, mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut substitution = 0.0f64;
    let nf = p.n as f64;
    for (s, u) in &pts {
        let st = OdeState {
            s: *s,
            r: u[0],
            dr: u[1],
            f: u[2],
            df: u[3],
        };
        // f = r' means f' = r'' and f'' = r'''; r''' from differentiating the warp equation
        let ddr = p.warp_acceleration(st.r);
        let dddr = {
            let n = p.n as i32;
            let c = p.c();
            st.dr * (-c * nf * st.r.powi(n - 1) * st.r.powi(1 - n) + (p.a - c * st.r.powi(n)) * (1.0 - nf) * st.r.powi(-n))
        };
        let res = dddr + (nf - 1.0) * st.dr / st.r * ddr + p.scalar / (nf - 1.0) * st.dr;
        substitution = substitution.max(res.abs());
        if let Some(fi) = first_integrals(&st, p.n, p.scalar, 0.1 * fmax) {
            used += 1;
            amin = amin.min(fi.a);
            amax = amax.max(fi.a);
            kmin = kmin.min(fi.k);
            kmax = kmax.max(fi.k);
        }
    }
    let fi0 = integrals_from_acceleration(p.n, p.scalar, r0, dr0, ddr0);
    let report = DriftReport {
        samples: pts.len(),
        used,
        a0: fi0.a,
        k0: fi0.k,
        drift_a: if used > 0 { (amax - fi0.a).abs().max((amin - fi0.a).abs()) } else { f64::NAN },
        drift_k: if used > 0 { (kmax - fi0.k).abs().max((kmin - fi0.k).abs()) } else { f64::NAN },
        substitution,
    };
    Ok((t, report))
}

/// Root of `g` on `[lo, hi]` by bisection; `g(lo)` and `g(hi)` must differ in sign.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> Option<f64> {
    let mut glo = g(lo);
    let ghi = g(hi);
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo * ghi > 0.0 || !glo.is_finite() || !ghi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm * glo <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The interval of `a` for which the orbit with first integral `k` is closed:
/// `(0, a_max)` with `V(r*(a_max)) = k`. Requires `R > 0` and `k > 0`.
pub fn periodic_window(n: usize, scalar: f64, k: f64) -> Result<(f64, f64)> {
    if !(scalar > 0.0) || !(k > 0.0) {
        return Err(Error::Model(format!(
            "no periodic window: need R > 0 and k > 0 (R = {scalar}, k = {k})"
        )));
    }
    let depth = |a: f64| KobayashiParams { n, scalar, a }.well().map(|(_, v)| v - k).unwrap_or(-k);
    let mut hi = 1.0;
    while depth(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Model("periodic window search diverged".into()));
        }
    }
    let a_max = bisect(0.0, hi, depth).ok_or_else(|| Error::Model("periodic window bisection failed".into()))?;
    Ok((0.0, a_max))
}

/// A periodic warp with its `(r, r')` trajectory over one period.
pub struct PeriodicWarp {
    pub params: KobayashiParams,
    pub k: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub period: f64,
    /// `|r(T) - r(0)| + |r'(T) - r'(0)|`.
    pub closure: f64,
    pub profile: Arc<SolutionProfile>,
}

pub enum PeriodicOutcome {
    Periodic(PeriodicWarp),
    /// The orbit sits at the bottom of the well: `r` is constant.
    Constant { r: f64 },
    /// No closed orbit; the string explains the effective potential.
    NoOrbit(String),
}

impl PeriodicOutcome {
    pub fn periodic(self) -> Option<PeriodicWarp> {
        match self {
            PeriodicOutcome::Periodic(p) => Some(p),
            _ => None,
        }
    }
}

/// Finds the closed orbit of the warp equation with first integrals `(a, k)`.
///
/// The turning points solve `V(r) = k` on either side of the well; the
/// orbit is shot from `(r_min, 0)` and the period is the second return of
/// `r'` to zero, located on the dense output.
pub fn find_periodic_warp(n: usize, scalar: f64, a: f64, k: f64, tol: f64) -> Result<PeriodicOutcome> {
    let p = KobayashiParams::new(n, scalar, a)?;
    let Some((r_star, v_star)) = p.well() else {
        return Ok(PeriodicOutcome::NoOrbit(format!(
            "V(r) = {c} r^2 + {b} r^(2-n) has no interior minimum (need R > 0 and a > 0); orbits reach r = 0 or infinity",
            c = p.c(),
            b = 2.0 * a / (n as f64 - 2.0)
        )));
    };
    if k < v_star - 1e-12 {
        return Ok(PeriodicOutcome::NoOrbit(format!("k = {k} lies below the bottom of the well V(r*) = {v_star}")));
    }
    if k - v_star <= 1e-12 * (1.0 + k.abs()) {
        return Ok(PeriodicOutcome::Constant { r: r_star });
    }
    let g = |r: f64| p.potential(r) - k;
    let mut lo = r_star;
    while g(lo) < 0.0 {
        lo *= 0.5;
    }
    let mut hi = r_star;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let r_min = bisect(lo, r_star, g).ok_or_else(|| Error::Model("turning point search failed".into()))?;
    let r_max = bisect(r_star, hi, g).ok_or_else(|| Error::Model("turning point search failed".into()))?;
    // small-oscillation period as the first guess of the span
    let h = 1e-4 * r_star;
    let v2 = (p.potential(r_star + h) - 2.0 * v_star + p.potential(r_star - h)) / (h * h);
    let mut span = 2.0 * 2.0 * std::f64::consts::PI / (0.5 * v2).sqrt();
    let sys: Arc<dyn TaylorSystem> = Arc::new(WarpEquation(p));
    let opts = TaylorOptions { tol, ..TaylorOptions::default() };
    let u0 = [r_min, 0.0];
    for _ in 0..12 {
        let t = integrate(sys.as_ref(), 0.0, &u0, span, opts, None)?;
        let turns = t.crossings(|u| u[1]);
        if turns.len() >= 2 {
            let period = turns[1];
            let end = t.state_at(period).expect("period inside the span");
            let closure = (end[0] - u0[0]).abs() + (end[1] - u0[1]).abs();
            let profile = Arc::new(SolutionProfile {
                name: format!("periodic warp n={n} R={scalar} a={a}"),
                system: sys,
                trajectory: Arc::new(t),
                component: 0,
                period: Some((0.0, period)),
            });
            return Ok(PeriodicOutcome::Periodic(PeriodicWarp {
                params: p,
                k,
                r_min,
                r_max,
                period,
                closure,
                profile,
            }));
        }
        span *= 2.0;
    }
    Err(Error::Integration("no return of r' to zero within the search span".into()))
}

/// A trajectory of the warp equation from `(s0, r0, r0')` across `[lo, hi]`,
/// used for the non-compact entries. Errors if `r` collapses on the window.
pub fn warp_on_window(p: KobayashiParams, s0: f64, r0: f64, dr0: f64, lo: f64, hi: f64) -> Result<Arc<dyn Profile>> {
    let sys: Arc<dyn TaylorSystem> = Arc::new(WarpEquation(p));
    let guard = |u: &[f64]| (u[0] <= 1e-8).then(|| "warp collapsed (r -> 0)".to_string());
    let opts = TaylorOptions::default();
    let back = integrate(sys.as_ref(), s0, &[r0, dr0], lo, opts, Some(&guard))?;
    let fwd = integrate(sys.as_ref(), s0, &[r0, dr0], hi, opts, Some(&guard))?;
    if !back.completed() || !fwd.completed() {
        return Err(Error::Model(format!("warp collapses inside [{lo}, {hi}]")));
    }
    Ok(Arc::new(SolutionProfile {
        name: format!("warp n={} R={} a={} from r({s0})={r0}", p.n, p.scalar, p.a),
        system: sys,
        trajectory: Arc::new(Trajectory::join(back, fwd)),
        component: 0,
        period: None,
    }))
}

/// Classification tags of catalog entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Flat,
    Sphere,
    Hyperbolic,
    S1xS2,
    ConstantWarp,
    PeriodicWarp,
    NonCompactWarp,
}

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::Flat => "flat",
            Tag::Sphere => "S^n",
            Tag::Hyperbolic => "H^n",
            Tag::S1xS2 => "S1xS2",
            Tag::ConstantWarp => "constant-r",
            Tag::PeriodicWarp => "periodic-r",
            Tag::NonCompactWarp => "non-compact",
        }
    }
}

/// Invariants a catalog model is expected to have.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub scalar: f64,
    pub bach_flat: bool,
    /// `(n-2) k`, the Einstein constant of the fiber; `None` for non-warped entries.
    pub einstein_slice: Option<f64>,
    /// Whether the manifold is closed (compact without boundary).
    pub closed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub n: usize,
    pub tags: Vec<Tag>,
    pub spec: ModelSpec,
    pub expected: Expected,
}

impl CatalogEntry {
    pub fn build(&self) -> Result<StaticModel> {
        self.spec.build()
    }

    pub fn has(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }
}

fn sphere(dim: usize, radius: f64) -> FiberFactor {
    FiberFactor::Sphere { dim, radius }
}

fn warped(s: Option<Coordinate>, warp: ProfileSpec, fiber: Vec<FiberFactor>) -> Construction {
    Construction::Warped { s, warp, fiber }
}

fn entry(
    name: &str,
    n: usize,
    tags: &[Tag],
    construction: Construction,
    potential: ProfileSpec,
    scalar: f64,
    einstein_slice: Option<f64>,
    closed: bool,
) -> CatalogEntry {
    CatalogEntry {
        name: name.into(),
        n,
        tags: tags.to_vec(),
        spec: ModelSpec::new(name, n, ModelKind::VacuumStatic, construction, Some(potential)),
        expected: Expected {
            scalar,
            bach_flat: true,
            einstein_slice,
            closed,
        },
    }
}

/// The classified vacuum static spaces, normalized so that the fiber satisfies
/// `Ric_E = (n-2) k g_E` with `k = 1` (`k = -1` for the hyperbolic fiber).
pub fn catalog() -> Vec<CatalogEntry> {
    use std::f64::consts::PI;
    use Tag::*;
    let one = ProfileSpec::Constant { value: 1.0 };
    let sin = |w: f64| ProfileSpec::Sine {
        amplitude: 1.0,
        frequency: w,
        phase: 0.0,
    };
    let cos = ProfileSpec::Cosine {
        amplitude: 1.0,
        frequency: 1.0,
    };
    let dr = ProfileSpec::WarpDerivative { scale: 1.0 };
    let third = 1.0 / 3f64.sqrt();
    vec![
        entry(
            "t3",
            3,
            &[Flat],
            Construction::FlatTorus { length: 2.0 * PI },
            one.clone(),
            0.0,
            None,
            true,
        ),
        entry(
            "s3",
            3,
            &[Sphere],
            warped(Some(Coordinate::polar("s", 0.0, PI)), sin(1.0), vec![sphere(2, 1.0)]),
            cos.clone(),
            6.0,
            Some(1.0),
            true,
        ),
        entry(
            "s4",
            4,
            &[Sphere],
            warped(Some(Coordinate::polar("s", 0.0, PI)), sin(1.0), vec![sphere(3, 1.0)]),
            cos,
            12.0,
            Some(2.0),
            true,
        ),
        entry(
            "h3",
            3,
            &[Hyperbolic, NonCompactWarp],
            warped(
                Some(Coordinate::interval("s", 0.1, 2.0)),
                ProfileSpec::Sinh {
                    amplitude: 1.0,
                    frequency: 1.0,
                },
                vec![sphere(2, 1.0)],
            ),
            ProfileSpec::Cosh {
                amplitude: 1.0,
                frequency: 1.0,
            },
            -6.0,
            Some(1.0),
            false,
        ),
        entry(
            "s1xs2",
            3,
            &[S1xS2, ConstantWarp],
            warped(Some(Coordinate::periodic("s", 0.0, 2.0 * PI)), one.clone(), vec![sphere(2, 1.0)]),
            sin(1.0),
            2.0,
            Some(1.0),
            true,
        ),
        entry(
            "s1xs3",
            4,
            &[ConstantWarp],
            warped(
                Some(Coordinate::periodic("s", 0.0, 2.0 * PI / 2f64.sqrt())),
                one.clone(),
                vec![sphere(3, 1.0)],
            ),
            sin(2f64.sqrt()),
            6.0,
            Some(2.0),
            true,
        ),
        entry(
            "s1xs4",
            5,
            &[ConstantWarp],
            warped(
                Some(Coordinate::periodic("s", 0.0, 2.0 * PI / 3f64.sqrt())),
                one.clone(),
                vec![sphere(4, 1.0)],
            ),
            sin(3f64.sqrt()),
            12.0,
            Some(3.0),
            true,
        ),
        entry(
            "s1xs2xs2",
            5,
            &[ConstantWarp],
            warped(
                Some(Coordinate::periodic("s", 0.0, 2.0 * PI / 3f64.sqrt())),
                one.clone(),
                vec![sphere(2, third), sphere(2, third)],
            ),
            sin(3f64.sqrt()),
            12.0,
            Some(3.0),
            true,
        ),
        entry(
            "periodic3",
            3,
            &[PeriodicWarp],
            warped(None, ProfileSpec::KobayashiPeriodic { scalar: 6.0, a: 0.15 }, vec![sphere(2, 1.0)]),
            dr.clone(),
            6.0,
            Some(1.0),
            true,
        ),
        entry(
            "periodic4",
            4,
            &[PeriodicWarp],
            warped(None, ProfileSpec::KobayashiPeriodic { scalar: 12.0, a: 0.2 }, vec![sphere(3, 1.0)]),
            dr.clone(),
            12.0,
            Some(2.0),
            true,
        ),
        entry(
            "periodic5",
            5,
            &[PeriodicWarp],
            warped(
                None,
                ProfileSpec::KobayashiPeriodic { scalar: 20.0, a: 0.22 },
                vec![sphere(2, third), sphere(2, third)],
            ),
            dr.clone(),
            20.0,
            Some(3.0),
            true,
        ),
        entry(
            "rxh2",
            3,
            &[ConstantWarp, NonCompactWarp],
            warped(
                Some(Coordinate::interval("s", -1.0, 1.0)),
                one,
                vec![FiberFactor::Hyperbolic { dim: 2, radius: 1.0 }],
            ),
            ProfileSpec::Cosh {
                amplitude: 1.0,
                frequency: 1.0,
            },
            -2.0,
            Some(-1.0),
            false,
        ),
        entry(
            "noncompact3",
            3,
            &[NonCompactWarp],
            warped(
                Some(Coordinate::interval("s", -0.5, 0.5)),
                ProfileSpec::Kobayashi {
                    scalar: -6.0,
                    a: 0.05,
                    s0: 0.0,
                    r0: 1.0,
                    dr0: 1.9f64.sqrt(),
                },
                vec![sphere(2, 1.0)],
            ),
            dr,
            -6.0,
            Some(1.0),
            false,
        ),
    ]
}

/// Every catalog entry with its constructed model, built in parallel.
pub fn build_catalog() -> Result<Vec<(CatalogEntry, StaticModel)>> {
    use rayon::prelude::*;
    catalog()
        .into_par_iter()
        .map(|e| {
            let m = e.build()?;
            Ok((e, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_presentation_integrals() {
        // r = sin s with n = 3, R = 6: a = 0, k = 1
        let s: f64 = 0.7;
        let fi = integrals_from_acceleration(3, 6.0, s.sin(), s.cos(), -s.sin());
        assert!(fi.a.abs() < 1e-15);
        assert!((fi.k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_warp_integrals() {
        let (n, scalar, rho) = (4usize, 12.0, 0.8f64);
        let c = 1.0;
        let fi = integrals_from_acceleration(n, scalar, rho, 0.0, 0.0);
        assert!((fi.a - c * rho.powi(4)).abs() < 1e-15);
        assert!((fi.k - (c * rho * rho + 2.0 * fi.a / 2.0 * rho.powi(-2))).abs() < 1e-14);
    }

    #[test]
    fn window_edge_for_three_dimensions() {
        let (_, a_max) = periodic_window(3, 6.0, 1.0).unwrap();
        assert!((a_max - 3f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn no_orbit_without_well() {
        assert!(matches!(find_periodic_warp(3, 6.0, 0.0, 1.0, 1e-13).unwrap(), PeriodicOutcome::NoOrbit(_)));
        assert!(matches!(find_periodic_warp(3, -6.0, 0.1, 1.0, 1e-13).unwrap(), PeriodicOutcome::NoOrbit(_)));
    }
}
