//! High-order Taylor-series integration for smooth ODE systems.
//!
//! A system supplies its right-hand side over univariate jets, so the local
//! Taylor expansion of the solution follows by the usual coefficient
//! recursion. Steps store their polynomials for dense output.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Profile;
use crate::jet::{Jet, JetSpace};

/// `u' = F(s, u)` written over jets.
pub trait TaylorSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, s: &Jet, u: &[Jet]) -> Vec<Jet>;
}

/// Taylor coefficients (degree `0..=order`) of each solution component through `(s0, u0)`.
pub fn taylor_coefficients(sys: &dyn TaylorSystem, s0: f64, u0: &[f64], order: usize) -> Vec<Vec<f64>> {
    let d = sys.dim();
    let mut c: Vec<Vec<f64>> = u0
        .iter()
        .map(|&v| {
            let mut row = vec![0.0; order + 1];
            row[0] = v;
            row
        })
        .collect();
    for k in 0..order {
        let space = JetSpace::get(1, k);
        let s = Jet::variable(space, 0, s0);
        let u: Vec<Jet> = c.iter().map(|row| Jet::from_coeffs(space, row[..=k].to_vec())).collect();
        let f = sys.rhs(&s, &u);
        for i in 0..d {
            c[i][k + 1] = f[i].coeffs()[k] / (k + 1) as f64;
        }
    }
    c
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

#[derive(Clone, Copy, Debug)]
pub struct TaylorOptions {
    pub order: usize,
    /// Local error target per step, relative to `max(1, |u|)`.
    pub tol: f64,
    pub max_steps: usize,
    pub max_step: f64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        TaylorOptions {
            order: 24,
            tol: crate::tolerances::ODE_TOL,
            max_steps: 200_000,
            max_step: 0.5,
        }
    }
}

/// One accepted step: `u(s0 + t) = sum_k coeffs[i][k] t^k` for `t` between 0 and `h`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub s0: f64,
    pub h: f64,
    pub coeffs: Vec<Vec<f64>>,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn lo(&self) -> f64 {
        self.s0.min(self.end())
    }

    pub fn hi(&self) -> f64 {
        self.s0.max(self.end())
    }

    pub fn state(&self, s: f64) -> Vec<f64> {
        let t = s - self.s0;
        self.coeffs.iter().map(|c| horner(c, t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// The guard rejected the state (for example a collapsing warp).
    Boundary { s: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: f64,
    pub end: f64,
    pub initial: Vec<f64>,
    pub segments: Vec<Segment>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn lo(&self) -> f64 {
        self.start.min(self.end)
    }

    pub fn hi(&self) -> f64 {
        self.start.max(self.end)
    }

    fn segment_for(&self, s: f64) -> Option<&Segment> {
        if s < self.lo() - 1e-12 || s > self.hi() + 1e-12 {
            return None;
        }
        // segments are ordered along the direction of integration
        let forward = self.end >= self.start;
        let idx = self.segments.partition_point(|seg| if forward { seg.hi() < s } else { seg.lo() > s });
        self.segments.get(idx.min(self.segments.len().saturating_sub(1)))
    }

    /// Glues a backward and a forward trajectory that share their starting point
    /// into one trajectory running in increasing `s`.
    pub fn join(backward: Trajectory, forward: Trajectory) -> Trajectory {
        debug_assert!(backward.end <= backward.start && forward.end >= forward.start);
        let mut segments: Vec<Segment> = backward.segments.into_iter().rev().collect();
        segments.extend(forward.segments);
        let termination = match (backward.termination, forward.termination) {
            (Termination::Completed, t) | (t, Termination::Completed) => t,
            (t, _) => t,
        };
        Trajectory {
            start: backward.end,
            end: forward.end,
            initial: forward.initial,
            segments,
            termination,
        }
    }

    /// Dense-output state at `s`.
    pub fn state_at(&self, s: f64) -> Option<Vec<f64>> {
        self.segment_for(s).map(|seg| seg.state(s))
    }

    /// Like [`Trajectory::state_at`], but points just outside the span are
    /// evaluated on the nearest segment's polynomial.
    pub fn state_near(&self, s: f64) -> Vec<f64> {
        if let Some(u) = self.state_at(s) {
            return u;
        }
        let first = s < self.lo();
        let forward = self.end >= self.start;
        let seg = if first == forward { self.segments.first() } else { self.segments.last() };
        seg.map(|seg| seg.state(s)).unwrap_or_else(|| self.initial.clone())
    }

    /// State on `k` equally spaced points including both ends.
    pub fn samples(&self, k: usize) -> Vec<(f64, Vec<f64>)> {
        let k = k.max(2);
        (0..k)
            .map(|i| {
                let s = self.start + (self.end - self.start) * i as f64 / (k - 1) as f64;
                (s, self.state_at(s).unwrap())
            })
            .collect()
    }

    /// Points where `g(state)` changes sign, in order of integration.
    pub fn crossings(&self, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        const SUB: usize = 16;
        let mut out = Vec::new();
        for seg in &self.segments {
            let mut prev_t = 0.0;
            let mut prev = g(&seg.state(seg.s0));
            for j in 1..=SUB {
                let t = seg.h * j as f64 / SUB as f64;
                let cur = g(&seg.state(seg.s0 + t));
                if prev == 0.0 && j == 1 && !out.is_empty() {
                    prev_t = t;
                    prev = cur;
                    continue;
                }
                if prev * cur < 0.0 || (cur == 0.0 && prev != 0.0) {
                    let (mut a, mut b, mut ga) = (prev_t, t, prev);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m == a || m == b {
                            break;
                        }
                        let gm = g(&seg.state(seg.s0 + m));
                        if ga * gm <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                            ga = gm;
                        }
                    }
                    out.push(seg.s0 + 0.5 * (a + b));
                }
                prev_t = t;
                prev = cur;
            }
        }
        out
    }
}

/// Integrates from `s0` to `s1` (either direction). `guard` may stop the
/// integration by returning a reason.
pub fn integrate(
    sys: &dyn TaylorSystem,
    s0: f64,
    u0: &[f64],
    s1: f64,
    opts: TaylorOptions,
    guard: Option<&dyn Fn(&[f64]) -> Option<String>>,
) -> Result<Trajectory> {
    if u0.len() != sys.dim() {
        return Err(Error::Integration(format!("state has {} components, system needs {}", u0.len(), sys.dim())));
    }
    let dir = if s1 >= s0 { 1.0 } else { -1.0 };
    let k = opts.order;
    let mut s = s0;
    let mut u = u0.to_vec();
    let mut segments = Vec::new();
    let mut termination = Termination::Completed;
    for _ in 0..opts.max_steps {
        if (s1 - s) * dir <= 0.0 {
            break;
        }
        if let Some(g) = guard {
            if let Some(reason) = g(&u) {
                termination = Termination::Boundary { s, reason };
                break;
            }
        }
        let c = taylor_coefficients(sys, s, &u, k);
        let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut h = opts.max_step;
        for j in [k - 1, k] {
            let mag = c.iter().fold(0.0f64, |m, row| m.max(row[j].abs()));
            if mag > 0.0 {
                h = h.min(0.9 * (opts.tol * scale / mag).powf(1.0 / j as f64));
            }
        }
        if !h.is_finite() || h < 1e-12 {
            termination = Termination::Boundary {
                s,
                reason: format!("step size collapsed to {h:e}"),
            };
            break;
        }
        let h = (h * dir).clamp(-(s - s1).abs(), (s1 - s).abs());
        let seg = Segment { s0: s, h, coeffs: c };
        u = seg.state(s + h);
        if u.iter().any(|v| !v.is_finite()) {
            termination = Termination::Boundary {
                s,
                reason: "state became non-finite".into(),
            };
            break;
        }
        s += h;
        segments.push(seg);
    }
    if termination == Termination::Completed && (s1 - s) * dir > 1e-12 {
        return Err(Error::Integration(format!("step budget exhausted at s = {s}")));
    }
    Ok(Trajectory {
        start: s0,
        end: if termination == Termination::Completed { s1 } else { s },
        initial: u0.to_vec(),
        segments,
        termination,
    })
}

/// One component of an ODE solution, re-expanded from the system at each
/// evaluation point so that local derivatives satisfy the ODE exactly.
pub struct SolutionProfile {
    pub name: String,
    pub system: Arc<dyn TaylorSystem>,
    pub trajectory: Arc<Trajectory>,
    pub component: usize,
    /// `(start, period)`: evaluation points are wrapped into one period.
    pub period: Option<(f64, f64)>,
}

impl SolutionProfile {
    fn wrap(&self, s: f64) -> f64 {
        match self.period {
            Some((start, t)) => start + (s - start).rem_euclid(t),
            None => s,
        }
    }

    pub fn state(&self, s: f64) -> Vec<f64> {
        let s = self.wrap(s);
        self.trajectory.state_near(s)
    }
}

impl Profile for SolutionProfile {
    fn taylor(&self, s: f64, order: usize) -> Vec<f64> {
        let w = self.wrap(s);
        let state = self.state(s);
        let mut c = taylor_coefficients(self.system.as_ref(), w, &state, order);
        c.swap_remove(self.component)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl TaylorSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _s: &Jet, u: &[Jet]) -> Vec<Jet> {
            vec![u[1].clone(), -&u[0]]
        }
    }

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let t = integrate(&Oscillator, 0.0, &[0.0, 1.0], 20.0, TaylorOptions::default(), None).unwrap();
        for s in [0.3, 5.0, 12.7, 20.0] {
            let u = t.state_at(s).unwrap();
            assert!((u[0] - s.sin()).abs() < 1e-11, "{s}: {}", u[0] - s.sin());
            assert!((u[1] - s.cos()).abs() < 1e-11);
        }
        let zeros = t.crossings(|u| u[0]);
        assert_eq!(zeros.len(), 6);
        for (i, z) in zeros.iter().enumerate() {
            assert!((z - std::f64::consts::PI * (i + 1) as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn backward_integration_and_guard() {
        let t = integrate(&Oscillator, 0.0, &[0.0, 1.0], -3.0, TaylorOptions::default(), None).unwrap();
        assert!((t.state_at(-2.0).unwrap()[0] + 2f64.sin()).abs() < 1e-12);
        let g = |u: &[f64]| (u[0] > 0.9).then(|| "limit".to_string());
        let t = integrate(&Oscillator, 0.0, &[0.0, 1.0], 3.0, TaylorOptions::default(), Some(&g)).unwrap();
        assert!(!t.completed());
        assert!(t.end > 1.0 && t.end < 2.0);
    }

    #[test]
    fn solution_profile_reexpands() {
        let sys: Arc<dyn TaylorSystem> = Arc::new(Oscillator);
        let traj = Arc::new(integrate(sys.as_ref(), 0.0, &[0.0, 1.0], 7.0, TaylorOptions::default(), None).unwrap());
        let p = SolutionProfile {
            name: "sin".into(),
            system: sys,
            trajectory: traj,
            component: 0,
            period: Some((0.0, 2.0 * std::f64::consts::PI)),
        };
        let s = 1.3;
        assert!((p.derivative(s, 3) + s.cos()).abs() < 1e-11);
        assert!((p.value(s + 2.0 * std::f64::consts::PI * 3.0) - s.sin()).abs() < 1e-11);
    }
}
