use std::path::Path;

use anyhow::Result;
use serde_json::json;
use staticlab::config::{Construction, ModelSpec, ProfileSpec};
use staticlab::kobayashi::{catalog, drift_check, find_periodic_warp, KobayashiParams, PeriodicOutcome};
use staticlab::levelset::{slice_report, weyl_normal_check, WeylNormal};
use staticlab::quadrature::{
    check_3d_identity, check_full_divergence_identity, check_main_identity, region_pieces, IdentityCheck,
    QuadratureRule, Region,
};
use staticlab::statics::{ModelKind, StaticModel};
use staticlab::tolerances::*;
use staticlab::{FiberSpec, PointCurvature};

use crate::output::{slug, write_csv, CheckReport};
use crate::run::{RunConfig, Suite};

/// Runs one suite on one model. Errors inside a check become failed reports;
/// only I/O errors of side files propagate.
pub fn run_suite(cfg: &RunConfig, spec: &ModelSpec, model: &StaticModel, suite: Suite, out: &Path) -> Result<Vec<CheckReport>> {
    let ctx = Ctx {
        cfg,
        model,
        suite: suite.name(),
    };
    Ok(match suite {
        Suite::Curvature => curvature(&ctx),
        Suite::Statics => statics(&ctx),
        Suite::Levelset => levelset(&ctx, out)?,
        Suite::Integrals => integrals(&ctx),
        Suite::Ode => ode(&ctx, spec, out)?,
        Suite::Catalog => catalog_suite(&ctx),
    })
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    model: &'a StaticModel,
    suite: &'static str,
}

impl Ctx<'_> {
    fn measured(&self, check: &str, value: f64, default_tol: f64) -> CheckReport {
        CheckReport::measured(&self.model.name, self.suite, check, value, self.cfg.tolerance(check, default_tol))
    }

    fn failed(&self, check: &str, err: impl std::fmt::Display) -> CheckReport {
        CheckReport::failed(&self.model.name, self.suite, check, err)
    }

    fn skipped(&self, check: &str, why: impl Into<String>) -> CheckReport {
        CheckReport::skipped(&self.model.name, self.suite, check, why)
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.model.sample_points(self.cfg.samples.s, self.cfg.samples.fiber)
    }
}

fn curvature(ctx: &Ctx) -> Vec<CheckReport> {
    let m = ctx.model;
    let n = m.dim();
    let mut decomposition = 0.0f64;
    let mut weyl = 0.0f64;
    let mut weyl_div = 0.0f64;
    let mut bach_routes = 0.0f64;
    let (mut r_lo, mut r_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in ctx.points() {
        let pc = match PointCurvature::new(&m.metric, &x, 4) {
            Ok(pc) => pc,
            Err(e) => return vec![ctx.failed("curvature", e)],
        };
        decomposition = decomposition.max(pc.decomposition_residual());
        weyl = weyl.max(pc.weyl().max_abs());
        r_lo = r_lo.min(pc.scalar());
        r_hi = r_hi.max(pc.scalar());
        if n >= 4 {
            match pc.weyl_divergence_residual() {
                Ok(r) => weyl_div = weyl_div.max(r),
                Err(e) => return vec![ctx.failed("weyl-divergence", e)],
            }
            match (pc.bach(), pc.bach_via_weyl()) {
                (Ok(a), Ok(b)) => bach_routes = bach_routes.max(a.max_diff(&b)),
                (Err(e), _) | (_, Err(e)) => return vec![ctx.failed("bach-routes", e)],
            }
        }
    }
    let mut out = vec![ctx
        .measured("decomposition", decomposition, SYMMETRY_LOW_ORDER)
        .with_detail(json!({ "scalar_min": r_lo, "scalar_max": r_hi }))];
    if n == 3 {
        out.push(ctx.measured("weyl-3d", weyl, WEYL_3D));
        out.push(ctx.skipped("weyl-divergence", "n = 3"));
        out.push(ctx.skipped("bach-routes", "the Weyl route needs n >= 4"));
    } else {
        out.push(ctx.measured("weyl-divergence", weyl_div, WEYL_DIVERGENCE));
        out.push(ctx.measured("bach-routes", bach_routes, BACH_ROUTES));
    }
    out
}

fn statics(ctx: &Ctx) -> Vec<CheckReport> {
    let m = ctx.model;
    let pts = ctx.points();
    let c = match m.check(&pts, true) {
        Ok(c) => c,
        Err(e) => return vec![ctx.failed("statics", e)],
    };
    let kind_tol = match m.kind {
        ModelKind::VacuumStatic => VACUUM_STATIC,
        ModelKind::Unified => UNIFIED_RESIDUAL,
        ModelKind::Static | ModelKind::Cpe => STATIC_EXACT,
    };
    let mut out = vec![
        ctx.measured("unified", c.unified, UNIFIED_RESIDUAL)
            .with_detail(json!({ "points": c.points, "warnings": m.warnings })),
        ctx.measured("trace-identity", c.trace_identity, TRACE_IDENTITY),
        ctx.measured(m.kind.label(), c.kind_residual, kind_tol),
        ctx.measured("psi-routes", c.psi_routes, PSI_ROUTES),
        ctx.measured("d-routes", c.d_routes, D_ROUTES).with_detail(json!({ "d_max": c.d_max })),
        ctx.measured("bach-rewrite", c.bach_rewrite, BACH_REWRITE)
            .with_detail(json!({ "guarded_skipped": c.guarded_skipped })),
    ];
    if m.kind == ModelKind::Cpe {
        out.push(match m.scalar_curvature_variation(&pts) {
            Ok(v) => ctx.measured("scalar-constant", v, 1e-8),
            Err(e) => ctx.failed("scalar-constant", e),
        });
    }
    out
}

/// Values of `s` with `|f'| >= 1e-2`, or why there are none.
fn regular_slices(m: &StaticModel, k: usize) -> std::result::Result<Vec<f64>, String> {
    let w = m.warped_product().ok_or("level sets are computed on warped models only")?;
    let f = m.f_profile.as_ref().ok_or("the potential is not a function of s")?;
    if m.constant_potential.is_some() {
        return Err("constant potential: no regular level sets".into());
    }
    let ss: Vec<f64> = w.s.samples(k).into_iter().filter(|&s| f.taylor(s, 1)[1].abs() >= 1e-2).collect();
    if ss.is_empty() {
        return Err("no regular slice among the samples".into());
    }
    Ok(ss)
}

fn levelset(ctx: &Ctx, out_dir: &Path) -> Result<Vec<CheckReport>> {
    let m = ctx.model;
    let names = ["levelset-identity", "constancy", "gauss-codazzi", "weyl-normal"];
    let ss = match regular_slices(m, ctx.cfg.samples.s) {
        Ok(ss) => ss,
        Err(why) => return Ok(names.iter().map(|c| ctx.skipped(c, why.clone())).collect()),
    };
    let mut identity = 0.0f64;
    let mut constancy = 0.0f64;
    let mut gc = 0.0f64;
    let mut rows = Vec::new();
    for &s in &ss {
        let r = match slice_report(m, s, ctx.cfg.samples.fiber) {
            Ok(r) => r,
            Err(e) => return Ok(vec![ctx.failed("levelset", e)]),
        };
        let c = &r.constancy;
        identity = identity.max(r.identity_residual);
        constancy = [constancy, c.scalar, c.laplacian, c.mean_curvature, c.slice_scalar, c.r_nn]
            .into_iter()
            .fold(0.0, f64::max);
        gc = gc.max(r.gauss_residual).max(r.codazzi_residual);
        let p = &r.points[0];
        let (lhs, rhs) = r.identity_sides();
        rows.push(vec![
            s,
            r.level,
            p.mean_curvature,
            p.a_sq,
            p.traceless_sq,
            lhs,
            rhs,
            p.slice_scalar,
            r.slice_constant().unwrap_or(f64::NAN),
        ]);
    }
    let csv = out_dir.join(format!("{}-slices.csv", slug(&m.name)));
    write_csv(
        &csv,
        &["s", "level", "mean_curvature", "a_sq", "traceless_sq", "d_sq", "identity_rhs", "slice_scalar", "slice_constant"],
        &rows,
    )?;
    let mid = ss[ss.len() / 2];
    let weyl = match weyl_normal_check(m, mid, ctx.cfg.samples.fiber, D_FLAT) {
        Ok(WeylNormal::Applicable { max }) => ctx.measured("weyl-normal", max, WEYL_NORMAL),
        Ok(WeylNormal::NotApplicable { d_max, b_max }) => ctx.skipped(
            "weyl-normal",
            format!("needs D = 0 and B = 0 (max|D| = {d_max:.1e}, max|B| = {b_max:.1e})"),
        ),
        Err(e) => ctx.failed("weyl-normal", e),
    };
    Ok(vec![
        ctx.measured("levelset-identity", identity, LEVELSET_IDENTITY)
            .with_detail(json!({ "slices": ss.len(), "csv": csv })),
        ctx.measured("constancy", constancy, CONSTANCY),
        ctx.measured("gauss-codazzi", gc, GAUSS_CODAZZI),
        weyl,
    ])
}

fn identity_report(ctx: &Ctx, check: &str, c: &IdentityCheck) -> CheckReport {
    let tol = ctx.cfg.tolerances.get(check).copied().unwrap_or(c.tolerance);
    let extra: serde_json::Map<String, serde_json::Value> =
        c.extra.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut r = CheckReport::measured(&ctx.model.name, ctx.suite, check, c.residual, tol).with_detail(json!({
        "identity": c.identity,
        "region": c.region,
        "lhs": c.lhs,
        "rhs": c.rhs,
        "converged": c.converged,
        "node_counts": c.node_counts,
        "boundary_flux": c.boundary_flux,
        "extra": extra,
    }));
    r.passed = c.residual <= tol && c.converged;
    r
}

fn integrals(ctx: &Ctx) -> Vec<CheckReport> {
    let m = ctx.model;
    let rule = QuadratureRule::default();
    let [c1, c2] = ctx.cfg.levels;
    let mut out = Vec::new();
    for &p in &ctx.cfg.p {
        let name = format!("gradient-bach-p{p}");
        out.push(match region_pieces(m, Region::BetweenLevels { c1, c2 }) {
            Err(e) => ctx.skipped(&name, format!("region ({c1}, {c2}): {e}")),
            Ok(_) => match check_main_identity(m, c1, c2, p, rule) {
                Ok(c) => identity_report(ctx, &name, &c),
                Err(e) => ctx.skipped(&name, e.to_string()),
            },
        });
    }
    let closed = region_pieces(m, Region::ClosedManifold).is_ok();
    for &p in &ctx.cfg.p {
        let name = format!("full-divergence-p{p}");
        out.push(if !closed {
            ctx.skipped(&name, "the model is not closed")
        } else if p % 2 == 1 {
            ctx.skipped(&name, "odd p on a closed manifold")
        } else {
            match check_full_divergence_identity(m, p, rule) {
                Ok(c) => identity_report(ctx, &name, &c),
                Err(e) => ctx.failed(&name, e),
            }
        });
        if m.dim() == 3 {
            let name = format!("cotton-3d-p{p}");
            out.push(if !closed {
                ctx.skipped(&name, "the model is not closed")
            } else if p % 2 == 1 {
                ctx.skipped(&name, "odd p on a closed manifold")
            } else {
                match check_3d_identity(m, p, rule) {
                    Ok(c) => identity_report(ctx, &name, &c),
                    Err(e) => ctx.failed(&name, e),
                }
            });
        }
    }
    out
}

fn ode(ctx: &Ctx, spec: &ModelSpec, out_dir: &Path) -> Result<Vec<CheckReport>> {
    let names = ["closure", "first-integrals", "substitution"];
    let skip = |why: &str| names.iter().map(|c| ctx.skipped(c, why)).collect::<Vec<_>>();
    let Construction::Warped { s, warp, fiber } = &spec.construction else {
        return Ok(skip("the warp is not a solution of the warp equation"));
    };
    let n = spec.n;
    let k = match FiberSpec::new(fiber.clone()) {
        Ok(f) => f.einstein_constant() / (n as f64 - 2.0),
        Err(e) => return Ok(vec![ctx.failed("ode", e)]),
    };
    let mut out = Vec::new();
    let (params, r0, dr0, span) = match warp {
        ProfileSpec::KobayashiPeriodic { scalar, a } => match find_periodic_warp(n, *scalar, *a, k, ODE_TOL) {
            Ok(PeriodicOutcome::Periodic(w)) => {
                out.push(
                    ctx.measured("closure", w.closure, PERIODIC_CLOSURE)
                        .with_detail(json!({ "period": w.period, "r_min": w.r_min, "r_max": w.r_max })),
                );
                (w.params, w.r_min, 0.0, 10.5 * w.period)
            }
            Ok(PeriodicOutcome::Constant { r }) => return Ok(skip(&format!("constant orbit r = {r}"))),
            Ok(PeriodicOutcome::NoOrbit(why)) => return Ok(vec![ctx.failed("closure", why)]),
            Err(e) => return Ok(vec![ctx.failed("closure", e)]),
        },
        ProfileSpec::Kobayashi { scalar, a, s0, r0, dr0 } => {
            out.push(ctx.skipped("closure", "non-periodic warp"));
            let hi = s.as_ref().map(|c| c.hi).unwrap_or(*s0 + 1.0);
            let p = match KobayashiParams::new(n, *scalar, *a) {
                Ok(p) => p,
                Err(e) => return Ok(vec![ctx.failed("ode", e)]),
            };
            (p, *r0, *dr0, hi - s0)
        }
        _ => return Ok(skip("the warp is not a solution of the warp equation")),
    };
    let (traj, drift) = match drift_check(params, r0, dr0, span, 4001) {
        Ok(v) => v,
        Err(e) => return Ok(vec![ctx.failed("first-integrals", e)]),
    };
    let rows: Vec<Vec<f64>> = traj
        .samples(1001)
        .into_iter()
        .map(|(s, u)| vec![s, u[0], u[1], u[2], u[3]])
        .collect();
    let csv = out_dir.join(format!("{}-ode.csv", slug(&ctx.model.name)));
    write_csv(&csv, &["s", "r", "dr", "f", "df"], &rows)?;
    out.push(
        ctx.measured("first-integrals", drift.relative(), FIRST_INTEGRAL_DRIFT)
            .with_detail(json!({ "drift": drift, "span": span, "csv": csv })),
    );
    out.push(ctx.measured("substitution", drift.substitution, F_PROPORTIONAL));
    Ok(out)
}

fn catalog_suite(ctx: &Ctx) -> Vec<CheckReport> {
    let m = ctx.model;
    let names = ["scalar-curvature", "bach-flat", "einstein-slice", "closedness"];
    let Some(entry) = catalog().into_iter().find(|e| e.name == m.name) else {
        return names.iter().map(|c| ctx.skipped(c, "not a catalog entry")).collect();
    };
    let mut r_err = 0.0f64;
    let mut d_max = 0.0f64;
    let mut b_max = 0.0f64;
    for x in ctx.points() {
        let p = match m.at(&x, 4) {
            Ok(p) => p,
            Err(e) => return vec![ctx.failed("catalog", e)],
        };
        r_err = r_err.max((p.curv.scalar() - entry.expected.scalar).abs());
        match (p.d_tensor(), p.curv.bach()) {
            (Ok(d), Ok(b)) => {
                d_max = d_max.max(d.max_abs());
                b_max = b_max.max(b.max_abs());
            }
            (Err(e), _) | (_, Err(e)) => return vec![ctx.failed("bach-flat", e)],
        }
    }
    let tags: Vec<&str> = entry.tags.iter().map(|t| t.label()).collect();
    let mut out = vec![ctx
        .measured("scalar-curvature", r_err, GOLDEN_SCALAR)
        .with_detail(json!({ "expected": entry.expected.scalar, "tags": tags }))];
    out.push(if entry.expected.bach_flat {
        let mut r = ctx
            .measured("bach-flat", b_max, BACH_FLAT)
            .with_detail(json!({ "d_max": d_max, "b_max": b_max }));
        r.passed = b_max <= r.tolerance && d_max <= ctx.cfg.tolerance("d-flat", D_FLAT);
        r
    } else {
        ctx.skipped("bach-flat", "not expected to be Bach-flat")
    });
    out.push(match (entry.expected.einstein_slice, regular_slices(m, ctx.cfg.samples.s)) {
        (None, _) => ctx.skipped("einstein-slice", "not a warped entry"),
        (Some(_), Err(why)) => ctx.skipped("einstein-slice", why),
        (Some(k), Ok(ss)) => match slice_report(m, ss[ss.len() / 2], ctx.cfg.samples.fiber) {
            Ok(r) => {
                let got = r.slice_constant().unwrap_or(f64::NAN);
                ctx.measured("einstein-slice", (got - k).abs().max(r.slice_einstein_deviation), EINSTEIN_SLICE)
                    .with_detail(json!({ "slice_constant": got, "expected": k }))
            }
            Err(e) => ctx.failed("einstein-slice", e),
        },
    });
    let closed = region_pieces(m, Region::ClosedManifold).is_ok();
    out.push(CheckReport::flag(
        &m.name,
        ctx.suite,
        "closedness",
        closed == entry.expected.closed,
        json!({ "expected": entry.expected.closed, "measured": closed }),
    ));
    out
}
