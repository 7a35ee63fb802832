//! Declarative model files and the built-in model registry.
//!
//! A model file (TOML or JSON) carries the schema string
//! [`MODEL_SCHEMA`] and describes the metric construction, the potential and
//! the equation kind. The README documents every field.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    euclidean, flat_torus, make_warped_product, ClosedProfile, Coordinate, DerivativeProfile, DiffEngine,
    FiberFactor, FiberSpec, Profile,
};
use crate::jet::Jet;
use crate::kobayashi::{find_periodic_warp, warp_on_window, KobayashiParams, PeriodicOutcome};
use crate::statics::{manufacture_static_multiwarped, manufacture_static_warped, ModelKind, PhiSpec, StaticModel};

pub const MODEL_SCHEMA: &str = "staticlab/model/v1";
pub const RECORD_SCHEMA: &str = "staticlab/model-record/v1";

/// A smooth function of `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `amplitude * sin(frequency * s + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Cosine {
        amplitude: f64,
        frequency: f64,
    },
    /// `base + amplitude * sin(frequency * s)`.
    AffineSine {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `base + amplitude * cos(frequency * s)`.
    AffineCosine {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    Sinh {
        amplitude: f64,
        frequency: f64,
    },
    Cosh {
        amplitude: f64,
        frequency: f64,
    },
    /// `a + b s`.
    Linear {
        a: f64,
        b: f64,
    },
    /// `sum_k coeffs[k] s^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// Closed orbit of the warp equation with parameters `(R, a)`; `k` comes
    /// from the fiber (`Ric_E = (n-2) k g_E`). The `s` coordinate becomes
    /// periodic with the orbit's period.
    KobayashiPeriodic {
        scalar: f64,
        a: f64,
    },
    /// Warp equation solved from `r(s0) = r0`, `r'(s0) = dr0` across the `s` window.
    Kobayashi {
        scalar: f64,
        a: f64,
        s0: f64,
        r0: f64,
        dr0: f64,
    },
    /// `scale * r'(s)` where `r` is the model's warp (potential only).
    WarpDerivative {
        scale: f64,
    },
}

fn closed(p: ClosedProfile) -> Arc<dyn Profile> {
    Arc::new(p)
}

impl ProfileSpec {
    /// Builds a closed-form profile; ODE-backed kinds are handled by the model builder.
    fn closed_form(&self) -> Option<Arc<dyn Profile>> {
        Some(match self {
            ProfileSpec::Constant { value } => closed(ClosedProfile::constant(*value)),
            ProfileSpec::Sine {
                amplitude,
                frequency,
                phase,
            } => closed(ClosedProfile::sine(*amplitude, *frequency, *phase)),
            ProfileSpec::Cosine { amplitude, frequency } => closed(ClosedProfile::cosine(*amplitude, *frequency)),
            ProfileSpec::AffineSine {
                base,
                amplitude,
                frequency,
            } => closed(ClosedProfile::affine_sine(*base, *amplitude, *frequency)),
            ProfileSpec::AffineCosine {
                base,
                amplitude,
                frequency,
            } => closed(ClosedProfile::affine_cosine(*base, *amplitude, *frequency)),
            ProfileSpec::Sinh { amplitude, frequency } => closed(ClosedProfile::sinh(*amplitude, *frequency)),
            ProfileSpec::Cosh { amplitude, frequency } => closed(ClosedProfile::cosh(*amplitude, *frequency)),
            ProfileSpec::Linear { a, b } => closed(ClosedProfile::linear(*a, *b)),
            ProfileSpec::Polynomial { coeffs } => {
                let c = coeffs.clone();
                closed(ClosedProfile::new(format!("poly{coeffs:?}"), move |s: &Jet| {
                    c.iter().rev().fold(s.constant_like(0.0), |acc, &v| &(&acc * s) + v)
                }))
            }
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiChoice {
    TraceIdentity,
    Static,
    Vacuum,
    Cpe,
}

impl From<PhiChoice> for PhiSpec {
    fn from(c: PhiChoice) -> Self {
        match c {
            PhiChoice::TraceIdentity => PhiSpec::TraceIdentity,
            PhiChoice::Static => PhiSpec::Static,
            PhiChoice::Vacuum => PhiSpec::Vacuum,
            PhiChoice::Cpe => PhiSpec::Cpe,
        }
    }
}

/// How the metric is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Construction {
    /// Flat `[-L, L]^n`.
    Euclidean { half_width: f64 },
    /// Flat torus with all circles of length `length`.
    FlatTorus { length: f64 },
    /// `ds^2 + r(s)^2 g_E`; `s` may be omitted for periodic Kobayashi warps.
    Warped {
        #[serde(default)]
        s: Option<Coordinate>,
        warp: ProfileSpec,
        fiber: Vec<FiberFactor>,
    },
    /// `ds^2 + r(s)^2 g_E` with `f(s)` solved from the unified equation.
    ManufacturedWarped {
        s: Coordinate,
        warp: ProfileSpec,
        fiber: Vec<FiberFactor>,
        s0: f64,
        f0: f64,
        df0: f64,
    },
    /// `ds^2 + r1(s)^2 g_1 + r2(s)^2 g_2` with `f(s)` and `r2(s)` solved.
    ManufacturedDoublyWarped {
        s: Coordinate,
        warp: ProfileSpec,
        fiber: Vec<FiberFactor>,
        s0: f64,
        f0: f64,
        df0: f64,
        r2_0: f64,
        dr2_0: f64,
    },
}

/// A model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub schema: String,
    pub name: String,
    pub n: usize,
    pub kind: ModelKind,
    pub construction: Construction,
    /// `f`; must be absent for manufactured constructions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<ProfileSpec>,
    /// Overrides the default `Phi` of `kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<DiffEngine>,
}

impl ModelSpec {
    pub fn new(name: &str, n: usize, kind: ModelKind, construction: Construction, potential: Option<ProfileSpec>) -> Self {
        ModelSpec {
            schema: MODEL_SCHEMA.into(),
            name: name.into(),
            n,
            kind,
            construction,
            potential,
            phi: None,
            engine: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.toml` or `.json` model file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            _ => ModelSpec::from_toml(&text),
        }
    }

    fn fiber_spec(&self, fiber: &[FiberFactor]) -> Result<FiberSpec> {
        let f = FiberSpec::new(fiber.to_vec())?;
        if f.dim() + 1 != self.n {
            return Err(Error::Config(format!(
                "{}: fiber dimension {} does not match n - 1 = {}",
                self.name,
                f.dim(),
                self.n - 1
            )));
        }
        Ok(f)
    }

    /// Builds the model described by this spec.
    pub fn build(&self) -> Result<StaticModel> {
        if self.schema != MODEL_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {:?} (expected {MODEL_SCHEMA:?})",
                self.schema
            )));
        }
        if self.n < 3 {
            return Err(Error::Dimension(self.n));
        }
        let manufactured = matches!(
            self.construction,
            Construction::ManufacturedWarped { .. } | Construction::ManufacturedDoublyWarped { .. }
        );
        if manufactured && self.potential.is_some() {
            return Err(Error::Config(format!("{}: manufactured models solve for f; drop `potential`", self.name)));
        }
        if !manufactured && self.potential.is_none() {
            return Err(Error::Config(format!("{}: missing `potential`", self.name)));
        }
        let mut model = match &self.construction {
            Construction::Euclidean { half_width } => self.flat_model(euclidean(self.n, *half_width)?)?,
            Construction::FlatTorus { length } => self.flat_model(flat_torus(self.n, *length)?)?,
            Construction::Warped { s, warp, fiber } => self.warped_model(s.as_ref(), warp, fiber)?,
            Construction::ManufacturedWarped {
                s,
                warp,
                fiber,
                s0,
                f0,
                df0,
            } => {
                let fs = self.fiber_spec(fiber)?;
                let r = self.simple_warp(warp)?;
                manufacture_static_warped(&self.name, r, &fs, self.n, s.clone(), *s0, *f0, *df0)?
            }
            Construction::ManufacturedDoublyWarped {
                s,
                warp,
                fiber,
                s0,
                f0,
                df0,
                r2_0,
                dr2_0,
            } => {
                let fs = self.fiber_spec(fiber)?;
                let [a, b]: [FiberFactor; 2] = fs
                    .factors
                    .clone()
                    .try_into()
                    .map_err(|_| Error::Config(format!("{}: the doubly warped model needs two fiber factors", self.name)))?;
                let r1 = self.simple_warp(warp)?;
                manufacture_static_multiwarped(&self.name, r1, [a, b], s.clone(), *s0, *f0, *df0, *r2_0, *dr2_0, crate::tolerances::ODE_TOL)?
            }
        };
        model.kind = self.kind;
        model.phi = match self.phi {
            Some(c) => c.into(),
            None if manufactured => PhiSpec::TraceIdentity,
            None => self.kind.default_phi(),
        };
        if let Some(e) = self.engine {
            model.metric = model.metric.with_engine(e)?;
        }
        Ok(model.with_spec(self.clone()))
    }

    fn simple_warp(&self, warp: &ProfileSpec) -> Result<Arc<dyn Profile>> {
        warp.closed_form()
            .ok_or_else(|| Error::Config(format!("{}: warp kind {warp:?} is not allowed here", self.name)))
    }

    fn flat_model(&self, metric: crate::geometry::MetricField) -> Result<StaticModel> {
        let metric = metric.with_name(&self.name);
        match self.potential.as_ref() {
            Some(ProfileSpec::Constant { value }) => Ok(StaticModel::constant(&self.name, metric, *value, self.kind)),
            Some(p) => {
                let prof = p
                    .closed_form()
                    .ok_or_else(|| Error::Config(format!("{}: potential {p:?} needs a warped model", self.name)))?;
                Ok(StaticModel::new(
                    &self.name,
                    metric,
                    crate::geometry::ScalarField::of_first(prof),
                    self.kind,
                ))
            }
            None => unreachable!("checked by build"),
        }
    }

    fn warped_model(&self, s: Option<&Coordinate>, warp: &ProfileSpec, fiber: &[FiberFactor]) -> Result<StaticModel> {
        let fs = self.fiber_spec(fiber)?;
        let n = self.n;
        let (r, s): (Arc<dyn Profile>, Coordinate) = match warp {
            ProfileSpec::KobayashiPeriodic { scalar, a } => {
                let k = fs.einstein_constant() / (n as f64 - 2.0);
                match find_periodic_warp(n, *scalar, *a, k, crate::tolerances::ODE_TOL)? {
                    PeriodicOutcome::Periodic(p) => {
                        let period = p.period;
                        let s = s.cloned().unwrap_or_else(|| Coordinate::periodic("s", 0.0, period));
                        if s.period.map_or(true, |t| (t - period).abs() > 1e-9 * period) {
                            return Err(Error::Config(format!(
                                "{}: s must be periodic with the orbit period {period}",
                                self.name
                            )));
                        }
                        (p.profile as Arc<dyn Profile>, s)
                    }
                    PeriodicOutcome::Constant { r } => {
                        return Err(Error::Config(format!(
                            "{}: (R, a) sits at the bottom of the well; use a constant warp r = {r}",
                            self.name
                        )))
                    }
                    PeriodicOutcome::NoOrbit(why) => return Err(Error::Config(format!("{}: {why}", self.name))),
                }
            }
            ProfileSpec::Kobayashi { scalar, a, s0, r0, dr0 } => {
                let s = s
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("{}: a Kobayashi window needs `s`", self.name)))?;
                let p = KobayashiParams::new(n, *scalar, *a)?;
                (warp_on_window(p, *s0, *r0, *dr0, s.lo, s.hi)?, s)
            }
            other => {
                let s = s
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("{}: warped construction needs `s`", self.name)))?;
                (self.simple_warp(other)?, s)
            }
        };
        let metric = make_warped_product(Arc::clone(&r), &fs, n, s)?.with_name(&self.name);
        let pot = self.potential.as_ref().expect("checked by build");
        if let ProfileSpec::Constant { value } = pot {
            let mut m = StaticModel::warped(&self.name, metric, closed(ClosedProfile::constant(*value)), self.kind)?;
            m.constant_potential = Some(*value);
            return Ok(m);
        }
        let f: Arc<dyn Profile> = match pot {
            ProfileSpec::WarpDerivative { scale } => Arc::new(DerivativeProfile { inner: r, scale: *scale }),
            p => p
                .closed_form()
                .ok_or_else(|| Error::Config(format!("{}: potential {p:?} is not a closed form", self.name)))?,
        };
        StaticModel::warped(&self.name, metric, f, self.kind)
    }
}

/// A model spec plus a table of `[s, f, f']`, the on-disk form of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub schema: String,
    pub spec: ModelSpec,
    pub samples: Vec<[f64; 3]>,
}

impl StaticModel {
    /// `[s, f(s), f'(s)]` at `k` points of the `s` coordinate.
    pub fn potential_table(&self, k: usize) -> Result<Vec<[f64; 3]>> {
        let w = self
            .warped_product()
            .ok_or_else(|| Error::Model(format!("{}: potential tables need a warped model", self.name)))?;
        let prof = self
            .f_profile
            .as_ref()
            .ok_or_else(|| Error::Model(format!("{}: no f(s) profile", self.name)))?;
        Ok(w.s
            .samples(k)
            .into_iter()
            .map(|s| {
                let t = prof.taylor(s, 1);
                [s, t[0], t[1]]
            })
            .collect())
    }

    pub fn record(&self, k: usize) -> Result<ModelRecord> {
        let spec = self
            .spec
            .clone()
            .ok_or_else(|| Error::Model(format!("{}: built without a spec; nothing to serialize", self.name)))?;
        Ok(ModelRecord {
            schema: RECORD_SCHEMA.into(),
            spec,
            samples: self.potential_table(k)?,
        })
    }
}

impl ModelRecord {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r: ModelRecord = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if r.schema != RECORD_SCHEMA {
            return Err(Error::Config(format!("unsupported record schema {:?}", r.schema)));
        }
        Ok(r)
    }

    /// Rebuilds the model and returns it with the largest deviation from the stored table.
    pub fn rebuild(&self) -> Result<(StaticModel, f64)> {
        let model = self.spec.build()?;
        let prof = model
            .f_profile
            .clone()
            .ok_or_else(|| Error::Model("rebuilt model has no f(s) profile".into()))?;
        let mut gap = 0.0f64;
        for [s, f, df] in &self.samples {
            let t = prof.taylor(*s, 1);
            gap = gap.max((t[0] - f).abs()).max((t[1] - df).abs());
        }
        Ok((model, gap))
    }
}

fn sphere(dim: usize, radius: f64) -> FiberFactor {
    FiberFactor::Sphere { dim, radius }
}

fn sine(amplitude: f64, frequency: f64) -> ProfileSpec {
    ProfileSpec::Sine {
        amplitude,
        frequency,
        phase: 0.0,
    }
}

/// Built-in models by name. Catalog entries are listed by
/// [`crate::kobayashi::catalog`]; these are the extra named models.
pub fn builtin_specs() -> Vec<ModelSpec> {
    let s2 = sphere(2, 1.0);
    vec![
        ModelSpec::new(
            "warped5",
            5,
            ModelKind::Static,
            Construction::ManufacturedDoublyWarped {
                s: Coordinate::interval("s", -0.6, 1.1),
                warp: ProfileSpec::AffineSine {
                    base: 2.0,
                    amplitude: 0.3,
                    frequency: 1.0,
                },
                fiber: vec![s2.clone(), s2.clone()],
                s0: 0.0,
                f0: 1.0,
                df0: 0.8,
                r2_0: 1.5,
                dr2_0: 0.0,
            },
            None,
        ),
        ModelSpec::new(
            "warped5-single",
            5,
            ModelKind::Static,
            Construction::ManufacturedWarped {
                s: Coordinate::interval("s", -1.0, 1.0),
                warp: ProfileSpec::AffineSine {
                    base: 2.0,
                    amplitude: 0.3,
                    frequency: 1.0,
                },
                fiber: vec![s2.clone(), s2.clone()],
                s0: 0.0,
                f0: 1.0,
                df0: 0.5,
            },
            None,
        ),
        ModelSpec::new(
            "s3-manufactured",
            3,
            ModelKind::Static,
            Construction::ManufacturedWarped {
                s: Coordinate::polar("s", 0.0, PI),
                warp: sine(1.0, 1.0),
                fiber: vec![s2.clone()],
                s0: PI / 2.0,
                f0: 0.0,
                df0: -1.0,
            },
            None,
        ),
        ModelSpec::new(
            "s1xs2-manufactured",
            3,
            ModelKind::Static,
            Construction::ManufacturedWarped {
                s: Coordinate::periodic("s", 0.0, 2.0 * PI),
                warp: ProfileSpec::Constant { value: 1.0 },
                fiber: vec![s2.clone()],
                s0: 0.0,
                f0: 0.0,
                df0: 1.0,
            },
            None,
        ),
        ModelSpec::new(
            "s3-cpe",
            3,
            ModelKind::Cpe,
            Construction::Warped {
                s: Some(Coordinate::polar("s", 0.0, PI)),
                warp: sine(1.0, 1.0),
                fiber: vec![s2.clone()],
            },
            Some(ProfileSpec::AffineCosine {
                base: 1.0,
                amplitude: 0.5,
                frequency: 1.0,
            }),
        ),
    ]
}

/// Every named model: catalog entries plus [`builtin_specs`].
pub fn registry() -> Vec<ModelSpec> {
    let mut v: Vec<ModelSpec> = crate::kobayashi::catalog().into_iter().map(|e| e.spec).collect();
    v.extend(builtin_specs());
    v
}

pub fn lookup(name: &str) -> Result<ModelSpec> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("unknown model {name:?}")))
}
