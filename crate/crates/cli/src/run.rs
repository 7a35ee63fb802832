use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use staticlab::config::{lookup, ModelSpec};

pub const RUN_SCHEMA: &str = "staticlab/run/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Curvature,
    Statics,
    Levelset,
    Integrals,
    Ode,
    Catalog,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Curvature,
        Suite::Statics,
        Suite::Levelset,
        Suite::Integrals,
        Suite::Ode,
        Suite::Catalog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Curvature => "curvature",
            Suite::Statics => "statics",
            Suite::Levelset => "levelset",
            Suite::Integrals => "integrals",
            Suite::Ode => "ode",
            Suite::Catalog => "catalog",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    /// Values of `s` (or Halton points per fiber point on non-warped models).
    pub s: usize,
    /// Fiber points per value of `s`.
    pub fiber: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { s: 8, fiber: 3 }
    }
}

/// A verification run: which models, which suites, and how.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Registry names or paths to `.toml` / `.json` model files.
    pub models: Vec<String>,
    #[serde(default)]
    pub suites: Vec<Suite>,
    /// Powers `p` for the integral identities.
    #[serde(default = "default_powers")]
    pub p: Vec<u32>,
    /// Levels `(c1, c2)` of the region for the gradient Bach identity.
    #[serde(default = "default_levels")]
    pub levels: [f64; 2],
    #[serde(default)]
    pub samples: Samples,
    /// Overrides keyed by check name, e.g. `unified = 1e-7`.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_powers() -> Vec<u32> {
    vec![2]
}

fn default_levels() -> [f64; 2] {
    [0.5, 1.5]
}

fn default_output() -> PathBuf {
    PathBuf::from("staticlab-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: RUN_SCHEMA.into(),
            models: Vec::new(),
            suites: Vec::new(),
            p: default_powers(),
            levels: default_levels(),
            samples: Samples::default(),
            tolerances: BTreeMap::new(),
            output: default_output(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    /// Checks the invariants and fills in defaults (all suites when none are named).
    pub fn validate(mut self) -> Result<Self> {
        if self.schema != RUN_SCHEMA {
            bail!("unsupported run schema {:?} (expected {RUN_SCHEMA:?})", self.schema);
        }
        if self.models.is_empty() {
            bail!("no models given");
        }
        if self.suites.is_empty() {
            self.suites = Suite::ALL.to_vec();
        }
        self.suites.sort();
        self.suites.dedup();
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) || !v.is_finite() {
                bail!("tolerance {k} = {v} must be positive");
            }
        }
        if self.p.iter().any(|&p| p < 2) {
            bail!("powers p must be at least 2");
        }
        if !(self.levels[0] < self.levels[1]) {
            bail!("levels must satisfy c1 < c2, got {:?}", self.levels);
        }
        if self.samples.s == 0 || self.samples.fiber == 0 {
            bail!("sample counts must be positive");
        }
        for m in &self.models {
            resolve_model(m)?;
        }
        Ok(self)
    }

    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}

/// A registry name, or a path to a model file.
pub fn resolve_model(reference: &str) -> Result<ModelSpec> {
    let path = Path::new(reference);
    if path.is_file() {
        return ModelSpec::load(path).with_context(|| format!("loading model file {reference}"));
    }
    lookup(reference).map_err(|_| {
        let names: Vec<String> = staticlab::config::registry().into_iter().map(|s| s.name).collect();
        anyhow::anyhow!("unknown model {reference:?}; known models: {}", names.join(", "))
    })
}
