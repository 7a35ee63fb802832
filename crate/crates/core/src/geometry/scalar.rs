use std::fmt;
use std::sync::Arc;

use super::warped::Profile;
use crate::jet::{Jet, JetSpace};

pub type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;

/// A smooth function on a chart, written over coordinate jets.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    f: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(format!("{c}"), move |x| x[0].constant_like(c))
    }

    /// A function of the first coordinate only.
    pub fn of_first(profile: Arc<dyn Profile>) -> Self {
        let name = profile.describe();
        ScalarField::new(name, move |x| profile.eval(&x[0]))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        (self.f)(x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let sp = JetSpace::get(x.len(), 0);
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(sp, v)).collect();
        (self.f)(&xs).value()
    }

    /// Jet of the given order at `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let sp = JetSpace::get(x.len(), order);
        let xs: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(sp, i, v)).collect();
        (self.f)(&xs)
    }
}
