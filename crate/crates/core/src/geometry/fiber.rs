//! Closed-form Einstein fibers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::chart::Coordinate;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// One Einstein factor of a fiber, given in polar-type or flat coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FiberFactor {
    /// Round sphere `S^dim(radius)`.
    Sphere { dim: usize, radius: f64 },
    /// Flat torus with all circle lengths equal.
    Torus { dim: usize, length: f64 },
    /// Local model of a hyperbolic quotient, curvature `-1/radius^2`.
    Hyperbolic { dim: usize, radius: f64 },
}

impl FiberFactor {
    pub fn dim(&self) -> usize {
        match *self {
            FiberFactor::Sphere { dim, .. } | FiberFactor::Torus { dim, .. } | FiberFactor::Hyperbolic { dim, .. } => dim,
        }
    }

    /// `lambda` with `Ric = lambda g`.
    pub fn einstein_constant(&self) -> f64 {
        match *self {
            FiberFactor::Sphere { dim, radius } => (dim as f64 - 1.0) / (radius * radius),
            FiberFactor::Torus { .. } => 0.0,
            FiberFactor::Hyperbolic { dim, radius } => -(dim as f64 - 1.0) / (radius * radius),
        }
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.dim() as f64 * self.einstein_constant()
    }

    /// Riemannian volume; `None` for the (non-compact) hyperbolic model.
    pub fn volume(&self) -> Option<f64> {
        match *self {
            FiberFactor::Sphere { dim, radius } => Some(radius.powi(dim as i32) * unit_sphere_area(dim)),
            FiberFactor::Torus { dim, length } => Some(length.powi(dim as i32)),
            FiberFactor::Hyperbolic { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            FiberFactor::Sphere { dim, radius } | FiberFactor::Hyperbolic { dim, radius } => {
                if dim < 2 {
                    return Err(Error::InvalidFiber(format!("{self:?}: dimension must be >= 2")));
                }
                if !(radius > 0.0) {
                    return Err(Error::InvalidFiber(format!("{self:?}: radius must be positive")));
                }
            }
            FiberFactor::Torus { dim, length } => {
                if dim < 1 || !(length > 0.0) {
                    return Err(Error::InvalidFiber(format!("{self:?}: need dim >= 1 and positive length")));
                }
            }
        }
        Ok(())
    }

    pub fn coordinates(&self, prefix: &str) -> Vec<Coordinate> {
        match *self {
            FiberFactor::Sphere { dim, .. } => {
                let mut c: Vec<Coordinate> =
                    (1..dim).map(|i| Coordinate::polar(&format!("{prefix}theta{i}"), 0.0, PI)).collect();
                c.push(Coordinate::periodic(&format!("{prefix}phi"), 0.0, 2.0 * PI));
                c
            }
            FiberFactor::Torus { dim, length } => (1..=dim)
                .map(|i| Coordinate::periodic(&format!("{prefix}y{i}"), 0.0, length))
                .collect(),
            FiberFactor::Hyperbolic { dim, .. } => {
                let mut c = vec![Coordinate::polar(&format!("{prefix}t"), 0.0, 3.0)];
                c.extend((1..dim - 1).map(|i| Coordinate::polar(&format!("{prefix}theta{i}"), 0.0, PI)));
                c.push(Coordinate::periodic(&format!("{prefix}phi"), 0.0, 2.0 * PI));
                c
            }
        }
    }

    /// Diagonal metric components at `y` (length `dim`).
    pub fn diagonal(&self, y: &[Jet]) -> Vec<Jet> {
        let d = self.dim();
        debug_assert_eq!(y.len(), d);
        match *self {
            FiberFactor::Sphere { radius, .. } => {
                let mut out = Vec::with_capacity(d);
                let mut acc = y[0].constant_like(radius * radius);
                for i in 0..d {
                    out.push(acc.clone());
                    if i + 1 < d {
                        let s = y[i].sin();
                        acc = &acc * &(&s * &s);
                    }
                }
                out
            }
            FiberFactor::Torus { .. } => (0..d).map(|i| y[i].constant_like(1.0)).collect(),
            FiberFactor::Hyperbolic { radius, .. } => {
                let mut out = Vec::with_capacity(d);
                out.push(y[0].constant_like(radius * radius));
                let sh = y[0].sinh();
                let mut acc = &(&sh * &sh) * (radius * radius);
                for i in 1..d {
                    out.push(acc.clone());
                    if i + 1 < d {
                        let s = y[i].sin();
                        acc = &acc * &(&s * &s);
                    }
                }
                out
            }
        }
    }

    /// A generic interior point.
    pub fn reference_point(&self) -> Vec<f64> {
        match *self {
            FiberFactor::Sphere { dim, .. } => {
                let mut y = vec![1.2; dim - 1];
                y.push(0.4);
                y
            }
            FiberFactor::Torus { dim, length } => (0..dim).map(|i| 0.3 * length + 0.1 * i as f64).collect(),
            FiberFactor::Hyperbolic { dim, .. } => {
                let mut y = vec![0.8];
                y.extend(std::iter::repeat(1.2).take(dim.saturating_sub(2)));
                y.push(0.4);
                y
            }
        }
    }
}

/// Area of the unit sphere `S^d` in `R^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2), by the recursion |S^d| = 2 pi/(d-1) |S^{d-2}|.
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * unit_sphere_area(d - 2),
    }
}

/// An Einstein fiber built from factors sharing one Einstein constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub factors: Vec<FiberFactor>,
}

impl FiberSpec {
    pub fn new(factors: Vec<FiberFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidFiber("fiber needs at least one factor".into()));
        }
        for f in &factors {
            f.validate()?;
        }
        let lambda = factors[0].einstein_constant();
        for f in &factors[1..] {
            if (f.einstein_constant() - lambda).abs() > 1e-12 * (1.0 + lambda.abs()) {
                return Err(Error::InvalidFiber(format!(
                    "product fiber is not Einstein: factor {f:?} has Einstein constant {} vs {lambda}",
                    f.einstein_constant()
                )));
            }
        }
        Ok(FiberSpec { factors })
    }

    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        FiberSpec::new(vec![FiberFactor::Sphere { dim, radius }])
    }

    pub fn torus(dim: usize, length: f64) -> Result<Self> {
        FiberSpec::new(vec![FiberFactor::Torus { dim, length }])
    }

    pub fn hyperbolic(dim: usize, radius: f64) -> Result<Self> {
        FiberSpec::new(vec![FiberFactor::Hyperbolic { dim, radius }])
    }

    /// `S^2(rho1) x S^2(rho2)`; Einstein only when the radii agree.
    pub fn s2xs2(rho1: f64, rho2: f64) -> Result<Self> {
        FiberSpec::new(vec![
            FiberFactor::Sphere { dim: 2, radius: rho1 },
            FiberFactor::Sphere { dim: 2, radius: rho2 },
        ])
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(FiberFactor::dim).sum()
    }

    pub fn einstein_constant(&self) -> f64 {
        self.factors[0].einstein_constant()
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.dim() as f64 * self.einstein_constant()
    }

    pub fn volume(&self) -> Option<f64> {
        self.factors.iter().map(FiberFactor::volume).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn unequal_product_is_rejected() {
        assert!(FiberSpec::s2xs2(1.0, 1.0).is_ok());
        assert!(matches!(FiberSpec::s2xs2(1.0, 2.0), Err(Error::InvalidFiber(_))));
    }

    #[test]
    fn einstein_constants() {
        assert_eq!(FiberSpec::sphere(3, 1.0).unwrap().einstein_constant(), 2.0);
        assert_eq!(FiberSpec::torus(2, 1.0).unwrap().einstein_constant(), 0.0);
        assert_eq!(FiberSpec::hyperbolic(2, 1.0).unwrap().einstein_constant(), -1.0);
        let p = FiberSpec::s2xs2(0.5, 0.5).unwrap();
        assert_eq!(p.einstein_constant(), 4.0);
        assert_eq!(p.scalar_curvature(), 16.0);
    }
}
