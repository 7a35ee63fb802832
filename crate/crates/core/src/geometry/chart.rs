use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coordinate of a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    /// Period length for angular / closed coordinates.
    #[serde(default)]
    pub period: Option<f64>,
    /// The endpoints are coordinate singularities (polar axes).
    #[serde(default)]
    pub singular_ends: bool,
    /// Length scale used for finite-difference steps.
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Coordinate {
    pub fn interval(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate {
            name: name.to_string(),
            lo,
            hi,
            period: None,
            singular_ends: false,
            scale: 1.0,
        }
    }

    /// A polar-type coordinate whose endpoints are axis singularities.
    pub fn polar(name: &str, lo: f64, hi: f64) -> Self {
        Coordinate {
            singular_ends: true,
            ..Coordinate::interval(name, lo, hi)
        }
    }

    pub fn periodic(name: &str, lo: f64, period: f64) -> Self {
        Coordinate {
            period: Some(period),
            ..Coordinate::interval(name, lo, lo + period)
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Distance kept from singular endpoints when sampling.
    pub fn guard(&self) -> f64 {
        if self.singular_ends {
            10.0 * 1e-3 * self.scale
        } else {
            0.0
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidChart(format!(
                "coordinate {} has degenerate domain [{}, {}]",
                self.name, self.lo, self.hi
            )));
        }
        if let Some(p) = self.period {
            if !(p > 0.0) {
                return Err(Error::InvalidChart(format!(
                    "coordinate {} has non-positive period {p}",
                    self.name
                )));
            }
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidChart(format!("coordinate {} has scale {}", self.name, self.scale)));
        }
        Ok(())
    }

    /// `k` evenly spread interior samples respecting the guard margin.
    pub fn samples(&self, k: usize) -> Vec<f64> {
        if self.is_periodic() {
            let step = self.length() / k as f64;
            return (0..k).map(|i| self.lo + (i as f64 + 0.5) * step).collect();
        }
        let g = self.guard().max(1e-9 * self.length());
        let (lo, hi) = (self.lo + g, self.hi - g);
        (0..k)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64)
            .collect()
    }
}

/// An ordered set of coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub coords: Vec<Coordinate>,
}

impl Chart {
    pub fn new(coords: Vec<Coordinate>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidChart("chart needs at least one coordinate".into()));
        }
        for c in &coords {
            c.validate()?;
        }
        Ok(Chart { coords })
    }

    /// Euclidean chart `[-L, L]^n`.
    pub fn cube(n: usize, half_width: f64) -> Result<Self> {
        Chart::new(
            (0..n)
                .map(|i| Coordinate::interval(&format!("x{}", i + 1), -half_width, half_width))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.coords.iter().map(|c| c.name.as_str()).collect()
    }

    /// `k` deterministic points spread over the chart (Halton sequence), kept
    /// 5% of the coordinate length away from singular endpoints.
    pub fn halton_points(&self, k: usize) -> Vec<Vec<f64>> {
        const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        (1..=k)
            .map(|i| {
                self.coords
                    .iter()
                    .enumerate()
                    .map(|(d, c)| {
                        let u = halton(i as u32, PRIMES[d % PRIMES.len()]);
                        let g = if c.singular_ends { 0.05 * c.length() } else { 0.0 };
                        c.lo + g + u * (c.length() - 2.0 * g)
                    })
                    .collect()
            })
            .collect()
    }

    /// Rejects points outside non-periodic coordinate domains.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidChart(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.dim()
            )));
        }
        for (i, (c, &v)) in self.coords.iter().zip(x).enumerate() {
            if c.is_periodic() {
                continue;
            }
            let inside = if c.singular_ends { v > c.lo && v < c.hi } else { v >= c.lo && v <= c.hi };
            if !inside || !v.is_finite() {
                return Err(Error::OutOfDomain { point: x.to_vec(), coord: i });
            }
        }
        Ok(())
    }
}

fn halton(mut i: u32, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
