//! Prolate spheroidal coordinates for a diatomic with nuclei on the z axis.
//!
//! Nucleus `a` sits at `z = -R/2`, nucleus `b` at `z = +R/2`.

use crate::error::{Error, Result};

/// Radicands more negative than this are a domain error; smaller ones clamp to 0.
pub const RADICAND_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    r: f64,
}

impl GeometryConfig {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Argument(format!("internuclear distance must be positive, got {r}")));
        }
        Ok(Self { r })
    }

    /// Internuclear distance in bohr.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn half(&self) -> f64 {
        0.5 * self.r
    }
}

/// Position of one electron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinates {
    pub xi: f64,
    pub eta: f64,
    pub phi: f64,
}

impl Coordinates {
    pub fn new(xi: f64, eta: f64, phi: f64) -> Result<Self> {
        let c = Self { xi, eta, phi };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.xi >= 1.0
            && (-1.0..=1.0).contains(&self.eta)
            && self.phi.is_finite()
            && self.xi.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "coordinates out of range: xi={} eta={} phi={}",
                self.xi, self.eta, self.phi
            )))
        }
    }

    /// `sqrt((xi^2 - 1)(1 - eta^2))`, the cylindrical radius in units of R/2.
    pub fn rho(&self) -> f64 {
        ((self.xi * self.xi - 1.0) * (1.0 - self.eta * self.eta)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cartesian {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r_a: f64,
    pub r_b: f64,
}

impl Cartesian {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

pub fn prolate_to_cartesian(c: Coordinates, geom: GeometryConfig) -> Cartesian {
    let h = geom.half();
    let rho = h * c.rho();
    Cartesian {
        x: rho * c.phi.cos(),
        y: rho * c.phi.sin(),
        z: h * c.xi * c.eta,
        r_a: h * (c.xi + c.eta),
        r_b: h * (c.xi - c.eta),
    }
}

/// `(2 r12 / R)^2 = a - b cos(phi1 - phi2)`; returns `(a, b)`.
pub(crate) fn r12_coefficients(xi1: f64, eta1: f64, xi2: f64, eta2: f64) -> (f64, f64) {
    let a = xi1 * xi1 + xi2 * xi2 + eta1 * eta1 + eta2 * eta2 - 2.0 - 2.0 * xi1 * xi2 * eta1 * eta2;
    let rad = (xi1 * xi1 - 1.0) * (xi2 * xi2 - 1.0) * (1.0 - eta1 * eta1) * (1.0 - eta2 * eta2);
    (a, 2.0 * rad.max(0.0).sqrt())
}

/// Interelectronic distance from the prolate closed form.
pub fn r12(c1: Coordinates, c2: Coordinates, geom: GeometryConfig) -> Result<f64> {
    let (a, b) = r12_coefficients(c1.xi, c1.eta, c2.xi, c2.eta);
    let u2 = a - b * (c1.phi - c2.phi).cos();
    if u2 < -RADICAND_TOL {
        return Err(Error::Domain(format!("negative r12 radicand {u2:e}")));
    }
    Ok(geom.half() * u2.max(0.0).sqrt())
}
