//! Explicitly correlated two-electron basis functions for Sigma states.

use std::fmt;

use super::geometry::{prolate_to_cartesian, r12, Coordinates, GeometryConfig};
use crate::error::{Error, Result};

pub const MAX_EXPONENT: u32 = 4;
pub const MAX_MU: u32 = 2;

/// Guard distance from the coordinate singular sets for gradients.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Singlet,
    Triplet,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Singlet => 1.0,
            Spin::Triplet => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Spin::Singlet),
            -1 => Ok(Spin::Triplet),
            _ => Err(Error::Input(format!("multiplicity sign must be +1 or -1, got {s}"))),
        }
    }
}

/// One symmetrized basis function `xi1^r eta1^s xi2^rbar eta2^sbar (2 r12 / R)^mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisTerm {
    pub r: u32,
    pub rbar: u32,
    pub s: u32,
    pub sbar: u32,
    pub mu: u32,
    /// Angular projection; only 0 is supported.
    pub l: u32,
    pub spin: Spin,
}

impl BasisTerm {
    pub fn new(r: u32, rbar: u32, s: u32, sbar: u32, mu: u32, spin: Spin) -> Self {
        Self { r, rbar, s, sbar, mu, l: 0, spin }
    }

    fn validate(&self) -> Result<()> {
        if self.l != 0 {
            return Err(Error::Input(format!("angular projection {} not supported", self.l)));
        }
        if [self.r, self.rbar, self.s, self.sbar].iter().any(|&e| e > MAX_EXPONENT) {
            return Err(Error::Input(format!("{self}: polynomial exponent above {MAX_EXPONENT}")));
        }
        if self.mu > MAX_MU {
            return Err(Error::Input(format!("{self}: r12 power above {MAX_MU}")));
        }
        Ok(())
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {} {} {})", self.r, self.rbar, self.s, self.sbar, self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub alpha: f64,
    pub alphabar: f64,
    pub beta: f64,
    pub betabar: f64,
    terms: Vec<BasisTerm>,
}

impl BasisSet {
    pub fn new(alpha: f64, alphabar: f64, beta: f64, betabar: f64, terms: Vec<BasisTerm>) -> Result<Self> {
        let (set, repeated) = Self::allowing_repeats(alpha, alphabar, beta, betabar, terms)?;
        if let Some(&k) = repeated.first() {
            return Err(Error::Input(format!("duplicate basis term {}", set.terms[k])));
        }
        Ok(set)
    }

    /// Like [`BasisSet::new`] but keeps repeated terms, returning the indices
    /// of every repeat. The resulting overlap matrix is singular and
    /// orthonormalization drops the repeats.
    pub fn allowing_repeats(
        alpha: f64,
        alphabar: f64,
        beta: f64,
        betabar: f64,
        terms: Vec<BasisTerm>,
    ) -> Result<(Self, Vec<usize>)> {
        if !(alpha > 0.0 && alphabar > 0.0) || !alpha.is_finite() || !alphabar.is_finite() {
            return Err(Error::Input(format!("alpha and alphabar must be positive, got {alpha}, {alphabar}")));
        }
        if !beta.is_finite() || !betabar.is_finite() {
            return Err(Error::Input("beta parameters must be finite".into()));
        }
        if terms.is_empty() {
            return Err(Error::Input("basis set has no terms".into()));
        }
        let mut repeated = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            t.validate()?;
            if terms[..i].contains(t) {
                repeated.push(i);
            }
        }
        Ok((Self { alpha, alphabar, beta, betabar, terms }, repeated))
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// First `k` terms with the same nonlinear parameters.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        Self::new(self.alpha, self.alphabar, self.beta, self.betabar, self.terms[..k.min(self.len())].to_vec())
    }
}

/// Value and partial derivatives of one unsymmetrized factor in
/// `(xi1, eta1, xi2, eta2)`, excluding the `r12` power.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Partials {
    pub value: f64,
    pub d_xi1: f64,
    pub d_eta1: f64,
    pub d_xi2: f64,
    pub d_eta2: f64,
}

/// Exponential and hyperbolic factors shared by all terms of a set at one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Envelope {
    exp: f64,
    cosh: f64,
    sinh: f64,
}

impl Envelope {
    pub fn new(bs: &BasisSet, xi1: f64, eta1: f64, xi2: f64, eta2: f64) -> Self {
        let arg = bs.beta * eta1 + bs.betabar * eta2;
        Self {
            exp: (-bs.alpha * xi1 - bs.alphabar * xi2).exp(),
            cosh: arg.cosh(),
            sinh: arg.sinh(),
        }
    }
}

fn pow_and_derivative(x: f64, k: u32) -> (f64, f64) {
    match k {
        0 => (1.0, 0.0),
        _ => {
            let p = x.powi(k as i32 - 1);
            (p * x, k as f64 * p)
        }
    }
}

pub(crate) fn primitive(
    t: &BasisTerm,
    bs: &BasisSet,
    env: Envelope,
    xi1: f64,
    eta1: f64,
    xi2: f64,
    eta2: f64,
) -> Partials {
    let (a, da) = pow_and_derivative(xi1, t.r);
    let (b, db) = pow_and_derivative(eta1, t.s);
    let (c, dc) = pow_and_derivative(xi2, t.rbar);
    let (d, dd) = pow_and_derivative(eta2, t.sbar);
    let poly = a * b * c * d;
    let ec = env.exp * env.cosh;
    let es = env.exp * env.sinh;
    Partials {
        value: ec * poly,
        d_xi1: ec * (da * b * c * d - bs.alpha * poly),
        d_eta1: ec * a * db * c * d + es * bs.beta * poly,
        d_xi2: ec * (a * b * dc * d - bs.alphabar * poly),
        d_eta2: ec * a * b * c * dd + es * bs.betabar * poly,
    }
}

/// Symmetrized factor `g(1,2) + sign g(2,1)` without the `r12` power.
pub(crate) fn symmetrized(
    t: &BasisTerm,
    bs: &BasisSet,
    env12: Envelope,
    env21: Envelope,
    xi1: f64,
    eta1: f64,
    xi2: f64,
    eta2: f64,
) -> Partials {
    let p = primitive(t, bs, env12, xi1, eta1, xi2, eta2);
    let q = primitive(t, bs, env21, xi2, eta2, xi1, eta1);
    let sg = t.spin.sign();
    Partials {
        value: p.value + sg * q.value,
        d_xi1: p.d_xi1 + sg * q.d_xi2,
        d_eta1: p.d_eta1 + sg * q.d_eta2,
        d_xi2: p.d_xi2 + sg * q.d_xi1,
        d_eta2: p.d_eta2 + sg * q.d_eta1,
    }
}

fn sym_at(t: &BasisTerm, bs: &BasisSet, c1: Coordinates, c2: Coordinates) -> Partials {
    let env12 = Envelope::new(bs, c1.xi, c1.eta, c2.xi, c2.eta);
    let env21 = Envelope::new(bs, c2.xi, c2.eta, c1.xi, c1.eta);
    symmetrized(t, bs, env12, env21, c1.xi, c1.eta, c2.xi, c2.eta)
}

/// Symmetrized basis function value at a configuration of both electrons.
pub fn basis_value(t: &BasisTerm, bs: &BasisSet, c1: Coordinates, c2: Coordinates, geom: GeometryConfig) -> Result<f64> {
    c1.validate()?;
    c2.validate()?;
    let f = sym_at(t, bs, c1, c2).value;
    if t.mu == 0 {
        return Ok(f);
    }
    let u = 2.0 * r12(c1, c2, geom)? / geom.r();
    Ok(f * u.powi(t.mu as i32))
}

/// Cartesian gradients of `xi` and `eta` at one electron position.
fn spheroidal_gradients(c: Coordinates, geom: GeometryConfig) -> ([f64; 3], [f64; 3]) {
    let p = prolate_to_cartesian(c, geom);
    let pos = p.position();
    let h = geom.half();
    let mut gxi = [0.0; 3];
    let mut geta = [0.0; 3];
    for k in 0..3 {
        let za = if k == 2 { -h } else { 0.0 };
        let ua = (pos[k] - za) / p.r_a;
        let ub = (pos[k] + za) / p.r_b;
        gxi[k] = (ua + ub) / geom.r();
        geta[k] = (ua - ub) / geom.r();
    }
    (gxi, geta)
}

fn check_regular(c: Coordinates) -> Result<()> {
    if c.xi <= 1.0 + SINGULAR_TOL || c.eta.abs() >= 1.0 - SINGULAR_TOL {
        return Err(Error::Domain(format!("gradient requested on a singular set: xi={} eta={}", c.xi, c.eta)));
    }
    Ok(())
}

/// Cartesian gradient of the symmetrized basis function with respect to each electron.
pub fn basis_gradient(
    t: &BasisTerm,
    bs: &BasisSet,
    c1: Coordinates,
    c2: Coordinates,
    geom: GeometryConfig,
) -> Result<([f64; 3], [f64; 3])> {
    c1.validate()?;
    c2.validate()?;
    check_regular(c1)?;
    check_regular(c2)?;
    let f = sym_at(t, bs, c1, c2);
    let (gx1, ge1) = spheroidal_gradients(c1, geom);
    let (gx2, ge2) = spheroidal_gradients(c2, geom);
    let mut g1 = [0.0; 3];
    let mut g2 = [0.0; 3];
    for k in 0..3 {
        g1[k] = f.d_xi1 * gx1[k] + f.d_eta1 * ge1[k];
        g2[k] = f.d_xi2 * gx2[k] + f.d_eta2 * ge2[k];
    }
    if t.mu == 0 {
        return Ok((g1, g2));
    }
    let d = r12(c1, c2, geom)?;
    if d < SINGULAR_TOL && t.mu == 1 {
        return Err(Error::Domain("gradient of r12 at electron coalescence".into()));
    }
    let scale = 2.0 / geom.r();
    let mu = t.mu as i32;
    let umu = (scale * d).powi(mu);
    // d(u^mu)/dx1 = mu u^(mu-2) scale^2 (x1 - x2)
    let du = mu as f64 * (scale * d).powi(mu - 2) * scale * scale;
    let (p1, p2) = (prolate_to_cartesian(c1, geom).position(), prolate_to_cartesian(c2, geom).position());
    for k in 0..3 {
        let diff = p1[k] - p2[k];
        g1[k] = g1[k] * umu + f.value * du * diff;
        g2[k] = g2[k] * umu - f.value * du * diff;
    }
    Ok((g1, g2))
}
