//! Gauss rules and the product grid used for two-electron integrals.

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Affine map of a rule on `[-1, 1]` onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> Rule {
        let half = 0.5 * (hi - lo);
        Rule {
            nodes: self.nodes.iter().map(|x| lo + half * (x + 1.0)).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }
}

/// Gauss-Legendre rule on `[-1, 1]`, Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "empty Gauss-Legendre rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Laguerre rule for `int_0^inf e^{-t} f(t) dt`.
pub fn gauss_laguerre(n: usize) -> Rule {
    assert!(n > 0, "empty Gauss-Laguerre rule");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n {
        // Initial guesses after Stroud & Secrest.
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = -1.0 / (pp * nf * p2);
    }
    Rule { nodes, weights }
}

/// Point counts of a product grid; the refinement level of a [`QuadratureGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridLevel {
    pub n_xi: usize,
    pub n_eta: usize,
    pub n_phi: usize,
}

impl GridLevel {
    pub const fn new(n_xi: usize, n_eta: usize, n_phi: usize) -> Self {
        Self { n_xi, n_eta, n_phi }
    }
}

impl std::fmt::Display for GridLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.n_xi, self.n_eta, self.n_phi)
    }
}

impl std::str::FromStr for GridLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<usize>().map_err(|e| Error::Argument(format!("grid level {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [a, b, c] => Ok(GridLevel::new(*a, *b, *c)),
            _ => Err(Error::Argument(format!("grid level {s:?} needs three counts"))),
        }
    }
}

/// Default level for Hamiltonian generation.
pub const DEFAULT_LEVEL: GridLevel = GridLevel::new(24, 24, 32);

/// Next level in the refinement ladder used for convergence checks.
pub const REFINED_LEVEL: GridLevel = GridLevel::new(32, 32, 48);

/// Grading exponent of the inner rules toward the electron coalescence point.
pub(crate) const GRADING: i32 = 3;

/// Rules for the five-dimensional two-electron integral.
///
/// Electron 1 uses the outer product rule (Laguerre in `t` with
/// `xi = 1 + t / kappa`, Legendre in `eta`). For every electron-1 node the
/// electron-2 domain is split at that node, and each piece gets a rule graded
/// toward the split point where `r12` can vanish. The relative azimuth is
/// integrated in closed form (complete elliptic integrals for odd powers of
/// `r12`), so `n_phi` is validated and recorded but does not change results.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    level: GridLevel,
    /// Outer `xi` rule in the Laguerre variable `t`.
    pub xi: Rule,
    /// Outer `eta` rule on `[-1, 1]`.
    pub eta: Rule,
    /// Inner graded Legendre rule on `[0, 1]`, dense near 0.
    pub(crate) inner_xi: Rule,
    pub(crate) inner_xi_tail: Rule,
    /// Plain Legendre rule on `[0, 1]` for the part of `[1, xi1]` away from `xi1`.
    pub(crate) inner_xi_far: Rule,
    pub(crate) inner_eta: Rule,
}

impl QuadratureGrid {
    pub fn new(level: GridLevel) -> Result<Self> {
        if level.n_xi < 8 || level.n_eta < 8 || level.n_phi < 8 {
            return Err(Error::Argument(format!("grid counts must be at least 8, got {level}")));
        }
        let graded = |n: usize| -> Rule {
            let base = gauss_legendre(n).mapped(0.0, 1.0);
            let q = GRADING as f64;
            Rule {
                nodes: base.nodes.iter().map(|u| u.powi(GRADING)).collect(),
                weights: base
                    .iter()
                    .map(|(u, w)| w * q * u.powi(GRADING - 1))
                    .collect(),
            }
        };
        let inner_xi_n = level.n_xi.div_ceil(2);
        let inner_eta_n = level.n_eta.div_ceil(2);
        Ok(Self {
            level,
            xi: gauss_laguerre(level.n_xi),
            eta: gauss_legendre(level.n_eta),
            inner_xi: graded(inner_xi_n),
            inner_xi_tail: gauss_laguerre(inner_xi_n),
            inner_xi_far: gauss_legendre(inner_xi_n).mapped(0.0, 1.0),
            inner_eta: graded(inner_eta_n),
        })
    }

    pub fn level(&self) -> GridLevel {
        self.level
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 24, 48] {
            let r = gauss_legendre(n);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for k in 0..(2 * n).min(40) {
                let got: f64 = r.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let expect = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - expect).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn laguerre_reproduces_factorial_moments() {
        for n in [4usize, 12, 24, 32, 48] {
            let r = gauss_laguerre(n);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
            for k in 0..(2 * n).min(20) {
                let got: f64 = r.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let expect = factorial(k as u32);
                assert!(((got - expect) / expect).abs() < 1e-12, "n={n} k={k} {got} {expect}");
            }
        }
    }

    #[test]
    fn grid_rejects_small_counts() {
        assert!(QuadratureGrid::new(GridLevel::new(4, 24, 32)).is_err());
        let g = QuadratureGrid::new(DEFAULT_LEVEL).unwrap();
        assert_eq!(g.xi.len(), 24);
        assert_eq!(g.level(), DEFAULT_LEVEL);
        assert!(g.inner_xi.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn level_parses() {
        assert_eq!("24,24,32".parse::<GridLevel>().unwrap(), DEFAULT_LEVEL);
        assert!("24,24".parse::<GridLevel>().is_err());
    }
}
