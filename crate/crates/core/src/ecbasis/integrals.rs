//! Overlap and Hamiltonian matrices by deterministic quadrature.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::basis::{symmetrized, BasisSet, Envelope};
use super::geometry::GeometryConfig;
use super::quadrature::QuadratureGrid;
use crate::encode::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Lowest and highest power of `u = 2 r12 / R` whose azimuthal moments are needed.
const K_MIN: i32 = -1;
const K_MAX: i32 = 4;
const N_MOMENTS: usize = (K_MAX - K_MIN + 1) as usize;

/// Full-circle moments `M_k = int u^k dphi` and `C_k = int u^k cos(phi) dphi`,
/// indexed by `k - K_MIN`, for `u^2 = d0 + b (1 - cos phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub m: [f64; N_MOMENTS],
    pub c: [f64; N_MOMENTS],
}

impl Moments {
    #[inline]
    fn m(&self, k: i32) -> f64 {
        self.m[(k - K_MIN) as usize]
    }

    #[inline]
    fn c(&self, k: i32) -> f64 {
        self.c[(k - K_MIN) as usize]
    }
}

/// Complete elliptic integrals `(K(m), E(m))` from the complementary parameter `1 - m`.
fn elliptic_ke(m1: f64) -> (f64, f64) {
    let mut a = 1.0f64;
    let mut b = m1.sqrt();
    let mut c2 = 1.0 - m1;
    let mut sum = 0.5 * c2;
    let mut pow = 0.5;
    for _ in 0..40 {
        let an = 0.5 * (a + b);
        let cn = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        c2 = cn * cn;
        sum += pow * c2;
        if c2 <= 1e-34 * a * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Series threshold on `b / a` below which moments are summed as a binomial series.
const SERIES_RATIO: f64 = 0.1;

/// Full-circle azimuthal moments for `u^2 = d0 + b (1 - cos phi)`, where `d0`
/// is the squared scaled distance at equal azimuths and `b = 2 rho1 rho2`.
/// Odd powers reduce to complete elliptic integrals.
pub(crate) fn azimuthal_moments(d0: f64, b: f64) -> Moments {
    let mut m = [0.0; N_MOMENTS];
    let mut c = [0.0; N_MOMENTS];
    let a = d0 + b;
    let idx = |k: i32| (k - K_MIN) as usize;
    m[idx(0)] = 2.0 * PI;
    m[idx(2)] = 2.0 * PI * a;
    m[idx(4)] = 2.0 * PI * a * a + PI * b * b;
    c[idx(2)] = -PI * b;
    c[idx(4)] = -2.0 * PI * a * b;

    let beta = b / a;
    if beta < SERIES_RATIO {
        // u^k = a^(k/2) sum_j binom(k/2, j) (-beta cos)^j
        for k in [-1, 1, 3] {
            let half = 0.5 * k as f64;
            let mut binom = 1.0;
            let mut bpow = 1.0;
            // int_0^{2 pi} cos^j, j even
            let mut cos_int = 2.0 * PI;
            let (mut sm, mut sc) = (0.0, 0.0);
            for j in 0..40 {
                if j % 2 == 0 {
                    sm += binom * bpow * cos_int;
                } else {
                    // int cos^(j+1) from the even integral of order j-1
                    let next = cos_int * j as f64 / (j as f64 + 1.0);
                    sc += binom * bpow * next;
                    cos_int = next;
                }
                binom *= (half - j as f64) / (j as f64 + 1.0);
                bpow *= -beta;
            }
            let ak = a.powf(half);
            m[idx(k)] = ak * sm;
            c[idx(k)] = ak * sc;
        }
        return Moments { m, c };
    }

    // u^2 = A (1 - mm sin^2 t) with t = (pi - phi) / 2
    let big = d0 + 2.0 * b;
    let mm = 2.0 * b / big;
    let (kk, ee) = elliptic_ke(d0 / big);
    let j1 = kk;
    let j1p = ee;
    let j3 = (2.0 * (2.0 - mm) * ee - (1.0 - mm) * kk) / 3.0;
    let j5 = (4.0 * (2.0 - mm) * j3 - 3.0 * (1.0 - mm) * ee) / 5.0;
    let sa = big.sqrt();
    m[idx(-1)] = 4.0 * j1 / sa;
    m[idx(1)] = 4.0 * j1p * sa;
    m[idx(3)] = 4.0 * j3 * sa * big;
    let m5 = 4.0 * j5 * sa * big * big;
    // cos phi = (a - u^2) / b
    c[idx(-1)] = (a * m[idx(-1)] - m[idx(1)]) / b;
    c[idx(1)] = (a * m[idx(1)] - m[idx(3)]) / b;
    c[idx(3)] = (a * m[idx(3)] - m5) / b;
    Moments { m, c }
}

/// Raw matrices in the non-orthogonal basis, Hartree atomic units.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrals {
    pub overlap: Matrix,
    pub kinetic: Matrix,
    pub nuclear: Matrix,
    pub repulsion: Matrix,
    pub r_bohr: f64,
}

impl Integrals {
    /// `T + V_ne + V_ee + S / R`.
    pub fn hamiltonian(&self) -> Matrix {
        let n = self.overlap.rows();
        let mut h = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = self.kinetic[(i, j)]
                    + self.nuclear[(i, j)]
                    + self.repulsion[(i, j)]
                    + self.overlap[(i, j)] / self.r_bohr;
            }
        }
        h
    }
}

/// One electron position in the frame of its own azimuth.
#[derive(Debug, Clone, Copy)]
struct Site {
    xi: f64,
    eta: f64,
    /// Scaled cylindrical radius `sqrt((xi^2-1)(1-eta^2))`.
    rho: f64,
    /// `(rho, z)` components of grad xi and grad eta.
    gxi: [f64; 2],
    geta: [f64; 2],
}

impl Site {
    fn new(xi: f64, eta: f64, geom: GeometryConfig) -> Self {
        let h = geom.half();
        let rho = ((xi * xi - 1.0) * (1.0 - eta * eta)).max(0.0).sqrt();
        let (pr, z) = (h * rho, h * xi * eta);
        let ra = h * (xi + eta);
        let rb = h * (xi - eta);
        let ua = [pr / ra, (z + h) / ra];
        let ub = [pr / rb, (z - h) / rb];
        let r = geom.r();
        Self {
            xi,
            eta,
            rho,
            gxi: [(ua[0] + ub[0]) / r, (ua[1] + ub[1]) / r],
            geta: [(ua[0] - ub[0]) / r, (ua[1] - ub[1]) / r],
        }
    }
}

/// Per-function data at a node pair.
#[derive(Debug, Clone, Copy, Default)]
struct FnData {
    f: f64,
    /// Gradient of electron 1 in its `(rho, z)` frame.
    v: [f64; 2],
    /// Gradient of electron 2 in its `(rho, z)` frame.
    w: [f64; 2],
    p: f64,
    q: f64,
    mu: i32,
}

const S_IDX: usize = 0;
const T_IDX: usize = 1;
const VNE_IDX: usize = 2;
const VEE_IDX: usize = 3;

/// Number of packed upper-triangle entries.
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Adds the azimuth-integrated contributions of one node pair to `acc`,
/// laid out as four packed upper triangles. `weight` multiplies the full
/// integrand including the volume element.
fn accumulate_node(
    bs: &BasisSet,
    geom: GeometryConfig,
    e1: &Site,
    e2: &Site,
    weight: f64,
    scratch: &mut [FnData],
    acc: &mut [f64],
) {
    let h = geom.half();
    let r = geom.r();
    let d0 = (e1.rho - e2.rho).powi(2) + (e1.xi * e1.eta - e2.xi * e2.eta).powi(2);
    let b = 2.0 * e1.rho * e2.rho;
    let mom = azimuthal_moments(d0, b);

    let env12 = Envelope::new(bs, e1.xi, e1.eta, e2.xi, e2.eta);
    let env21 = Envelope::new(bs, e2.xi, e2.eta, e1.xi, e1.eta);
    let (pc1, pc2) = (h * e1.rho, h * e2.rho);
    let dz = h * (e1.xi * e1.eta - e2.xi * e2.eta);
    for (t, d) in bs.terms().iter().zip(scratch.iter_mut()) {
        let g = symmetrized(t, bs, env12, env21, e1.xi, e1.eta, e2.xi, e2.eta);
        let v = [
            g.d_xi1 * e1.gxi[0] + g.d_eta1 * e1.geta[0],
            g.d_xi1 * e1.gxi[1] + g.d_eta1 * e1.geta[1],
        ];
        let w = [
            g.d_xi2 * e2.gxi[0] + g.d_eta2 * e2.geta[0],
            g.d_xi2 * e2.gxi[1] + g.d_eta2 * e2.geta[1],
        ];
        *d = FnData {
            f: g.value,
            v,
            w,
            p: v[0] * pc1 + w[0] * pc2 + (v[1] - w[1]) * dz,
            q: v[0] * pc2 + w[0] * pc1,
            mu: t.mu as i32,
        };
    }

    let vol = h.powi(6) * (e1.xi * e1.xi - e1.eta * e1.eta) * (e2.xi * e2.xi - e2.eta * e2.eta);
    let wv = weight * vol;
    let wn = -weight * h.powi(6) * (4.0 / r)
        * (e1.xi * (e2.xi * e2.xi - e2.eta * e2.eta) + e2.xi * (e1.xi * e1.xi - e1.eta * e1.eta));
    let kin = 4.0 / (r * r);
    let n = scratch.len();
    let np = packed_len(n);
    let mut idx = 0;
    for i in 0..n {
        let fi = scratch[i];
        for fj in &scratch[i..n] {
            let m = fi.mu + fj.mu;
            let ff = fi.f * fj.f;
            let mm = mom.m(m);
            acc[S_IDX * np + idx] += wv * ff * mm;
            acc[VNE_IDX * np + idx] += wn * ff * mm;
            acc[VEE_IDX * np + idx] += wv * (2.0 / r) * ff * mom.m(m - 1);
            let mut t = (fi.v[0] * fj.v[0] + fi.v[1] * fj.v[1] + fi.w[0] * fj.w[0] + fi.w[1] * fj.w[1]) * mm;
            if m > 0 {
                let (m2, c2) = (mom.m(m - 2), mom.c(m - 2));
                let cross = fj.mu as f64 * fj.f * (fi.p * m2 - fi.q * c2)
                    + fi.mu as f64 * fi.f * (fj.p * m2 - fj.q * c2);
                t += kin * (cross + 2.0 * (fi.mu * fj.mu) as f64 * ff * m2);
            }
            acc[T_IDX * np + idx] += 0.5 * wv * t;
            idx += 1;
        }
    }
}

/// Electron-2 nodes for a fixed electron-1 node: `(xi2, eta2, weight)`.
fn inner_nodes(grid: &QuadratureGrid, xi1: f64, eta1: f64, kappa: f64) -> Vec<(f64, f64, f64)> {
    let span = 2.0 / kappa;
    let mut xs = Vec::with_capacity(3 * grid.inner_xi.len());
    let near = (xi1 - 1.0).min(span);
    for (v, w) in grid.inner_xi.iter() {
        xs.push((xi1 - near * v, near * w));
    }
    // Away from xi1 the integrand is a polynomial times exp(-kappa xi2);
    // segments with kappa * length <= 8 keep each Legendre piece accurate.
    let far = xi1 - 1.0 - near;
    if far > 0.0 {
        let pieces = (far * kappa / 8.0).ceil().max(1.0);
        let len = far / pieces;
        for p in 0..pieces as usize {
            let lo = 1.0 + len * p as f64;
            for (x, w) in grid.inner_xi_far.iter() {
                xs.push((lo + len * x, len * w));
            }
        }
    }
    for (v, w) in grid.inner_xi.iter() {
        xs.push((xi1 + span * v, span * w));
    }
    for (t, w) in grid.inner_xi_tail.iter() {
        xs.push((xi1 + span + t / kappa, w * t.exp() / kappa));
    }
    let mut es = Vec::with_capacity(2 * grid.inner_eta.len());
    for (v, w) in grid.inner_eta.iter() {
        es.push((eta1 - (eta1 + 1.0) * v, (eta1 + 1.0) * w));
    }
    for (v, w) in grid.inner_eta.iter() {
        es.push((eta1 + (1.0 - eta1) * v, (1.0 - eta1) * w));
    }
    let mut out = Vec::with_capacity(xs.len() * es.len());
    for &(x, wx) in &xs {
        for &(e, we) in &es {
            out.push((x, e, wx * we));
        }
    }
    out
}

/// Overlap, kinetic, nuclear-attraction and repulsion matrices.
///
/// Each electron-1 node is an independent task; partial sums are combined
/// in node order so results do not depend on the thread count.
pub fn compute_integrals(bs: &BasisSet, grid: &QuadratureGrid, geom: GeometryConfig) -> Result<Integrals> {
    let n = bs.len();
    let np = packed_len(n);
    let kappa = 2.0 * bs.alpha.min(bs.alphabar);
    let outer: Vec<(f64, f64, f64)> = grid
        .xi
        .iter()
        .flat_map(|(t, wt)| {
            let xi = 1.0 + t / kappa;
            let wx = wt * t.exp() / kappa;
            grid.eta.iter().map(move |(eta, we)| (xi, eta, wx * we))
        })
        .collect();

    let partials: Vec<Vec<f64>> = outer
        .par_iter()
        .map(|&(xi1, eta1, w1)| {
            let mut acc = vec![0.0; 4 * np];
            let mut scratch = vec![FnData::default(); n];
            let e1 = Site::new(xi1, eta1, geom);
            for (xi2, eta2, w2) in inner_nodes(grid, xi1, eta1, kappa) {
                let e2 = Site::new(xi2, eta2, geom);
                accumulate_node(bs, geom, &e1, &e2, 2.0 * PI * w1 * w2, &mut scratch, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![0.0; 4 * np];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }

    let unpack = |block: usize, name: &str| -> Result<Matrix> {
        let mut m = Matrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let v = total[block * np + idx];
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "non-finite {name} integral for terms {} and {}",
                        bs.terms()[i],
                        bs.terms()[j]
                    )));
                }
                m[(i, j)] = v;
                m[(j, i)] = v;
                idx += 1;
            }
        }
        Ok(m)
    };
    Ok(Integrals {
        overlap: unpack(S_IDX, "overlap")?,
        kinetic: unpack(T_IDX, "kinetic")?,
        nuclear: unpack(VNE_IDX, "nuclear attraction")?,
        repulsion: unpack(VEE_IDX, "electron repulsion")?,
        r_bohr: geom.r(),
    })
}

pub fn overlap_matrix(bs: &BasisSet, grid: &QuadratureGrid, geom: GeometryConfig) -> Result<Matrix> {
    Ok(compute_integrals(bs, grid, geom)?.overlap)
}

/// Raw `h` in the non-orthogonal basis, including the nuclear repulsion `S / R`.
pub fn hamiltonian_matrix(bs: &BasisSet, grid: &QuadratureGrid, geom: GeometryConfig) -> Result<HamiltonianMatrix> {
    let ints = compute_integrals(bs, grid, geom)?;
    HamiltonianMatrix::new(ints.hamiltonian(), geom.r(), "sigma_g+", "kw")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecbasis::basis::{basis_gradient, basis_value, BasisTerm, Spin};
    use crate::ecbasis::geometry::{prolate_to_cartesian, r12, Coordinates};
    use crate::ecbasis::quadrature::GridLevel;

    #[test]
    fn closed_form_moments() {
        for &(d0, b) in &[(0.3, 0.5), (0.05, 0.8), (2.0, 1e-4), (1.0, 0.09), (1.0, 0.11)] {
            let mom = azimuthal_moments(d0, b);
            let n = 20_000;
            for k in K_MIN..=K_MAX {
                let (mut m, mut c) = (0.0, 0.0);
                for l in 0..n {
                    // midpoint rule, fine where the integrand is smooth
                    let phi = 2.0 * PI * (l as f64 + 0.5) / n as f64;
                    let u = (d0 + b * (1.0 - phi.cos())).sqrt();
                    m += u.powi(k) * 2.0 * PI / n as f64;
                    c += u.powi(k) * phi.cos() * 2.0 * PI / n as f64;
                }
                let tol = 1e-10;
                assert!((mom.m(k) - m).abs() < tol * (1.0 + m.abs()), "d0={d0} b={b} k={k}");
                assert!((mom.c(k) - c).abs() < tol * (1.0 + c.abs()), "d0={d0} b={b} k={k}");
            }
        }
    }

    #[test]
    fn near_coalescence_logarithmic_limit() {
        // K and E for a parameter close to 1 from their logarithmic expansions
        let (d0, b) = (1e-10, 0.7);
        let mom = azimuthal_moments(d0, b);
        let big = d0 + 2.0 * b;
        let k2 = d0 / big;
        let l = (4.0 / k2.sqrt()).ln();
        let kk = l + 0.25 * k2 * (l - 1.0);
        let ee = 1.0 + 0.5 * k2 * (l - 0.5);
        let m_inv = 4.0 * kk / big.sqrt();
        let m_one = 4.0 * ee * big.sqrt();
        assert!((mom.m(-1) - m_inv).abs() < 1e-13 * m_inv, "{} vs {m_inv}", mom.m(-1));
        assert!((mom.m(1) - m_one).abs() < 1e-13 * m_one, "{} vs {m_one}", mom.m(1));
    }

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Azimuth-integrated node contribution against a direct evaluation of
    /// values and Cartesian gradients on a fine periodic grid.
    #[test]
    fn node_integrand_matches_direct_evaluation() {
        let g = GeometryConfig::new(1.4).unwrap();
        let terms = vec![
            BasisTerm::new(0, 0, 0, 0, 0, Spin::Singlet),
            BasisTerm::new(1, 0, 2, 0, 1, Spin::Singlet),
            BasisTerm::new(0, 2, 1, 1, 2, Spin::Singlet),
            BasisTerm::new(1, 1, 0, 1, 1, Spin::Singlet),
        ];
        let bs = BasisSet::new(1.1, 0.9, 0.25, -0.15, terms.clone()).unwrap();
        let (x1, y1, x2, y2) = (1.6, 0.35, 2.3, -0.5);
        let e1 = Site::new(x1, y1, g);
        let e2 = Site::new(x2, y2, g);
        let n = terms.len();
        let np = packed_len(n);
        let mut acc = vec![0.0; 4 * np];
        let mut scratch = vec![FnData::default(); n];
        accumulate_node(&bs, g, &e1, &e2, 1.0, &mut scratch, &mut acc);

        let h = g.half();
        let vol = h.powi(6) * (x1 * x1 - y1 * y1) * (x2 * x2 - y2 * y2);
        let c1 = Coordinates::new(x1, y1, 0.0).unwrap();
        let p1 = prolate_to_cartesian(c1, g);
        let steps = 4000;
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let mut want = [0.0; 4];
                for l in 0..steps {
                    let phi = 2.0 * PI * l as f64 / steps as f64;
                    let c2 = Coordinates::new(x2, y2, phi).unwrap();
                    let p2 = prolate_to_cartesian(c2, g);
                    let vi = basis_value(&terms[i], &bs, c1, c2, g).unwrap();
                    let vj = basis_value(&terms[j], &bs, c1, c2, g).unwrap();
                    let (gi1, gi2) = basis_gradient(&terms[i], &bs, c1, c2, g).unwrap();
                    let (gj1, gj2) = basis_gradient(&terms[j], &bs, c1, c2, g).unwrap();
                    let pot = -1.0 / p1.r_a - 1.0 / p1.r_b - 1.0 / p2.r_a - 1.0 / p2.r_b;
                    let d = r12(c1, c2, g).unwrap();
                    let dw = vol * 2.0 * PI / steps as f64;
                    want[S_IDX] += dw * vi * vj;
                    want[T_IDX] += dw * 0.5 * (dot(gi1, gj1) + dot(gi2, gj2));
                    want[VNE_IDX] += dw * vi * vj * pot;
                    want[VEE_IDX] += dw * vi * vj / d;
                }
                for (block, w) in want.iter().enumerate() {
                    let got = acc[block * np + idx];
                    assert!((got - w).abs() < 1e-11 * (1.0 + w.abs()), "pair ({i},{j}) block {block}: {got} vs {w}");
                }
                idx += 1;
            }
        }
    }

    /// `int_1^inf x^k e^{-p x} dx`.
    fn exp_moment(k: i32, p: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact_k = 1.0;
        for i in 1..=k {
            fact_k *= i as f64;
        }
        let mut fact_j = 1.0;
        for j in 0..=k {
            if j > 0 {
                fact_j *= j as f64;
            }
            sum += fact_k / (fact_j * p.powi(k - j + 1));
        }
        (-p).exp() * sum
    }

    #[test]
    fn single_s_term_matches_one_dimensional_integrals() {
        let r = 1.4;
        let alpha = 1.05;
        let g = GeometryConfig::new(r).unwrap();
        let bs = BasisSet::new(alpha, alpha, 0.0, 0.0, vec![BasisTerm::new(0, 0, 0, 0, 0, Spin::Singlet)]).unwrap();
        let grid = QuadratureGrid::new(GridLevel::new(24, 24, 32)).unwrap();
        let ints = compute_integrals(&bs, &grid, g).unwrap();
        let h = r / 2.0;
        let p = 2.0 * alpha;
        // one-electron factor of e^{-2 alpha xi} over the volume element
        let i1 = h.powi(3) * 2.0 * PI * (2.0 * exp_moment(2, p) - (2.0 / 3.0) * exp_moment(0, p));
        // int e^{-2 alpha xi} (1/r_a + 1/r_b) dV = (R/2)^3 2 pi (4/R) 2 int xi e^{-2 alpha xi}
        let j = h.powi(3) * 2.0 * PI * (4.0 / r) * 2.0 * exp_moment(1, p);
        let s = 4.0 * i1 * i1;
        let vne = -8.0 * i1 * j;
        assert!((ints.overlap[(0, 0)] - s).abs() < 1e-8 * s, "{} vs {s}", ints.overlap[(0, 0)]);
        assert!((ints.nuclear[(0, 0)] - vne).abs() < 1e-8 * vne.abs(), "{} vs {vne}", ints.nuclear[(0, 0)]);
    }
}
