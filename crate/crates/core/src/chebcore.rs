//! Chebyshev-Gauss-Lobatto grids, coordinate mappings and mapped subdomains.

use crate::error::{Error, Result};
use crate::linalg::{matpow, Mat};
use std::f64::consts::PI;

/// Chebyshev-Gauss-Lobatto grid on [-1, 1] with differentiation matrices.
///
/// Nodes are stored in descending order, `nodes[j] = cos(j*pi/(n-1))`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub n_points: usize,
    pub nodes: Vec<f64>,
    /// `diff[k-1]` is the order-k matrix, equal to the k-th power of `diff[0]`.
    pub diff: Vec<Mat>,
}

impl Grid {
    /// Differentiation matrix of order `k` (1-based).
    pub fn d(&self, k: usize) -> &Mat {
        &self.diff[k - 1]
    }
}

/// Builds the grid with `n_points` nodes and matrices up to `max_order`.
pub fn cheb_grid(n_points: usize, max_order: usize) -> Result<Grid> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_points must be at least 2, got {n_points}"
        )));
    }
    if max_order < 1 {
        return Err(Error::InvalidArgument("max_order must be at least 1".into()));
    }
    let n = n_points - 1;
    let nf = n as f64;
    // sin form is symmetric about zero to the last bit
    let x: Vec<f64> = (0..=n)
        .map(|j| (PI * (nf - 2.0 * j as f64) / (2.0 * nf)).sin())
        .collect();
    let c: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                2.0 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = Mat::zeros(n_points, n_points);
    for i in 0..n_points {
        let mut row_sum = 0.0;
        for j in 0..n_points {
            if i != j {
                let v = c[i] / (c[j] * (x[i] - x[j]));
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    let diff = powers(&d, max_order);
    Ok(Grid { n_points, nodes: x, diff })
}

pub(crate) fn powers(d1: &Mat, max_order: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(max_order);
    out.push(d1.clone());
    for k in 1..max_order {
        let next = &out[k - 1] * d1;
        out.push(next);
    }
    out
}

/// Coordinate transform from the reference interval [-1, 1] to physical space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mapping {
    /// Affine map with `forward(1) = a`, `forward(-1) = b`.
    Linear { a: f64, b: f64 },
    /// `y = rc*l1*(1-x) / (2rc + l1*(1-x^2))`, taking [-1,1] onto [l1, 0].
    Algebraic { rc: f64, l1: f64 },
    /// `y = l*(1-x)/(b+x) + offset`, taking [-1,1] onto [offset + 2l/(b-1), offset].
    RationalOffset { l: f64, b: f64, offset: f64 },
}

impl Mapping {
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        let m = Mapping::Linear { a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn algebraic(rc: f64, l1: f64) -> Result<Self> {
        let m = Mapping::Algebraic { rc, l1 };
        m.validate()?;
        Ok(m)
    }

    pub fn rational_offset(l: f64, b: f64, offset: f64) -> Result<Self> {
        let m = Mapping::RationalOffset { l, b, offset };
        m.validate()?;
        Ok(m)
    }

    /// Checks parameters, then monotonicity and a nonzero metric on 1001 samples.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Mapping::Linear { a, b } => {
                if !finite(&[a, b]) || a == b {
                    return Err(Error::InvalidMapping(format!(
                        "linear map needs distinct finite endpoints, got a={a}, b={b}"
                    )));
                }
            }
            Mapping::Algebraic { rc, l1 } => {
                if !finite(&[rc, l1]) || rc <= 0.0 || l1 <= 0.0 {
                    return Err(Error::InvalidMapping(format!(
                        "algebraic map needs rc > 0 and l1 > 0, got rc={rc}, l1={l1}"
                    )));
                }
            }
            Mapping::RationalOffset { l, b, offset } => {
                if !finite(&[l, b, offset]) || b <= 1.0 || l == 0.0 {
                    return Err(Error::InvalidMapping(format!(
                        "rational map needs b > 1 and l != 0, got l={l}, b={b}"
                    )));
                }
            }
        }
        let samples = 1001;
        let mut prev = self.forward(-1.0);
        let sign = (self.forward(1.0) - prev).signum();
        for s in 1..samples {
            let x = -1.0 + 2.0 * s as f64 / (samples - 1) as f64;
            let y = self.forward(x);
            if (y - prev) * sign <= 0.0 || self.metric(x) == 0.0 || !y.is_finite() {
                return Err(Error::InvalidMapping(format!(
                    "{self:?} is not strictly monotone near x={x}"
                )));
            }
            prev = y;
        }
        Ok(())
    }

    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Mapping::Linear { a, b } => 0.5 * (a - b) * x + 0.5 * (a + b),
            Mapping::Algebraic { rc, l1 } => {
                rc * l1 * (1.0 - x) / (2.0 * rc + l1 * (1.0 - x * x))
            }
            Mapping::RationalOffset { l, b, offset } => l * (1.0 - x) / (b + x) + offset,
        }
    }

    /// dy/dx, analytic.
    pub fn metric(&self, x: f64) -> f64 {
        match *self {
            Mapping::Linear { a, b } => 0.5 * (a - b),
            Mapping::Algebraic { rc, l1 } => {
                let den = 2.0 * rc + l1 * (1.0 - x * x);
                -rc * l1 * (2.0 * rc + l1 * (x - 1.0) * (x - 1.0)) / (den * den)
            }
            Mapping::RationalOffset { l, b, .. } => -l * (b + 1.0) / ((b + x) * (b + x)),
        }
    }

    /// Inverse map by bisection on [-1, 1]; `y` outside the image is clamped.
    pub fn inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let increasing = self.forward(1.0) > self.forward(-1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let below = self.forward(mid) < y;
            if below == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Physical endpoints in ascending order.
    pub fn interval(&self) -> (f64, f64) {
        let (p, q) = (self.forward(-1.0), self.forward(1.0));
        (p.min(q), p.max(q))
    }
}

/// Public convenience wrapper.
pub fn map_forward(m: &Mapping, x: f64) -> f64 {
    m.forward(x)
}

/// One mapped subdomain, stored in ascending physical order.
#[derive(Clone, Debug)]
pub struct Subdomain {
    pub mapping: Mapping,
    pub grid: Grid,
    /// Reference coordinates matching `phys_nodes` (ascending in y).
    pub ref_nodes: Vec<f64>,
    pub phys_nodes: Vec<f64>,
    /// `phys_diff[k-1]` is the order-k physical operator.
    pub phys_diff: Vec<Mat>,
}

impl Subdomain {
    pub fn n(&self) -> usize {
        self.phys_nodes.len()
    }

    pub fn d(&self, k: usize) -> &Mat {
        &self.phys_diff[k - 1]
    }

    pub fn max_order(&self) -> usize {
        self.phys_diff.len()
    }

    pub fn lo(&self) -> f64 {
        self.phys_nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.phys_nodes[self.n() - 1]
    }
}

pub fn make_subdomain(m: Mapping, n_points: usize, max_order: usize) -> Result<Subdomain> {
    m.validate()?;
    let grid = cheb_grid(n_points, max_order)?;
    let metric: Vec<f64> = grid.nodes.iter().map(|&x| m.metric(x)).collect();
    if let Some(j) = metric.iter().position(|&g| g == 0.0 || !g.is_finite()) {
        return Err(Error::InvalidMapping(format!(
            "metric vanishes at reference node {}",
            grid.nodes[j]
        )));
    }
    let y: Vec<f64> = grid.nodes.iter().map(|&x| m.forward(x)).collect();
    let mut order: Vec<usize> = (0..n_points).collect();
    order.sort_by(|&i, &j| y[i].total_cmp(&y[j]));
    let d = grid.d(1);
    let d1 = Mat::from_fn(n_points, n_points, |i, j| {
        let (p, q) = (order[i], order[j]);
        d[(p, q)] / metric[p]
    });
    let phys_nodes: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    if phys_nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidMapping("mapped nodes are not distinct".into()));
    }
    let ref_nodes = order.iter().map(|&i| grid.nodes[i]).collect();
    let phys_diff = (1..=max_order).map(|k| matpow(&d1, k)).collect();
    Ok(Subdomain { mapping: m, grid, ref_nodes, phys_nodes, phys_diff })
}

/// Barycentric weights of the Chebyshev-Gauss-Lobatto nodes (any ordering).
pub(crate) fn cgl_bary_weights(ref_nodes: &[f64]) -> Vec<f64> {
    let n = ref_nodes.len() - 1;
    ref_nodes
        .iter()
        .map(|&x| {
            // recover index j from cos(j*pi/n)
            let j = (x.clamp(-1.0, 1.0).acos() * n as f64 / PI).round() as usize;
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Evaluates the polynomial interpolant in reference coordinates at `x`.
pub(crate) fn bary_eval(ref_nodes: &[f64], weights: &[f64], values: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &wj), &fj) in ref_nodes.iter().zip(weights).zip(values) {
        let dx = x - xj;
        if dx == 0.0 {
            return fj;
        }
        let t = wj / dx;
        num += t * fj;
        den += t;
    }
    num / den
}

/// Clenshaw-Curtis weights for nodes `cos(j*pi/n)` on [-1, 1].
pub fn clenshaw_curtis_weights(n_points: usize) -> Vec<f64> {
    let n = n_points - 1;
    if n == 0 {
        return vec![2.0];
    }
    let nf = n as f64;
    let mut w = vec![0.0; n_points];
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = PI * j as f64 / nf;
        let mut s = 1.0;
        let kmax = n / 2;
        for k in 1..=kmax {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s -= b * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * s / nf;
    }
    w
}
