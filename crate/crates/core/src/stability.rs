//! Linear temporal stability of miscible core-annular pipe flow.
//!
//! Perturbations `q(r) exp(i(k_ax z + m_az theta - omega t))` of velocity,
//! pressure and concentration satisfy `A q = omega B q`, assembled by
//! collocation on a global radial operator spanning `r in [0, 1]`.

use crate::error::{Error, Result};
use crate::linalg::{c64, lu_solve, matvec, CMat, Mat};
use crate::overlap::GlobalOperator;
use faer::linalg::solvers::Solve;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub reynolds: f64,
    pub peclet: f64,
    /// `M = ln(mu_1 / mu_2)`.
    pub visc_log_ratio: f64,
    /// `Sc = Pe / Re`.
    pub schmidt: f64,
    pub interface_loc: f64,
    pub interface_width: f64,
    pub axial_wavenumber: c64,
    /// Sign is allowed; the spectrum is even in `m_az`.
    pub azimuthal_wavenumber: i32,
}

impl FlowParams {
    pub fn new(
        reynolds: f64,
        peclet: f64,
        visc_log_ratio: f64,
        interface_loc: f64,
        interface_width: f64,
        axial_wavenumber: c64,
        azimuthal_wavenumber: i32,
    ) -> Result<Self> {
        let p = FlowParams {
            reynolds,
            peclet,
            visc_log_ratio,
            schmidt: peclet / reynolds,
            interface_loc,
            interface_width,
            axial_wavenumber,
            azimuthal_wavenumber,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.reynolds > 0.0) || !(self.peclet > 0.0) || !(self.schmidt > 0.0) {
            return bad("Re, Pe and Sc must be positive".into());
        }
        if (self.schmidt * self.reynolds - self.peclet).abs() > 1e-12 * self.peclet.max(1.0) {
            return bad(format!(
                "Sc*Re = {} does not match Pe = {}",
                self.schmidt * self.reynolds,
                self.peclet
            ));
        }
        if !(self.interface_width > 0.0) {
            return bad("interface width must be positive".into());
        }
        let (a, d) = (self.interface_loc, self.interface_width);
        if !(a - 3.0 * d > 0.0 && a + 3.0 * d < 1.0) {
            return bad(format!("interface {a} +/- 3*{d} must lie inside (0, 1)"));
        }
        if !self.visc_log_ratio.is_finite() || !self.axial_wavenumber.re.is_finite() || !self.axial_wavenumber.im.is_finite() {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseState {
    pub c_bar: Vec<f64>,
    pub dc_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub dv_bar: Vec<f64>,
    pub d2v_bar: Vec<f64>,
    pub mu_bar: Vec<f64>,
    /// Axial pressure gradient giving unit centreline velocity.
    pub pressure_gradient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Vr = 0,
    Vtheta = 1,
    Vz = 2,
    P = 3,
    C = 4,
}

/// A replaced equation row and the condition it now carries.
#[derive(Clone, Debug, PartialEq)]
pub struct BcRow {
    pub row: usize,
    pub condition: &'static str,
}

#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub mat_a: CMat,
    pub mat_b: CMat,
    pub n_nodes: usize,
    pub bc_rows: Vec<BcRow>,
}

#[derive(Clone, Debug)]
pub struct Mode {
    pub omega: c64,
    pub vector: Vec<c64>,
    /// `||A q - omega B q|| / (||A|| ||q||)`.
    pub residual: f64,
}

impl Mode {
    /// Nodal values of one perturbation field.
    pub fn component(&self, f: Field) -> &[c64] {
        let n = self.vector.len() / 5;
        &self.vector[f as usize * n..(f as usize + 1) * n]
    }
}

pub fn base_concentration(r: f64, a: f64, delta: f64) -> f64 {
    0.5 + 0.5 * libm::erf((r - a) / delta)
}

fn base_concentration_slope(r: f64, a: f64, delta: f64) -> f64 {
    let z = (r - a) / delta;
    (-z * z).exp() / (std::f64::consts::PI.sqrt() * delta)
}

/// `exp(m c)`, viscosity scaled by the annular value.
pub fn viscosity(c: f64, m: f64) -> f64 {
    (m * c).exp()
}

fn check_radial(op: &GlobalOperator) -> Result<()> {
    let n = op.len();
    if n < 4 || op.nodes[0].abs() > 1e-12 || (op.nodes[n - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("radial operator must span [0, 1]".into()));
    }
    Ok(())
}

fn inv_r(op: &GlobalOperator) -> Vec<f64> {
    // the axis entry is never used: all axis rows are replaced
    op.nodes.iter().map(|&r| if r == 0.0 { 0.0 } else { 1.0 / r }).collect()
}

/// Solves `e^{Mc}[v'' + v'/r + M c' v'] = G` with `v(1) = 0`, scaled so `v(0) = 1`.
/// At the axis `v'/r` is replaced by its limit `v''`.
pub fn solve_base_flow(op: &GlobalOperator, params: &FlowParams) -> Result<BaseState> {
    params.validate()?;
    check_radial(op)?;
    let n = op.len();
    let m = params.visc_log_ratio;
    let (a, d) = (params.interface_loc, params.interface_width);
    let c: Vec<f64> = op.nodes.iter().map(|&r| base_concentration(r, a, d)).collect();
    let dc: Vec<f64> = op.nodes.iter().map(|&r| base_concentration_slope(r, a, d)).collect();
    let d1 = &op.d1;
    let d2 = op.derivative_of_order(2);
    let ir = inv_r(op);
    let mut l = Mat::from_fn(n, n, |i, j| {
        let radial = if i == 0 { d2[(i, j)] } else { ir[i] * d1[(i, j)] };
        d2[(i, j)] + radial + m * dc[i] * d1[(i, j)]
    });
    let mut rhs: Vec<f64> = c.iter().map(|&ci| (-m * ci).exp()).collect();
    for j in 0..n {
        l[(n - 1, j)] = 0.0;
    }
    l[(n - 1, n - 1)] = 1.0;
    rhs[n - 1] = 0.0;
    let v = lu_solve(&l, &rhs)?;
    let v0 = v[0];
    if !(v0.abs() > 0.0) {
        return Err(Error::Singular("base flow has zero centreline velocity".into()));
    }
    let v: Vec<f64> = v.iter().map(|x| x / v0).collect();
    let dv = matvec(d1, &v);
    let d2v = matvec(&d2, &v);
    let mu = c.iter().map(|&ci| viscosity(ci, m)).collect();
    Ok(BaseState { c_bar: c, dc_bar: dc, v_bar: v, dv_bar: dv, d2v_bar: d2v, mu_bar: mu, pressure_gradient: 1.0 / v0 })
}

/// Max-norm residual of the base momentum equation on interior nodes.
pub fn base_flow_residual(op: &GlobalOperator, params: &FlowParams, base: &BaseState) -> f64 {
    let m = params.visc_log_ratio;
    let n = op.len();
    (1..n - 1)
        .map(|i| {
            let r = op.nodes[i];
            let lhs = base.mu_bar[i]
                * (base.d2v_bar[i] + base.dv_bar[i] / r + m * base.dc_bar[i] * base.dv_bar[i]);
            (lhs - base.pressure_gradient).abs()
        })
        .fold(0.0, f64::max)
}

fn cx(re: f64) -> c64 {
    c64::new(re, 0.0)
}

const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Boundary-row entry: `(field, node, coefficient)` on the value or the radial slope.
enum Term {
    Value(usize, usize, f64),
    Slope(usize, usize, f64),
}

pub fn assemble_eigensystem(op: &GlobalOperator, base: &BaseState, params: &FlowParams) -> Result<EigenSystem> {
    params.validate()?;
    check_radial(op)?;
    let n = op.len();
    if base.v_bar.len() != n || base.c_bar.len() != n {
        return Err(Error::InvalidArgument(format!(
            "base state has {} nodes, operator has {n}",
            base.v_bar.len()
        )));
    }
    let (re, pe, m) = (params.reynolds, params.peclet, params.visc_log_ratio);
    let al = params.axial_wavenumber;
    let be = params.azimuthal_wavenumber as f64;
    let d1 = &op.d1;
    let d2 = op.derivative_of_order(2);
    let ir = inv_r(op);
    let (v, dv, d2v, dc) = (&base.v_bar, &base.dv_bar, &base.d2v_bar, &base.dc_bar);
    let mu = &base.mu_bar;

    let size = 5 * n;
    let mut a = CMat::zeros(size, size);
    let mut b = CMat::zeros(size, size);
    let (vr, vt, vz, pp, cc) = (Field::Vr as usize, Field::Vtheta as usize, Field::Vz as usize, Field::P as usize, Field::C as usize);
    // equation blocks: 0 continuity, 1 radial, 2 azimuthal, 3 axial, 4 species
    for i in 0..n {
        let lap_diag = |m2: f64| -(cx(m2 * ir[i] * ir[i]) + al * al);
        let imu = I * mu[i];
        for j in 0..n {
            let (dij, d2ij) = (d1[(i, j)], d2[(i, j)]);
            let lap = cx(d2ij + ir[i] * dij);
            let diag = i == j;
            let mut put = |eq: usize, f: usize, val: c64| {
                a[(eq * n + i, f * n + j)] += val;
            };
            // continuity
            put(0, vr, cx(dij + if diag { ir[i] } else { 0.0 }));
            // radial momentum
            put(1, vr, imu * (lap + cx(2.0 * m * dc[i] * dij)));
            put(1, pp, cx(-dij));
            // azimuthal momentum
            put(2, vt, imu * (lap + cx(m * dc[i] * dij)));
            // axial momentum
            put(3, vz, imu * (lap + cx(m * dc[i] * dij)));
            put(3, cc, imu * cx(m * dv[i] * dij));
            // species
            put(4, cc, I * lap);
            if diag {
                let adv = cx(v[i]) * al;
                put(0, vt, cx(be * ir[i]));
                put(0, vz, al);
                put(1, vr, adv * re + imu * lap_diag(be * be + 1.0));
                put(1, vt, imu * cx(-2.0 * be * ir[i] * ir[i]));
                put(1, cc, imu * cx(m * dv[i]) * al);
                put(2, vt, adv * re + imu * (lap_diag(be * be + 1.0) - cx(m * dc[i] * ir[i])));
                put(2, vr, imu * cx(-2.0 * be * ir[i] * ir[i] - m * be * dc[i] * ir[i]));
                put(2, pp, cx(be * ir[i]));
                put(3, vz, adv * re + imu * lap_diag(be * be));
                put(3, vr, cx(re * dv[i]) - imu * cx(m * dc[i]) * al);
                put(3, pp, al);
                put(3, cc, imu * cx(m * (d2v[i] + dv[i] * ir[i] + m * dc[i] * dv[i])));
                put(4, cc, adv * pe + I * lap_diag(be * be));
                put(4, vr, cx(pe * dc[i]));
            }
        }
        b[(n + i, vr * n + i)] = cx(re);
        b[(2 * n + i, vt * n + i)] = cx(re);
        b[(3 * n + i, vz * n + i)] = cx(re);
        b[(4 * n + i, cc * n + i)] = cx(pe);
    }

    // wall: no slip and zero concentration perturbation; continuity kept
    let w = n - 1;
    let mut conditions: Vec<(usize, &'static str, Vec<Term>)> = vec![
        (n + w, "v_r(1)=0", vec![Term::Value(vr, w, 1.0)]),
        (2 * n + w, "v_theta(1)=0", vec![Term::Value(vt, w, 1.0)]),
        (3 * n + w, "v_z(1)=0", vec![Term::Value(vz, w, 1.0)]),
        (4 * n + w, "c(1)=0", vec![Term::Value(cc, w, 1.0)]),
    ];
    // axis: all five rows replaced by centreline conditions
    let sg = if params.azimuthal_wavenumber < 0 { -1.0 } else { 1.0 };
    let axis: [(&'static str, Vec<Term>); 5] = match params.azimuthal_wavenumber.unsigned_abs() {
        0 => [
            ("dv_z/dr(0)=0", vec![Term::Slope(vz, 0, 1.0)]),
            ("v_r(0)=0", vec![Term::Value(vr, 0, 1.0)]),
            ("v_theta(0)=0", vec![Term::Value(vt, 0, 1.0)]),
            ("dp/dr(0)=0", vec![Term::Slope(pp, 0, 1.0)]),
            ("dc/dr(0)=0", vec![Term::Slope(cc, 0, 1.0)]),
        ],
        1 => [
            ("v_z(0)=0", vec![Term::Value(vz, 0, 1.0)]),
            ("v_r(0)+v_theta(0)=0", vec![Term::Value(vr, 0, 1.0), Term::Value(vt, 0, sg)]),
            ("2dv_r/dr(0)+dv_theta/dr(0)=0", vec![Term::Slope(vr, 0, 2.0), Term::Slope(vt, 0, sg)]),
            ("p(0)=0", vec![Term::Value(pp, 0, 1.0)]),
            ("c(0)=0", vec![Term::Value(cc, 0, 1.0)]),
        ],
        _ => [
            ("v_r(0)=0", vec![Term::Value(vr, 0, 1.0)]),
            ("v_theta(0)=0", vec![Term::Value(vt, 0, 1.0)]),
            ("v_z(0)=0", vec![Term::Value(vz, 0, 1.0)]),
            ("p(0)=0", vec![Term::Value(pp, 0, 1.0)]),
            ("c(0)=0", vec![Term::Value(cc, 0, 1.0)]),
        ],
    };
    for (eq, (label, terms)) in axis.into_iter().enumerate() {
        conditions.push((eq * n, label, terms));
    }

    let mut bc_rows = Vec::with_capacity(conditions.len());
    for (row, condition, terms) in conditions {
        for c in 0..size {
            a[(row, c)] = c64::new(0.0, 0.0);
            b[(row, c)] = c64::new(0.0, 0.0);
        }
        for t in terms {
            match t {
                Term::Value(f, node, coef) => a[(row, f * n + node)] += cx(coef),
                Term::Slope(f, node, coef) => {
                    for j in 0..n {
                        a[(row, f * n + j)] += cx(coef * d1[(node, j)]);
                    }
                }
            }
        }
        bc_rows.push(BcRow { row, condition });
    }
    Ok(EigenSystem { mat_a: a, mat_b: b, n_nodes: n, bc_rows })
}

fn frob(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

fn cmatvec(m: &CMat, x: &[c64]) -> Vec<c64> {
    let mut y = vec![c64::new(0.0, 0.0); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// Relative residual of an eigenpair.
pub fn eigen_residual(sys: &EigenSystem, omega: c64, q: &[c64]) -> f64 {
    let aq = cmatvec(&sys.mat_a, q);
    let bq = cmatvec(&sys.mat_b, q);
    let r: f64 = aq.iter().zip(&bq).map(|(x, y)| (x - omega * y).norm_sqr()).sum::<f64>().sqrt();
    let qn: f64 = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    r / (frob(&sys.mat_a) * qn)
}

const REFINE_ABOVE: f64 = 1e-10;
const REFINE_STEPS: usize = 3;

/// One step `x = (A - omega B)^{-1} B q`, normalized.
fn inverse_iteration_step(sys: &EigenSystem, omega: c64, q: &[c64]) -> Option<Vec<c64>> {
    let size = sys.mat_a.nrows();
    let shifted = CMat::from_fn(size, size, |i, j| sys.mat_a[(i, j)] - omega * sys.mat_b[(i, j)]);
    let bq = cmatvec(&sys.mat_b, q);
    let rhs = CMat::from_fn(size, 1, |i, _| bq[i]);
    let x = shifted.partial_piv_lu().solve(&rhs);
    let norm: f64 = (0..size).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return None;
    }
    Some((0..size).map(|i| x[(i, 0)] / norm).collect())
}

/// Shifts tried in turn for the shift-invert transform.
const SHIFTS: [c64; 3] = [c64 { re: 0.37, im: 1.91 }, c64 { re: -0.53, im: 2.77 }, c64 { re: 1.13, im: 3.41 }];

/// `|mu|` below this fraction of the largest is an infinite eigenvalue.
const INFINITE_BELOW: f64 = 1e-6;

/// All finite generalized eigenpairs, sorted by descending growth rate.
///
/// Uses the standard eigenproblem `(A - s B)^{-1} B v = mu v`, `omega = s + 1/mu`,
/// which stays robust where QZ on the raw pencil stalls.
pub fn solve_spectrum(sys: &EigenSystem) -> Result<Vec<Mode>> {
    let size = sys.mat_a.nrows();
    let mut last_err = String::from("no shift tried");
    for &shift in &SHIFTS {
        let shifted = CMat::from_fn(size, size, |i, j| sys.mat_a[(i, j)] - shift * sys.mat_b[(i, j)]);
        let c = shifted.partial_piv_lu().solve(&sys.mat_b);
        if !(0..size).all(|j| (0..size).all(|i| c[(i, j)].re.is_finite() && c[(i, j)].im.is_finite())) {
            last_err = format!("A - ({shift}) B is singular");
            continue;
        }
        let eig = match c.eigen() {
            Ok(e) => e,
            Err(e) => {
                last_err = format!("{e:?}");
                continue;
            }
        };
        let (u, mu) = (eig.U(), eig.S());
        let mu_max = (0..size).map(|k| mu[k].norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for k in 0..size {
            if !(mu[k].norm() > INFINITE_BELOW * mu_max) {
                continue;
            }
            let omega = shift + c64::new(1.0, 0.0) / mu[k];
            if !(omega.re.is_finite() && omega.im.is_finite()) {
                continue;
            }
            let mut vector: Vec<c64> = (0..size).map(|i| u[(i, k)]).collect();
            let mut residual = eigen_residual(sys, omega, &vector);
            for _ in 0..REFINE_STEPS {
                if residual <= REFINE_ABOVE {
                    break;
                }
                let Some(v) = inverse_iteration_step(sys, omega, &vector) else { break };
                let r = eigen_residual(sys, omega, &v);
                if r >= residual {
                    break;
                }
                vector = v;
                residual = r;
            }
            modes.push(Mode { omega, vector, residual });
        }
        modes.sort_by(|p, q| q.omega.im.total_cmp(&p.omega.im).then(p.omega.re.total_cmp(&q.omega.re)));
        return Ok(modes);
    }
    Err(Error::Eigen(last_err))
}

/// Drops modes with `|omega| > threshold` or with more than 99% of their
/// energy on the two nodes nearest either boundary.
pub fn filter_spurious(modes: Vec<Mode>, threshold: f64) -> Vec<Mode> {
    modes
        .into_iter()
        .filter(|md| {
            if !(md.omega.norm() <= threshold) {
                return false;
            }
            let n = md.vector.len() / 5;
            if n < 5 {
                return true;
            }
            let mut edge = 0.0;
            let mut total = 0.0;
            for (k, z) in md.vector.iter().enumerate() {
                let node = k % n;
                let e = z.norm_sqr();
                total += e;
                if node < 2 || node >= n - 2 {
                    edge += e;
                }
            }
            total == 0.0 || edge <= 0.99 * total
        })
        .collect()
}

/// Two linear subdomains on `[0, 1]` sharing two nodes near the middle, `n` nodes each.
pub fn two_point_radial_operator(n: usize) -> Result<GlobalOperator> {
    use crate::chebcore::make_subdomain;
    use crate::overlap::{assemble_two_point, shifted_linear_pair, OverlapSpec};
    let (ma, mb) = shifted_linear_pair(0.0, 1.0, n, n)?;
    let op = assemble_two_point(&make_subdomain(ma, n, 1)?, &make_subdomain(mb, n, 1)?, &OverlapSpec::default())?;
    Ok(op)
}
