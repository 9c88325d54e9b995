//! Nonlinear boundary-value problems solved by damped Newton iteration on a
//! global operator: a tanh interface profile and the stationary Burgers
//! equation with Robin conditions.

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, lu_solve, matpow, matvec, row_dot, tsvd_solve, Mat};
use crate::overlap::GlobalOperator;

/// `U'' = U(1-U)(1-2U)/theta^2` on `[0, L]`, profile centred at `interface_loc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TanhProblem {
    pub theta: f64,
    pub domain_truncation: f64,
    pub interface_loc: f64,
}

impl TanhProblem {
    pub fn new(theta: f64, domain_truncation: f64) -> Result<Self> {
        let p = TanhProblem { theta, domain_truncation, interface_loc: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.domain_truncation > self.interface_loc) {
            return Err(Error::InvalidArgument(format!(
                "truncation {} must exceed the interface location {}",
                self.domain_truncation, self.interface_loc
            )));
        }
        Ok(())
    }

    pub fn exact(&self, y: f64) -> f64 {
        logistic((y - self.interface_loc) / self.theta)
    }
}

/// Logistic front at the interface, widened by `widen` (> 0) relative to the exact profile.
pub fn tanh_front_guess(op: &GlobalOperator, p: &TanhProblem, widen: f64) -> Vec<f64> {
    op.nodes.iter().map(|&y| logistic((y - p.interface_loc) / (widen * p.theta))).collect()
}

/// `nu u'' - u u' = 0` on `[0, 1]` with Robin rows at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurgersProblem {
    pub nu: f64,
    pub alpha_bc: f64,
    pub kappa: f64,
}

impl BurgersProblem {
    pub fn new(nu: f64, alpha_bc: f64, kappa: f64) -> Result<Self> {
        let p = BurgersProblem { nu, alpha_bc, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !(self.kappa > 0.0) || !self.alpha_bc.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Burgers needs nu > 0 and kappa > 0, got nu={}, kappa={}",
                self.nu, self.kappa
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> Result<f64> {
        burgers_beta(self.nu, self.alpha_bc, self.kappa, 1e-15)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearSolve {
    /// Dense LU with partial pivoting.
    Lu,
    /// Minimum-norm step dropping singular values below `rcond * s_max`.
    TruncatedSvd { rcond: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearSolve,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 30,
            linear: LinearSolve::TruncatedSvd { rcond: 1e-11 },
            max_halvings: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    /// Max-norm residual before the first step and after each step.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(1 + tanh((y-1)/(2 theta)))/2`, evaluated as a logistic to keep the tail accurate.
pub fn tanh_exact(y: f64, theta: f64) -> f64 {
    logistic((y - 1.0) / theta)
}

pub fn burgers_exact(x: f64, nu: f64, beta: f64) -> f64 {
    -beta * (0.5 * beta / nu * (x - 0.5)).tanh()
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// Root of `-b^2 sech^2(b/4nu)/2 + kappa (alpha - b tanh(b/4nu))` on `[0, 2 alpha]`.
pub fn burgers_beta(nu: f64, alpha_bc: f64, kappa: f64, tol: f64) -> Result<f64> {
    if !(nu > 0.0) || !(kappa > 0.0) {
        return Err(Error::InvalidArgument("nu and kappa must be positive".into()));
    }
    let s = 0.25 / nu;
    let f = |b: f64| -0.5 * b * b * sech2(b * s) + kappa * (alpha_bc - b * (b * s).tanh());
    let df = |b: f64| {
        let (t, h) = ((b * s).tanh(), sech2(b * s));
        -b * h + b * b * h * t * s - kappa * (t + b * h * s)
    };
    let (mut lo, mut hi) = if alpha_bc >= 0.0 { (0.0, 2.0 * alpha_bc) } else { (2.0 * alpha_bc, 0.0) };
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == x || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok(x);
        }
        x = next;
    }
    Ok(x)
}

/// Component-wise max and root-mean-square of `num - exact`.
pub fn error_norms(num: &[f64], exact: &[f64]) -> Result<(f64, f64)> {
    if num.len() != exact.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            num.len(),
            exact.len()
        )));
    }
    if num.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut max_abs = 0.0_f64;
    let mut sq = 0.0;
    for (a, b) in num.iter().zip(exact) {
        let d = a - b;
        max_abs = max_abs.max(d.abs());
        sq += d * d;
    }
    Ok((max_abs, (sq / num.len() as f64).sqrt()))
}

/// Damped Newton iteration. `system(u)` returns the residual and Jacobian.
pub fn newton<F>(guess: Vec<f64>, opts: &NewtonOptions, mut system: F) -> Result<NewtonReport>
where
    F: FnMut(&[f64], bool) -> (Vec<f64>, Option<Mat>),
{
    let mut u = guess;
    let (mut f, _) = system(&u, false);
    let mut r = inf_norm(&f);
    let mut history = vec![r];
    let mut iterations = 0;
    while r > opts.tol && iterations < opts.max_iter {
        let (_, jac) = system(&u, true);
        let jac = jac.expect("jacobian requested");
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = match opts.linear {
            LinearSolve::Lu => lu_solve(&jac, &rhs)?,
            LinearSolve::TruncatedSvd { rcond } => tsvd_solve(&jac, &rhs, rcond)?.0,
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let (ft, _) = system(&trial, false);
            let rt = inf_norm(&ft);
            if rt < r {
                accepted = Some((trial, ft, rt));
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((un, fnew, rn)) => {
                u = un;
                f = fnew;
                r = rn;
                history.push(r);
            }
            None => break,
        }
    }
    if !u.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular("Newton iterate became non-finite".into()));
    }
    Ok(NewtonReport { solution: u, residual_history: history, iterations, converged: r <= opts.tol })
}

fn check_span(op: &GlobalOperator, lo: f64, hi: f64) -> Result<()> {
    let n = op.len();
    let scale = (hi - lo).abs().max(1.0);
    if n < 3 || (op.nodes[0] - lo).abs() > 1e-9 * scale || (op.nodes[n - 1] - hi).abs() > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!(
            "operator nodes must span [{lo}, {hi}], got [{}, {}]",
            op.nodes[0],
            op.nodes[n - 1]
        )));
    }
    Ok(())
}

fn check_guess(op: &GlobalOperator, guess: &[f64]) -> Result<()> {
    if guess.len() != op.len() {
        return Err(Error::InvalidArgument(format!(
            "guess has {} entries, operator has {} nodes",
            guess.len(),
            op.len()
        )));
    }
    Ok(())
}

/// Discrete residual with Dirichlet rows set to the exact profile's end values.
pub fn tanh_residual(op: &GlobalOperator, p: &TanhProblem, u: &[f64]) -> Vec<f64> {
    let d2 = op.derivative_of_order(2);
    let n = op.len();
    let k = 1.0 / (p.theta * p.theta);
    let mut f = matvec(&d2, u);
    for (fi, &ui) in f.iter_mut().zip(u) {
        *fi -= k * ui * (1.0 - ui) * (1.0 - 2.0 * ui);
    }
    f[0] = u[0] - p.exact(op.nodes[0]);
    f[n - 1] = u[n - 1] - p.exact(op.nodes[n - 1]);
    f
}

fn tanh_jacobian(op: &GlobalOperator, p: &TanhProblem, u: &[f64]) -> Mat {
    let d2 = op.derivative_of_order(2);
    let n = op.len();
    let k = 1.0 / (p.theta * p.theta);
    let mut j = (*d2).clone();
    for i in 0..n {
        j[(i, i)] -= k * (6.0 * u[i] * u[i] - 6.0 * u[i] + 1.0);
    }
    for c in 0..n {
        j[(0, c)] = 0.0;
        j[(n - 1, c)] = 0.0;
    }
    j[(0, 0)] = 1.0;
    j[(n - 1, n - 1)] = 1.0;
    j
}

pub fn solve_tanh(op: &GlobalOperator, p: &TanhProblem, guess: &[f64], opts: &NewtonOptions) -> Result<NewtonReport> {
    p.validate()?;
    check_span(op, 0.0, p.domain_truncation)?;
    check_guess(op, guess)?;
    newton(guess.to_vec(), opts, |u, want_j| {
        (tanh_residual(op, p, u), want_j.then(|| tanh_jacobian(op, p, u)))
    })
}

/// Linear ramp between the Dirichlet values.
pub fn tanh_default_guess(op: &GlobalOperator, p: &TanhProblem) -> Vec<f64> {
    let n = op.len();
    let (y0, y1) = (op.nodes[0], op.nodes[n - 1]);
    let (u0, u1) = (p.exact(y0), p.exact(y1));
    op.nodes.iter().map(|y| u0 + (u1 - u0) * (y - y0) / (y1 - y0)).collect()
}

pub fn burgers_residual(op: &GlobalOperator, p: &BurgersProblem, u: &[f64]) -> Vec<f64> {
    let d1 = &op.d1;
    let d2 = op.derivative_of_order(2);
    let n = op.len();
    let du = matvec(d1, u);
    let mut f = matvec(&d2, u);
    for i in 0..n {
        f[i] = p.nu * f[i] - u[i] * du[i];
    }
    f[0] = p.nu * du[0] - p.kappa * (u[0] - p.alpha_bc);
    f[n - 1] = p.nu * du[n - 1] + p.kappa * (u[n - 1] + p.alpha_bc);
    f
}

fn burgers_jacobian(op: &GlobalOperator, p: &BurgersProblem, u: &[f64]) -> Mat {
    let d1 = &op.d1;
    let d2 = op.derivative_of_order(2);
    let n = op.len();
    let du = matvec(d1, u);
    let mut j = Mat::from_fn(n, n, |r, c| p.nu * d2[(r, c)] - u[r] * d1[(r, c)]);
    for i in 0..n {
        j[(i, i)] -= du[i];
    }
    for c in 0..n {
        j[(0, c)] = p.nu * d1[(0, c)];
        j[(n - 1, c)] = p.nu * d1[(n - 1, c)];
    }
    j[(0, 0)] -= p.kappa;
    j[(n - 1, n - 1)] += p.kappa;
    j
}

pub fn solve_burgers(op: &GlobalOperator, p: &BurgersProblem, guess: &[f64], opts: &NewtonOptions) -> Result<NewtonReport> {
    p.validate()?;
    check_span(op, 0.0, 1.0)?;
    check_guess(op, guess)?;
    newton(guess.to_vec(), opts, |u, want_j| {
        (burgers_residual(op, p, u), want_j.then(|| burgers_jacobian(op, p, u)))
    })
}

/// Exact-solution form with beta replaced by the Robin target.
pub fn burgers_default_guess(op: &GlobalOperator, p: &BurgersProblem) -> Vec<f64> {
    op.nodes.iter().map(|&x| burgers_exact(x, p.nu, p.alpha_bc)).collect()
}

/// Robin-row residuals at both ends.
pub fn burgers_bc_residuals(op: &GlobalOperator, p: &BurgersProblem, u: &[f64]) -> (f64, f64) {
    let n = op.len();
    let left = p.nu * row_dot(&op.d1, 0, u) - p.kappa * (u[0] - p.alpha_bc);
    let right = p.nu * row_dot(&op.d1, n - 1, u) + p.kappa * (u[n - 1] + p.alpha_bc);
    (left, right)
}

/// Relative mismatch of the `order`-th derivative at `interface`, each side
/// evaluated from its own subdomain polynomial. The difference is scaled by
/// the largest nodal magnitude of that derivative over both subdomains, or of
/// `u` itself if larger.
pub fn derivative_jump(op: &GlobalOperator, u: &[f64], order: usize, interface: f64) -> Result<f64> {
    if u.len() != op.len() {
        return Err(Error::InvalidArgument("vector length does not match operator".into()));
    }
    if order < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let span = op.nodes[op.len() - 1] - op.nodes[0];
    let tol = 1e-12 * span;
    let covering: Vec<_> = op
        .parts
        .iter()
        .filter(|p| interface >= p.lo() - tol && interface <= p.hi() + tol)
        .collect();
    if covering.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "interface {interface} is not inside an overlap region"
        )));
    }
    let mut vals = Vec::with_capacity(2);
    // floor at |u| so round-off in a vanishing derivative is not magnified
    let mut scale = inf_norm(u);
    for part in covering.iter().take(2) {
        let dk = matvec(&matpow(&part.d1, order), &part.gather(u));
        scale = scale.max(inf_norm(&dk));
        vals.push(part.interpolate(&dk, interface.clamp(part.lo(), part.hi())));
    }
    let diff = (vals[0] - vals[1]).abs();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}
