//! Constant-viscosity pipe flow checked against a separately coded discretization.
//!
//! The oracle collocates on the positive half of a Chebyshev grid over
//! `[-1, 1]` with an even number of points and folds columns by parity,
//! so no centreline conditions are needed.

use faer::c64;
use semiglobal::linalg::CMat;
use semiglobal::stability::*;
use std::f64::consts::PI;

/// Trefethen's cheb on `n_points` nodes, descending.
fn cheb(n_points: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = n_points - 1;
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c: Vec<f64> = (0..=n)
        .map(|j| (if j == 0 || j == n { 2.0 } else { 1.0 }) * if j % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[i][j] = c[i] / c[j] / (x[i] - x[j]);
            }
        }
        d[i][i] = -d[i].iter().sum::<f64>();
    }
    (x, d)
}

fn square(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| d[i][k] * d[k][j]).sum()).collect()).collect()
}

/// Folds a full-grid matrix onto the `half` positive nodes for data of the given parity.
fn fold(m: &[Vec<f64>], half: usize, parity: f64) -> Vec<Vec<f64>> {
    let last = m.len() - 1;
    (0..half).map(|i| (0..half).map(|j| m[i][j] + parity * m[i][last - j]).collect()).collect()
}

/// Leading eigenvalues for `Re = Pe`, `m_az = 0`, base flow `1 - r^2`.
fn oracle_spectrum(half: usize, re: f64, pe: f64, k: f64) -> Vec<c64> {
    let (x, d) = cheb(2 * half);
    let d2 = square(&d);
    let r = &x[..half];
    let (d_odd, d_even) = (fold(&d, half, -1.0), fold(&d, half, 1.0));
    let (d2_odd, d2_even) = (fold(&d2, half, -1.0), fold(&d2, half, 1.0));
    // unknowns: u (radial, odd), w (axial, even), p (even), s (swirl, odd), c (even)
    let n = half;
    let size = 5 * n;
    let mut a = CMat::zeros(size, size);
    let mut b = CMat::zeros(size, size);
    let i1 = c64::new(0.0, 1.0);
    let re_c = |v: f64| c64::new(v, 0.0);
    for i in 0..n {
        let (ri, v, dv) = (r[i], 1.0 - r[i] * r[i], -2.0 * r[i]);
        for j in 0..n {
            let lap_odd = d2_odd[i][j] + d_odd[i][j] / ri;
            let lap_even = d2_even[i][j] + d_even[i][j] / ri;
            // continuity: u' + u/r + i k w = 0
            a[(i, j)] += re_c(d_odd[i][j]);
            // -i omega Re u + i k Re V u = -p' + (lap - 1/r^2 - k^2) u, times i
            a[(n + i, j)] += i1 * re_c(lap_odd);
            a[(n + i, 2 * n + j)] += -i1 * re_c(d_even[i][j]);
            // axial, times i
            a[(2 * n + i, n + j)] += i1 * re_c(lap_even);
            // swirl, times i
            a[(3 * n + i, 3 * n + j)] += i1 * re_c(lap_odd);
            // passive scalar, times i
            a[(4 * n + i, 4 * n + j)] += i1 * re_c(lap_even);
        }
        a[(i, i)] += re_c(1.0 / ri);
        a[(i, n + i)] += i1 * k;
        a[(n + i, i)] += re_c(re * k * v) + i1 * re_c(-1.0 / (ri * ri) - k * k);
        a[(2 * n + i, n + i)] += re_c(re * k * v) + i1 * re_c(-k * k);
        a[(2 * n + i, i)] += -i1 * re_c(re * dv);
        a[(2 * n + i, 2 * n + i)] += re_c(k);
        a[(3 * n + i, 3 * n + i)] += re_c(re * k * v) + i1 * re_c(-1.0 / (ri * ri) - k * k);
        a[(4 * n + i, 4 * n + i)] += re_c(pe * k * v) + i1 * re_c(-k * k);
        b[(n + i, i)] = re_c(re);
        b[(2 * n + i, n + i)] = re_c(re);
        b[(3 * n + i, 3 * n + i)] = re_c(re);
        b[(4 * n + i, 4 * n + i)] = re_c(pe);
    }
    // wall (node 0, r = 1): no slip and zero scalar; continuity kept
    for (row, col) in [(n, 0), (2 * n, n), (3 * n, 3 * n), (4 * n, 4 * n)] {
        for c in 0..size {
            a[(row, c)] = c64::new(0.0, 0.0);
            b[(row, c)] = c64::new(0.0, 0.0);
        }
        a[(row, col)] = c64::new(1.0, 0.0);
    }
    let ge = a.generalized_eigen(&b).unwrap();
    let (sa, sb) = (ge.S_a(), ge.S_b());
    let mut w: Vec<c64> = (0..size)
        .filter(|&q| sb[q].norm() > 1e-10 * sa[q].norm())
        .map(|q| sa[q] / sb[q])
        .filter(|w| w.norm() < 1e3)
        .collect();
    w.sort_by(|p, q| q.im.total_cmp(&p.im));
    w
}

fn library_spectrum(n: usize, m_az: i32) -> Vec<c64> {
    let p = FlowParams::new(100.0, 100.0, 0.0, 0.5, 0.02, c64::new(1.0, 0.0), m_az).unwrap();
    let op = two_point_radial_operator(n).unwrap();
    let base = solve_base_flow(&op, &p).unwrap();
    let sys = assemble_eigensystem(&op, &base, &p).unwrap();
    filter_spurious(solve_spectrum(&sys).unwrap(), 1e3).into_iter().map(|m| m.omega).collect()
}

fn nearest(w: c64, set: &[c64]) -> f64 {
    set.iter().map(|v| (w - v).norm()).fold(f64::INFINITY, f64::min)
}

#[test]
fn oracle_resolved() {
    let coarse = oracle_spectrum(56, 100.0, 100.0, 1.0);
    let fine = oracle_spectrum(64, 100.0, 100.0, 1.0);
    for w in &fine[..8] {
        assert!(nearest(*w, &coarse) < 1e-8, "{w}");
    }
}

#[test]
fn constant_viscosity_spectrum_matches_oracle() {
    let oracle = oracle_spectrum(64, 100.0, 100.0, 1.0);
    let lib = library_spectrum(60, 0);
    for w in &oracle[..8] {
        let d = nearest(*w, &lib);
        assert!(d < 1e-6, "oracle eigenvalue {w} missing, nearest at {d:e}");
    }
    // every leading library eigenvalue is physical
    for w in &lib[..8] {
        assert!(nearest(*w, &oracle) < 1e-6, "library eigenvalue {w} not in oracle");
    }
}

#[test]
fn azimuthal_sign_symmetry() {
    let p = library_spectrum(40, 2);
    let m = library_spectrum(40, -2);
    assert_eq!(p.len(), m.len());
    for w in &p[..10] {
        assert!(nearest(*w, &m) < 1e-9 * w.norm().max(1.0), "{w}");
    }
}
