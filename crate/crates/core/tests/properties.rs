//! Randomized checks of grid, mapping, operator, solver and stability invariants.

use proptest::prelude::*;
use semiglobal::bvp::*;
use semiglobal::chebcore::*;
use semiglobal::linalg::{c64, matpow, matvec, max_abs_diff, Mat};
use semiglobal::overlap::*;
use semiglobal::stability::*;

fn inf(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn lin(a: f64, b: f64, n: usize, k: usize) -> Subdomain {
    make_subdomain(Mapping::linear(a, b).unwrap(), n, k).unwrap()
}

fn check_exactness(op: &GlobalOperator) -> Result<(), TestCaseError> {
    let m = op.len() as f64;
    prop_assert!(op.nodes.windows(2).all(|w| w[0] < w[1]), "nodes not strictly ascending");
    let c = inf(matvec(&op.d1, &vec![1.0; op.len()]));
    let l = inf(matvec(&op.d1, &op.nodes).into_iter().map(|v| v - 1.0));
    prop_assert!(c <= 1e-9 * m, "constant annihilation {c:e}");
    prop_assert!(l <= 1e-8 * m, "linear exactness {l:e}");
    Ok(())
}

/// Random pair geometry for each two-subdomain method.
fn pair(method: Method, lo: f64, la: f64, lb: f64, na: usize, nb: usize, frac: f64, shift: usize, terms: usize) -> (Subdomain, Subdomain) {
    // taylor overlaps use frac of A's length; thin ones are rejected by assembly
    match method {
        Method::OnePoint => (lin(lo, lo + la, na, 1), lin(lo + la, lo + la + lb, nb, 1)),
        Method::TwoPoint => {
            let (ma, mb) = shifted_linear_pair(lo, lo + la + lb, na, nb).unwrap();
            (make_subdomain(ma, na, 1).unwrap(), make_subdomain(mb, nb, 1).unwrap())
        }
        Method::PseudoMulti => {
            let a = lin(lo, lo + la, na, 1);
            let off = a.phys_nodes[na - 1 - shift];
            (a, lin(off, lo + la + lb, nb, 1))
        }
        _ => {
            let start = lo + la * (1.0 - frac);
            (lin(lo, lo + la, na, terms), lin(start, start + lb, nb, terms))
        }
    }
}

/// Random Taylor overlaps may hold too few nodes; those draws are discarded.
fn assemble(method: Method, a: &Subdomain, b: &Subdomain, spec: OverlapSpec) -> Result<GlobalOperator, TestCaseError> {
    match assemble_pair(method, a, b, &spec) {
        Ok(op) => Ok(op),
        Err(semiglobal::error::Error::Overlap(_)) if method == Method::TaylorMulti => Err(TestCaseError::reject("thin overlap")),
        Err(e) => Err(TestCaseError::fail(format!("{e}"))),
    }
}

fn methods() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::OnePoint), Just(Method::TwoPoint), Just(Method::PseudoMulti), Just(Method::TaylorMulti)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_invariants(n in 2usize..90) {
        let g = cheb_grid(n, 1).unwrap();
        prop_assert_eq!(g.nodes[0], 1.0);
        prop_assert_eq!(g.nodes[n - 1], -1.0);
        prop_assert!(g.nodes.windows(2).all(|w| w[0] > w[1]));
        for (j, x) in g.nodes.iter().enumerate() {
            let expect = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            prop_assert!((x - expect).abs() <= 1e-14);
        }
        let rows = inf(matvec(g.d(1), &vec![1.0; n]));
        prop_assert!(rows <= 1e-10);
        let slope = inf(matvec(g.d(1), &g.nodes).into_iter().map(|v| v - 1.0));
        prop_assert!(slope <= 1e-10 * (n * n) as f64);
    }

    #[test]
    fn polynomial_exactness(n in 3usize..70, coeffs in prop::collection::vec(-1.0f64..1.0, 70)) {
        let g = cheb_grid(n, 1).unwrap();
        let deg = n - 2;
        // Horner for p and p'
        let eval = |x: f64| {
            let (mut p, mut dp) = (0.0, 0.0);
            for &c in coeffs[..=deg].iter().rev() {
                dp = dp * x + p;
                p = p * x + c;
            }
            (p, dp)
        };
        let f: Vec<f64> = g.nodes.iter().map(|&x| eval(x).0).collect();
        let df = matvec(g.d(1), &f);
        let err = inf(g.nodes.iter().zip(&df).map(|(&x, d)| d - eval(x).1));
        prop_assert!(err <= 1e-9 * (n * n) as f64, "degree {deg}: {err:e}");
    }

    #[test]
    fn mappings_monotone(a in -5.0f64..5.0, len in 0.1f64..10.0, rc in 0.1f64..5.0, l1 in 0.1f64..20.0,
                         l in prop_oneof![-5.0f64..-0.05, 0.05f64..5.0], b in 1.01f64..6.0, off in -3.0f64..3.0) {
        let maps = [
            Mapping::linear(a, a + len).unwrap(),
            Mapping::linear(a + len, a).unwrap(),
            Mapping::algebraic(rc, l1).unwrap(),
            Mapping::rational_offset(l, b, off).unwrap(),
        ];
        for m in maps {
            let ys: Vec<f64> = (0..1000).map(|s| m.forward(-1.0 + 2.0 * s as f64 / 999.0)).collect();
            let inc = ys[1] > ys[0];
            prop_assert!(ys.windows(2).all(|w| (w[1] > w[0]) == inc && w[1] != w[0]), "{m:?}");
            prop_assert!((0..1000).all(|s| m.metric(-1.0 + 2.0 * s as f64 / 999.0) != 0.0));
            // metric agrees with a centred difference
            let x = 0.3;
            let h = 1e-6;
            let fd = (m.forward(x + h) - m.forward(x - h)) / (2.0 * h);
            prop_assert!((fd - m.metric(x)).abs() <= 1e-6 * m.metric(x).abs().max(1.0));
        }
    }

    #[test]
    fn subdomain_invariants(n in 4usize..60, l in 0.2f64..2.0, b in 1.5f64..4.0, off in -1.0f64..1.0) {
        let s = make_subdomain(Mapping::rational_offset(l, b, off).unwrap(), n, 3).unwrap();
        prop_assert!(s.phys_nodes.windows(2).all(|w| w[0] < w[1]));
        for k in 2..=3 {
            let p = matpow(s.d(1), k);
            let scale = inf(p.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>())).max(1.0);
            prop_assert!(max_abs_diff(&p, s.d(k)) <= 1e-12 * scale);
        }
        let lin = lin(off, off + l, n, 1);
        let slope = inf(matvec(lin.d(1), &lin.phys_nodes).into_iter().map(|v| v - 1.0));
        prop_assert!(slope <= 1e-9);
        // differentiating the identity permuted with the nodes gives identity rows back
        let id = Mat::identity(n, n);
        let prod = s.d(1) * &id;
        prop_assert!(max_abs_diff(&prod, s.d(1)) == 0.0);
    }

    #[test]
    fn chain_rule(n in 48usize..80, a in -2.0f64..2.0, len in 0.5f64..3.0, l in 0.2f64..1.0, b in 2.0f64..4.0) {
        let maps = [Mapping::linear(a, a + len).unwrap(), Mapping::rational_offset(l, b, a).unwrap(), Mapping::algebraic(1.0, 1.0).unwrap()];
        for m in maps {
            let s = make_subdomain(m, n, 1).unwrap();
            for (f, df) in [(f64::sin as fn(f64) -> f64, f64::cos as fn(f64) -> f64), (f64::exp, f64::exp)] {
                let v: Vec<f64> = s.phys_nodes.iter().map(|&y| f(y)).collect();
                let d = matvec(s.d(1), &v);
                let err = inf(s.phys_nodes.iter().zip(&d).map(|(&y, x)| x - df(y)));
                prop_assert!(err <= 1e-8, "{m:?}: {err:e}");
            }
        }
    }

    #[test]
    fn operator_exactness(method in methods(), lo in -2.0f64..2.0, la in 0.5f64..3.0, lb in 0.5f64..3.0,
                          na in 8usize..40, nb in 8usize..40, frac in 0.05f64..0.3, shift in 1usize..5, terms in 1usize..7) {
        let (a, b) = pair(method, lo, la, lb, na, nb, frac, shift, terms);
        let op = assemble(method, &a, &b, OverlapSpec { taylor_terms: terms, ..Default::default() })?;
        check_exactness(&op)?;
        for k in 2..=3 {
            let p = matpow(&op.d1, k);
            prop_assert!(max_abs_diff(&p, &op.derivative_of_order(k)) == 0.0);
        }
    }

    #[test]
    fn multi_interval_exactness(n_sub in 2usize..7, per in 8usize..30, frac in 0.05f64..0.3, terms in 1usize..7) {
        let delta = frac / n_sub as f64;
        let op = assemble_multi_interval(0.0, 1.0, n_sub, per, delta, &OverlapSpec { taylor_terms: terms, ..Default::default() }).unwrap();
        check_exactness(&op)?;
    }

    #[test]
    fn blended_rows_are_convex(method in methods(), lo in -2.0f64..2.0, la in 0.5f64..3.0, lb in 0.5f64..3.0,
                               na in 8usize..30, nb in 8usize..30, frac in 0.05f64..0.3, shift in 1usize..5, terms in 1usize..6) {
        let (a, b) = pair(method, lo, la, lb, na, nb, frac, shift, terms);
        let build = |w: f64| assemble(method, &a, &b, OverlapSpec { weight_a: w, taylor_terms: terms, ..Default::default() });
        let (o1, o2) = (build(0.25)?, build(0.75)?);
        let m = o1.len();
        for i in 0..m {
            let r1: Vec<f64> = (0..m).map(|j| o1.d1[(i, j)]).collect();
            let r2: Vec<f64> = (0..m).map(|j| o2.d1[(i, j)]).collect();
            if o1.row_provenance[i] == RowSource::Blended {
                // row(w) = w rowA + (1-w) rowB, so rowA and rowB follow by extrapolation
                let slope: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| (y - x) / 0.5).collect();
                let row_a: Vec<f64> = r1.iter().zip(&slope).map(|(x, s)| x + 0.75 * s).collect();
                let row_b: Vec<f64> = r1.iter().zip(&slope).map(|(x, s)| x - 0.25 * s).collect();
                let scale = inf(row_a.iter().chain(&row_b).copied()).max(1.0);
                prop_assert!(row_a.iter().sum::<f64>().abs() <= 1e-10 * scale * m as f64);
                prop_assert!(row_b.iter().sum::<f64>().abs() <= 1e-10 * scale * m as f64);
            } else {
                prop_assert!(r1 == r2, "row {i} depends on the weight but is not blended");
            }
        }
    }

    #[test]
    fn permutation_equivariance(method in methods(), lo in -2.0f64..2.0, la in 0.5f64..3.0, lb in 0.5f64..3.0,
                                na in 8usize..30, nb in 8usize..30, frac in 0.05f64..0.3, shift in 1usize..5,
                                terms in 1usize..6, w in 0.1f64..0.9) {
        let (a, b) = pair(method, lo, la, lb, na, nb, frac, shift, terms);
        let ab = assemble(method, &a, &b, OverlapSpec { weight_a: w, taylor_terms: terms, ..Default::default() })?;
        let ba = assemble(method, &b, &a, OverlapSpec { weight_a: 1.0 - w, taylor_terms: terms, ..Default::default() })?;
        prop_assert_eq!(&ab.nodes, &ba.nodes);
        prop_assert!(max_abs_diff(&ab.d1, &ba.d1) <= 1e-14 * inf(ab.d1.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>())).max(1.0));
    }

    #[test]
    fn smooth_data_has_no_jump(n in 12usize..32, deg in 0usize..6, shift in 0.0f64..1.0) {
        let (ma, mb) = shifted_linear_pair(0.0, 2.0, n, n).unwrap();
        let op = assemble_two_point(&make_subdomain(ma, n, 1).unwrap(), &make_subdomain(mb, n, 1).unwrap(), &OverlapSpec::default()).unwrap();
        let u: Vec<f64> = op.nodes.iter().map(|&y| (y - shift).powi(deg as i32)).collect();
        let interface = op.parts[1].lo();
        for order in 1..=2 {
            let j = derivative_jump(&op, &u, order, interface).unwrap();
            prop_assert!(j <= 1e-9, "order {order}: {j:e}");
        }
    }
}

#[test]
fn noise_has_a_jump() {
    let op = assemble_one_point(&lin(0.0, 1.0, 30, 1), &lin(1.0, 2.0, 30, 1), &OverlapSpec::default()).unwrap();
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut jumps: Vec<f64> = (0..20)
        .map(|_| {
            let u: Vec<f64> = (0..op.len()).map(|_| next()).collect();
            derivative_jump(&op, &u, 1, 1.0).unwrap()
        })
        .collect();
    jumps.sort_by(f64::total_cmp);
    assert!(jumps[10] > 0.1, "median jump {}", jumps[10]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn newton_quadratic_tail(nu in 1e-2f64..5e-2, alpha in 0.5f64..1.5, kappa in 1.0f64..3.0) {
        let p = BurgersProblem::new(nu, alpha, kappa).unwrap();
        let op = GlobalOperator::from_subdomain(&lin(0.0, 1.0, 200, 1));
        let guess = burgers_default_guess(&op, &p);
        let opts = NewtonOptions::default();
        let rep = solve_burgers(&op, &p, &guess, &opts).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rep.final_residual() <= opts.tol);
        let h = &rep.residual_history;
        // below this the residual is round-off in nu * D2 * u
        let d2 = op.derivative_of_order(2);
        let d2_norm = (0..op.len()).map(|i| (0..op.len()).map(|j| d2[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        let floor = 100.0 * f64::EPSILON * nu * d2_norm * inf(rep.solution.iter().copied());
        for w in h.windows(2) {
            if w[0] < 1e-3 && w[1] > floor {
                prop_assert!(w[1] <= w[0].powf(1.5), "{h:?}");
            }
        }
        let (left, right) = burgers_bc_residuals(&op, &p, &rep.solution);
        prop_assert!(left.abs() <= 10.0 * opts.tol && right.abs() <= 10.0 * opts.tol);
    }

    #[test]
    fn base_flow_shape(m in -2.0f64..2.0, a in 0.3f64..0.7, delta in 0.01f64..0.05) {
        let p = FlowParams::new(100.0, 100.0, m, a, delta, c64::new(1.0, 0.0), 0).unwrap();
        let op = two_point_radial_operator(60).unwrap();
        let base = solve_base_flow(&op, &p).unwrap();
        prop_assert!(base.c_bar.iter().all(|&c| (-1e-12..=1.0 + 1e-12).contains(&c)));
        prop_assert!(base.c_bar.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(base.v_bar.iter().all(|&v| v >= -1e-12));
        let vmax = base.v_bar.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(vmax - base.v_bar[0] <= 1e-6, "{:e}", vmax - base.v_bar[0]);
        let flux: Vec<f64> = op.nodes.iter().zip(&base.v_bar).map(|(r, v)| r * v).collect();
        prop_assert!(op.integrate(&flux) > 0.0);
    }

    #[test]
    fn eigensystem_structure(m in -1.0f64..1.0, m_az in -3i32..4, k in 0.5f64..2.0) {
        let p = FlowParams::new(50.0, 80.0, m, 0.5, 0.03, c64::new(k, 0.0), m_az).unwrap();
        let op = two_point_radial_operator(12).unwrap();
        let base = solve_base_flow(&op, &p).unwrap();
        let sys = assemble_eigensystem(&op, &base, &p).unwrap();
        let size = sys.mat_a.nrows();
        let zero_row = |mat: &semiglobal::linalg::CMat, i: usize| (0..size).all(|j| mat[(i, j)].norm() == 0.0);
        prop_assert!((0..size).all(|i| !zero_row(&sys.mat_a, i)));
        prop_assert!((0..size).any(|i| zero_row(&sys.mat_b, i)), "B must be singular");
    }
}

fn sin_error(op: &GlobalOperator, freq: f64) -> f64 {
    let f: Vec<f64> = op.nodes.iter().map(|&y| (freq * y).sin()).collect();
    inf(matvec(&op.d1, &f).iter().zip(&op.nodes).map(|(d, &y)| d - freq * (freq * y).cos()))
}

#[test]
fn spectral_convergence() {
    let freq = 25.0;
    let builders: [(&str, fn(usize) -> GlobalOperator); 3] = [
        ("one_point", |n| assemble_one_point(&lin(0.0, 1.5, n, 1), &lin(1.5, 3.0, n, 1), &OverlapSpec::default()).unwrap()),
        ("two_point", |n| {
            let (ma, mb) = shifted_linear_pair(0.0, 3.0, n, n).unwrap();
            assemble_two_point(&make_subdomain(ma, n, 1).unwrap(), &make_subdomain(mb, n, 1).unwrap(), &OverlapSpec::default()).unwrap()
        }),
        ("taylor_multi", |n| {
            let spec = OverlapSpec { taylor_terms: 4, ..Default::default() };
            assemble_taylor_multipoint(&lin(0.0, 1.53, n, 4), &lin(1.47, 3.0, n, 4), &spec).unwrap()
        }),
    ];
    for (name, build) in builders {
        let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| sin_error(&build(n), freq)).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] / 10.0, "{name}: {errs:?}");
        }
    }
}
