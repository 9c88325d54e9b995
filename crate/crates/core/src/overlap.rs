//! Global derivative operators assembled from overlapping subdomains.
//!
//! All assembly methods share one fusion routine: nodes of both subdomains
//! are merged into a single ascending vector (coincident pairs fused to one
//! unknown), each row is copied from its owning subdomain, and selected rows
//! are replaced by a convex blend of a row from each side.

use crate::chebcore::{bary_eval, cgl_bary_weights, clenshaw_curtis_weights, make_subdomain, Mapping, Subdomain};
use crate::error::{Error, Result};
use crate::linalg::{matpow, Mat};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// A single mapped domain, no overlap.
    Single,
    OnePoint,
    TwoPoint,
    PseudoMulti,
    TaylorMulti,
    MultiInterval,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Single => "single",
            Method::OnePoint => "one_point",
            Method::TwoPoint => "two_point",
            Method::PseudoMulti => "pseudo_multi",
            Method::TaylorMulti => "taylor_multi",
            Method::MultiInterval => "multi_interval",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "single" | "global" => Method::Single,
            "one_point" => Method::OnePoint,
            "two_point" => Method::TwoPoint,
            "pseudo_multi" => Method::PseudoMulti,
            "taylor_multi" => Method::TaylorMulti,
            "multi_interval" => Method::MultiInterval,
            other => return Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSource {
    DomainA,
    DomainB,
    Blended,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSpec {
    pub weight_a: f64,
    /// Absolute tolerance; `None` means `1e-12` times the union length.
    pub coincidence_tol: Option<f64>,
    pub taylor_terms: usize,
}

impl Default for OverlapSpec {
    fn default() -> Self {
        OverlapSpec { weight_a: 0.5, coincidence_tol: None, taylor_terms: 5 }
    }
}

impl OverlapSpec {
    pub fn weight_b(&self) -> f64 {
        1.0 - self.weight_a
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight_a > 0.0 && self.weight_a < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "weight_a must lie in (0,1), got {}",
                self.weight_a
            )));
        }
        if self.taylor_terms < 1 {
            return Err(Error::InvalidArgument("taylor_terms must be at least 1".into()));
        }
        if let Some(t) = self.coincidence_tol {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument("coincidence_tol must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// One source subdomain as embedded in a global operator.
#[derive(Clone, Debug)]
pub struct Part {
    pub mapping: Mapping,
    pub ref_nodes: Vec<f64>,
    pub phys_nodes: Vec<f64>,
    pub d1: Mat,
    /// Global column of each local node.
    pub cols: Vec<usize>,
}

impl Part {
    fn from_subdomain(s: &Subdomain, cols: Vec<usize>) -> Self {
        Part {
            mapping: s.mapping,
            ref_nodes: s.ref_nodes.clone(),
            phys_nodes: s.phys_nodes.clone(),
            d1: s.d(1).clone(),
            cols,
        }
    }

    pub fn lo(&self) -> f64 {
        self.phys_nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.phys_nodes.last().unwrap()
    }

    /// Interpolates local nodal values at physical point `y`.
    pub fn interpolate(&self, values: &[f64], y: f64) -> f64 {
        let w = cgl_bary_weights(&self.ref_nodes);
        bary_eval(&self.ref_nodes, &w, values, self.mapping.inverse(y))
    }

    pub fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|&c| u[c]).collect()
    }
}

/// Assembled square derivative operator over the union of subdomains.
#[derive(Debug)]
pub struct GlobalOperator {
    pub nodes: Vec<f64>,
    pub d1: Mat,
    pub row_provenance: Vec<RowSource>,
    pub method: Method,
    pub parts: Vec<Part>,
    order_cache: Mutex<BTreeMap<usize, Arc<Mat>>>,
}

impl Clone for GlobalOperator {
    fn clone(&self) -> Self {
        GlobalOperator {
            nodes: self.nodes.clone(),
            d1: self.d1.clone(),
            row_provenance: self.row_provenance.clone(),
            method: self.method,
            parts: self.parts.clone(),
            order_cache: Mutex::new(self.order_cache.lock().unwrap().clone()),
        }
    }
}

impl GlobalOperator {
    fn new(nodes: Vec<f64>, d1: Mat, prov: Vec<RowSource>, method: Method, parts: Vec<Part>) -> Self {
        GlobalOperator { nodes, d1, row_provenance: prov, method, parts, order_cache: Mutex::new(BTreeMap::new()) }
    }

    /// Wraps a single subdomain.
    pub fn from_subdomain(s: &Subdomain) -> Self {
        let n = s.n();
        GlobalOperator::new(
            s.phys_nodes.clone(),
            s.d(1).clone(),
            vec![RowSource::DomainA; n],
            Method::Single,
            vec![Part::from_subdomain(s, (0..n).collect())],
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `d1^k`, cached.
    pub fn derivative_of_order(&self, k: usize) -> Arc<Mat> {
        assert!(k >= 1, "derivative order must be at least 1");
        if let Some(m) = self.order_cache.lock().unwrap().get(&k) {
            return m.clone();
        }
        let m = Arc::new(if k == 1 { self.d1.clone() } else { matpow(&self.d1, k) });
        self.order_cache.lock().unwrap().entry(k).or_insert(m).clone()
    }

    pub fn sparsity_pattern(&self, k: usize, threshold: f64) -> Vec<(usize, usize)> {
        sparsity_pattern(&self.derivative_of_order(k), threshold)
    }

    /// Integral of nodal data over the covered interval. Parts are cut at the
    /// midpoints of their overlaps and each piece is integrated with
    /// Clenshaw-Curtis on the part's interpolant.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut parts: Vec<&Part> = self.parts.iter().collect();
        parts.sort_by(|p, q| p.lo().total_cmp(&q.lo()));
        let mut total = 0.0;
        for (i, p) in parts.iter().enumerate() {
            let start = if i == 0 { p.lo() } else { 0.5 * (p.lo() + parts[i - 1].hi()) };
            let end = if i + 1 == parts.len() { p.hi() } else { 0.5 * (parts[i + 1].lo() + p.hi()) };
            let vals = p.gather(f);
            let n = p.phys_nodes.len().max(3);
            let w = clenshaw_curtis_weights(n);
            let half = 0.5 * (end - start);
            let wb = cgl_bary_weights(&p.ref_nodes);
            for (j, wj) in w.iter().enumerate() {
                let t = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
                let y = 0.5 * (start + end) + half * t;
                total += wj * half * bary_eval(&p.ref_nodes, &wb, &vals, p.mapping.inverse(y));
            }
        }
        total
    }
}

/// Indices of entries with magnitude above `threshold`, row-major.
pub fn sparsity_pattern(m: &Mat, threshold: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)].abs() > threshold {
                out.push((i, j));
            }
        }
    }
    out
}

/// Polynomial piece used to extrapolate derivative rows via Taylor series.
struct Donor {
    nodes: Vec<f64>,
    /// `powers[k]` is the order-(k+1) derivative matrix.
    powers: Vec<Mat>,
    /// Side-local column of each donor node.
    cols: Vec<usize>,
}

/// One operand of the fusion routine.
struct Side {
    nodes: Vec<f64>,
    d1: Mat,
    prov: Vec<RowSource>,
    parts: Vec<Part>,
    donor: Option<Donor>,
    available_orders: usize,
}

impl Side {
    fn from_subdomain(s: &Subdomain, tag: RowSource, donor_terms: Option<usize>) -> Self {
        let n = s.n();
        let donor = donor_terms.map(|t| Donor {
            nodes: s.phys_nodes.clone(),
            powers: s.phys_diff.iter().take(t).cloned().collect(),
            cols: (0..n).collect(),
        });
        Side {
            nodes: s.phys_nodes.clone(),
            d1: s.d(1).clone(),
            prov: vec![tag; n],
            parts: vec![Part::from_subdomain(s, (0..n).collect())],
            donor,
            available_orders: s.max_order(),
        }
    }

    fn lo(&self) -> f64 {
        self.nodes[0]
    }

    fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Owner {
    A(usize),
    B(usize),
    Fused(usize, usize),
}

fn coincident_pairs(a: &[f64], b: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if (a[i] - b[j]).abs() <= tol {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, v| acc * v as f64)
}

/// Taylor-extrapolated first-derivative row at `y0`, in donor-local columns.
fn taylor_row(d: &Donor, y0: f64, terms: usize) -> Vec<f64> {
    // nearest donor node strictly to the left; nearest right if none
    let anchor = match d.nodes.iter().rposition(|&y| y < y0) {
        Some(l) => l,
        None => 0,
    };
    let dy = y0 - d.nodes[anchor];
    let n = d.nodes.len();
    let mut row = vec![0.0; n];
    for k in 0..terms {
        let c = dy.powi(k as i32) / factorial(k);
        let p = &d.powers[k];
        for (j, r) in row.iter_mut().enumerate() {
            *r += c * p[(anchor, j)];
        }
    }
    row
}

fn fuse(mut a: Side, mut b: Side, spec: &OverlapSpec, method: Method) -> Result<GlobalOperator> {
    spec.validate()?;
    let mut wa = spec.weight_a;
    // orientation-free: the left operand is treated as A
    let swapped = b.lo() < a.lo();
    if swapped {
        std::mem::swap(&mut a, &mut b);
        wa = spec.weight_b();
        for t in a.prov.iter_mut().chain(b.prov.iter_mut()) {
            *t = match *t {
                RowSource::DomainA => RowSource::DomainB,
                RowSource::DomainB => RowSource::DomainA,
                RowSource::Blended => RowSource::Blended,
            };
        }
    }
    let wb = 1.0 - wa;
    let span = b.hi().max(a.hi()) - a.lo();
    let tol = spec.coincidence_tol.unwrap_or(1e-12 * span);
    if b.hi() <= a.hi() + tol {
        return Err(Error::Overlap(
            "one subdomain lies inside the other; a blended row would be a boundary row".into(),
        ));
    }
    let pairs = coincident_pairs(&a.nodes, &b.nodes, tol);
    let (na, nb) = (a.nodes.len(), b.nodes.len());

    match method {
        Method::OnePoint => {
            if (a.hi() - b.lo()).abs() > tol {
                return Err(Error::InterfaceMismatch(format!(
                    "last node of A is {} but first node of B is {}",
                    a.hi(),
                    b.lo()
                )));
            }
            if pairs != [(na - 1, 0)] {
                return Err(Error::Overlap("one_point expects only the shared endpoint to coincide".into()));
            }
        }
        Method::TwoPoint => {
            if pairs.len() < 2 {
                return Err(Error::Overlap(format!(
                    "two_point needs two coincident node pairs, found {}",
                    pairs.len()
                )));
            }
            if pairs != [(na - 2, 0), (na - 1, 1)] {
                return Err(Error::Overlap(
                    "coincident pairs are not the last two of A and first two of B".into(),
                ));
            }
        }
        Method::PseudoMulti => {
            if a.hi() - b.lo() <= tol {
                return Err(Error::Overlap("overlap region has zero width".into()));
            }
            if pairs.len() != 1 {
                return Err(Error::Overlap(format!(
                    "pseudo_multi needs exactly one coincident pair, found {}",
                    pairs.len()
                )));
            }
        }
        Method::TaylorMulti | Method::MultiInterval => {
            let a_in = a.nodes.iter().filter(|&&y| y >= b.lo() - tol && y <= b.hi() + tol).count();
            let b_in = b.nodes.iter().filter(|&&y| y >= a.lo() - tol && y <= a.hi() + tol).count();
            if a_in < 2 || b_in < 2 {
                return Err(Error::Overlap(format!(
                    "overlap holds {a_in} nodes of A and {b_in} of B; need at least 2 each"
                )));
            }
            for s in [&a, &b] {
                if spec.taylor_terms > s.available_orders {
                    return Err(Error::InvalidArgument(format!(
                        "taylor_terms {} exceeds available derivative order {}",
                        spec.taylor_terms, s.available_orders
                    )));
                }
            }
        }
        Method::Single => unreachable!("single domain needs no fusion"),
    }

    // merged node list
    let fused_a: BTreeMap<usize, usize> = pairs.iter().copied().collect();
    let fused_b: BTreeMap<usize, usize> = pairs.iter().map(|&(i, j)| (j, i)).collect();
    let mut owners: Vec<(f64, Owner)> = Vec::with_capacity(na + nb - pairs.len());
    for i in 0..na {
        match fused_a.get(&i) {
            Some(&j) => owners.push((0.5 * (a.nodes[i] + b.nodes[j]), Owner::Fused(i, j))),
            None => owners.push((a.nodes[i], Owner::A(i))),
        }
    }
    for j in 0..nb {
        if !fused_b.contains_key(&j) {
            owners.push((b.nodes[j], Owner::B(j)));
        }
    }
    owners.sort_by(|p, q| p.0.total_cmp(&q.0));
    let m = owners.len();
    let mut col_a = vec![0usize; na];
    let mut col_b = vec![0usize; nb];
    for (g, &(_, o)) in owners.iter().enumerate() {
        match o {
            Owner::A(i) => col_a[i] = g,
            Owner::B(j) => col_b[j] = g,
            Owner::Fused(i, j) => {
                col_a[i] = g;
                col_b[j] = g;
            }
        }
    }
    let nodes: Vec<f64> = owners.iter().map(|p| p.0).collect();
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Overlap("merged nodes are not strictly ascending".into()));
    }

    let taylor = matches!(method, Method::TaylorMulti | Method::MultiInterval);
    let terms = spec.taylor_terms;
    let mut d = Mat::zeros(m, m);
    let mut prov = Vec::with_capacity(m);
    let add_row = |d: &mut Mat, g: usize, src: &Mat, r: usize, cols: &[usize], w: f64| {
        for (jl, &c) in cols.iter().enumerate() {
            d[(g, c)] += w * src[(r, jl)];
        }
    };
    let add_taylor = |d: &mut Mat, g: usize, donor: &Donor, side_cols: &[usize], y0: f64, w: f64| {
        let row = taylor_row(donor, y0, terms);
        for (jl, v) in row.iter().enumerate() {
            d[(g, side_cols[donor.cols[jl]])] += w * v;
        }
    };
    for (g, &(y, o)) in owners.iter().enumerate() {
        match o {
            Owner::Fused(i, j) => {
                add_row(&mut d, g, &a.d1, i, &col_a, wa);
                add_row(&mut d, g, &b.d1, j, &col_b, wb);
                prov.push(RowSource::Blended);
            }
            Owner::A(i) => {
                if taylor && y > b.lo() && y < b.hi() {
                    add_row(&mut d, g, &a.d1, i, &col_a, wa);
                    add_taylor(&mut d, g, b.donor.as_ref().expect("donor"), &col_b, y, wb);
                    prov.push(RowSource::Blended);
                } else {
                    add_row(&mut d, g, &a.d1, i, &col_a, 1.0);
                    prov.push(a.prov[i]);
                }
            }
            Owner::B(j) => {
                if taylor && y > a.lo() && y < a.hi() {
                    add_row(&mut d, g, &b.d1, j, &col_b, wb);
                    add_taylor(&mut d, g, a.donor.as_ref().expect("donor"), &col_a, y, wa);
                    prov.push(RowSource::Blended);
                } else {
                    add_row(&mut d, g, &b.d1, j, &col_b, 1.0);
                    prov.push(b.prov[j]);
                }
            }
        }
    }
    let mut parts = Vec::with_capacity(a.parts.len() + b.parts.len());
    for p in a.parts {
        let cols = p.cols.iter().map(|&c| col_a[c]).collect();
        parts.push(Part { cols, ..p });
    }
    for p in b.parts {
        let cols = p.cols.iter().map(|&c| col_b[c]).collect();
        parts.push(Part { cols, ..p });
    }
    if swapped {
        parts.sort_by(|p, q| p.lo().total_cmp(&q.lo()));
    }
    Ok(GlobalOperator::new(nodes, d, prov, method, parts))
}

pub fn assemble_one_point(a: &Subdomain, b: &Subdomain, spec: &OverlapSpec) -> Result<GlobalOperator> {
    fuse(
        Side::from_subdomain(a, RowSource::DomainA, None),
        Side::from_subdomain(b, RowSource::DomainB, None),
        spec,
        Method::OnePoint,
    )
}

pub fn assemble_two_point(a: &Subdomain, b: &Subdomain, spec: &OverlapSpec) -> Result<GlobalOperator> {
    fuse(
        Side::from_subdomain(a, RowSource::DomainA, None),
        Side::from_subdomain(b, RowSource::DomainB, None),
        spec,
        Method::TwoPoint,
    )
}

pub fn assemble_pseudo_multipoint(a: &Subdomain, b: &Subdomain, spec: &OverlapSpec) -> Result<GlobalOperator> {
    fuse(
        Side::from_subdomain(a, RowSource::DomainA, None),
        Side::from_subdomain(b, RowSource::DomainB, None),
        spec,
        Method::PseudoMulti,
    )
}

pub fn assemble_taylor_multipoint(a: &Subdomain, b: &Subdomain, spec: &OverlapSpec) -> Result<GlobalOperator> {
    let t = Some(spec.taylor_terms);
    fuse(
        Side::from_subdomain(a, RowSource::DomainA, t),
        Side::from_subdomain(b, RowSource::DomainB, t),
        spec,
        Method::TaylorMulti,
    )
}

/// Dispatches on `method` for two subdomains.
pub fn assemble_pair(method: Method, a: &Subdomain, b: &Subdomain, spec: &OverlapSpec) -> Result<GlobalOperator> {
    match method {
        Method::OnePoint => assemble_one_point(a, b, spec),
        Method::TwoPoint => assemble_two_point(a, b, spec),
        Method::PseudoMulti => assemble_pseudo_multipoint(a, b, spec),
        Method::TaylorMulti => assemble_taylor_multipoint(a, b, spec),
        other => Err(Error::InvalidArgument(format!("{} is not a two-subdomain method", other.name()))),
    }
}

/// Subintervals `[a, a+D+d]`, `[a+(i-1)D-d, a+iD+d]`, `[b-D-d, b]` with `D = (b-a)/n_sub`.
pub fn multi_interval_bounds(a: f64, b: f64, n_sub: usize, delta: f64) -> Result<Vec<(f64, f64)>> {
    if n_sub < 2 {
        return Err(Error::InvalidArgument("n_sub must be at least 2".into()));
    }
    if !(b > a) {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    let width = (b - a) / n_sub as f64;
    if !(delta > 0.0) || delta >= width {
        return Err(Error::Overlap(format!("delta {delta} must lie in (0, {width})")));
    }
    if 2.0 * delta >= width {
        return Err(Error::Overlap(format!(
            "delta {delta} makes non-adjacent subintervals overlap (needs 2*delta < {width})"
        )));
    }
    Ok((1..=n_sub)
        .map(|i| {
            let lo = if i == 1 { a } else { a + (i - 1) as f64 * width - delta };
            let hi = if i == n_sub { b } else { a + i as f64 * width + delta };
            (lo, hi)
        })
        .collect())
}

/// Chains Taylor multi-point fusion left to right over linearly mapped subintervals.
pub fn assemble_multi_interval(
    a: f64,
    b: f64,
    n_sub: usize,
    nodes_per: usize,
    delta: f64,
    spec: &OverlapSpec,
) -> Result<GlobalOperator> {
    spec.validate()?;
    if nodes_per < 4 {
        return Err(Error::InvalidArgument("nodes_per must be at least 4".into()));
    }
    let bounds = multi_interval_bounds(a, b, n_sub, delta)?;
    let terms = spec.taylor_terms;
    let subs = bounds
        .iter()
        .map(|&(lo, hi)| make_subdomain(Mapping::linear(lo, hi)?, nodes_per, terms))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Side::from_subdomain(&subs[0], RowSource::DomainA, Some(terms));
    let mut op = None;
    for (k, s) in subs.iter().enumerate().skip(1) {
        let next = Side::from_subdomain(s, RowSource::DomainB, Some(terms));
        let fused = fuse(acc, next, spec, Method::MultiInterval)?;
        // the newest subdomain donates for the following overlap
        let last = fused.parts.last().unwrap().clone();
        acc = Side {
            nodes: fused.nodes.clone(),
            d1: fused.d1.clone(),
            prov: fused
                .row_provenance
                .iter()
                .map(|&t| if t == RowSource::DomainB { RowSource::DomainA } else { t })
                .collect(),
            parts: fused.parts.clone(),
            donor: Some(Donor {
                nodes: last.phys_nodes.clone(),
                powers: subs[k].phys_diff.iter().take(terms).cloned().collect(),
                cols: last.cols.clone(),
            }),
            available_orders: terms,
        };
        op = Some(fused);
    }
    Ok(op.expect("at least two subintervals"))
}

/// Linear pair on `[lo, hi]` whose last two / first two nodes coincide.
///
/// Subdomain A is `[lo, lo + ha]` with `n_a` nodes, B starts at A's
/// second-to-last node and ends at `hi`, with its second node on A's last.
pub fn shifted_linear_pair(lo: f64, hi: f64, n_a: usize, n_b: usize) -> Result<(Mapping, Mapping)> {
    if n_a < 3 || n_b < 3 {
        return Err(Error::InvalidArgument("shifted pair needs at least 3 nodes per side".into()));
    }
    let frac = |n: usize| 0.5 * (1.0 - (std::f64::consts::PI / (n - 1) as f64).cos());
    let (ea, eb) = (frac(n_a), frac(n_b));
    let len = hi - lo;
    let ha = len / (1.0 - ea + ea / eb);
    let start_b = lo + ha * (1.0 - ea);
    Ok((Mapping::linear(lo, lo + ha)?, Mapping::linear(start_b, hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matvec;

    fn lin(a: f64, b: f64, n: usize, k: usize) -> Subdomain {
        make_subdomain(Mapping::linear(a, b).unwrap(), n, k).unwrap()
    }

    #[test]
    fn one_point_structure() {
        let op = assemble_one_point(&lin(0.0, 1.0, 4, 1), &lin(1.0, 2.0, 5, 1), &OverlapSpec::default()).unwrap();
        assert_eq!(op.len(), 8);
        let pat = op.sparsity_pattern(1, 1e-12);
        for &(r, c) in &pat {
            if r < 3 {
                assert!(c <= 3);
            } else if r > 3 {
                assert!(c >= 3);
            }
        }
        assert_eq!(pat.iter().filter(|p| p.0 == 3).count(), 8);
        assert_eq!(op.row_provenance[3], RowSource::Blended);
    }

    #[test]
    fn one_point_mismatch_names_values() {
        let e = assemble_one_point(&lin(0.0, 1.0, 4, 1), &lin(1.5, 2.0, 4, 1), &OverlapSpec::default()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains('1') && msg.contains("1.5"), "{msg}");
    }

    #[test]
    fn two_point_needs_two_pairs() {
        let e = assemble_two_point(&lin(0.0, 1.0, 6, 1), &lin(1.0, 2.0, 6, 1), &OverlapSpec::default());
        assert!(e.is_err());
        let (ma, mb) = shifted_linear_pair(0.0, 2.0, 6, 6).unwrap();
        let op = assemble_two_point(
            &make_subdomain(ma, 6, 1).unwrap(),
            &make_subdomain(mb, 6, 1).unwrap(),
            &OverlapSpec::default(),
        )
        .unwrap();
        assert_eq!(op.len(), 10);
        assert!((op.nodes[9] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_square() {
        let (ma, mb) = shifted_linear_pair(0.0, 2.0, 32, 32).unwrap();
        let op = assemble_two_point(
            &make_subdomain(ma, 32, 1).unwrap(),
            &make_subdomain(mb, 32, 1).unwrap(),
            &OverlapSpec::default(),
        )
        .unwrap();
        let f: Vec<f64> = op.nodes.iter().map(|y| y * y).collect();
        for (r, y) in matvec(&op.d1, &f).iter().zip(&op.nodes) {
            assert!((r - 2.0 * y).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudo_multi_rejects_missing_coincidence() {
        let e = assemble_pseudo_multipoint(&lin(0.0, 1.0, 10, 1), &lin(0.8123, 2.0, 10, 1), &OverlapSpec::default());
        assert!(e.is_err());
    }

    #[test]
    fn taylor_polynomial_consistency() {
        let spec = OverlapSpec { taylor_terms: 4, ..Default::default() };
        let a = lin(0.0, 1.05, 30, 4);
        let b = lin(0.9431, 2.5, 20, 4);
        let op = assemble_taylor_multipoint(&a, &b, &spec).unwrap();
        let f: Vec<f64> = op.nodes.iter().map(|y| y.powi(4) - y).collect();
        for (r, y) in matvec(&op.d1, &f).iter().zip(&op.nodes) {
            assert!((r - (4.0 * y.powi(3) - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn taylor_terms_limited_by_available_orders() {
        let spec = OverlapSpec { taylor_terms: 5, ..Default::default() };
        let e = assemble_taylor_multipoint(&lin(0.0, 1.05, 30, 3), &lin(0.95, 2.0, 30, 3), &spec);
        assert!(e.is_err());
    }

    #[test]
    fn multi_interval_rejections() {
        let spec = OverlapSpec::default();
        assert!(assemble_multi_interval(0.0, 1.0, 4, 20, 0.3, &spec).is_err());
        assert!(assemble_multi_interval(0.0, 1.0, 4, 20, 0.2, &spec).is_err());
        assert!(assemble_multi_interval(0.0, 1.0, 1, 20, 0.01, &spec).is_err());
    }

    #[test]
    fn multi_interval_constant() {
        let op = assemble_multi_interval(0.0, 1.0, 6, 20, 0.02, &OverlapSpec::default()).unwrap();
        let r = matvec(&op.d1, &vec![1.0; op.len()]);
        assert!(r.iter().all(|v| v.abs() < 1e-9));
        assert_eq!(op.parts.len(), 6);
    }

    #[test]
    fn order_cache_is_power() {
        let op = GlobalOperator::from_subdomain(&lin(0.0, 1.0, 8, 1));
        let d2 = op.derivative_of_order(2);
        assert_eq!(crate::linalg::max_abs_diff(&d2, &(&op.d1 * &op.d1)), 0.0);
        assert!(Arc::ptr_eq(&d2, &op.derivative_of_order(2)));
    }

    #[test]
    fn identity_pattern() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(sparsity_pattern(&m, 0.5), vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!(sparsity_pattern(&Mat::zeros(3, 3), 0.0).is_empty());
    }

    #[test]
    fn integrate_polynomial() {
        let (ma, mb) = shifted_linear_pair(0.0, 1.0, 20, 20).unwrap();
        let op = assemble_two_point(
            &make_subdomain(ma, 20, 1).unwrap(),
            &make_subdomain(mb, 20, 1).unwrap(),
            &OverlapSpec::default(),
        )
        .unwrap();
        let f: Vec<f64> = op.nodes.iter().map(|r| (1.0 - r * r) * r).collect();
        assert!((op.integrate(&f) - 0.25).abs() < 1e-13);
    }
}
