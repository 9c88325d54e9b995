//! Experiment configuration files (TOML, `schema_version = 1`).
//!
//! ```toml
//! schema_version = 1
//! problem = "burgers"          # tanh | burgers | stability | differentiate
//! method = "taylor_multi"
//!
//! [geometry]
//! kind = "pair"                # single | pair | shifted_pair | multi_interval
//! a = { map = "linear", a = 0.0, b = 0.50003 }
//! b = { map = "rational_offset", l = 0.1250075, b = 1.5, offset = 0.49997 }
//!
//! [resolution]
//! nodes = [150, 150]           # per subdomain
//!
//! [overlap]
//! taylor_terms = 4
//!
//! [problem_params]
//! nu = 5e-3
//! ```

use crate::bvp::{BurgersProblem, LinearSolve, NewtonOptions, TanhProblem};
use crate::chebcore::{make_subdomain, Mapping, Subdomain};
use crate::error::{Error, Result};
use crate::linalg::c64;
use crate::overlap::{assemble_multi_interval, assemble_pair, shifted_linear_pair, GlobalOperator, Method, OverlapSpec};
use crate::stability::FlowParams;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Tanh,
    Burgers,
    Stability,
    Differentiate,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Linear {
        a: f64,
        b: f64,
    },
    Algebraic {
        rc: f64,
        l1: f64,
    },
    /// `offset_node_of_a = k` places the offset on subdomain A's node `n_a - 1 - k`.
    RationalOffset {
        l: f64,
        b: f64,
        offset: Option<f64>,
        offset_node_of_a: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Single { map: MapConfig },
    Pair { a: MapConfig, b: MapConfig },
    /// Linear pair sharing two nodes, for `two_point`.
    ShiftedPair { lo: f64, hi: f64 },
    MultiInterval { lo: f64, hi: f64, n_sub: usize, delta: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    /// Nodes per subdomain.
    pub nodes: Option<Vec<usize>>,
    /// Nodes per subdomain, applied to every subdomain, one run each.
    pub sweep: Option<Vec<usize>>,
    pub taylor_terms: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    pub weight_a: f64,
    pub coincidence_tol: Option<f64>,
    pub taylor_terms: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        let d = OverlapSpec::default();
        OverlapConfig { weight_a: d.weight_a, coincidence_tol: d.coincidence_tol, taylor_terms: d.taylor_terms }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// `tsvd` or `lu`.
    pub solver: String,
    pub rcond: f64,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        let d = NewtonOptions::default();
        let rcond = match d.linear {
            LinearSolve::TruncatedSvd { rcond } => rcond,
            LinearSolve::Lu => 1e-11,
        };
        NewtonConfig { tol: d.tol, max_iter: d.max_iter, solver: "tsvd".into(), rcond, max_halvings: d.max_halvings }
    }
}

impl NewtonConfig {
    pub fn options(&self) -> Result<NewtonOptions> {
        let linear = match self.solver.as_str() {
            "tsvd" => LinearSolve::TruncatedSvd { rcond: self.rcond },
            "lu" => LinearSolve::Lu,
            s => return Err(Error::Config(format!("unknown newton solver '{s}'"))),
        };
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.rcond > 0.0 && self.rcond < 1.0) {
            return Err(Error::Config("newton needs tol > 0, max_iter > 0 and rcond in (0,1)".into()));
        }
        Ok(NewtonOptions { tol: self.tol, max_iter: self.max_iter, linear, max_halvings: self.max_halvings })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub order: usize,
    pub threshold: f64,
    /// `derivative` or `identity`.
    pub matrix: String,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig { order: 1, threshold: 1e-12, matrix: "derivative".into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurgersGuess {
    /// Exact profile with `beta` replaced by `alpha`.
    Default,
    Exact,
    /// `alpha (1 - 2x)`.
    Ramp,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersParams {
    pub nu: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "two")]
    pub kappa: f64,
    #[serde(default = "burgers_guess_default")]
    pub guess: BurgersGuess,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TanhGuess {
    Ramp,
    Exact,
    /// Logistic front at the interface, `guess_widen` times wider than exact.
    Front,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TanhParams {
    pub theta: f64,
    #[serde(default = "ten")]
    pub truncation: f64,
    #[serde(default = "tanh_guess_default")]
    pub guess: TanhGuess,
    #[serde(default = "two")]
    pub guess_widen: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Sin,
    Cos,
    Exp,
    /// `1 / (1 + y^2)`.
    Runge,
}

impl TestFunction {
    /// `k`-th derivative, for `k <= 4`.
    pub fn derivative(&self, y: f64, k: usize) -> f64 {
        match self {
            TestFunction::Sin => [y.sin(), y.cos(), -y.sin(), -y.cos()][k % 4],
            TestFunction::Cos => [y.cos(), -y.sin(), -y.cos(), y.sin()][k % 4],
            TestFunction::Exp => y.exp(),
            TestFunction::Runge => {
                let s = 1.0 + y * y;
                match k {
                    0 => 1.0 / s,
                    1 => -2.0 * y / (s * s),
                    2 => (6.0 * y * y - 2.0) / s.powi(3),
                    3 => 24.0 * y * (1.0 - y * y) / s.powi(4),
                    _ => 24.0 * (5.0 * y.powi(4) - 10.0 * y * y + 1.0) / s.powi(5),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentiateParams {
    #[serde(default = "sin_default")]
    pub function: TestFunction,
    #[serde(default = "one_usize")]
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityParams {
    pub reynolds: f64,
    pub peclet: f64,
    pub visc_log_ratio: f64,
    pub interface_loc: f64,
    pub interface_width: f64,
    pub k_axial: f64,
    #[serde(default)]
    pub k_axial_imag: f64,
    #[serde(default)]
    pub m_azimuthal: i32,
    #[serde(default = "thousand")]
    pub filter_threshold: f64,
}

impl StabilityParams {
    pub fn flow(&self) -> Result<FlowParams> {
        FlowParams::new(
            self.reynolds,
            self.peclet,
            self.visc_log_ratio,
            self.interface_loc,
            self.interface_width,
            c64::new(self.k_axial, self.k_axial_imag),
            self.m_azimuthal,
        )
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}
fn thousand() -> f64 {
    1e3
}
fn one_usize() -> usize {
    1
}
fn burgers_guess_default() -> BurgersGuess {
    BurgersGuess::Default
}
fn tanh_guess_default() -> TanhGuess {
    TanhGuess::Ramp
}
fn sin_default() -> TestFunction {
    TestFunction::Sin
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemParams {
    Tanh(TanhParams),
    Burgers(BurgersParams),
    Stability(StabilityParams),
    Differentiate(DifferentiateParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    problem: ProblemKind,
    method: String,
    output_dir: Option<PathBuf>,
    geometry: GeometryConfig,
    #[serde(default)]
    resolution: ResolutionConfig,
    #[serde(default)]
    overlap: OverlapConfig,
    #[serde(default)]
    problem_params: toml::Table,
    #[serde(default)]
    newton: NewtonConfig,
    #[serde(default)]
    pattern: PatternConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub geometry: GeometryConfig,
    pub resolution: ResolutionConfig,
    pub overlap: OverlapConfig,
    pub problem: ProblemParams,
    pub newton: NewtonConfig,
    pub pattern: PatternConfig,
    pub output_dir: Option<PathBuf>,
}

fn typed<T: DeserializeOwned>(t: toml::Table, what: &str) -> Result<T> {
    toml::Value::Table(t)
        .try_into()
        .map_err(|e| Error::Config(format!("problem_params for {what}: {e}")))
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        let method = Method::parse(&raw.method).map_err(|e| Error::Config(e.to_string()))?;
        let problem = match raw.problem {
            ProblemKind::Tanh => ProblemParams::Tanh(typed(raw.problem_params, "tanh")?),
            ProblemKind::Burgers => ProblemParams::Burgers(typed(raw.problem_params, "burgers")?),
            ProblemKind::Stability => ProblemParams::Stability(typed(raw.problem_params, "stability")?),
            ProblemKind::Differentiate => ProblemParams::Differentiate(typed(raw.problem_params, "differentiate")?),
        };
        let cfg = ExperimentConfig {
            method,
            geometry: raw.geometry,
            resolution: raw.resolution,
            overlap: raw.overlap,
            problem,
            newton: raw.newton,
            pattern: raw.pattern,
            output_dir: raw.output_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let compatible = match (&self.geometry, self.method) {
            (GeometryConfig::Single { .. }, Method::Single) => true,
            (GeometryConfig::Pair { .. }, m) => {
                matches!(m, Method::OnePoint | Method::TwoPoint | Method::PseudoMulti | Method::TaylorMulti)
            }
            (GeometryConfig::ShiftedPair { .. }, Method::TwoPoint) => true,
            (GeometryConfig::MultiInterval { .. }, Method::MultiInterval) => true,
            _ => false,
        };
        if !compatible {
            return bad(format!("method '{}' does not match the geometry kind", self.method.name()));
        }
        if let Some(n) = &self.resolution.nodes {
            if n.len() != self.subdomain_count() {
                return bad(format!("resolution.nodes has {} entries, geometry has {} subdomains", n.len(), self.subdomain_count()));
            }
        }
        for (name, list) in [("sweep", &self.resolution.sweep), ("taylor_terms", &self.resolution.taylor_terms)] {
            if let Some(v) = list {
                if v.is_empty() || !strictly_increasing(v) {
                    return bad(format!("resolution.{name} must be a non-empty strictly increasing list"));
                }
            }
        }
        self.overlap_spec(self.overlap.taylor_terms)?;
        self.newton.options()?;
        match &self.problem {
            ProblemParams::Tanh(p) => {
                TanhProblem::new(p.theta, p.truncation)?;
                if !(p.guess_widen > 0.0) {
                    return bad("guess_widen must be positive".into());
                }
            }
            ProblemParams::Burgers(p) => {
                BurgersProblem::new(p.nu, p.alpha, p.kappa)?;
            }
            ProblemParams::Stability(p) => {
                p.flow()?;
            }
            ProblemParams::Differentiate(p) => {
                if p.order == 0 || p.order > 4 {
                    return bad("differentiate order must be 1..=4".into());
                }
            }
        }
        if !(self.pattern.threshold >= 0.0) || !matches!(self.pattern.matrix.as_str(), "derivative" | "identity") {
            return bad("pattern needs threshold >= 0 and matrix = derivative | identity".into());
        }
        Ok(())
    }

    pub fn subdomain_count(&self) -> usize {
        match &self.geometry {
            GeometryConfig::Single { .. } => 1,
            GeometryConfig::Pair { .. } | GeometryConfig::ShiftedPair { .. } => 2,
            GeometryConfig::MultiInterval { n_sub, .. } => *n_sub,
        }
    }

    pub fn overlap_spec(&self, taylor_terms: usize) -> Result<OverlapSpec> {
        let s = OverlapSpec {
            weight_a: self.overlap.weight_a,
            coincidence_tol: self.overlap.coincidence_tol,
            taylor_terms,
        };
        s.validate()?;
        Ok(s)
    }

    /// Per-subdomain node counts for a plain run.
    pub fn nodes(&self) -> Result<Vec<usize>> {
        match (&self.resolution.nodes, &self.resolution.sweep) {
            (Some(n), _) => Ok(n.clone()),
            (None, Some(s)) if s.len() == 1 => Ok(vec![s[0]; self.subdomain_count()]),
            _ => Err(Error::Config("resolution.nodes is required".into())),
        }
    }

    /// Derivative orders the subdomains must carry for Taylor donors.
    fn required_order(&self, taylor_terms: usize) -> usize {
        match self.method {
            Method::TaylorMulti | Method::MultiInterval => taylor_terms.max(1),
            _ => 1,
        }
    }

    /// Builds the global operator for the given per-subdomain node counts.
    pub fn build_operator(&self, nodes: &[usize], taylor_terms: usize) -> Result<GlobalOperator> {
        if nodes.len() != self.subdomain_count() {
            return Err(Error::Config(format!("expected {} node counts, got {}", self.subdomain_count(), nodes.len())));
        }
        let spec = self.overlap_spec(taylor_terms)?;
        let order = self.required_order(taylor_terms);
        match &self.geometry {
            GeometryConfig::Single { map } => {
                let s = make_subdomain(build_map(map, None)?, nodes[0], order)?;
                Ok(GlobalOperator::from_subdomain(&s))
            }
            GeometryConfig::Pair { a, b } => {
                let sa = make_subdomain(build_map(a, None)?, nodes[0], order)?;
                let sb = make_subdomain(build_map(b, Some(&sa))?, nodes[1], order)?;
                assemble_pair(self.method, &sa, &sb, &spec)
            }
            GeometryConfig::ShiftedPair { lo, hi } => {
                let (ma, mb) = shifted_linear_pair(*lo, *hi, nodes[0], nodes[1])?;
                let sa = make_subdomain(ma, nodes[0], order)?;
                let sb = make_subdomain(mb, nodes[1], order)?;
                assemble_pair(Method::TwoPoint, &sa, &sb, &spec)
            }
            GeometryConfig::MultiInterval { lo, hi, n_sub, delta } => {
                if nodes.iter().any(|&n| n != nodes[0]) {
                    return Err(Error::Config("multi_interval needs equal node counts".into()));
                }
                assemble_multi_interval(*lo, *hi, *n_sub, nodes[0], *delta, &spec)
            }
        }
    }
}

fn build_map(m: &MapConfig, a: Option<&Subdomain>) -> Result<Mapping> {
    match m {
        MapConfig::Linear { a, b } => Mapping::linear(*a, *b),
        MapConfig::Algebraic { rc, l1 } => Mapping::algebraic(*rc, *l1),
        MapConfig::RationalOffset { l, b, offset, offset_node_of_a } => {
            let off = match (offset, offset_node_of_a, a) {
                (Some(o), None, _) => *o,
                (None, Some(k), Some(sa)) => {
                    let n = sa.phys_nodes.len();
                    if *k >= n {
                        return Err(Error::Config(format!("offset_node_of_a {k} exceeds subdomain A's {n} nodes")));
                    }
                    sa.phys_nodes[n - 1 - k]
                }
                (None, Some(_), None) => {
                    return Err(Error::Config("offset_node_of_a is only valid on subdomain b".into()))
                }
                _ => return Err(Error::Config("rational_offset needs exactly one of offset, offset_node_of_a".into())),
            };
            Mapping::rational_offset(*l, *b, off)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BURGERS: &str = r#"
schema_version = 1
problem = "burgers"
method = "single"
[geometry]
kind = "single"
map = { map = "linear", a = 0.0, b = 1.0 }
[resolution]
nodes = [40]
[problem_params]
nu = 0.05
"#;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::parse(BURGERS).unwrap();
        assert_eq!(c.method, Method::Single);
        assert_eq!(c.nodes().unwrap(), vec![40]);
        match &c.problem {
            ProblemParams::Burgers(p) => assert_eq!((p.nu, p.alpha, p.kappa, p.guess), (0.05, 1.0, 2.0, BurgersGuess::Default)),
            _ => panic!(),
        }
        assert_eq!(c.build_operator(&[40], 5).unwrap().len(), 40);
    }

    #[test]
    fn rejects_bad_inputs() {
        for (from, to) in [
            ("schema_version = 1", "schema_version = 2"),
            ("method = \"single\"", "method = \"spline\""),
            ("method = \"single\"", "method = \"one_point\""),
            ("nu = 0.05", "nu = -1.0"),
            ("nu = 0.05", "nu = 0.05\nmystery = 3"),
            ("nodes = [40]", "nodes = [40, 40]"),
            ("nodes = [40]", "sweep = [64, 32]"),
        ] {
            let text = BURGERS.replace(from, to);
            assert!(ExperimentConfig::parse(&text).is_err(), "{to}");
        }
        assert!(ExperimentConfig::parse("not toml [").is_err());
    }

    #[test]
    fn offset_from_a_node() {
        let text = r#"
schema_version = 1
problem = "differentiate"
method = "pseudo_multi"
[geometry]
kind = "pair"
a = { map = "linear", a = 0.0, b = 1.05 }
b = { map = "rational_offset", l = 2.0, b = 1.25, offset_node_of_a = 3 }
[resolution]
nodes = [15, 15]
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let op = c.build_operator(&[15, 15], 5).unwrap();
        assert_eq!(op.len(), 29);
    }

    #[test]
    fn test_function_derivatives() {
        let h = 1e-4;
        for f in [TestFunction::Sin, TestFunction::Cos, TestFunction::Exp, TestFunction::Runge] {
            for k in 0..4 {
                let fd = (f.derivative(0.3 + h, k) - f.derivative(0.3 - h, k)) / (2.0 * h);
                assert!((fd - f.derivative(0.3, k + 1)).abs() < 1e-6, "{f:?} {k}");
            }
        }
    }
}
