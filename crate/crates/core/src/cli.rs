//! Command-line driver: `solve`, `convergence`, `pattern`, `stability`.
//!
//! Every command computes its outputs in memory first; files are written to
//! temporaries in the output directory and renamed into place only after
//! the whole command succeeded, so a failed run leaves no partial files.

use crate::bvp::{
    burgers_bc_residuals, burgers_default_guess, burgers_exact, error_norms, solve_burgers, solve_tanh,
    tanh_default_guess, tanh_front_guess, BurgersProblem, NewtonReport, TanhProblem,
};
use crate::config::{BurgersGuess, ExperimentConfig, ProblemParams, TanhGuess};
use crate::error::{Error, Result};
use crate::linalg::matvec;
use crate::overlap::GlobalOperator;
use crate::stability::{assemble_eigensystem, filter_spurious, solve_base_flow, solve_spectrum};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "semiglobal", version, about = "Overlapping-subdomain Chebyshev collocation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one boundary-value problem; writes solution.csv and report.csv.
    Solve(RunArgs),
    /// Error sweep over resolutions and Taylor terms; writes convergence.csv.
    Convergence(RunArgs),
    /// Non-zero pattern of a derivative operator; writes pattern.csv.
    Pattern(RunArgs),
    /// Base flow and filtered spectrum; writes baseflow.csv and spectrum.csv.
    Stability(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Named CSV files produced by a command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    /// False when a Newton solve did not reach its tolerance.
    pub converged: bool,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

struct Solved {
    op: GlobalOperator,
    numeric: Vec<f64>,
    exact: Vec<f64>,
    report: Option<NewtonReport>,
    extra: Vec<(String, String)>,
}

fn solve_problem(cfg: &ExperimentConfig, nodes: &[usize], terms: usize) -> Result<Solved> {
    let op = cfg.build_operator(nodes, terms)?;
    let opts = cfg.newton.options()?;
    match &cfg.problem {
        ProblemParams::Tanh(p) => {
            let prob = TanhProblem::new(p.theta, p.truncation)?;
            let exact: Vec<f64> = op.nodes.iter().map(|&y| prob.exact(y)).collect();
            let guess = match p.guess {
                TanhGuess::Ramp => tanh_default_guess(&op, &prob),
                TanhGuess::Exact => exact.clone(),
                TanhGuess::Front => tanh_front_guess(&op, &prob, p.guess_widen),
            };
            let rep = solve_tanh(&op, &prob, &guess, &opts)?;
            Ok(Solved { numeric: rep.solution.clone(), exact, report: Some(rep), extra: vec![], op })
        }
        ProblemParams::Burgers(p) => {
            let prob = BurgersProblem::new(p.nu, p.alpha, p.kappa)?;
            let beta = prob.beta()?;
            let exact: Vec<f64> = op.nodes.iter().map(|&x| burgers_exact(x, p.nu, beta)).collect();
            let guess = match p.guess {
                BurgersGuess::Default => burgers_default_guess(&op, &prob),
                BurgersGuess::Exact => exact.clone(),
                BurgersGuess::Ramp => op.nodes.iter().map(|x| p.alpha * (1.0 - 2.0 * x)).collect(),
            };
            let rep = solve_burgers(&op, &prob, &guess, &opts)?;
            let (l, r) = burgers_bc_residuals(&op, &prob, &rep.solution);
            let extra = vec![
                ("beta".into(), num(beta)),
                ("robin_left".into(), num(l)),
                ("robin_right".into(), num(r)),
            ];
            Ok(Solved { numeric: rep.solution.clone(), exact, report: Some(rep), extra, op })
        }
        ProblemParams::Differentiate(p) => {
            let f: Vec<f64> = op.nodes.iter().map(|&y| p.function.derivative(y, 0)).collect();
            let d = op.derivative_of_order(p.order);
            let numeric = matvec(&d, &f);
            let exact = op.nodes.iter().map(|&y| p.function.derivative(y, p.order)).collect();
            Ok(Solved { op, numeric, exact, report: None, extra: vec![] })
        }
        ProblemParams::Stability(_) => {
            Err(Error::Config("stability problems run through the stability command".into()))
        }
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Outputs> {
    let nodes = cfg.nodes()?;
    let s = solve_problem(cfg, &nodes, cfg.overlap.taylor_terms)?;
    let (max_err, l2) = error_norms(&s.numeric, &s.exact)?;
    let solution = csv(
        "node,numeric,exact,abs_error",
        s.op.nodes.iter().zip(&s.numeric).zip(&s.exact).map(|((y, u), e)| {
            format!("{},{},{},{}", num(*y), num(*u), num(*e), num((u - e).abs()))
        }),
    );
    let mut rows: Vec<(String, String)> = vec![
        ("method".into(), cfg.method.name().into()),
        ("n_nodes".into(), s.op.len().to_string()),
        ("max_abs_error".into(), num(max_err)),
        ("l2_error".into(), num(l2)),
    ];
    let mut converged = true;
    if let Some(rep) = &s.report {
        converged = rep.converged;
        rows.push(("iterations".into(), rep.iterations.to_string()));
        rows.push(("converged".into(), rep.converged.to_string()));
        rows.push(("final_residual".into(), num(rep.final_residual())));
        for (k, r) in rep.residual_history.iter().enumerate() {
            rows.push((format!("residual_{k}"), num(*r)));
        }
    }
    rows.extend(s.extra);
    let report = csv("quantity,value", rows.into_iter().map(|(k, v)| format!("{k},{v}")));
    Ok(Outputs { files: vec![("solution.csv".into(), solution), ("report.csv".into(), report)], converged })
}

pub fn cmd_convergence(cfg: &ExperimentConfig) -> Result<Outputs> {
    let sweep = match (&cfg.resolution.sweep, &cfg.resolution.nodes) {
        (Some(s), _) => s.clone(),
        (None, Some(n)) => vec![n[0]],
        (None, None) => return Err(Error::Config("convergence needs resolution.sweep".into())),
    };
    let terms = cfg.resolution.taylor_terms.clone().unwrap_or_else(|| vec![cfg.overlap.taylor_terms]);
    let combos: Vec<(usize, usize)> = sweep.iter().flat_map(|&n| terms.iter().map(move |&t| (n, t))).collect();
    let k = cfg.subdomain_count();
    let rows = combos
        .par_iter()
        .map(|&(n, t)| {
            let s = solve_problem(cfg, &vec![n; k], t)?;
            let (m, l2) = error_norms(&s.numeric, &s.exact)?;
            Ok(format!("{},{},{},{}", s.op.len(), t, num(m), num(l2)))
        })
        .collect::<Result<Vec<String>>>()?;
    let body = csv("N,taylor_terms,max_abs_error,l2_error", rows);
    Ok(Outputs { files: vec![("convergence.csv".into(), body)], converged: true })
}

pub fn cmd_pattern(cfg: &ExperimentConfig) -> Result<Outputs> {
    let nodes = cfg.nodes()?;
    let op = cfg.build_operator(&nodes, cfg.overlap.taylor_terms)?;
    let pairs: Vec<(usize, usize)> = match cfg.pattern.matrix.as_str() {
        "identity" => (0..op.len()).map(|i| (i, i)).collect(),
        _ => op.sparsity_pattern(cfg.pattern.order, cfg.pattern.threshold),
    };
    let body = csv("row,col", pairs.into_iter().map(|(r, c)| format!("{r},{c}")));
    Ok(Outputs { files: vec![("pattern.csv".into(), body)], converged: true })
}

pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<Outputs> {
    let ProblemParams::Stability(p) = &cfg.problem else {
        return Err(Error::Config("stability command needs problem = \"stability\"".into()));
    };
    let flow = p.flow()?;
    let nodes = cfg.nodes()?;
    let op = cfg.build_operator(&nodes, cfg.overlap.taylor_terms)?;
    let base = solve_base_flow(&op, &flow)?;
    let sys = assemble_eigensystem(&op, &base, &flow)?;
    let modes = filter_spurious(solve_spectrum(&sys)?, p.filter_threshold);
    let baseflow = csv(
        "r,c_bar,mu,v_z,dv_z",
        (0..op.len()).map(|i| {
            format!(
                "{},{},{},{},{}",
                num(op.nodes[i]),
                num(base.c_bar[i]),
                num(base.mu_bar[i]),
                num(base.v_bar[i]),
                num(base.dv_bar[i])
            )
        }),
    );
    let spectrum = csv("re_omega,im_omega", modes.iter().map(|m| format!("{},{}", num(m.omega.re), num(m.omega.im))));
    Ok(Outputs {
        files: vec![("baseflow.csv".into(), baseflow), ("spectrum.csv".into(), spectrum)],
        converged: true,
    })
}

/// Writes every file to a temporary in `dir`, then renames them into place.
pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(outputs.files.len());
    for (name, body) in &outputs.files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(body.as_bytes())?;
        tmp.flush()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| Error::Io(e.error))?;
    }
    Ok(())
}

fn execute(args: &RunArgs, run: fn(&ExperimentConfig) -> Result<Outputs>) -> Result<bool> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let outputs = pool.install(|| run(&cfg))?;
    write_outputs(&dir, &outputs)?;
    Ok(outputs.converged)
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, f): (&RunArgs, fn(&ExperimentConfig) -> Result<Outputs>) = match &cli.command {
        Command::Solve(a) => (a, cmd_solve),
        Command::Convergence(a) => (a, cmd_convergence),
        Command::Pattern(a) => (a, cmd_pattern),
        Command::Stability(a) => (a, cmd_stability),
    };
    match execute(args, f) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: Newton iteration did not converge");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
