//! Config-driven experiment runner.
//!
//! A run reads one flat TOML document, validates it into a [`Plan`], executes
//! it and writes three kinds of artifact to the output directory:
//! `manifest.json` (config echo, version, seed, timestamp), one result table
//! per observation type (CSV or JSON, long format), and `summary.txt`.

mod config;
mod table;

pub use config::{plan, validate, Command, Diagnostic, ExperimentConfig, Job, Plan, SequenceKind};
pub use table::{format_float, Cell, Format, Table};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use thiserror::Error;

use crate::convex::{auto_dual_grid, biconjugate, fekete_limit, largest_term, legendre_transform, ConvexError};
use crate::estimators::{
    decoupling_check, duality_check, entropy_curve, local_control_check, pressure_curve, subadditivity_check,
    CheckStatus, EmpiricalEstimate, EstimatorError,
};
use crate::fields::FieldModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Diagnostic>),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
    pub skipped: usize,
}

impl Counts {
    pub fn add(&mut self, status: CheckStatus) {
        match status {
            CheckStatus::Pass => self.pass += 1,
            CheckStatus::Fail => self.fail += 1,
            CheckStatus::Informational => self.info += 1,
            CheckStatus::Skipped => self.skipped += 1,
        }
    }
}

/// Result of executing a plan, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Vec<String>,
    pub counts: Counts,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.counts.fail == 0 {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn flags(e: &EmpiricalEstimate) -> Cell {
    if e.flags.is_empty() {
        Cell::Empty
    } else {
        e.flags.iter().map(|f| f.name()).collect::<Vec<_>>().join(";").into()
    }
}

/// Comparison of a Monte Carlo estimate against an exact value.
fn oracle_status(e: &EmpiricalEstimate, oracle: Option<f64>) -> Option<CheckStatus> {
    let o = oracle?;
    if e.exact {
        return None;
    }
    if !e.value.is_finite() || !o.is_finite() {
        return Some(if e.value == o { CheckStatus::Pass } else { CheckStatus::Skipped });
    }
    Some(CheckStatus::from_bool((e.value - o).abs() <= 3.0 * e.sigma()))
}

fn status_cell(s: Option<CheckStatus>) -> Cell {
    s.map_or(Cell::Empty, |s| s.label().into())
}

/// Execute a validated plan.
pub fn execute(plan: &Plan) -> Result<Outcome, RunError> {
    let mut counts = Counts::default();
    let mut summary = Vec::new();
    let mut tables = Vec::new();
    let (seed, replicas, route) = (plan.seed, plan.replicas, plan.route);
    match &plan.job {
        Job::Pressure { model, ns, lambdas } => {
            summary.push(format!("model: {}", model.describe()));
            let mut t = Table::new(
                "pressure",
                &[
                    "n", "lambda", "value", "std_error", "samples", "exact", "flags", "finite_oracle", "limit_oracle",
                    "oracle_check",
                ],
            );
            let points: Vec<Vec<f64>> = lambdas.iter().map(|l| vec![*l]).collect();
            for &n in ns {
                let ests = pressure_curve(model, n, &points, replicas, seed, route)?;
                for (l, e) in lambdas.iter().zip(&ests) {
                    let finite = model.pressure_finite(n, &[*l]).map_err(EstimatorError::from)?;
                    let limit = model.pressure_limit(&[*l]).map_err(EstimatorError::from)?;
                    let status = oracle_status(e, finite);
                    if let Some(s) = status {
                        counts.add(s);
                    }
                    t.push(vec![
                        n.into(),
                        (*l).into(),
                        e.value.into(),
                        e.std_error.into(),
                        e.samples.into(),
                        e.exact.into(),
                        flags(e),
                        finite.into(),
                        limit.into(),
                        status_cell(status),
                    ]);
                }
            }
            summary.push(format!("{} pressure rows", t.rows.len()));
            tables.push(t);
        }
        Job::Entropy { model, ns, xs, eps } => {
            summary.push(format!("model: {}", model.describe()));
            let mut t = Table::new(
                "entropy",
                &[
                    "n", "x", "eps", "value", "std_error", "samples", "hit_count", "exact", "flags", "finite_oracle",
                    "limit_oracle", "oracle_check",
                ],
            );
            let points: Vec<(Vec<f64>, f64)> =
                eps.iter().flat_map(|e| xs.iter().map(move |x| (vec![*x], *e))).collect();
            for &n in ns {
                let ests = entropy_curve(model, n, &points, replicas, seed, route)?;
                let volume = crate::lattice::LatticeBox::cube(model.dim(), n)
                    .map_err(EstimatorError::from)?
                    .len() as f64;
                for ((x, e), est) in points.iter().zip(&ests) {
                    let event = crate::convex::ConvexBody::ball(1, *e)?.centered_at(x)?;
                    let finite = model
                        .log_box_probability(n, &event)
                        .map_err(EstimatorError::from)?
                        .map(|lp| lp / volume);
                    let limit = model.entropy(x).map_err(EstimatorError::from)?;
                    let status = oracle_status(est, finite);
                    if let Some(s) = status {
                        counts.add(s);
                    }
                    t.push(vec![
                        n.into(),
                        x[0].into(),
                        (*e).into(),
                        est.value.into(),
                        est.std_error.into(),
                        est.samples.into(),
                        est.hit_count.into(),
                        est.exact.into(),
                        flags(est),
                        finite.into(),
                        limit.into(),
                        status_cell(status),
                    ]);
                }
            }
            summary.push(format!("{} entropy rows", t.rows.len()));
            tables.push(t);
        }
        Job::Conjugate {
            function,
            label,
            tolerance,
        } => {
            let dual = auto_dual_grid(function)?;
            let conj = legendre_transform(function, &dual)?;
            let bi = biconjugate(function)?;
            let gap = bi.gap(function);
            let mut c = Table::new("conjugate", &["slope", "value"]);
            for (node, v) in dual.nodes().zip(conj.values()) {
                c.push(vec![node[0].into(), (*v).into()]);
            }
            let mut b = Table::new("biconjugate", &["x", "f", "biconjugate", "difference"]);
            for ((node, f), g) in function.grid().nodes().zip(function.values()).zip(bi.biconjugate.values()) {
                b.push(vec![node[0].into(), (*f).into(), (*g).into(), (f - g).into()]);
            }
            summary.push(format!("function: {label}"));
            summary.push(format!("biconjugate gap sup|f** - f| = {}", format_float(gap)));
            summary.push(format!("grid tolerance for convex input = {}", format_float(bi.tolerance())));
            match tolerance {
                Some(tol) => {
                    let s = CheckStatus::from_bool(gap <= *tol);
                    counts.add(s);
                    summary.push(format!("gap <= tolerance {}: {}", format_float(*tol), s.label()));
                }
                None => counts.add(CheckStatus::Informational),
            }
            tables.push(c);
            tables.push(b);
        }
        Job::Duality { model, inputs } => {
            summary.push(format!("model: {}", model.describe()));
            let mut p = Table::new(
                "pressure",
                &[
                    "eps", "n", "lambda", "value", "std_error", "samples", "exact", "flags", "finite_oracle",
                    "limit_oracle",
                ],
            );
            let mut s = Table::new(
                "entropy",
                &[
                    "eps", "n", "x", "value", "std_error", "samples", "hit_count", "exact", "flags", "finite_oracle",
                    "limit_oracle",
                ],
            );
            let mut yf = Table::new(
                "young_fenchel",
                &[
                    "eps", "n", "x", "lambda", "pressure", "entropy", "lhs", "inner", "slack", "sigma",
                    "literal_margin", "tolerance", "status",
                ],
            );
            let mut cj = Table::new(
                "conjugate_gap",
                &["eps", "n", "gap_to_estimate", "nodes_compared", "gap_to_oracle", "limit_conjugate_gap"],
            );
            for input in inputs {
                let r = duality_check(model, input, seed)?;
                let eps = input.eps;
                for row in &r.pressure {
                    let e = &row.estimate;
                    p.push(vec![
                        eps.into(),
                        row.n.into(),
                        row.lambda[0].into(),
                        e.value.into(),
                        e.std_error.into(),
                        e.samples.into(),
                        e.exact.into(),
                        flags(e),
                        row.finite_oracle.into(),
                        row.limit_oracle.into(),
                    ]);
                }
                for row in &r.entropy {
                    let e = &row.estimate;
                    s.push(vec![
                        eps.into(),
                        row.n.into(),
                        row.x[0].into(),
                        e.value.into(),
                        e.std_error.into(),
                        e.samples.into(),
                        e.hit_count.into(),
                        e.exact.into(),
                        flags(e),
                        row.finite_oracle.into(),
                        row.limit_oracle.into(),
                    ]);
                }
                for row in &r.young_fenchel {
                    counts.add(row.status);
                    yf.push(vec![
                        eps.into(),
                        row.n.into(),
                        row.x[0].into(),
                        row.lambda[0].into(),
                        row.pressure.into(),
                        row.entropy.into(),
                        (row.pressure - row.entropy).into(),
                        row.inner.into(),
                        row.slack.into(),
                        row.sigma.into(),
                        row.literal_margin.into(),
                        row.tolerance.into(),
                        row.status.label().into(),
                    ]);
                }
                for row in &r.conjugate {
                    cj.push(vec![
                        eps.into(),
                        row.n.into(),
                        row.gap_to_estimate.into(),
                        row.nodes_compared.into(),
                        row.gap_to_oracle.into(),
                        r.limit_conjugate_gap.into(),
                    ]);
                }
                summary.push(format!(
                    "eps {}: {} Young-Fenchel failures, worst slack-free margin {}",
                    format_float(eps),
                    r.failures(),
                    format_float(r.worst_literal_margin())
                ));
            }
            tables.extend([p, s, yf, cj]);
        }
        Job::Decoupling {
            model,
            m,
            gap,
            first,
            second,
        } => {
            summary.push(format!("model: {}", model.describe()));
            let r = decoupling_check(model, *m, *gap, first, second, replicas, seed)?;
            counts.add(r.comparison.status);
            let mut t = Table::new(
                "decoupling",
                &[
                    "m", "gap", "separation", "samples", "p_a", "p_a_std_error", "p_b", "p_b_std_error", "p_ab",
                    "p_ab_std_error", "delta", "sigma", "cost", "cost_status", "lhs", "rhs", "tolerance", "status",
                    "flags",
                ],
            );
            let cost_status = match r.cost_status {
                crate::fields::DecouplingStatus::Exact => "exact",
                crate::fields::DecouplingStatus::Declared => "declared",
            };
            let c = &r.comparison;
            t.push(vec![
                r.m.into(),
                r.gap.into(),
                r.separation.into(),
                r.p_ab.samples.into(),
                r.p_a.value.into(),
                r.p_a.std_error.into(),
                r.p_b.value.into(),
                r.p_b.std_error.into(),
                r.p_ab.value.into(),
                r.p_ab.std_error.into(),
                r.delta.into(),
                r.sigma.into(),
                r.cost.into(),
                cost_status.into(),
                c.lhs.into(),
                c.rhs.into(),
                c.tolerance.into(),
                c.status.label().into(),
                r.flags.iter().map(|f| f.name()).collect::<Vec<_>>().join(";").into(),
            ]);
            summary.push(format!(
                "delta = {} +/- {} vs -c(m) = {}: {}",
                format_float(r.delta),
                format_float(r.sigma),
                format_float(-r.cost),
                c.status.label()
            ));
            tables.push(t);
        }
        Job::Subadditive { model, inputs } => {
            summary.push(format!("model: {}", model.describe()));
            let mut t = Table::new(
                "subadditive",
                &[
                    "eps", "m", "n", "gap", "cost", "rho", "rho_exact", "t", "alpha", "threshold_met", "lhs",
                    "lhs_std_error", "lhs_samples", "lhs_exact", "small_box", "small_box_std_error", "small_box_samples",
                    "small_box_exact", "rhs", "margin", "tolerance", "status",
                ],
            );
            for input in inputs {
                let r = subadditivity_check(model, input, replicas, seed, route)?;
                let c = &r.comparison;
                counts.add(c.status);
                t.push(vec![
                    r.eps.into(),
                    r.m.into(),
                    r.n.into(),
                    r.gap.into(),
                    r.cost.into(),
                    r.rho.into(),
                    r.rho_exact.clone().into(),
                    r.t.into(),
                    r.alpha.into(),
                    r.threshold_met.into(),
                    r.lhs.value.into(),
                    r.lhs.std_error.into(),
                    r.lhs.samples.into(),
                    r.lhs.exact.into(),
                    r.small_box.value.into(),
                    r.small_box.std_error.into(),
                    r.small_box.samples.into(),
                    r.small_box.exact.into(),
                    r.rhs.into(),
                    c.margin().into(),
                    c.tolerance.into(),
                    c.status.label().into(),
                ]);
            }
            tables.push(t);
        }
        Job::LocalControl { model, body, plan: lc } => {
            summary.push(format!("model: {}", model.describe()));
            let r = local_control_check(model, body, *lc, seed)?;
            let mut t = Table::new(
                "local_control",
                &["bin", "key", "count", "hits", "frequency", "sigma", "alpha", "t", "exact", "status"],
            );
            for b in &r.bins {
                counts.add(b.status);
                t.push(vec![
                    b.label.clone().into(),
                    b.key.into(),
                    b.count.into(),
                    b.hits.into(),
                    b.frequency.into(),
                    b.sigma.into(),
                    r.alpha.into(),
                    r.t.into(),
                    b.exact.into(),
                    b.status.label().into(),
                ]);
            }
            summary.push(format!(
                "t = {}, alpha = {}, min frequency {} in bin {}",
                format_float(r.t),
                format_float(r.alpha),
                format_float(r.min_frequency),
                r.worst_bin.as_deref().unwrap_or("-")
            ));
            tables.push(t);
        }
        Job::Fekete { kind, slope, n_max } => {
            let u = |n: usize| kind.eval(*slope, n);
            let r = fekete_limit(u, *n_max)?;
            let mut t = Table::new("fekete", &["n", "u", "ratio"]);
            for n in 1..=*n_max {
                t.push(vec![n.into(), u(n).into(), (u(n) / n as f64).into()]);
            }
            counts.add(CheckStatus::from_bool(r.is_subadditive()));
            summary.push(format!("sequence: {}(slope = {})", kind.name(), format_float(*slope)));
            summary.push(format!(
                "limit u(n)/n = inf u(n)/n = {} (attained at n = {})",
                format_float(r.inf_ratio),
                r.argmin
            ));
            summary.push(format!("u(n_max)/n_max = {}", format_float(r.tail_ratio)));
            match r.violation {
                None => summary.push(format!("subadditive on 1..={n_max}")),
                Some(v) => summary.push(format!(
                    "not subadditive: u({}) = {} > u({}) + u({}) = {}",
                    v.i + v.j,
                    format_float(v.lhs),
                    v.i,
                    v.j,
                    format_float(v.rhs)
                )),
            }
            tables.push(t);
        }
        Job::LargestTerm {
            rates,
            corrections,
            n_max,
        } => {
            let terms: Vec<Vec<f64>> = rates
                .iter()
                .zip(corrections)
                .map(|(a, c)| (1..=*n_max).map(|n| a + c / n as f64).collect())
                .collect();
            let r = largest_term(&terms)?;
            let mut t = Table::new("largest_term", &["n", "combined", "max_term", "gap_bound", "status"]);
            for row in &r.rows {
                let s = CheckStatus::from_bool(row.within_bounds(0.0));
                counts.add(s);
                t.push(vec![
                    row.n.into(),
                    row.combined.into(),
                    row.max_term.into(),
                    row.gap_bound.into(),
                    s.label().into(),
                ]);
            }
            summary.push(format!(
                "tail sup of combined = {}, per-sequence tail sups = [{}]",
                format_float(r.combined_limsup),
                r.per_sequence_limsup.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(", ")
            ));
            tables.push(t);
        }
    }
    Ok(Outcome {
        tables,
        summary,
        counts,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write tables, manifest and summary for a finished run.
pub fn persist(config: &ExperimentConfig, plan: &Plan, outcome: &Outcome, format: Format) -> Result<(), RunError> {
    let dir = &plan.out;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        let path = dir.join(format!("{}.{}", t.name, format.extension()));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        t.write(format, std::io::BufWriter::new(file)).map_err(io_err(&path))?;
        files.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    let c = outcome.counts;
    let mut summary = vec![
        format!("ldlab {} {}", env!("CARGO_PKG_VERSION"), plan.command.name()),
        format!("seed: {}", plan.seed),
        format!("replicas: {}", plan.replicas),
    ];
    summary.extend(outcome.summary.iter().cloned());
    summary.push(format!(
        "checks: {} pass, {} fail, {} info, {} skipped",
        c.pass, c.fail, c.info, c.skipped
    ));
    summary.push(format!("status: {}", if c.fail == 0 { "ok" } else { "FAILED" }));
    let path = dir.join("summary.txt");
    fs::write(&path, summary.join("\n") + "\n").map_err(io_err(&path))?;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "tool": "ldlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": plan.command.name(),
        "seed": plan.seed,
        "format": format.extension(),
        "config": config.table,
        "tables": files,
        "checks": {"pass": c.pass, "fail": c.fail, "info": c.info, "skipped": c.skipped},
        "timestamp_unix": timestamp,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(())
}

/// Validate, execute and persist; returns the exit status.
pub fn run(config: &ExperimentConfig, format: Format) -> Result<i32, RunError> {
    let plan = plan(config).map_err(RunError::Config)?;
    let outcome = execute(&plan)?;
    persist(config, &plan, &outcome, format)?;
    Ok(outcome.exit_code())
}

/// Convenience for tests and examples: the model a config describes.
pub fn model_of(plan: &Plan) -> Option<&FieldModel> {
    match &plan.job {
        Job::Pressure { model, .. }
        | Job::Entropy { model, .. }
        | Job::Duality { model, .. }
        | Job::Decoupling { model, .. }
        | Job::Subadditive { model, .. }
        | Job::LocalControl { model, .. } => Some(model),
        _ => None,
    }
}
