use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use crate::convex::{ConvexBody, Grid, GridFunction};
use crate::estimators::{DualityInput, LocalControlPlan, Route, SubadditivityInput};
use crate::fields::{Decoupling, DecouplingStatus, FieldModel, LocalControl, SiteLaw, DEFAULT_BURN_IN, DEFAULT_THINNING};

/// A problem with one config field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pressure,
    Entropy,
    Conjugate,
    CheckDuality,
    CheckDecoupling,
    CheckSubadditive,
    CheckLocalControl,
    FeketeDemo,
    LargestTermDemo,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Pressure,
        Command::Entropy,
        Command::Conjugate,
        Command::CheckDuality,
        Command::CheckDecoupling,
        Command::CheckSubadditive,
        Command::CheckLocalControl,
        Command::FeketeDemo,
        Command::LargestTermDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Entropy => "entropy",
            Command::Conjugate => "conjugate",
            Command::CheckDuality => "check-duality",
            Command::CheckDecoupling => "check-decoupling",
            Command::CheckSubadditive => "check-subadditive",
            Command::CheckLocalControl => "check-local-control",
            Command::FeketeDemo => "fekete-demo",
            Command::LargestTermDemo => "largest-term-demo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn needs_model(self) -> bool {
        !matches!(self, Command::Conjugate | Command::FeketeDemo | Command::LargestTermDemo)
    }
}

/// A parsed experiment file: one flat key/value document.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub table: Table,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            vec![Diagnostic {
                field: "<document>".into(),
                message: e.message().to_string(),
            }]
        })?;
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table() || v.as_array().is_some_and(|a| a.iter().any(|e| e.is_table()))) {
            return Err(vec![Diagnostic {
                field: k.clone(),
                message: "nested tables are not allowed; the config is flat".into(),
            }]);
        }
        Ok(Self { table })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.table.insert("seed".into(), Value::Integer(seed as i64));
    }

    pub fn set_out(&mut self, out: &str) {
        self.table.insert("out".into(), Value::String(out.into()));
    }

    pub fn set_command(&mut self, command: Command) {
        self.table.insert("command".into(), Value::String(command.name().into()));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    /// `u(n) = a·n`
    Linear,
    /// `u(n) = ⌈a·n⌉`
    Ceil,
    /// `u(n) = a·n + log(1 + n)`
    Log,
}

impl SequenceKind {
    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Linear => "linear",
            SequenceKind::Ceil => "ceil",
            SequenceKind::Log => "log",
        }
    }

    pub fn eval(self, slope: f64, n: usize) -> f64 {
        let n = n as f64;
        match self {
            SequenceKind::Linear => slope * n,
            SequenceKind::Ceil => (slope * n).ceil(),
            SequenceKind::Log => slope * n + (1.0 + n).ln(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Job {
    Pressure {
        model: FieldModel,
        ns: Vec<usize>,
        lambdas: Vec<f64>,
    },
    Entropy {
        model: FieldModel,
        ns: Vec<usize>,
        xs: Vec<f64>,
        eps: Vec<f64>,
    },
    Conjugate {
        function: GridFunction,
        label: String,
        tolerance: Option<f64>,
    },
    Duality {
        model: FieldModel,
        inputs: Vec<DualityInput>,
    },
    Decoupling {
        model: FieldModel,
        m: usize,
        gap: usize,
        first: ConvexBody,
        second: ConvexBody,
    },
    Subadditive {
        model: FieldModel,
        inputs: Vec<SubadditivityInput>,
    },
    LocalControl {
        model: FieldModel,
        body: ConvexBody,
        plan: LocalControlPlan,
    },
    Fekete {
        kind: SequenceKind,
        slope: f64,
        n_max: usize,
    },
    LargestTerm {
        rates: Vec<f64>,
        corrections: Vec<f64>,
        n_max: usize,
    },
}

/// Everything `run` needs, extracted from a valid config.
#[derive(Debug, Clone)]
pub struct Plan {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub replicas: usize,
    pub route: Route,
    pub job: Job,
}

struct Reader<'a> {
    table: &'a Table,
    diags: Vec<Diagnostic>,
}

impl<'a> Reader<'a> {
    fn error(&mut self, field: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            field: field.into(),
            message: message.into(),
        });
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Integer(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            other => {
                self.error(key, format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn req_num(&mut self, key: &str) -> Option<f64> {
        if !self.table.contains_key(key) {
            self.error(key, "required");
            return None;
        }
        self.num(key)
    }

    fn num_or(&mut self, key: &str, default: f64) -> Option<f64> {
        if self.table.contains_key(key) {
            self.num(key)
        } else {
            Some(default)
        }
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        match self.table.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                self.error(key, format!("expected a nonnegative integer, got {other}"));
                None
            }
        }
    }

    fn count_or(&mut self, key: &str, default: usize) -> Option<usize> {
        if self.table.contains_key(key) {
            self.count(key)
        } else {
            Some(default)
        }
    }

    fn req_count(&mut self, key: &str) -> Option<usize> {
        if !self.table.contains_key(key) {
            self.error(key, "required");
            return None;
        }
        self.count(key)
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.error(key, format!("expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn num_list(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.table.get(key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v {
                        Value::Integer(i) => out.push(*i as f64),
                        Value::Float(f) => out.push(*f),
                        other => {
                            self.error(key, format!("list entries must be numbers, got {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Value::Integer(i) => Some(vec![*i as f64]),
            Value::Float(f) => Some(vec![*f]),
            other => {
                self.error(key, format!("expected a number list, got {}", other.type_str()));
                None
            }
        }
    }

    fn count_list(&mut self, key: &str) -> Option<Vec<usize>> {
        let list = self.num_list(key)?;
        if list.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            self.error(key, format!("expected nonnegative integers, got {list:?}"));
            return None;
        }
        Some(list.into_iter().map(|v| v as usize).collect())
    }

    /// Nonempty ladder of positive sides.
    fn ladder(&mut self, key: &str) -> Option<Vec<usize>> {
        if !self.table.contains_key(key) {
            self.error(key, "required");
            return None;
        }
        let ladder = self.count_list(key)?;
        if ladder.is_empty() {
            self.error(key, "must be nonempty");
            None
        } else if ladder.contains(&0) {
            self.error(key, format!("entries must be ≥ 1, got {ladder:?}"));
            None
        } else {
            Some(ladder)
        }
    }

    /// A grid given either as `key = [..]` or `key_min`, `key_max`, `key_points`.
    fn grid_points(&mut self, key: &str) -> Option<Vec<f64>> {
        let (lo, hi, pts) = (format!("{key}_min"), format!("{key}_max"), format!("{key}_points"));
        if self.table.contains_key(key) {
            let list = self.num_list(key)?;
            if list.is_empty() {
                self.error(key, "must be nonempty");
                return None;
            }
            if list.iter().any(|v| !v.is_finite()) {
                self.error(key, "entries must be finite");
                return None;
            }
            return Some(list);
        }
        if !self.table.contains_key(&lo) && !self.table.contains_key(&hi) {
            self.error(key, format!("required (give `{key}` or `{lo}`/`{hi}`/`{pts}`)"));
            return None;
        }
        let (a, b, n) = (self.req_num(&lo), self.req_num(&hi), self.req_count(&pts));
        let (a, b, n) = (a?, b?, n?);
        if n < 2 || !(a < b) {
            self.error(&pts, format!("need {lo} < {hi} and at least 2 points, got {a}, {b}, {n}"));
            return None;
        }
        Some(crate::numeric::linspace(a, b, n))
    }

    /// Grid points that must be uniformly spaced (for conjugation).
    fn uniform_grid(&mut self, key: &str) -> Option<Grid> {
        let pts = self.grid_points(key)?;
        if pts.len() < 2 {
            self.error(key, "needs at least 2 points");
            return None;
        }
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        let uniform = crate::numeric::linspace(a, b, pts.len());
        if !(a < b) || pts.iter().zip(&uniform).any(|(p, u)| (p - u).abs() > 1e-9 * (b - a)) {
            self.error(key, "must be increasing and uniformly spaced");
            return None;
        }
        match Grid::uniform_1d(a, b, pts.len()) {
            Ok(g) => Some(g),
            Err(e) => {
                self.error(key, e.to_string());
                None
            }
        }
    }

    fn positive_list(&mut self, key: &str) -> Option<Vec<f64>> {
        if !self.table.contains_key(key) {
            self.error(key, "required");
            return None;
        }
        let list = self.num_list(key)?;
        if list.is_empty() {
            self.error(key, "must be nonempty");
            return None;
        }
        if let Some(bad) = list.iter().find(|v| !(**v > 0.0)) {
            self.error(key, format!("must be > 0, got {bad}"));
            return None;
        }
        Some(list)
    }

    fn model(&mut self) -> Option<FieldModel> {
        let Some(name) = self.text("model") else {
            if !self.table.contains_key("model") {
                self.error("model", "required");
            }
            return None;
        };
        let dim = self.count_or("dim", 1)?;
        let law = |r: &mut Self, law: SiteLaw| match FieldModel::iid(law, dim) {
            Ok(m) => Some(m),
            Err(e) => {
                r.error("model", e.to_string());
                None
            }
        };
        let built = match name.as_str() {
            "bernoulli" => {
                let p = self.req_num("p")?;
                law(self, SiteLaw::Bernoulli { p })?
            }
            "spin" => {
                let p = self.num_or("p", 0.5)?;
                law(self, SiteLaw::Spin { p })?
            }
            "gaussian" => {
                let (mean, var) = (self.num_or("mean", 0.0)?, self.num_or("var", 1.0)?);
                law(self, SiteLaw::Gaussian { mean, var })?
            }
            "uniform" => {
                let (a, b) = (self.req_num("a")?, self.req_num("b")?);
                law(self, SiteLaw::Uniform { a, b })?
            }
            "ising1d" => {
                let (beta, h) = (self.req_num("beta")?, self.num_or("h", 0.0)?);
                self.check_dim(dim, 1)?;
                self.build(FieldModel::ising1d(beta, h))?
            }
            "ising2d" => {
                let beta = self.req_num("beta")?;
                let burn_in = self.count_or("burn_in", DEFAULT_BURN_IN)?;
                let thinning = self.count_or("thinning", DEFAULT_THINNING)?;
                let padding = self.count_or("padding", 0)?;
                if self.table.contains_key("dim") {
                    self.check_dim(dim, 2)?;
                }
                self.build(FieldModel::ising2d(beta, burn_in, thinning))?.with_padding(padding)
            }
            "markov" => {
                self.check_dim(dim, 1)?;
                let state_dim = self.count_or("state_dim", 1)?;
                let flat = self.num_list("transition");
                let obs = self.num_list("observable");
                let (Some(flat), Some(obs)) = (flat, obs) else {
                    for key in ["transition", "observable"] {
                        if !self.table.contains_key(key) {
                            self.error(key, "required for the markov model");
                        }
                    }
                    return None;
                };
                let k = (flat.len() as f64).sqrt().round() as usize;
                if k * k != flat.len() || k == 0 {
                    self.error("transition", format!("needs k² entries, got {}", flat.len()));
                    return None;
                }
                if state_dim == 0 || obs.len() != k * state_dim {
                    self.error(
                        "observable",
                        format!("needs {k}·state_dim = {} entries, got {}", k * state_dim.max(1), obs.len()),
                    );
                    return None;
                }
                let rows = flat.chunks(k).map(<[f64]>::to_vec).collect();
                let obs = obs.chunks(state_dim).map(<[f64]>::to_vec).collect();
                self.build(FieldModel::markov(rows, obs))?
            }
            other => {
                self.error(
                    "model",
                    format!("unknown model `{other}` (bernoulli, spin, gaussian, uniform, ising1d, ising2d, markov)"),
                );
                return None;
            }
        };
        Some(built)
    }

    fn check_dim(&mut self, dim: usize, want: usize) -> Option<()> {
        if dim != want {
            self.error("dim", format!("this model lives on Z^{want}, got dim = {dim}"));
            return None;
        }
        Some(())
    }

    fn build(&mut self, m: Result<FieldModel, crate::fields::FieldError>) -> Option<FieldModel> {
        match m {
            Ok(m) => Some(m),
            Err(e) => {
                self.error("model", e.to_string());
                None
            }
        }
    }

    fn body(&mut self, field: &str, r: Result<ConvexBody, crate::convex::ConvexError>) -> Option<ConvexBody> {
        match r {
            Ok(b) => Some(b),
            Err(e) => {
                self.error(field, e.to_string());
                None
            }
        }
    }
}

/// Check a config; an empty list means it is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    plan(config).err().unwrap_or_default()
}

pub fn plan(config: &ExperimentConfig) -> Result<Plan, Vec<Diagnostic>> {
    let mut r = Reader {
        table: &config.table,
        diags: Vec::new(),
    };
    let seed = match config.table.get("seed") {
        None => {
            r.error("seed", "required");
            None
        }
        Some(Value::Integer(i)) => Some(*i as u64),
        Some(v) => {
            r.error("seed", format!("expected an integer, got {v}"));
            None
        }
    };
    let out = match r.text("out") {
        Some(o) if !o.is_empty() => Some(PathBuf::from(o)),
        Some(_) => {
            r.error("out", "must be a nonempty path");
            None
        }
        None => {
            if !config.table.contains_key("out") {
                r.error("out", "required (set `out` or pass --out)");
            }
            None
        }
    };
    let command = match r.text("command") {
        Some(c) => match Command::parse(&c) {
            Some(c) => Some(c),
            None => {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                r.error("command", format!("unknown command `{c}` (one of {})", names.join(", ")));
                None
            }
        },
        None => {
            if !config.table.contains_key("command") {
                r.error("command", "required");
            }
            None
        }
    };
    let replicas = r.count_or("replicas", 10_000);
    if replicas == Some(0) {
        r.error("replicas", "must be ≥ 1");
    }
    let route = match r.text("route").as_deref() {
        None | Some("auto") => Some(Route::Auto),
        Some("mc") => Some(Route::MonteCarlo),
        Some(other) => {
            r.error("route", format!("expected `auto` or `mc`, got `{other}`"));
            None
        }
    };

    let job = command.and_then(|c| job(&mut r, c, replicas.unwrap_or(0), route.unwrap_or_default()));
    if !r.diags.is_empty() {
        return Err(r.diags);
    }
    Ok(Plan {
        command: command.expect("checked"),
        seed: seed.expect("checked"),
        out: out.expect("checked"),
        replicas: replicas.expect("checked"),
        route: route.expect("checked"),
        job: job.expect("checked"),
    })
}

fn job(r: &mut Reader, command: Command, replicas: usize, route: Route) -> Option<Job> {
    let model = if command.needs_model() { r.model() } else { None };
    if let Some(m) = &model {
        if m.state_dim() != 1 && command != Command::CheckDecoupling {
            r.error("state_dim", "command-line grids are scalar; use state_dim = 1");
        }
    }
    match command {
        Command::Pressure => {
            let (ns, lambdas) = (r.ladder("n"), r.grid_points("lambda"));
            if replicas < 2 && route == Route::MonteCarlo {
                r.error("replicas", "pressure needs at least 2 replicas");
            }
            Some(Job::Pressure {
                model: model?,
                ns: ns?,
                lambdas: lambdas?,
            })
        }
        Command::Entropy => {
            let (ns, xs, eps) = (r.ladder("n"), r.grid_points("x"), r.positive_list("eps"));
            Some(Job::Entropy {
                model: model?,
                ns: ns?,
                xs: xs?,
                eps: eps?,
            })
        }
        Command::Conjugate => conjugate_job(r),
        Command::CheckDuality => {
            let (x_grid, lambda_grid) = (r.uniform_grid("x"), r.uniform_grid("lambda"));
            let (ns, eps) = (r.ladder("n"), r.positive_list("eps"));
            let (x_grid, lambda_grid, ns) = (x_grid?, lambda_grid?, ns?);
            let inputs = eps?
                .into_iter()
                .map(|e| DualityInput {
                    x_grid: x_grid.clone(),
                    lambda_grid: lambda_grid.clone(),
                    n_ladder: ns.clone(),
                    eps: e,
                    replicas,
                    route,
                })
                .collect();
            Some(Job::Duality { model: model?, inputs })
        }
        Command::CheckDecoupling => {
            let model = model?;
            let m = r.req_count("m");
            let gap = r.count_or("gap", 0);
            let radius = r.req_num("radius");
            let mean = model.mean().unwrap_or_else(|| vec![0.0; model.state_dim()]);
            let first_centre = r.num_list("center_a").unwrap_or_else(|| mean.clone());
            let second_centre = r.num_list("center_b").unwrap_or(mean);
            if m == Some(0) {
                r.error("m", "must be ≥ 1");
            }
            if replicas < 2 {
                r.error("replicas", "decoupling needs at least 2 replicas");
            }
            let radius = radius?;
            let ball = r.body("radius", ConvexBody::ball(model.state_dim(), radius))?;
            let first = r.body("center_a", ball.centered_at(&first_centre))?;
            let second = r.body("center_b", ball.centered_at(&second_centre))?;
            Some(Job::Decoupling {
                model,
                m: m?,
                gap: gap?,
                first,
                second,
            })
        }
        Command::CheckSubadditive => {
            let x = r.req_num("x");
            let radius = r.req_num("radius");
            let internal = r.num("internal_radius");
            let eps = r.positive_list("eps");
            let m = r.req_count("m");
            let ns = r.ladder("n");
            let gap = r.count("gap");
            let cost = r.num("cost");
            let t = r.num("t");
            let alpha = r.num("alpha");
            if t.is_some() != alpha.is_some() {
                r.error("alpha", "`t` and `alpha` must be declared together");
            }
            if let (Some(m), Some(ns)) = (m, &ns) {
                if let Some(bad) = ns.iter().find(|n| **n < m) {
                    r.error("n", format!("every n must be ≥ m = {m}, got {bad}"));
                }
                if m == 0 {
                    r.error("m", "must be ≥ 1");
                }
            }
            let model = model?;
            let (x, radius, eps, m, ns) = (x?, radius?, eps?, m?, ns?);
            let body = r.body("radius", ConvexBody::ball(1, radius))?;
            let internal = match internal {
                Some(b) if b > radius => {
                    r.error("internal_radius", format!("must be ≤ radius = {radius}, got {b}"));
                    return None;
                }
                Some(b) => Some(r.body("internal_radius", ConvexBody::ball(1, b))?),
                None => None,
            };
            let decoupling = (gap.is_some() || cost.is_some()).then(|| {
                let declared = model.decoupling(m);
                Decoupling {
                    gap: gap.unwrap_or(declared.gap),
                    cost: cost.unwrap_or(declared.cost),
                    status: DecouplingStatus::Declared,
                }
            });
            let local_control = t.zip(alpha).map(|(t, alpha)| LocalControl { t, alpha });
            let mut inputs = Vec::new();
            for &e in &eps {
                for &n in &ns {
                    inputs.push(SubadditivityInput {
                        x: vec![x],
                        body: body.clone(),
                        internal: internal.clone(),
                        eps: e,
                        m,
                        n,
                        decoupling,
                        local_control,
                    });
                }
            }
            Some(Job::Subadditive { model, inputs })
        }
        Command::CheckLocalControl => {
            let lo = r.num_or("body_lo", -0.5);
            let hi = r.num_or("body_hi", 1.5);
            let defaults = LocalControlPlan::default();
            let observations = r.count_or("observations", replicas);
            let side = r.count_or("side", defaults.side);
            let chains = r.count_or("chains", defaults.chains);
            let model = model?;
            let body = r.body("body_lo", ConvexBody::interval(lo?, hi?))?;
            let plan = LocalControlPlan {
                observations: observations?,
                side: side?,
                chains: chains?,
            };
            if plan.observations == 0 {
                r.error("observations", "must be ≥ 1");
            }
            match model.local_control(&body) {
                Ok(Some(_)) => {}
                Ok(None) => r.error("body_lo", "the model declares no local-control pair for this body"),
                Err(e) => r.error("body_lo", e.to_string()),
            }
            Some(Job::LocalControl { model, body, plan })
        }
        Command::FeketeDemo => {
            let kind = match r.text("sequence").as_deref() {
                Some("linear") => Some(SequenceKind::Linear),
                Some("ceil") => Some(SequenceKind::Ceil),
                Some("log") => Some(SequenceKind::Log),
                Some(other) => {
                    r.error("sequence", format!("expected linear, ceil or log, got `{other}`"));
                    None
                }
                None => {
                    r.error("sequence", "required");
                    None
                }
            };
            let slope = r.num_or("slope", 1.0);
            let n_max = r.count_or("n_max", 10_000);
            if slope.is_some_and(|s| !(s >= 0.0)) {
                r.error("slope", "must be ≥ 0 so that u(n) ≥ 0");
            }
            if n_max == Some(0) {
                r.error("n_max", "must be ≥ 1");
            }
            Some(Job::Fekete {
                kind: kind?,
                slope: slope?,
                n_max: n_max?,
            })
        }
        Command::LargestTermDemo => {
            let rates = r.num_list("rates");
            if !r.table.contains_key("rates") {
                r.error("rates", "required");
            }
            let corrections = r.num_list("corrections");
            let n_max = r.count_or("n_max", 1000);
            let rates = rates?;
            let corrections = corrections.unwrap_or_else(|| vec![0.0; rates.len()]);
            if rates.is_empty() {
                r.error("rates", "must be nonempty");
            }
            if corrections.len() != rates.len() {
                r.error("corrections", format!("needs {} entries, got {}", rates.len(), corrections.len()));
            }
            if n_max == Some(0) {
                r.error("n_max", "must be ≥ 1");
            }
            Some(Job::LargestTerm {
                rates,
                corrections,
                n_max: n_max?,
            })
        }
    }
}

fn conjugate_job(r: &mut Reader) -> Option<Job> {
    let tolerance = r.num("tolerance");
    if let Some(path) = r.text("input") {
        let parsed = std::fs::File::open(&path)
            .map_err(|e| e.to_string())
            .and_then(|f| GridFunction::read_csv(f).map_err(|e| e.to_string()));
        return match parsed {
            Ok(function) => Some(Job::Conjugate {
                function,
                label: path,
                tolerance,
            }),
            Err(e) => {
                r.error("input", format!("cannot read `{path}`: {e}"));
                None
            }
        };
    }
    let name = match r.text("function") {
        Some(n) => n,
        None => {
            r.error("function", "required (or give `input` as a CSV path)");
            return None;
        }
    };
    let f: fn(f64) -> f64 = match name.as_str() {
        "quadratic" => |x| 0.5 * x * x,
        "abs" => f64::abs,
        "double_well" => |x| (x * x - 1.0).powi(2),
        "bernoulli_entropy" => |x| crate::fields::relative_entropy(x, 0.5),
        other => {
            r.error(
                "function",
                format!("unknown function `{other}` (quadratic, abs, double_well, bernoulli_entropy)"),
            );
            return None;
        }
    };
    let grid = r.uniform_grid("x")?;
    match GridFunction::from_fn(grid, |x| f(x[0])) {
        Ok(function) => Some(Job::Conjugate {
            function,
            label: name,
            tolerance,
        }),
        Err(e) => {
            r.error("function", e.to_string());
            None
        }
    }
}
