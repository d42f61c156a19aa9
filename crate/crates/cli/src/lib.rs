//! `qfisher` command line: scenarios, estimation studies and parameter sweeps.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use qfisher::estimation::{bootstrap_variance, discrete_sample, BayesEstimator, Prior};
use qfisher::scenarios::{self, EstimatorKind, Params, ScenarioReport, ScenarioSpec, Settings, PHASE_PRIOR};
use qfisher::statmodel::Outcomes;

pub mod output;

use output::{fmt_num, Cell, Document, Format};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] qfisher::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Bayes,
    Mle,
}

impl Estimator {
    fn name(self) -> &'static str {
        match self {
            Estimator::Bayes => "bayes",
            Estimator::Mle => "mle",
        }
    }

    fn kind(self) -> EstimatorKind {
        match self {
            Estimator::Bayes => EstimatorKind::Bayes,
            Estimator::Mle => EstimatorKind::Mle,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qfisher", version, about = "Fisher information and estimation studies for optical interferometry")]
pub struct Cli {
    /// Master seed for every random draw
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Photon-number cutoff per mode (scenarios with a truncated Fock space)
    #[arg(long, global = true)]
    nmax: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value configuration file; lines may carry a leading `# `, so an emitted CSV can be replayed
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List scenarios and their parameters
    List,
    /// Evaluate one scenario against its closed-form targets
    Scenario {
        /// Scenario name followed by name=value parameters
        args: Vec<String>,
    },
    /// Repeated-experiment study of estimator variance against the Cramér-Rao bound
    Study {
        args: Vec<String>,
        /// Sample sizes, comma separated
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Repetitions per sample size
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_enum)]
        estimator: Option<Estimator>,
        /// Dump the posterior of one sample of this size instead of the study table
        #[arg(long)]
        posterior: Option<usize>,
        /// Add a bootstrap variance column with this many resamples
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Evaluate a scenario on a uniform grid of one parameter
    Sweep {
        args: Vec<String>,
        /// Swept parameter
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub scenario: Option<String>,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub nmax: Option<usize>,
    pub format: Format,
    pub m: Vec<usize>,
    pub reps: usize,
    pub estimator: Estimator,
    pub posterior: Option<usize>,
    pub bootstrap: Option<usize>,
    pub sweep: Option<(String, f64, f64, usize)>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_M: [usize; 6] = [10, 30, 100, 300, 1000, 3000];
pub const DEFAULT_REPS: usize = 100;

/// Flat key=value pairs. Blank lines, CSV rows (no `=`), `# note:` lines
/// and the version line are skipped; a leading `# ` is stripped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        let line = line.strip_prefix('#').map(str::trim).unwrap_or(line);
        if line.is_empty() || line.starts_with("note:") {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else { continue };
        if k.contains(',') || k.contains(' ') {
            continue;
        }
        if k == "version" {
            continue;
        }
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| usage(format!("{key}: '{v}' is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| usage(format!("{key}: '{v}' is not a non-negative integer")))
}

type Assignments = Vec<(String, f64)>;

fn split_args(args: &[String]) -> Result<(Option<String>, Assignments)> {
    let mut name = None;
    let mut params = Vec::new();
    for a in args {
        match a.split_once('=') {
            Some((k, v)) => params.push((k.to_string(), parse_f64(k, v)?)),
            None if name.is_none() => name = Some(a.clone()),
            None => return Err(usage(format!("unexpected argument '{a}'"))),
        }
    }
    Ok((name, params))
}

fn lookup(name: &str) -> Result<&'static ScenarioSpec> {
    scenarios::find(name).ok_or_else(|| {
        let known: Vec<&str> = scenarios::SCENARIOS.iter().map(|s| s.name).collect();
        usage(format!("unknown scenario '{name}' (known: {})", known.join(", ")))
    })
}

impl RunConfig {
    /// Defaults ← config file ← command line.
    fn resolve(cli: &Cli, file: &[(String, String)]) -> Result<Self> {
        let command = match &cli.command {
            Command::List => "list",
            Command::Scenario { .. } => "scenario",
            Command::Study { .. } => "study",
            Command::Sweep { .. } => "sweep",
        };
        let mut c = RunConfig {
            command: command.to_string(),
            scenario: None,
            params: Vec::new(),
            seed: DEFAULT_SEED,
            nmax: None,
            format: Format::Table,
            m: DEFAULT_M.to_vec(),
            reps: DEFAULT_REPS,
            estimator: Estimator::Bayes,
            posterior: None,
            bootstrap: None,
            sweep: None,
        };
        let mut sweep: (Option<String>, Option<f64>, Option<f64>, Option<usize>) = (None, None, None, None);
        for (k, v) in file {
            match k.as_str() {
                "command" if v != command => {
                    return Err(usage(format!("config was written by '{v}', not '{command}'")))
                }
                "command" => {}
                "scenario" => c.scenario = Some(v.clone()),
                "seed" => c.seed = v.parse().map_err(|_| usage(format!("seed: '{v}' is not an integer")))?,
                "nmax" => c.nmax = Some(parse_usize(k, v)?),
                "format" => c.format = Format::parse(v).ok_or_else(|| usage(format!("unknown format '{v}'")))?,
                "m" => c.m = v.split(',').map(|x| parse_usize(k, x.trim())).collect::<Result<_>>()?,
                "reps" => c.reps = parse_usize(k, v)?,
                "estimator" => {
                    c.estimator = Estimator::from_str(v, false).map_err(|_| usage(format!("unknown estimator '{v}'")))?
                }
                "posterior" => c.posterior = Some(parse_usize(k, v)?),
                "bootstrap" => c.bootstrap = Some(parse_usize(k, v)?),
                "sweep.param" => sweep.0 = Some(v.clone()),
                "sweep.from" => sweep.1 = Some(parse_f64(k, v)?),
                "sweep.to" => sweep.2 = Some(parse_f64(k, v)?),
                "sweep.steps" => sweep.3 = Some(parse_usize(k, v)?),
                _ => match k.strip_prefix("param.") {
                    Some(p) => c.params.push((p.to_string(), parse_f64(k, v)?)),
                    None => return Err(usage(format!("unknown configuration key '{k}'"))),
                },
            }
        }
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if cli.nmax.is_some() {
            c.nmax = cli.nmax;
        }
        if let Some(f) = cli.format {
            c.format = f;
        }
        let args = match &cli.command {
            Command::List => Vec::new(),
            Command::Scenario { args } => args.clone(),
            Command::Study {
                args,
                m,
                reps,
                estimator,
                posterior,
                bootstrap,
            } => {
                if !m.is_empty() {
                    c.m = m.clone();
                }
                c.reps = reps.unwrap_or(c.reps);
                c.estimator = estimator.unwrap_or(c.estimator);
                c.posterior = posterior.or(c.posterior);
                c.bootstrap = bootstrap.or(c.bootstrap);
                args.clone()
            }
            Command::Sweep {
                args,
                param,
                from,
                to,
                steps,
            } => {
                sweep = (
                    param.clone().or(sweep.0),
                    from.or(sweep.1),
                    to.or(sweep.2),
                    steps.or(sweep.3),
                );
                args.clone()
            }
        };
        let (name, params) = split_args(&args)?;
        if name.is_some() {
            c.scenario = name;
        }
        c.params.extend(params);
        if command == "sweep" {
            match sweep {
                (Some(p), Some(a), Some(b), Some(n)) => c.sweep = Some((p, a, b, n)),
                _ => return Err(usage("sweep needs --param, --from, --to and --steps")),
            }
        }
        Ok(c)
    }

    fn spec(&self) -> Result<&'static ScenarioSpec> {
        lookup(self.scenario.as_deref().ok_or_else(|| usage("no scenario given"))?)
    }

    /// Scenario defaults overridden by the assignments; unknown names are rejected.
    fn scenario_params(&self, spec: &ScenarioSpec) -> Result<Params> {
        spec.params_from(self.params.iter().map(|(k, v)| (k.as_str(), *v)))
            .map_err(|e| {
                let known: Vec<&str> = spec.params.iter().map(|p| p.name).collect();
                usage(format!("{e} for scenario '{}' (known: {})", spec.name, known.join(", ")))
            })
    }

    fn settings(&self) -> Settings {
        Settings {
            nmax: self.nmax,
            seed: self.seed,
        }
    }

    /// Metadata header: everything needed to regenerate the output.
    fn meta(&self, params: Option<&Params>) -> Vec<(String, String)> {
        let mut m = vec![
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), self.command.clone()),
        ];
        if let Some(s) = &self.scenario {
            m.push(("scenario".into(), s.clone()));
        }
        if let Some(p) = params {
            // Shortest round-trip form, so a replay sees identical inputs.
            for (k, v) in p.iter() {
                m.push((format!("param.{k}"), format!("{v:?}")));
            }
        }
        m.push(("seed".into(), self.seed.to_string()));
        if let Some(n) = self.nmax {
            m.push(("nmax".into(), n.to_string()));
        }
        if self.command == "study" {
            let ms: Vec<String> = self.m.iter().map(usize::to_string).collect();
            m.push(("m".into(), ms.join(",")));
            m.push(("reps".into(), self.reps.to_string()));
            m.push(("estimator".into(), self.estimator.name().into()));
            if let Some(p) = self.posterior {
                m.push(("posterior".into(), p.to_string()));
            }
            if let Some(b) = self.bootstrap {
                m.push(("bootstrap".into(), b.to_string()));
            }
        }
        if let Some((p, a, b, n)) = &self.sweep {
            m.push(("sweep.param".into(), p.clone()));
            m.push(("sweep.from".into(), format!("{a:?}")));
            m.push(("sweep.to".into(), format!("{b:?}")));
            m.push(("sweep.steps".into(), n.to_string()));
        }
        m.push(("format".into(), self.format.name().into()));
        m
    }
}

/// Outcome of a command: rendered document plus exit status.
struct Outcome {
    doc: Document,
    status: i32,
}

fn report_rows(rep: &ScenarioReport) -> (Vec<String>, Vec<Vec<Cell>>) {
    let columns = ["name", "value", "target", "tolerance", "delta", "status", "source"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
    let rows = rep
        .entries
        .iter()
        .map(|e| {
            let status = if e.exploratory {
                "explore"
            } else if e.passed() {
                "ok"
            } else {
                "FAIL"
            };
            let target = match (e.target, e.relation) {
                (Some(t), scenarios::Relation::AtLeast) => Cell::Text(format!(">= {}", fmt_num(t))),
                (Some(t), scenarios::Relation::AtMost) => Cell::Text(format!("<= {}", fmt_num(t))),
                (t, _) => opt(t),
            };
            vec![
                Cell::Text(e.name.clone()),
                Cell::Num(e.value),
                target,
                opt(e.tolerance),
                opt(e.delta()),
                Cell::Text(status.into()),
                e.source.clone().map_or(Cell::Empty, Cell::Text),
            ]
        })
        .collect();
    (columns, rows)
}

fn cmd_list(cfg: &RunConfig) -> Outcome {
    let mut doc = Document {
        meta: vec![("version".into(), VERSION.into()), ("command".into(), "list".into())],
        columns: ["scenario", "parameter", "default", "study", "description"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ..Default::default()
    };
    let _ = cfg;
    for s in scenarios::SCENARIOS {
        doc.rows.push(vec![
            Cell::Text(s.name.into()),
            Cell::Empty,
            Cell::Empty,
            Cell::Text(if s.discrete { "yes" } else { "no" }.into()),
            Cell::Text(s.summary.into()),
        ]);
        for p in s.params {
            doc.rows.push(vec![
                Cell::Empty,
                Cell::Text(p.name.into()),
                Cell::Num(p.default),
                Cell::Empty,
                Cell::Text(p.help.into()),
            ]);
        }
    }
    Outcome { doc, status: 0 }
}

fn cmd_scenario(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let params = cfg.scenario_params(spec)?;
    let rep = spec.run(&params, &cfg.settings())?;
    let (columns, rows) = report_rows(&rep);
    let status = if rep.passed() { 0 } else { 1 };
    Ok(Outcome {
        doc: Document {
            meta: cfg.meta(Some(&params)),
            columns,
            rows,
            notes: rep.notes.clone(),
        },
        status,
    })
}

fn cmd_study(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    if !spec.discrete {
        return Err(usage(format!("scenario '{}' has no discrete outcome model to study", spec.name)));
    }
    let params = cfg.scenario_params(spec)?;
    let phi = params.get("phi")?;
    let meta = cfg.meta(Some(&params));
    if let Some(m) = cfg.posterior {
        let family = scenarios::scenario_family(spec.name, &params)?;
        let prior = Prior::flat(PHASE_PRIOR.0, PHASE_PRIOR.1)?;
        let sample = discrete_sample(&family, phi, m, cfg.seed)?;
        let Outcomes::Discrete(out) = &sample.outcomes else { unreachable!("discrete family") };
        let counts = qfisher::statmodel::counts(out, family.n_outcomes())?;
        let b = BayesEstimator::new(&family, &prior)?.posterior(&counts)?;
        let mut notes = vec![format!(
            "posterior mean {}, variance {}",
            fmt_num(b.estimate),
            fmt_num(b.variance)
        )];
        if b.edge {
            notes.push("posterior mass piles up at the edge of the prior support".into());
        }
        let rows = b
            .posterior
            .grid
            .iter()
            .zip(b.posterior.density())
            .map(|(x, d)| vec![Cell::Num(*x), Cell::Num(d)])
            .collect();
        return Ok(Outcome {
            doc: Document {
                meta,
                columns: vec!["phi".into(), "density".into()],
                rows,
                notes,
            },
            status: 0,
        });
    }
    if cfg.m.is_empty() || cfg.m.contains(&0) {
        return Err(usage("--m needs positive sample sizes"));
    }
    let table = scenarios::run_estimation_demo(spec.name, &params, &cfg.m, cfg.reps, cfg.estimator.kind(), cfg.seed)?;
    let mut columns: Vec<String> = ["m", "reps", "mean_estimate", "variance", "crb", "ratio", "p_value", "fisher"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if cfg.bootstrap.is_some() {
        columns.push("bootstrap_variance".into());
    }
    let family = scenarios::scenario_family(spec.name, &params)?;
    let prior = Prior::flat(PHASE_PRIOR.0, PHASE_PRIOR.1)?;
    let est = scenarios::make_estimator(cfg.estimator.kind(), &family, prior)?;
    let mut rows = Vec::new();
    for r in &table.rows {
        let mut row = vec![
            Cell::Num(r.m as f64),
            Cell::Num(r.repetitions as f64),
            Cell::Num(r.mean_estimate),
            Cell::Num(r.variance),
            Cell::Num(r.crb),
            Cell::Num(r.ratio),
            Cell::Num(r.p_value),
            Cell::Num(table.fisher),
        ];
        if let Some(b) = cfg.bootstrap {
            let sample = discrete_sample(&family, phi, r.m, cfg.seed)?;
            let Outcomes::Discrete(out) = &sample.outcomes else { unreachable!("discrete family") };
            row.push(Cell::Num(bootstrap_variance(out, family.n_outcomes(), est.as_ref(), b, cfg.seed)?));
        }
        rows.push(row);
    }
    let mut notes = Vec::new();
    if table.fisher == 0.0 {
        notes.push("Fisher information vanishes at this phase: the Cramér-Rao bound is infinite".into());
    }
    Ok(Outcome {
        doc: Document {
            meta,
            columns,
            rows,
            notes,
        },
        status: 0,
    })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (name, from, to, steps) = cfg.sweep.clone().expect("resolved");
    if !spec.params.iter().any(|p| p.name == name) {
        return Err(usage(format!("'{}' has no parameter '{name}'", spec.name)));
    }
    if steps < 2 || !(from.is_finite() && to.is_finite()) || from == to {
        return Err(usage("sweep range is degenerate: need from ≠ to and at least 2 steps"));
    }
    if cfg.params.iter().any(|(k, _)| *k == name) {
        return Err(usage(format!("'{name}' is swept and cannot also be assigned")));
    }
    let base = cfg.scenario_params(spec)?;
    let mut columns: Vec<String> = vec![name.clone()];
    let mut reports = Vec::with_capacity(steps);
    for i in 0..steps {
        let x = from + (to - from) * i as f64 / (steps - 1) as f64;
        let mut p = base.clone();
        p.set(&name, x)?;
        let rep = spec.run(&p, &cfg.settings())?;
        for e in &rep.entries {
            if !columns.contains(&e.name) {
                columns.push(e.name.clone());
            }
        }
        reports.push((x, rep));
    }
    columns.push("pass".into());
    let mut status = 0;
    let rows = reports
        .iter()
        .map(|(x, rep)| {
            if !rep.passed() {
                status = 1;
            }
            let mut row = vec![Cell::Num(*x)];
            for c in &columns[1..columns.len() - 1] {
                row.push(rep.value(c).map_or(Cell::Empty, Cell::Num));
            }
            row.push(Cell::Text(if rep.passed() { "yes" } else { "no" }.into()));
            row
        })
        .collect();
    Ok(Outcome {
        doc: Document {
            meta: cfg.meta(Some(&base)),
            columns,
            rows,
            notes: Vec::new(),
        },
        status,
    })
}

fn execute(cli: &Cli) -> Result<(String, i32)> {
    let file = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let cfg = RunConfig::resolve(cli, &file)?;
    let outcome = match &cli.command {
        Command::List => cmd_list(&cfg),
        Command::Scenario { .. } => cmd_scenario(&cfg)?,
        Command::Study { .. } => cmd_study(&cfg)?,
        Command::Sweep { .. } => cmd_sweep(&cfg)?,
    };
    Ok((outcome.doc.render(cfg.format), outcome.status))
}

/// Runs the command line `args` (program name first); returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, status)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text),
                None => out.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => status,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, CliError::Usage(_)) {
                let _ = writeln!(err, "\nRun `qfisher --help` or `qfisher list` for usage.");
            }
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parser_skips_data_and_notes() {
        let text = "# version=0.1.0\n# command=study\n# note: a=b\nm,variance\n10,0.1\n# param.t=0.5\n";
        let c = parse_config(text).unwrap();
        assert_eq!(
            c,
            vec![("command".to_string(), "study".to_string()), ("param.t".to_string(), "0.5".to_string())]
        );
    }

    #[test]
    fn split_positional() {
        let (n, p) = split_args(&["noon-lossy".into(), "N=3".into()]).unwrap();
        assert_eq!(n.as_deref(), Some("noon-lossy"));
        assert_eq!(p, vec![("N".to_string(), 3.0)]);
        assert!(split_args(&["a".into(), "b".into()]).is_err());
        assert!(split_args(&["t=x".into()]).is_err());
    }
}
