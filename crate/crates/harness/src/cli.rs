//! Command-line front end: `run`, `compare`, `gradcheck` and `trace`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use soaa::problems::gradcheck;
use soaa::{ParamGroup, Soaa, SoaaConfig};

use crate::compare::{run_compare, write_outputs};
use crate::error::{HarnessError, Result};
use crate::spec::{BenchConfig, OptimizerSpec, ProblemSpec, GRADCHECK_POINTS, GRADCHECK_TOLERANCE};

const DEFAULT_COMPARE_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "soaa-bench", version, about = "Benchmark SOAA against Adam and AdamW")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one optimizer over a list of seeds.
    Run(RunArgs),
    /// Run several optimizers on one problem with shared seeds.
    Compare(RunArgs),
    /// Check a problem's analytic gradient against central differences.
    Gradcheck(GradcheckArgs),
    /// Print every intermediate value of SOAA steps.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// quadratic, rosenbrock, logistic_regression or tiny_mlp.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long = "cond")]
    condition_number: Option<f64>,
    #[arg(long = "samples")]
    n_samples: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
}

impl ProblemArgs {
    fn apply(&self, base: Option<ProblemSpec>) -> ProblemSpec {
        let mut spec = match (&self.problem, base) {
            (Some(name), Some(b)) if &b.name == name => b,
            (Some(name), _) => ProblemSpec::named(name),
            (None, Some(b)) => b,
            (None, None) => ProblemSpec::named("quadratic"),
        };
        spec.dim = self.dim.or(spec.dim);
        spec.condition_number = self.condition_number.or(spec.condition_number);
        spec.n_samples = self.n_samples.or(spec.n_samples);
        spec.hidden = self.hidden.or(spec.hidden);
        spec.data_seed = self.data_seed.or(spec.data_seed);
        spec
    }
}

#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    total_steps: Option<u64>,
}

impl HyperArgs {
    fn apply(&self, spec: &mut OptimizerSpec) {
        spec.lr = self.lr.or(spec.lr);
        spec.beta1 = self.beta1.or(spec.beta1);
        spec.beta2 = self.beta2.or(spec.beta2);
        spec.gamma = self.gamma.or(spec.gamma);
        spec.eps = self.eps.or(spec.eps);
        spec.weight_decay = self.weight_decay.or(spec.weight_decay);
        spec.total_steps = self.total_steps.or(spec.total_steps);
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON benchmark config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Optimizer name(s), comma separated: soaa, adam, adamw.
    #[arg(long, value_delimiter = ',')]
    optimizer: Vec<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

impl RunArgs {
    fn bench_config(&self) -> Result<BenchConfig> {
        let mut cfg = match &self.config {
            Some(path) => BenchConfig::load(path)?,
            None => BenchConfig::default(),
        };
        cfg.problem = Some(self.problem.apply(cfg.problem.take()));
        if !self.optimizer.is_empty() {
            cfg.optimizers = self
                .optimizer
                .iter()
                .map(|name| {
                    cfg.optimizers
                        .iter()
                        .find(|o| &o.name == name)
                        .cloned()
                        .unwrap_or_else(|| OptimizerSpec::named(name))
                })
                .collect();
        }
        if cfg.optimizers.is_empty() {
            cfg.optimizers.push(OptimizerSpec::named("soaa"));
        }
        for o in &mut cfg.optimizers {
            self.hyper.apply(o);
        }
        cfg.steps = self.steps.or(cfg.steps);
        if !self.seeds.is_empty() {
            cfg.seeds = Some(self.seeds.clone());
        }
        cfg.checkpoint_every = self.checkpoint_every.or(cfg.checkpoint_every);
        cfg.out = self.out.clone().or(cfg.out);
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Number of seeded starting points to probe.
    #[arg(long, default_value_t = GRADCHECK_POINTS)]
    points: u64,
    #[arg(long, default_value_t = soaa::problems::DEFAULT_STEP)]
    h: f64,
    #[arg(long, default_value_t = GRADCHECK_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    steps: u64,
    /// Starting point, comma separated. Defaults to all ones.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "seed")]
    theta: Vec<f64>,
    /// Start from the problem's seeded initial point instead.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    hyper: HyperArgs,
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out`. Returns the process exit code.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = e.print();
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run(args) => {
            let cfg = args.bench_config()?;
            if cfg.optimizers.len() != 1 {
                return Err(HarnessError::Config(format!(
                    "run takes exactly one optimizer, got {}; use compare",
                    cfg.optimizers.len()
                )));
            }
            bench(cfg, out)
        }
        Command::Compare(args) => {
            let mut cfg = args.bench_config()?;
            cfg.out.get_or_insert_with(|| DEFAULT_COMPARE_OUT.into());
            bench(cfg, out)
        }
        Command::Gradcheck(args) => gradcheck_cmd(&args, out),
        Command::Trace(args) => trace_cmd(&args, out),
    }
}

fn io_err(e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn bench(cfg: BenchConfig, out: &mut dyn Write) -> Result<i32> {
    let specs = cfg.run_specs()?;
    let outcome = run_compare(&specs)?;
    let first = &specs[0];
    writeln!(
        out,
        "{}: {} steps, seeds {:?}",
        first.problem.name, first.steps, first.seeds
    )
    .map_err(io_err)?;
    write!(out, "{}", outcome.table.render()).map_err(io_err)?;
    for s in &outcome.summaries {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
        writeln!(
            out,
            "{}: final loss {} ± {}, diverged {}/{}",
            s.optimizer,
            fmt(s.final_mean),
            fmt(s.final_std),
            s.diverged,
            s.runs
        )
        .map_err(io_err)?;
    }
    if let Some(dir) = &cfg.out {
        let files = write_outputs(dir, &outcome)?;
        writeln!(
            out,
            "wrote {} trajectories, {} and {}",
            files.trajectories.len(),
            files.summary.display(),
            files.comparison.display()
        )
        .map_err(io_err)?;
    }
    Ok(0)
}

fn gradcheck_cmd(args: &GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = args.problem.apply(None);
    let problem = spec.build()?;
    let mut worst = 0.0f64;
    for seed in 0..args.points {
        let theta = problem.initial_point(seed);
        let r = gradcheck(problem.as_ref(), &theta, args.h)?;
        writeln!(
            out,
            "seed {seed}: max error {:.3e} at coordinate {}",
            r.max_error, r.coordinate
        )
        .map_err(io_err)?;
        worst = worst.max(r.max_error);
    }
    let pass = worst < args.tolerance;
    writeln!(
        out,
        "{} (dim {}): worst {worst:.3e}, tolerance {:e}: {}",
        problem.name(),
        problem.dim(),
        args.tolerance,
        if pass { "PASS" } else { "FAIL" }
    )
    .map_err(io_err)?;
    Ok(if pass { 0 } else { 1 })
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn trace_cmd(args: &TraceArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = args.problem.apply(None);
    if spec.name == "quadratic" && spec.dim.is_none() {
        spec.dim = Some(1);
    }
    let problem = spec.build()?;
    let theta = if !args.theta.is_empty() {
        args.theta.clone()
    } else if let Some(seed) = args.seed {
        problem.initial_point(seed)
    } else {
        vec![1.0; problem.dim()]
    };
    if theta.len() != problem.dim() {
        return Err(HarnessError::Config(format!(
            "--theta has {} values, problem has dim {}",
            theta.len(),
            problem.dim()
        )));
    }

    let mut opt_spec = OptimizerSpec::named("soaa");
    args.hyper.apply(&mut opt_spec);
    let config = opt_spec.soaa_config(SoaaConfig::default().total_steps);
    let mut groups = vec![ParamGroup::new(theta)];
    let mut opt = Soaa::new(config, &groups)?;

    let w = |out: &mut dyn Write, key: &str, val: String| {
        writeln!(out, "  {key:<12}{val}").map_err(io_err)
    };
    for _ in 0..args.steps {
        let (loss, grad) = problem.loss_and_grad(&groups[0].theta);
        let before = groups[0].theta.clone();
        let tr = opt.step_traced(&mut groups, &[&grad], Some(loss))?;
        let g = &tr.groups[0];
        writeln!(out, "step {}", tr.t).map_err(io_err)?;
        w(out, "theta", fmt_vec(&before))?;
        w(out, "grad", fmt_vec(&grad))?;
        w(out, "loss", loss.to_string())?;
        w(out, "m", fmt_vec(opt.state().m(0)))?;
        w(out, "s", fmt_vec(opt.state().s(0)))?;
        w(out, "m_hat", fmt_vec(&g.m_hat))?;
        w(out, "s_hat", fmt_vec(&g.s_hat))?;
        w(out, "fisher_c", g.fisher_coefficient.to_string())?;
        w(out, "fisher", fmt_vec(&g.fisher))?;
        w(out, "trust_scale", fmt_vec(&g.trust_scale))?;
        w(out, "g_adj", fmt_vec(&g.adjusted))?;
        w(out, "theta_new", fmt_vec(&groups[0].theta))?;
        w(out, "l_hat", tr.l_hat.map_or("-".into(), |x| x.to_string()))?;
        w(out, "dt", tr.dt.to_string())?;
        w(out, "pr", tr.pr.to_string())?;
    }
    Ok(0)
}
