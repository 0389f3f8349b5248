//! `kinmix`: runs scenarios, samples exact Riemann solutions and drives
//! convergence studies.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kinmix_core::driver::with_threads;
use kinmix_core::{
    convergence_study, run, ConvergenceKind, Integrator, Operator, RiemannSolution, RiemannState, RunOptions,
    Scenario, ScenarioName,
};

#[derive(Parser, Debug)]
#[command(name = "kinmix", version, about = "Discrete-velocity ES-BGK solver for gas mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write snapshots and diagnostics.
    Run(RunArgs),
    /// Sample the exact Euler Riemann solution as CSV.
    Riemann(RiemannArgs),
    /// Time or space-time self-convergence study.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
struct Overrides {
    /// Knudsen number.
    #[arg(long)]
    eps: Option<f64>,
    /// ES-BGK parameter; 0 gives BGK.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_parser = ["imex1", "ars233"])]
    integrator: Option<String>,
    /// TOML file merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-key override, e.g. `space.cells=[100]`; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    scenario: ScenarioName,
    /// `m₂ / m₁` for the relaxation and sod presets.
    #[arg(long)]
    mass_ratio: Option<f64>,
    /// Collision operator of the decay_comparison preset.
    #[arg(long, value_parser = ["esbgk", "bgk"])]
    operator: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct RiemannArgs {
    #[arg(long, default_value_t = 1.4)]
    gamma: f64,
    /// Left state `rho,u,p`.
    #[arg(long, value_parser = parse_state)]
    left: RiemannState,
    /// Right state `rho,u,p`.
    #[arg(long, value_parser = parse_state)]
    right: RiemannState,
    #[arg(long)]
    time: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    /// Initial discontinuity position.
    #[arg(long, default_value_t = 0.5)]
    interface: f64,
    /// CSV destination; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long)]
    kind: ConvergenceKind,
    #[arg(long, default_value_t = 4)]
    refinements: usize,
    #[command(flatten)]
    overrides: Overrides,
    /// CSV destination for the error table.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn parse_state(s: &str) -> std::result::Result<RiemannState, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [rho, u, p] => Ok(RiemannState::new(rho, u, p)),
        _ => Err(format!("expected rho,u,p, got {} values", v.len())),
    }
}

fn apply_overrides(s: &mut Scenario, o: &Overrides) -> Result<()> {
    if let Some(path) = &o.config {
        let doc = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        s.merge_toml(&doc)?;
    }
    if let Some(eps) = o.eps {
        s.relaxation.eps = eps;
    }
    if let Some(nu) = o.nu {
        s.relaxation.nu = nu;
    }
    if let Some(name) = &o.integrator {
        s.time.integrator = name.parse::<Integrator>()?;
    }
    for kv in &o.set {
        let (key, value) = kv
            .split_once('=')
            .with_context(|| format!("override '{kv}' is not KEY=VALUE"))?;
        s.set(key.trim(), value.trim())?;
    }
    s.validate()?;
    Ok(())
}

fn base_scenario(args: &RunArgs) -> Result<Scenario> {
    let mut s = match (args.scenario, args.mass_ratio) {
        (ScenarioName::Relaxation, Some(mr)) => Scenario::relaxation(mr),
        (ScenarioName::Sod, Some(mr)) => Scenario::sod(mr, Scenario::preset(ScenarioName::Sod).relaxation.eps),
        (name, Some(_)) => bail!("--mass-ratio applies to the relaxation and sod scenarios, not {name}"),
        (name, None) => Scenario::preset(name),
    };
    if let Some(op) = &args.operator {
        if args.scenario != ScenarioName::DecayComparison {
            bail!("--operator applies to the decay_comparison scenario only");
        }
        s = Scenario::decay_comparison(s.relaxation.eps, op.parse::<Operator>()?);
    }
    Ok(s)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut s = base_scenario(&args)?;
    apply_overrides(&mut s, &args.overrides)?;
    if args.dry_run {
        print!("{}", s.to_toml());
        return Ok(());
    }
    let opts = RunOptions {
        threads: args.threads,
        out_dir: args.out.clone(),
    };
    let outcome = run(&s, &opts)?;
    let sim = &outcome.simulation;
    let last = outcome.diagnostics.last().expect("at least the initial record");
    println!(
        "{}: {} steps, dt = {:e}, t = {}, min f = {:e}",
        s.name, sim.steps, sim.dt, sim.state.time, last.min_f
    );
    for path in &outcome.files {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_riemann(args: RiemannArgs) -> Result<()> {
    if args.time.is_nan() || args.time <= 0.0 {
        bail!("--time must be positive");
    }
    if args.samples == 0 || args.x_max.is_nan() || args.x_max <= args.x_min {
        bail!("need --samples > 0 and --x-max > --x-min");
    }
    let sol = RiemannSolution::new(args.left, args.right, args.gamma)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "x,rho,u,p")?;
    let dx = (args.x_max - args.x_min) / args.samples as f64;
    for i in 0..args.samples {
        let x = args.x_min + (i as f64 + 0.5) * dx;
        let s = sol.sample((x - args.interface) / args.time);
        writeln!(out, "{x},{},{},{}", s.rho, s.u, s.p)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<()> {
    let name = match args.kind {
        ConvergenceKind::Time => ScenarioName::TimeConvergence,
        ConvergenceKind::SpaceTime => ScenarioName::SpaceTimeConvergence,
    };
    let mut s = Scenario::preset(name);
    apply_overrides(&mut s, &args.overrides)?;
    let table = with_threads(args.threads, || convergence_study(&s, args.kind, args.refinements))??;
    println!("delta,error,observed_order");
    for r in &table.rows {
        let order = r.observed_order.map(|o| format!("{o:.3}")).unwrap_or_default();
        println!("{:e},{:e},{}", r.delta, r.error, order);
    }
    println!("# least-squares slope {:.3}", table.slope());
    if let Some(p) = &args.out {
        table.write_csv(p)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Riemann(a) => cmd_riemann(a),
        Command::Convergence(a) => cmd_convergence(a),
    }
}
