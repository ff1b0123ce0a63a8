use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gradflow::etdrk::{certify_assumption_a, check_order_conditions, ExponentialTableau, CATALOG};
use gradflow::harness::{
    reference_solution, run_batch, run_convergence_against, run_simulation,
    write_convergence_csv, ConvergenceStudy, Example, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "gradflow", version, about = "Bound- and energy-preserving ETDRK solver for phase-field gradient flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run(RunArgs),
    /// Temporal convergence study against a fine reference.
    Converge(ConvergeArgs),
    /// Positive-definiteness sweep of P(z) for one or all cataloged tableaus.
    Certify(TableauArgs),
    /// Order-condition residuals of one or all cataloged tableaus.
    OrderCheck(OrderArgs),
    /// Run several config files in parallel; each writes to its own directory.
    Batch(BatchArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    tableau: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "energy-form")]
    energy_form: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides using config-file key names.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated step counts.
    #[arg(long, default_value = "50,100,200,400,800")]
    ladder: String,
    #[arg(long = "ref-steps", default_value_t = 1000)]
    ref_steps: usize,
    #[arg(long = "ref-tableau", default_value = "U-ETDRK4")]
    ref_tableau: String,
    #[arg(long = "ref-scheme", default_value = "PCC")]
    ref_scheme: String,
    /// Additional `TABLEAU:SCHEME` pairs sharing the same reference.
    #[arg(long = "also")]
    also: Vec<String>,
}

#[derive(Args)]
struct TableauArgs {
    /// Tableau name; all cataloged tableaus when omitted.
    #[arg(long)]
    tableau: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    tableau: Option<String>,
    /// Highest order to check; defaults to min(3, claimed order).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    /// Config files.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// Parent directory; each config writes to `<out>/<file stem>`.
    #[arg(long, default_value = "batch")]
    out: PathBuf,
}

fn build_config(c: &CommonArgs) -> Result<ExperimentConfig> {
    let cli_example = c.example.as_deref().map(str::parse::<Example>).transpose()?;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_ini_file(path, cli_example)?,
        None => ExperimentConfig::preset(cli_example.unwrap_or(Example::Ac2d)),
    };
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
        Ok(())
    };
    set("scheme", c.scheme.clone())?;
    set("tableau", c.tableau.clone())?;
    set("grid", c.grid.map(|v| v.to_string()))?;
    set("tau", c.tau.map(|v| v.to_string()))?;
    set("tmax", c.tmax.map(|v| v.to_string()))?;
    set("seed", c.seed.map(|v| v.to_string()))?;
    set("energy-form", c.energy_form.clone())?;
    set("out", c.out.as_ref().map(|p| p.display().to_string()))?;
    for kv in &c.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{kv}`");
        };
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn tableaus(name: &Option<String>) -> Result<Vec<ExponentialTableau>> {
    match name {
        Some(n) => Ok(vec![ExponentialTableau::catalog(n)?]),
        None => CATALOG
            .iter()
            .map(|n| ExponentialTableau::catalog(n).map_err(Into::into))
            .collect(),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = build_config(&args.common)?;
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("out"));
    }
    let out = run_simulation(&cfg)?;
    let last = out.records.last().expect("initial record");
    println!(
        "{} on {}: {} steps, status {:?}, E = {:.12e}, max|phi| = {:.6}",
        cfg.label(),
        cfg.example,
        out.records.len() - 1,
        out.status,
        last.energy,
        out.max_abs()
    );
    if let Some(m) = &out.message {
        println!("{m}");
    }
    Ok(ExitCode::from(out.status.exit_code()))
}

fn cmd_converge(args: ConvergeArgs) -> Result<ExitCode> {
    let cfg = build_config(&args.common)?;
    let ladder = args
        .ladder
        .split(',')
        .map(|s| s.trim().parse::<usize>().context("bad ladder entry"))
        .collect::<Result<Vec<_>>>()?;
    let study = ConvergenceStudy {
        ladder,
        reference_scheme: args.ref_scheme.parse()?,
        reference_tableau: args.ref_tableau.clone(),
        reference_steps: args.ref_steps,
    };
    let reference = reference_solution(&study, &cfg)?;
    let mut runs = vec![cfg.clone()];
    for pair in &args.also {
        let (t, s) = pair
            .split_once(':')
            .with_context(|| format!("--also expects TABLEAU:SCHEME, got `{pair}`"))?;
        let mut c = cfg.clone();
        c.set("tableau", t)?;
        c.set("scheme", s)?;
        runs.push(c);
    }
    let mut tables = Vec::new();
    for c in &runs {
        let table = run_convergence_against(&study, c, &c.tableau()?, &reference)?;
        print!("{}", table.to_text());
        tables.push(table);
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    write_convergence_csv(&tables, &dir.join("convergence.csv"))?;
    let text: String = tables.iter().map(|t| t.to_text() + "\n").collect();
    fs::write(dir.join("convergence.txt"), text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(args: TableauArgs) -> Result<ExitCode> {
    fs::create_dir_all(&args.out)?;
    let mut text = String::new();
    for t in tableaus(&args.tableau)? {
        let r = certify_assumption_a(&t);
        println!(
            "{:<10} {}",
            t.name,
            if r.certified { "certified".to_string() } else { format!("not certified (first failure z = {:e})", r.first_failure.unwrap_or(f64::NAN)) }
        );
        text.push_str(&r.to_text());
        text.push('\n');
        r.write_csv(&args.out.join(format!("certification_{}.csv", t.name)))?;
    }
    fs::write(args.out.join("certification.txt"), text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_order_check(args: OrderArgs) -> Result<ExitCode> {
    fs::create_dir_all(&args.out)?;
    let mut text = String::new();
    for t in tableaus(&args.tableau)? {
        let order = args.order.unwrap_or(t.order.min(3));
        let r = check_order_conditions(&t, order)?;
        print!("{}", r.to_text());
        text.push_str(&r.to_text());
        text.push('\n');
        r.write_csv(&args.out.join(format!("order_{}.csv", t.name)))?;
    }
    fs::write(args.out.join("order_conditions.txt"), text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode> {
    let configs = args
        .configs
        .iter()
        .map(|p| {
            let mut cfg = ExperimentConfig::from_ini_file(p, None)?;
            cfg.out = Some(args.out.join(stem(p)));
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0u8;
    for (path, res) in args.configs.iter().zip(run_batch(&configs)) {
        match res {
            Ok(out) => {
                println!("{}: {:?}", path.display(), out.status);
                worst = worst.max(out.status.exit_code());
            }
            Err(e) => {
                println!("{}: error: {e}", path.display());
                worst = worst.max(1);
            }
        }
    }
    Ok(ExitCode::from(worst))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Certify(a) => cmd_certify(a),
        Command::OrderCheck(a) => cmd_order_check(a),
        Command::Batch(a) => cmd_batch(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
