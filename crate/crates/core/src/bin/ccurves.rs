use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use complete_curves::convex::{dee, d_proper_sequence, ConvexBody};
use complete_curves::desing::{implicitize, lambda_sweep, LevelOptions};
use complete_curves::net::{analytic_lower_bound, min_path_length};
use complete_curves::pipeline::{
    image_completeness_audit, iteration_net, load_curve, run_recursion_full, terms_polynomial, write_artifacts,
    RunConfig, RunReport,
};
use complete_curves::stretch::{run_lemma, StretchOptions};
use complete_curves::Error;

#[derive(Parser)]
#[command(name = "ccurves", version, about = "Numerics for complete bounded complex curves in convex domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run description (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config and the CCURVES_OUT root).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Uniform scale of every sampling grid.
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature, distance and d-value of consecutive bodies.
    Bodies(Common),
    /// d-proper sequence through the exhaustion.
    Exhaust {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Net of the first pair with its bound and path oracle.
    Net(Common),
    /// One stretch lemma run on the first pair.
    Stretch(Common),
    /// Level-shift sweep.
    Desing(Common),
    /// Full recursion.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Image completeness audit of a finished run directory.
    Audit(Common),
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Verification(other.to_string()),
        }
    }
}

fn load(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = c.resolution {
        if !(f > 0.0) {
            return Err(Failure::Usage(format!("resolution {f} must be positive")));
        }
        cfg.resolution = cfg.resolution.scaled(f);
    }
    Ok(cfg)
}

/// Prints the value and writes it to `<out>/<name>.json` when `--out` was given.
fn emit(c: &Common, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json");
    println!("{text}");
    if let Some(dir) = &c.out {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(e.to_string()))?;
        fs::write(dir.join(format!("{name}.json")), text).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn verdict(pass: bool, what: &str) -> Result<(), Failure> {
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{what} failed")))
    }
}

fn first_pair(cfg: &RunConfig) -> Result<(ConvexBody, ConvexBody), Failure> {
    let bodies = cfg.exhaustion.build()?;
    if bodies.len() < 2 {
        return Err(Failure::Usage("the exhaustion needs at least two bodies".into()));
    }
    Ok((bodies[0].clone(), bodies[1].clone()))
}

fn bodies(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let bodies = cfg.exhaustion.build()?;
    let mut rows = vec![];
    for (k, w) in bodies.windows(2).enumerate() {
        let m = dee(&w[0], &w[1])?;
        rows.push(json!({"pair": k, "kappa": m.kappa, "dist": m.dist, "dee": m.dee}));
    }
    emit(c, "bodies", &json!(rows))
}

fn exhaust(c: &Common, target: Option<f64>) -> Result<(), Failure> {
    let cfg = load(c)?;
    let target = target.or(cfg.target).ok_or_else(|| Failure::Usage("no target given".into()))?;
    let seq = d_proper_sequence(&cfg.exhaustion.build()?, target)?;
    let radii: Vec<f64> = seq.bodies.iter().map(|b| b.circumradius()).collect();
    emit(
        c,
        "exhaust",
        &json!({"target": target, "success": seq.success, "total": seq.total(), "chains": seq.chains,
                "running": seq.running, "circumradii": radii}),
    )?;
    verdict(seq.success, "target")
}

fn net(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let (d, dp) = first_pair(&cfg)?;
    let (_, curve) = cfg.prepare()?;
    let net = iteration_net(&cfg.net, &curve, &d, &dp, cfg.eps0)?;
    let m = dee(&d, &dp)?;
    let bound = analytic_lower_bound(&net, &d, &dp).ok();
    let o = min_path_length(&net, &d, &dp, &cfg.resolution.oracle)?;
    let pass = match (o.min_length, bound) {
        (Some(l), Some(b)) => l >= b - o.slack,
        _ => false,
    };
    emit(
        c,
        "net",
        &json!({"dee": m.dee, "bound": bound, "oracle_min": o.min_length, "slack": o.slack,
                "slabs": net.len(), "radius": net.radius, "nodes": o.nodes}),
    )?;
    verdict(pass, "net bound")
}

fn stretch(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let (d, dp) = first_pair(&cfg)?;
    let (_, curve) = cfg.prepare()?;
    let net = iteration_net(&cfg.net, &curve, &d, &dp, cfg.eps0)?;
    if net.len() > cfg.max_slabs {
        return Err(Failure::Verification(format!("net has {} slabs, above the cap {}", net.len(), cfg.max_slabs)));
    }
    let opts = StretchOptions { delta: cfg.eps0 * cfg.delta_fraction, trim: cfg.resolution.trim, ..cfg.stretch };
    let out = run_lemma(&curve, &d, &dp, &net, opts)?;
    let value = serde_json::to_value(&out.report).expect("json");
    emit(c, "stretch", &value)?;
    verdict(out.report.pass, "stretch")
}

fn desing(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let p = match &cfg.desing.terms {
        Some(t) => terms_polynomial(t)?,
        None => implicitize(&cfg.curve.build()?)?,
    };
    let region = ConvexBody::centered_ball(cfg.desing.region_radius)?;
    let sweep = lambda_sweep(&p, &region, cfg.desing.lambda0, cfg.desing.count, cfg.desing.eps, LevelOptions::default())?;
    emit(c, "desing", &serde_json::to_value(&sweep).expect("json"))?;
    verdict(sweep.chosen.is_some(), "level selection")
}

fn run(c: &Common, depth: Option<usize>) -> Result<(), Failure> {
    let mut cfg = load(c)?;
    if let Some(n) = depth {
        cfg.depth = n;
    }
    let mut outcome = run_recursion_full(&cfg)?;
    let dir = cfg.out_dir();
    write_artifacts(&mut outcome, &dir)?;
    let r = &outcome.report;
    println!(
        "{}",
        json!({"report": dir.join("report.json"), "pass": r.pass(), "budget": r.budget,
               "iterations": r.iterations.len(), "halted": r.halted})
    );
    verdict(r.pass(), "run")
}

fn audit(c: &Common) -> Result<(), Failure> {
    let cfg = load(c)?;
    let dir = cfg.out_dir();
    let text = fs::read_to_string(dir.join("report.json"))
        .map_err(|e| Failure::Usage(format!("{}: {e}", dir.join("report.json").display())))?;
    let report = RunReport::from_json(&text)?;
    let curve = load_curve(&dir.join("curve.json"))?;
    let a = image_completeness_audit(&curve, &report, cfg.resolution.trim)?;
    emit(c, "audit", &serde_json::to_value(a).expect("json"))?;
    verdict(a.pass, "audit")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Bodies(c) => bodies(c),
        Command::Exhaust { common, target } => exhaust(common, *target),
        Command::Net(c) => net(c),
        Command::Stretch(c) => stretch(c),
        Command::Desing(c) => desing(c),
        Command::Run { common, depth } => run(common, *depth),
        Command::Audit(c) => audit(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification: {m}");
            ExitCode::from(2)
        }
    }
}
