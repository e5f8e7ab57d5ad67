use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mesbound::catalysis::{simulate, ProtocolOutcome};
use mesbound::certificates::{recursive_certificate, verify, VerificationReport};
use mesbound::io::{self, AnyStateSet};
use mesbound::operator::set_max_dim;
use mesbound::scalar::format_ratio;
use mesbound::sdp::{self, DiscriminationInstance, Perturbation, SolverConfig, Status};
use mesbound::states::{
    check_orthonormal_pure, is_maximally_entangled_pure, recursive_pure_state, recursive_set,
};
use mesbound::Error;

#[derive(Parser, Debug)]
#[command(name = "mesbound", version, about = "Bounds on PPT discrimination of maximally entangled states")]
struct Cli {
    /// Write the result document to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Suppress stdout.
    #[arg(long, global = true)]
    quiet: bool,

    /// Seed for the optional solver perturbation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on the total operator dimension.
    #[arg(long, global = true, env = "MESBOUND_DIM_CAP")]
    dim_cap: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the first k states of the level-t construction.
    Construct {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        k: usize,
    },
    /// Verify a dual certificate in exact arithmetic.
    Certify(CertifyArgs),
    /// Solve the PPT discrimination program numerically.
    Solve(SolveArgs),
    /// Simulate catalysed LOCC discrimination.
    Catalysis {
        #[arg(long)]
        t: u32,
        #[arg(long, required_unless_present = "all", conflicts_with = "all")]
        j: Option<usize>,
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, required_unless_present = "states", requires = "k")]
    t: Option<u32>,
    #[arg(long, requires = "t")]
    k: Option<usize>,
    #[arg(long, requires = "cert", conflicts_with = "t")]
    states: Option<PathBuf>,
    #[arg(long, requires = "states")]
    cert: Option<PathBuf>,
    /// Also write the certificate document to this file.
    #[arg(long)]
    save_cert: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    states: PathBuf,
    #[arg(long)]
    eps_primal: Option<f64>,
    #[arg(long)]
    eps_dual: Option<f64>,
    #[arg(long)]
    eps_gap: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Largest local dimension accepted.
    #[arg(long)]
    max_local_dim: Option<usize>,
    /// Scale of the seeded starting-point perturbation.
    #[arg(long, requires = "seed")]
    perturb: Option<f64>,
    /// Include the measurement operators in the document.
    #[arg(long)]
    measurement: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

struct Outcome {
    payload: Value,
    summary: String,
    code: u8,
    params: Value,
    inputs: Vec<PathBuf>,
}

fn construct(t: u32, k: usize) -> Result<Outcome, Failure> {
    let set = recursive_set(t, k)?;
    let pure = (1..=k).map(|j| recursive_pure_state(t, j)).collect::<mesbound::Result<Vec<_>>>()?;
    let orthonormal = check_orthonormal_pure(&pure);
    let mes = pure.iter().map(is_maximally_entangled_pure).collect::<mesbound::Result<Vec<_>>>()?;
    let all_mes = mes.iter().all(|&b| b);
    let summary = format!(
        "t={t} d={} k={} dim={}\northonormal: {orthonormal}\nmaximally entangled: {all_mes}",
        set.d(),
        set.k(),
        set.dim()
    );
    Ok(Outcome {
        payload: io::state_set_to_json(&set),
        summary,
        code: if orthonormal && all_mes { 0 } else { 1 },
        params: json!({ "t": t, "k": k }),
        inputs: vec![],
    })
}

fn report_summary(report: &VerificationReport) -> String {
    let bound = format!("{} = {}", format_ratio(&report.objective), report.objective_f64());
    if report.feasible {
        return format!("feasible, bound = {bound}");
    }
    let mut s = format!("infeasible ({} failures), objective = {bound}", report.failures.len());
    for f in &report.failures {
        s.push_str(&format!("\n  j={} {:?}", f.index, f.kind));
    }
    s
}

fn certify(args: &CertifyArgs) -> Result<Outcome, Failure> {
    let (set, cert, params, inputs) = match (&args.states, &args.cert, args.t, args.k) {
        (Some(sp), Some(cp), _, _) => {
            let set = AnyStateSet::from_json(&io::read_json(sp)?)?.into_exact()?;
            let cert = io::certificate_from_json(&io::read_json(cp)?)?;
            let params = json!({ "states": sp, "cert": cp });
            (set, cert, params, vec![sp.clone(), cp.clone()])
        }
        (_, _, Some(t), Some(k)) => {
            (recursive_set(t, k)?, recursive_certificate(t, k)?, json!({ "t": t, "k": k }), vec![])
        }
        _ => return Err(Failure { code: 2, message: "give --t and --k, or --states and --cert".into() }),
    };
    if let Some(path) = &args.save_cert {
        io::write_json(path, &io::certificate_to_json(&cert))?;
    }
    let report = verify(&set, &cert)?;
    Ok(Outcome {
        payload: io::report_to_json(&report),
        summary: report_summary(&report),
        code: if report.feasible { 0 } else { 1 },
        params,
        inputs,
    })
}

fn solve(args: &SolveArgs, seed: Option<u64>) -> Result<Outcome, Failure> {
    let set = AnyStateSet::from_json(&io::read_json(&args.states)?)?;
    let instance = DiscriminationInstance::from_set(&set.to_float())?;
    let mut config = SolverConfig::default();
    if let Some(x) = args.eps_primal {
        config.eps_primal = x;
    }
    if let Some(x) = args.eps_dual {
        config.eps_dual = x;
    }
    if let Some(x) = args.eps_gap {
        config.eps_gap = x;
    }
    if let Some(x) = args.max_iter {
        config.max_iter = x;
    }
    if let Some(x) = args.alpha {
        config.alpha = x;
    }
    if let Some(x) = args.max_local_dim {
        config.max_local_dim = x;
    }
    if let (Some(scale), Some(seed)) = (args.perturb, seed) {
        config.perturbation = Some(Perturbation { seed, scale });
    }
    let result = sdp::solve(&instance, &config)?;
    let r = &result.residuals;
    let summary = format!(
        "value = {:.10}\ndual bound = {:.10}\nstatus = {:?}, iterations = {}\nresiduals: primal {:.2e}, cone {:.2e}, gap {:.2e}",
        result.value, result.dual_bound, result.status, result.iterations, r.primal, r.cone, r.gap
    );
    Ok(Outcome {
        payload: io::solver_result_to_json(&result, args.measurement),
        summary,
        code: if result.status == Status::Converged { 0 } else { 1 },
        params: json!({ "states": args.states, "config": config }),
        inputs: vec![args.states.clone()],
    })
}

fn prefix_text(labels: &[usize]) -> String {
    labels.iter().map(|x| format!("ψ{x}")).collect::<Vec<_>>().join(" ")
}

fn catalysis(t: u32, j: Option<usize>, all: bool) -> Result<Outcome, Failure> {
    let js: Vec<usize> = if all {
        if !(2..=15).contains(&t) {
            return Err(Error::InvalidParameter(format!("recursion level t = {t} out of range")).into());
        }
        (1..=1usize << t).collect()
    } else {
        vec![j.expect("clap enforces --j or --all")]
    };
    let outcomes = js.iter().map(|&j| simulate(t, j)).collect::<mesbound::Result<Vec<ProtocolOutcome>>>()?;
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let min_fid = outcomes.iter().map(|o| o.catalyst_fidelity.clone()).min().expect("nonempty");
    let mut summary = format!(
        "{correct}/{} correct, catalyst fidelity {}",
        outcomes.len(),
        format_ratio(&min_fid)
    );
    if let [o] = outcomes.as_slice() {
        let b = &o.branches[0];
        summary.push_str(&format!(
            "\nt={} j={}: identified {} over {} branches in {} rounds",
            o.t,
            o.j,
            o.identified_index,
            o.branches.len(),
            o.rounds
        ));
        if !b.prefix.is_empty() {
            summary.push_str(&format!("\nleading pairs: {}", prefix_text(&b.prefix)));
        }
    }
    Ok(Outcome {
        payload: json!({
            "outcomes": outcomes.iter().map(io::outcome_to_json).collect::<Vec<_>>(),
            "summary": { "correct": correct, "total": outcomes.len(), "min_catalyst_fidelity": format_ratio(&min_fid) },
        }),
        summary,
        code: if correct == outcomes.len() { 0 } else { 1 },
        params: json!({ "t": t, "j": j, "all": all }),
        inputs: vec![],
    })
}

fn manifest(command: &str, cli: &Cli, o: &Outcome, started: Instant) -> Value {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "command": command,
        "params": o.params,
        "inputs": o.inputs,
        "outputs": cli.out.iter().collect::<Vec<&PathBuf>>(),
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp,
        "duration_ms": started.elapsed().as_secs_f64() * 1e3,
    })
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let started = Instant::now();
    if let Some(cap) = cli.dim_cap {
        set_max_dim(cap);
    }
    let (name, outcome) = match &cli.command {
        Command::Construct { t, k } => ("construct", construct(*t, *k)?),
        Command::Certify(args) => ("certify", certify(args)?),
        Command::Solve(args) => ("solve", solve(args, cli.seed)?),
        Command::Catalysis { t, j, all } => ("catalysis", catalysis(*t, *j, *all)?),
    };
    let mut doc = outcome.payload.clone();
    doc["manifest"] = manifest(name, cli, &outcome, started);
    if let Some(path) = &cli.out {
        io::write_json(Path::new(path), &doc)?;
    }
    if !cli.quiet {
        match cli.format {
            Format::Text => println!("{}", outcome.summary),
            Format::Json => println!("{}", serde_json::to_string_pretty(&doc).expect("document serializes")),
        }
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
