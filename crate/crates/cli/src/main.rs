mod manifest;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use stepint::codec::{encode_step_line, seq_to_tree};
use stepint::datagen::{self, dataset_stats, read_dataset, GenConfig};
use stepint::eval::{evaluate_accuracy, render_robustness, robustness_suite, validation_suite, EvalOptions};
use stepint::policy::{ExternalPolicy, HeuristicPolicy, Policy, PolicyAddr};
use stepint::search::{integrate, render, SearchConfig, Status};
use stepint::verify::verify_solution;
use stepint::{parse, Expr, Symbol};

use manifest::{sibling, write_atomic, RunManifest};

const EXIT_UNSOLVED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "stepint", version, about = "Step-by-step symbolic integration")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find and verify a step-by-step proof for one integral.
    Integrate(IntegrateArgs),
    /// Generate a step-trace dataset.
    Gen(GenArgs),
    /// Statistics of a dataset file.
    Stats {
        path: PathBuf,
    },
    /// Accuracy over a test set and the Fail@N robustness suite.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    Heuristic,
    Server,
}

#[derive(Args, Debug)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value = "heuristic")]
    policy: PolicyKind,
    /// Policy server address: tcp:HOST:PORT, HOST:PORT, unix:PATH or cmd:PROGRAM ARGS.
    #[arg(long, env = "STEPINT_POLICY_ADDR")]
    addr: Option<String>,
    #[arg(long, default_value_t = stepint::search::DEFAULT_BEAM)]
    beam: usize,
    /// Seconds; defaults to 120 for the heuristic and 10 for a server.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value_t = stepint::search::DEFAULT_MAX_NODES)]
    max_nodes: usize,
}

impl PolicyArgs {
    fn search_config(&self) -> anyhow::Result<SearchConfig> {
        let base = match self.policy {
            PolicyKind::Heuristic => SearchConfig::heuristic(),
            PolicyKind::Server => SearchConfig::learned(),
        };
        let timeout = match self.timeout {
            Some(t) if t.is_finite() && t > 0.0 => Duration::from_secs_f64(t),
            Some(t) => return Err(anyhow!("timeout must be positive, got {}", t)),
            None => base.timeout,
        };
        Ok(SearchConfig {
            beam: self.beam.max(1),
            timeout,
            max_nodes: self.max_nodes,
            ..base
        })
    }

    fn addr(&self) -> anyhow::Result<PolicyAddr> {
        let a = self
            .addr
            .as_deref()
            .ok_or_else(|| anyhow!("--policy server needs --addr or STEPINT_POLICY_ADDR"))?;
        Ok(a.parse()?)
    }
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    /// Integrand or integral in infix notation, e.g. "x*cosh(x)".
    #[arg(allow_hyphen_values = true)]
    expr: Option<String>,
    /// Prefix token sequence instead of infix text.
    #[arg(long, conflicts_with_all = ["expr", "token_file"])]
    tokens: Option<String>,
    /// File holding a prefix token sequence.
    #[arg(long, conflicts_with = "expr")]
    token_file: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Add integration-by-parts traces built from the generated corpus.
    #[arg(long)]
    augment_ibp: bool,
    #[arg(long, default_value_t = 50)]
    max_nodes: usize,
    /// Policy calls allowed per trace.
    #[arg(long, default_value_t = GenConfig::default().trace_nodes)]
    trace_nodes: usize,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    testset: Option<PathBuf>,
    /// Also run the Fail@N suite.
    #[arg(long)]
    robustness: bool,
    /// Samples per robustness family.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record timing percentiles (makes the report machine dependent).
    #[arg(long)]
    timing: bool,
    /// Write the JSON report here, with a node histogram CSV and a manifest
    /// beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
}

/// Errors that map to the usage exit code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Integrate(a) => cmd_integrate(a),
        Cmd::Gen(a) => cmd_gen(a).map(|_| 0),
        Cmd::Stats { path } => cmd_stats(&path).map(|_| 0),
        Cmd::Eval(a) => cmd_eval(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn read_input(a: &IntegrateArgs) -> anyhow::Result<Expr> {
    let e = if let Some(t) = &a.tokens {
        seq_to_tree(t).map_err(|e| usage(format!("bad token sequence: {}", e)))?
    } else if let Some(p) = &a.token_file {
        let t = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {}", p.display(), e)))?;
        seq_to_tree(&t).map_err(|e| usage(format!("bad token sequence: {}", e)))?
    } else {
        let text = a.expr.as_deref().unwrap_or("").trim();
        if text.is_empty() {
            return Err(usage("nothing to integrate; usage: stepint integrate EXPR"));
        }
        parse(text).map_err(|e| usage(format!("cannot parse input: {}", e)))?
    };
    Ok(if e.has_integral() {
        e
    } else {
        Expr::integral(e, Symbol::X)
    })
}

fn make_policy(p: &PolicyArgs) -> anyhow::Result<Box<dyn Policy>> {
    Ok(match p.policy {
        PolicyKind::Heuristic => Box::new(HeuristicPolicy::new()),
        PolicyKind::Server => Box::new(ExternalPolicy::new(p.addr().map_err(|e| usage(e.to_string()))?)),
    })
}

fn cmd_integrate(a: IntegrateArgs) -> anyhow::Result<u8> {
    let root = read_input(&a)?;
    let cfg = a.policy.search_config().map_err(|e| usage(e.to_string()))?;
    let mut policy = make_policy(&a.policy)?;
    let proof = integrate(&root, policy.as_mut(), &cfg);
    let verdict = proof.solved().then(|| verify_solution(&root, &proof));
    if a.json {
        let steps: Vec<String> = proof.steps.iter().map(encode_step_line).collect();
        let out = json!({
            "input": root.to_string(),
            "status": proof.status,
            "result": proof.solved().then(|| proof.expression.to_string()),
            "verdict": verdict,
            "steps": steps,
            "nodes": proof.stats.nodes,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        match proof.status {
            Status::Solved => {
                print!("{}", render(&proof));
                println!("result: {}", proof.expression);
                println!();
                for s in &proof.steps {
                    println!("{}", encode_step_line(s));
                }
                println!();
            }
            Status::Timeout => println!("{}\ntimed out after {:?}", root, cfg.timeout),
            Status::Exhausted => println!("{}\nno proof found", root),
        }
        println!("nodes: {}", proof.stats.nodes);
        if let Some(v) = &verdict {
            println!("verification: {}", v);
        }
    }
    Ok(match (proof.status, verdict) {
        (Status::Solved, Some(v)) if v.is_pass() => 0,
        (Status::Timeout, _) => EXIT_TIMEOUT,
        _ => EXIT_UNSOLVED,
    })
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    if !(3..=datagen::MAX_TREE_NODES).contains(&a.max_nodes) {
        return Err(usage(format!("--max-nodes must be in 3..={}", datagen::MAX_TREE_NODES)));
    }
    let cfg = GenConfig {
        max_nodes: a.max_nodes,
        seed: a.seed,
        count: a.count,
        trace_nodes: a.trace_nodes,
        ..GenConfig::default()
    };
    let start = Instant::now();
    let mut corpus = datagen::generate(&cfg);
    if a.augment_ibp {
        datagen::augment(&mut corpus);
    }
    let mut data = Vec::new();
    datagen::write_dataset(&mut data, &corpus.traces)?;
    let mut failures = Vec::new();
    datagen::write_failures(&mut failures, &corpus.failures)?;
    let failures_path = sibling(&a.out, ".failures");
    write_atomic(&a.out, &data)?;
    write_atomic(&failures_path, &failures)?;
    let stats = dataset_stats(&corpus.traces);
    let summary = json!({
        "stats": stats,
        "failures": corpus.failures.len(),
        "degenerate": corpus.degenerate,
        "duplicates": corpus.duplicates,
        "augmented": corpus.augmented,
    });
    let config = json!({
        "gen": cfg,
        "augment_ibp": a.augment_ibp,
        "summary": summary,
    });
    RunManifest::new("gen", config, a.seed, start.elapsed(), vec![a.out.clone(), failures_path])
        .write(&sibling(&a.out, ".manifest.json"))?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn load_dataset(path: &Path) -> anyhow::Result<Vec<datagen::Trace>> {
    let f = File::open(path).map_err(|e| usage(format!("{}: {}", path.display(), e)))?;
    read_dataset(BufReader::new(f)).map_err(|e| usage(format!("{}: {}", path.display(), e)))
}

fn cmd_stats(path: &Path) -> anyhow::Result<()> {
    let stats = dataset_stats(&load_dataset(path)?);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<()> {
    if a.testset.is_none() && !a.robustness {
        return Err(usage("give --testset, --robustness or both"));
    }
    let testset = match &a.testset {
        Some(p) => load_dataset(p)?,
        None => Vec::new(),
    };
    let mut cfg = a.policy.search_config().map_err(|e| usage(e.to_string()))?;
    cfg.seed = a.seed;
    let opts = EvalOptions {
        timing: a.timing,
        skip_steps: false,
    };
    let start = Instant::now();
    let mut report = match a.policy.policy {
        PolicyKind::Heuristic => evaluate_accuracy(&testset, HeuristicPolicy::new, &cfg, opts),
        PolicyKind::Server => {
            let addr = a.policy.addr().map_err(|e| usage(e.to_string()))?;
            evaluate_accuracy(&testset, || ExternalPolicy::new(addr.clone()), &cfg, opts)
        }
    };
    if a.robustness {
        let suite = validation_suite();
        report.robustness = match a.policy.policy {
            PolicyKind::Heuristic => robustness_suite(a.samples, &suite, HeuristicPolicy::new, &cfg),
            PolicyKind::Server => {
                let addr = a.policy.addr().map_err(|e| usage(e.to_string()))?;
                robustness_suite(a.samples, &suite, || ExternalPolicy::new(addr.clone()), &cfg)
            }
        };
    }
    if a.testset.is_some() {
        println!(
            "accuracy {:.1}% ± {:.1}% ({} of {}, {} inconclusive)",
            100.0 * report.accuracy,
            100.0 * report.std_error,
            report.solved,
            report.attempted,
            report.inconclusive
        );
        println!(
            "step-level top-{} match: {} of {} canonical, {} exact",
            cfg.beam, report.step_match_canonical, report.steps, report.step_match_exact
        );
        println!("mean nodes per solved integral: {:.2}", report.mean_nodes_solved);
    }
    if !report.robustness.is_empty() {
        print!("{}", render_robustness(&report.robustness));
    }
    if let Some(out) = &a.out {
        let mut json = serde_json::to_vec_pretty(&report)?;
        json.push(b'\n');
        write_atomic(out, &json)?;
        let csv = sibling(out, ".nodes.csv");
        write_atomic(&csv, report.histogram_csv().as_bytes())?;
        let config = json!({
            "testset": a.testset,
            "policy": report.policy,
            "search": cfg,
            "robustness": a.robustness,
            "samples": a.samples,
        });
        RunManifest::new("eval", config, a.seed, start.elapsed(), vec![out.clone(), csv])
            .write(&sibling(out, ".manifest.json"))
            .context("writing manifest")?;
    }
    Ok(())
}
