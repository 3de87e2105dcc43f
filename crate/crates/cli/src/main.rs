mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlnfuse_core::error::Error;
use mlnfuse_core::evidence::{EvidenceSet, Truth};
use mlnfuse_core::ground::{ground_with, GroundNetwork, GroundingMode, GroundingOptions};
use mlnfuse_core::infer::{exact_marginals, gibbs_marginals, map_inference};
use mlnfuse_core::learn::{learn_weights, Estimator, TrainingInstance};
use mlnfuse_core::logic::KnowledgeBase;
use mlnfuse_core::parser::{parse_evidence, parse_kb, parse_kb_with_weights, parse_queries, print_kb, write_weights};
use mlnfuse_core::pipeline::{association_evidence, run_hierarchical, run_monolithic, EventCorpus, Scenario};

use config::Config;

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_UNSATISFIABLE: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

#[derive(Parser)]
#[command(name = "mlnfuse", version, about = "Markov logic inference and multi-sensor event fusion")]
struct Cli {
    /// Random seed for sampling and learning.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with [inference], [learn], [pipeline] and [fusion] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a knowledge base and print it in normal form.
    Parse {
        kb: PathBuf,
        /// Only report whether the file is valid.
        #[arg(long)]
        quiet: bool,
    },
    /// Ground a knowledge base against evidence and print the network.
    Ground {
        #[command(flatten)]
        input: Input,
        /// Ground every binding instead of pruning by evidence.
        #[arg(long)]
        naive: bool,
    },
    /// Marginal or MAP inference.
    Infer {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Gibbs)]
        method: Method,
        #[command(flatten)]
        sampler: SamplerFlags,
        /// Print JSON with per-chain diagnostics instead of text.
        #[arg(long)]
        json: bool,
        /// Write the result here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Learn soft weights from training databases.
    Learn {
        kb: PathBuf,
        /// Training database; atoms of the query predicates are the labels.
        #[arg(short, long = "train", required = true)]
        train: Vec<PathBuf>,
        /// Query predicate (repeatable).
        #[arg(short, long = "query", required = true)]
        query: Vec<String>,
        #[arg(long, value_enum)]
        estimator: Option<EstimatorArg>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        /// Weights file to write (standard output when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit similarity evidence for every cross-sensor tracklet pair.
    Fuse { scenario: PathBuf },
    /// Windowed hierarchical event recognition.
    Pipeline {
        scenario: PathBuf,
        /// Directory with scene.mln, subevents.mln, sensor_<ID>.mln,
        /// association.mln and top.mln.
        #[arg(long)]
        kb_dir: PathBuf,
        /// Window length in seconds.
        #[arg(long)]
        window: Option<f64>,
        /// Window overlap in seconds.
        #[arg(long)]
        overlap: Option<f64>,
        /// One network over the whole recording instead of the hierarchy.
        #[arg(long)]
        monolithic: bool,
        #[command(flatten)]
        sampler: SamplerFlags,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    kb: PathBuf,
    #[arg(short, long)]
    evidence: Option<PathBuf>,
    /// Predicate name or atom pattern such as `Q(A, x)` (repeatable).
    #[arg(short, long = "query")]
    query: Vec<String>,
    /// Override soft weights from a weights file.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    max_clauses: Option<usize>,
}

#[derive(Args, Default)]
struct SamplerFlags {
    /// Kept samples per chain.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    /// Finite weight used for hard clauses while sampling.
    #[arg(long)]
    hard_weight: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Gibbs,
    Exact,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Gibbs,
    Perceptron,
    Exact,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Parse(_)
            | Error::UnboundVariable(_)
            | Error::DomainMismatch { .. }
            | Error::UnsupportedFormula(_)
            | Error::UndeclaredPredicate(_)
            | Error::ArityMismatch { .. }
            | Error::InconsistentEvidence(_)
            | Error::ProbabilityOutOfRange(_) => EXIT_PARSE,
            Error::Unsatisfiable { .. } | Error::NoSatisfyingState { .. } => EXIT_UNSATISFIABLE,
            Error::ResourceCeiling(_) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_kb(path: &Path, weights: Option<&Path>) -> Outcome<KnowledgeBase> {
    let text = read(path)?;
    let kb = match weights {
        Some(w) => parse_kb_with_weights(&text, &read(w)?),
        None => parse_kb(&text),
    };
    kb.map_err(|e| e.in_stage(path.display().to_string()).into())
}

fn load_network(input: &Input, naive: bool) -> Outcome<(KnowledgeBase, GroundNetwork)> {
    let kb = load_kb(&input.kb, input.weights.as_deref())?;
    let evidence = match &input.evidence {
        Some(p) => parse_evidence(&read(p)?, &kb).map_err(|e| Failure::from(e.in_stage(p.display().to_string())))?,
        None => EvidenceSet::new(),
    };
    let queries = parse_queries(&input.query.join("\n"), &kb)?;
    let mut opts = GroundingOptions {
        mode: if naive { GroundingMode::Naive } else { GroundingMode::Pruned },
        ..Default::default()
    };
    if let Some(m) = input.max_clauses {
        opts.max_clauses = m;
    }
    let net = ground_with(&kb, &evidence, &queries, &opts)?;
    Ok((kb, net))
}

/// Query atoms, or every variable when no query was given.
fn query_atoms(input: &Input, net: &GroundNetwork) -> Vec<usize> {
    if input.query.is_empty() {
        net.variables()
    } else {
        net.queries.clone()
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_toml(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    match cli.command {
        Command::Parse { kb, quiet } => {
            let kb = load_kb(&kb, None)?;
            if quiet {
                let hard = kb.formulas().iter().filter(|f| f.is_hard()).count();
                println!("ok: {} predicates, {} formulas ({hard} hard)", kb.schemas().len(), kb.formulas().len());
            } else {
                print!("{}", print_kb(&kb));
            }
        }
        Command::Ground { input, naive } => {
            let (_, net) = load_network(&input, naive)?;
            println!(
                "{} atoms, {} variables, {} clauses",
                net.atoms.len(),
                net.variables().len(),
                net.clauses.len()
            );
            print!("{}", net.dump());
        }
        Command::Infer { input, method, sampler, json, output } => {
            cfg.apply_sampler(sampler.samples, sampler.burn_in, sampler.chains, sampler.hard_weight);
            let (_, net) = load_network(&input, false)?;
            let atoms = query_atoms(&input, &net);
            let text = match method {
                Method::Gibbs | Method::Exact => {
                    let r = match method {
                        Method::Gibbs => gibbs_marginals(&net, &atoms, &cfg.inference)?,
                        _ => exact_marginals(&net, &atoms)?,
                    };
                    if json {
                        format!("{:#}\n", r.to_json())
                    } else {
                        r.to_text()
                    }
                }
                Method::Map => {
                    let r = map_inference(&net, &cfg.inference)?;
                    if r.hard_unsatisfied > 0 {
                        return Err(Error::NoSatisfyingState { unsatisfied: r.hard_unsatisfied }.into());
                    }
                    if json {
                        let world: serde_json::Map<String, serde_json::Value> =
                            atoms.iter().map(|&a| (net.atoms.atom(a).to_string(), r.world[a].into())).collect();
                        format!("{:#}\n", serde_json::json!({"world": world, "soft_cost": r.soft_cost}))
                    } else {
                        atoms.iter().map(|&a| format!("{} = {}\n", net.atoms.atom(a), r.world[a] as u8)).collect()
                    }
                }
            };
            write_out(output.as_deref(), &text)?;
        }
        Command::Learn { kb, train, query, estimator, iterations, rate, output } => {
            let mut kb = load_kb(&kb, None)?;
            if let Some(e) = estimator {
                cfg.learn.estimator = match e {
                    EstimatorArg::Gibbs => Estimator::Gibbs,
                    EstimatorArg::Perceptron => Estimator::Perceptron,
                    EstimatorArg::Exact => Estimator::Exact,
                };
            }
            if let Some(n) = iterations {
                cfg.learn.iterations = n;
            }
            if let Some(r) = rate {
                cfg.learn.learning_rate = r;
            }
            let mut instances = Vec::new();
            for path in &train {
                let db = parse_evidence(&read(path)?, &kb).map_err(|e| Failure::from(e.in_stage(path.display().to_string())))?;
                let (labels, evidence): (Vec<_>, Vec<_>) =
                    db.records().iter().cloned().partition(|r| query.contains(&r.atom.predicate));
                if labels.iter().any(|r| matches!(r.truth, Truth::Soft(_))) {
                    return Err(usage(format!("{}: labels must be true or false", path.display())));
                }
                instances.push(TrainingInstance {
                    evidence: evidence.into_iter().collect(),
                    labels: labels.into_iter().collect(),
                });
            }
            let r = learn_weights(&kb, &instances, &query, &cfg.learn)?;
            kb.set_weights(&r.weights)?;
            write_out(output.as_deref(), &write_weights(&kb))?;
        }
        Command::Fuse { scenario } => {
            let mut sc = Scenario::load(&scenario)?;
            sc.fusion = cfg.fusion.clone().unwrap_or(sc.fusion);
            let ev = association_evidence(&sc.tracklets, &sc.models, &sc.fusion)?;
            print!("{}", ev.to_text());
        }
        Command::Pipeline { scenario, kb_dir, window, overlap, monolithic, sampler, report } => {
            let corpus = EventCorpus::load(&kb_dir)?;
            let mut sc = Scenario::load(&scenario)?;
            if let Some(p) = cfg.pipeline.clone() {
                sc.params = p;
            }
            if let Some(f) = cfg.fusion.clone() {
                sc.fusion = f;
            }
            if let Some(s) = cfg.seed {
                sc.params.inference.seed = s;
            }
            let inf = &mut sc.params.inference;
            inf.samples = sampler.samples.unwrap_or(inf.samples);
            inf.burn_in = sampler.burn_in.or(inf.burn_in);
            inf.chains = sampler.chains.unwrap_or(inf.chains);
            inf.hard_weight = sampler.hard_weight.unwrap_or(inf.hard_weight);
            sc.params.window_length = window.unwrap_or(sc.params.window_length);
            sc.params.overlap = overlap.unwrap_or(sc.params.overlap);
            let r = if monolithic { run_monolithic(&corpus, &sc)? } else { run_hierarchical(&corpus, &sc)? };
            if let Some(plan) = &r.plan {
                println!("{} tracklets, {} windows", sc.tracklets.len(), plan.windows.len());
            }
            for s in &r.skipped {
                println!("skipped: {s}");
            }
            for (event, p) in &r.events {
                println!("{event}\t{p:.4}");
            }
            println!("elapsed {:.0} ms", r.elapsed_ms);
            if let Some(path) = report {
                write_out(Some(&path), &format!("{:#}\n", r.to_json()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::UndeclaredPredicate("P".into()).in_stage("kb")), EXIT_PARSE);
        assert_eq!(code(Error::NoSatisfyingState { unsatisfied: 1 }), EXIT_UNSATISFIABLE);
        assert_eq!(code(Error::ResourceCeiling("x".into())), EXIT_RESOURCE);
        assert_eq!(code(Error::invalid("x")), EXIT_USAGE);
    }

    #[test]
    fn arguments_parse() {
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["mlnfuse", "--seed", "3", "infer", "a.mln", "-q", "Q", "--samples", "10"]).unwrap();
        assert_eq!(cli.seed, Some(3));
        assert!(matches!(cli.command, Command::Infer { .. }));
    }

    use clap::CommandFactory;
}
