use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rainbow_core::absorbing::{self, PipelineParams, PipelineStatus};
use rainbow_core::closeness::{self, SearchMode};
use rainbow_core::extremal::{self, ThresholdMethod, VertexPartition};
use rainbow_core::extremal_solver::{self, ExtremalParams};
use rainbow_core::harness::{self, ExperimentConfig, InstanceKind, InstanceSpec};
use rainbow_core::io;
use rainbow_core::solver::{self, Status};
use rainbow_core::transform::build_rainbow_graph;
use rainbow_core::{Error, SolverConfig};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rainbow", version, about = "Rainbow perfect matchings in uniform hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parity extremal hypergraphs and degree thresholds.
    #[command(subcommand)]
    Extremal(ExtremalCmd),
    /// Exact solvers.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Absorbing-method tools.
    #[command(subcommand)]
    Absorb(AbsorbCmd),
    /// Closeness of a family's (1,k)-graph to the extremal graph.
    Closeness {
        #[arg(long)]
        family: PathBuf,
        /// Search every partition instead of sampling.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Vertices of a hypergraph that are not α-good against a reference.
    Goodness {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Instance generation, sweeps and experiment runs.
    #[command(subcommand)]
    Harness(HarnessCmd),
}

#[derive(Subcommand)]
enum ExtremalCmd {
    /// Writes H^i(A, B) with A = {0, ..., S-1}.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "size-a")]
        size_a: usize,
        #[arg(long)]
        parity: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prints δ(n, k, ℓ) as JSON.
    Delta {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// Use the closed-form degree counts instead of building each graph.
        #[arg(long)]
        formula_only: bool,
    },
}

#[derive(Args)]
struct BudgetArg {
    /// Node budget; defaults to RAINBOW_MATCH_BUDGET or the built-in limit.
    #[arg(long)]
    budget: Option<u64>,
}

impl BudgetArg {
    fn config(&self) -> SolverConfig {
        match self.budget {
            Some(b) => SolverConfig::with_budget(b),
            None => SolverConfig::from_env(),
        }
    }
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Perfect matching of a hypergraph file.
    Pm {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        budget: BudgetArg,
        /// Count all perfect matchings instead.
        #[arg(long)]
        count: bool,
    },
    /// Rainbow perfect matching of a family file.
    Rainbow {
        #[arg(long)]
        family: PathBuf,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Extremal-case construction.
    Extremal {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        fallback_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArg,
    },
}

#[derive(Subcommand)]
enum AbsorbCmd {
    /// Reserve, almost cover and absorption on a family.
    Pipeline {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = PipelineParams::default().gamma)]
        gamma: f64,
        #[arg(long, default_value_t = PipelineParams::default().xi)]
        xi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        fallback_n: usize,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Absorbers of a balanced set, given as "c:v1,v2,...".
    Count {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Concentration of |G ∩ B| over random matchings B.
    FkTest {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Exact solver on random above-threshold families; counterexamples go to --out.
    Sweep {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes one generated family.
    Gen {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        perturbations: usize,
        #[arg(long)]
        additions_only: bool,
        #[arg(long, default_value_t = harness::BASE_DENSITY)]
        density: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs a key=value experiment config, appending JSONL records.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Found => ExitCode::from(0),
        Status::None => ExitCode::from(1),
        Status::Timeout => ExitCode::from(2),
    }
}

fn pipeline_code(status: PipelineStatus) -> ExitCode {
    match status {
        PipelineStatus::Found => ExitCode::from(0),
        PipelineStatus::None => ExitCode::from(1),
        PipelineStatus::Timeout => ExitCode::from(2),
        PipelineStatus::Failed => ExitCode::from(3),
    }
}

fn parse_set(text: &str, n: usize) -> anyhow::Result<Vec<usize>> {
    let (color, rest) = text.split_once(':').context("expected \"c:v1,v2,...\"")?;
    let color: usize = color.trim().parse().context("color index")?;
    let mut set = rest
        .split(',')
        .map(|v| v.trim().parse::<usize>().context("vertex index"))
        .collect::<anyhow::Result<Vec<_>>>()?;
    set.push(n + color);
    set.sort_unstable();
    Ok(set)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Extremal(ExtremalCmd::Build {
            n,
            k,
            size_a,
            parity,
            out,
        }) => {
            let h = VertexPartition::prefix(n, k, size_a, parity)?.build();
            std::fs::write(&out, io::write_hypergraph(&h))?;
        }
        Command::Extremal(ExtremalCmd::Delta { n, k, l, formula_only }) => {
            let method = if formula_only {
                ThresholdMethod::Formula
            } else {
                ThresholdMethod::Enumeration
            };
            let r = extremal::delta_threshold(n, k, l, method, extremal::DEFAULT_THRESHOLD_BUDGET)?;
            println!(
                "{}",
                json!({
                    "n": r.n, "k": r.k, "l": r.l, "value": r.value,
                    "witness_size_a": r.witness.a.len(),
                    "witness_parity": r.witness.parity,
                    "method": r.method,
                })
            );
        }
        Command::Solve(SolveCmd::Pm { input, budget, count }) => {
            let h = io::read_hypergraph_file(&input)?;
            let cfg = budget.config();
            if count {
                return match solver::count_perfect_matchings(&h, &cfg) {
                    Ok(c) => {
                        println!("{c}");
                        Ok(ExitCode::from(if c > 0 { 0 } else { 1 }))
                    }
                    Err(Error::Resource { what, partial }) => {
                        eprintln!("budget exhausted in {what}; {partial}");
                        Ok(ExitCode::from(2))
                    }
                    Err(e) => Err(e.into()),
                };
            }
            let out = solver::find_perfect_matching(&h, &cfg);
            if let Some(m) = &out.matching {
                print!("{}", m.to_lines());
            }
            eprintln!("{:?} after {} nodes", out.status, out.nodes_explored);
            return Ok(status_code(out.status));
        }
        Command::Solve(SolveCmd::Rainbow { family, budget }) => {
            let family = io::read_family_file(&family)?;
            let out = solver::find_rainbow_pm(&family, &budget.config());
            if let Some(r) = &out.matching {
                for e in &r.edges {
                    println!("{}", e.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                }
            }
            eprintln!("{:?} after {} nodes", out.status, out.nodes_explored);
            return Ok(status_code(out.status));
        }
        Command::Solve(SolveCmd::Extremal {
            family,
            epsilon,
            fallback_n,
            seed,
            budget,
        }) => {
            let family = io::read_family_file(&family)?;
            let params = ExtremalParams {
                epsilon,
                fallback_n,
                seed,
                solver: budget.config(),
                ..ExtremalParams::default()
            };
            let out = extremal_solver::solve_extremal(&family, &params)?;
            println!("{}", serde_json::to_string(&out)?);
            return Ok(pipeline_code(out.status));
        }
        Command::Absorb(AbsorbCmd::Pipeline {
            family,
            gamma,
            xi,
            seed,
            fallback_n,
            budget,
        }) => {
            let family = io::read_family_file(&family)?;
            let params = PipelineParams {
                gamma,
                xi,
                seed,
                fallback_n,
                solver: budget.config(),
                ..PipelineParams::default()
            };
            let out = absorbing::run_absorbing_pipeline(&family, &params)?;
            println!("{}", serde_json::to_string(&out)?);
            return Ok(pipeline_code(out.status));
        }
        Command::Absorb(AbsorbCmd::Count {
            family,
            set,
            order,
            budget,
        }) => {
            let family = io::read_family_file(&family)?;
            let e = parse_set(&set, family.n())?;
            let t = build_rainbow_graph(&family);
            let q = absorbing::count_absorbers(&e, &t, order, budget)?;
            println!("{}", json!({ "set": q.e, "order": q.order, "count": q.count(), "absorbers": q.found }));
        }
        Command::Absorb(AbsorbCmd::FkTest {
            theta,
            t,
            samples,
            seed,
            k,
        }) => {
            let report = absorbing::fk_test(theta, t, k, samples, seed)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Closeness { family, exact, seed } => {
            let family = io::read_family_file(&family)?;
            let t = build_rainbow_graph(&family);
            let mode = if exact { SearchMode::Exact } else { SearchMode::sampled(seed) };
            let r = closeness::closeness_to_ext(&t, mode)?;
            println!(
                "{}",
                json!({
                    "epsilon": r.epsilon::<f64>(),
                    "edits": r.edits,
                    "witness_size_a": r.witness.a.len(),
                    "witness_parity": r.witness.parity,
                })
            );
        }
        Command::Goodness { input, reference, alpha } => {
            let q = io::read_hypergraph_file(&input)?;
            let r = io::read_hypergraph_file(&reference)?;
            let report = closeness::good_vertices(&q, &r, alpha)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Harness(HarnessCmd::Sweep {
            n,
            k,
            l,
            trials,
            seed,
            out,
        }) => {
            let report = harness::verify_theorem_sweep(n, k, l, trials, seed)?;
            let mut lines = String::new();
            for c in &report.counterexamples {
                lines.push_str(&serde_json::to_string(c)?);
                lines.push('\n');
            }
            std::fs::write(&out, lines)?;
            println!(
                "{}",
                json!({
                    "n": n, "k": k, "l": l, "trials": trials, "threshold": report.threshold,
                    "found": report.found, "counterexamples": report.counterexamples.len(),
                })
            );
            return Ok(ExitCode::from(if report.counterexamples.is_empty() { 0 } else { 1 }));
        }
        Command::Harness(HarnessCmd::Gen {
            kind,
            n,
            k,
            l,
            seed,
            perturbations,
            additions_only,
            density,
            out,
        }) => {
            let kind = match kind.as_str() {
                "complete" => InstanceKind::Complete,
                "extremal" => InstanceKind::Extremal,
                "perturbed-extremal" => InstanceKind::PerturbedExtremal {
                    perturbations,
                    additions_only,
                },
                "random-above-threshold" => InstanceKind::RandomAboveThreshold { density },
                "adversarial-near-extremal" => InstanceKind::AdversarialNearExtremal,
                other => bail!("unknown instance kind {other:?}"),
            };
            let spec = InstanceSpec {
                kind,
                n,
                k,
                l: l.unwrap_or(k.saturating_sub(1)),
                seed,
            };
            let family = harness::generate_instance(&spec)?;
            std::fs::write(&out, io::write_family(&family))?;
        }
        Command::Harness(HarnessCmd::Run { config, out }) => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::parse(&text)?;
            let summary = harness::run_experiment(&cfg, &out)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(64)
        }
    }
}
