mod report;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use jointchoice::corpus::{self, GeneratorMode, GeneratorSpec};
use jointchoice::decompose::{lemma5_decompose, theorem2_decompose, theorem3_recover, Lead, TraceEvent};
use jointchoice::graphs::{build_system, unique_rum_check};
use jointchoice::io;
use jointchoice::measure::AnyMeasure;
use jointchoice::model::{Agent, JointChoiceRule};
use jointchoice::moebius::{
    bm_joint_with, check_marginality, check_marginality_partial, check_nonnegativity, check_recursivity,
    marginal_rules,
};
use jointchoice::oracle::{self, LpVerdict};
use jointchoice::rational::{format_rational, is_negative};
use jointchoice::Execution;

use crate::report::Report;

#[derive(Parser)]
#[command(name = "jointchoice", version, about = "Exact analysis of random joint choice rules")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the command's artifact (measure, polynomials, dataset) here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Variable cap for LP commands.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Stream one JSON line per decomposition step to stderr.
    #[arg(long, global = true)]
    trace: bool,
    /// Run data-parallel steps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BmAgent {
    Joint,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AgentArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl AgentArg {
    fn agent(self) -> Agent {
        match self {
            AgentArg::One => Agent::First,
            AgentArg::Two => Agent::Second,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LeadArg {
    Auto,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Probability,
    Signed,
    Arbitrary,
    MarginalityViolating,
}

#[derive(Subcommand)]
enum Command {
    /// Test marginality, recursivity and non-negativity.
    Check { dataset: PathBuf },
    /// Block-Marschak polynomials of the joint rule or one marginal.
    Bm {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = BmAgent::Joint)]
        agent: BmAgent,
        /// Write the marginal graph system as DOT and JSON files here.
        #[arg(long)]
        graphs_out: Option<PathBuf>,
    },
    /// Signed measure over order pairs inducing the rule.
    Decompose {
        dataset: PathBuf,
        /// Decompose one agent's marginal rule into a signed measure over orders instead.
        #[arg(long, value_enum)]
        marginal: Option<AgentArg>,
    },
    /// Recover a probability measure over order pairs via a uniquely rationalizable marginal.
    Rum {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = LeadArg::Auto)]
        lead: LeadArg,
    },
    /// Test whether one marginal has a unique random utility representation.
    Unique {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = AgentArg::One)]
        agent: AgentArg,
        /// Also run the LP probing oracle and report agreement.
        #[arg(long)]
        brute_force: bool,
    },
    /// LP: mixture of separable choice-function pairs on the given budget pairs.
    Separable {
        dataset: PathBuf,
        /// Budget pair such as "a,b|c,d"; repeat for several. Defaults to every table.
        #[arg(long)]
        budgets: Vec<String>,
    },
    /// LP: probability measure over order pairs inducing the rule.
    SepRum { dataset: PathBuf },
    /// Generate a random rule (and its generating measure).
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Where to write the generating measure, if the mode has one.
        #[arg(long)]
        measure_out: Option<PathBuf>,
    },
    /// Check that a measure file induces a dataset.
    Verify { dataset: PathBuf, measure: PathBuf },
    /// Emit a built-in example dataset.
    Fixture { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                Format::Text => {
                    let mut t = report.to_text();
                    if let Some(a) = &report.artifact {
                        t += &serde_json::to_string_pretty(a).expect("artifact serializes");
                        t.push('\n');
                    }
                    t
                }
            };
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_rule(path: &Path) -> Result<JointChoiceRule> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_dataset(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(cli: &Cli, report: &mut Report, text: String) -> Result<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            report.outputs.push(path.display().to_string());
        }
        None => report.artifact = Some(serde_json::from_str(&text)?),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Report> {
    let start = Instant::now();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut report = dispatch(cli, exec)?;
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn trace_sink() -> impl FnMut(&TraceEvent) {
    |e: &TraceEvent| eprintln!("{}", serde_json::to_string(e).expect("event serializes"))
}

fn dispatch(cli: &Cli, exec: Execution) -> Result<Report> {
    match &cli.command {
        Command::Check { dataset } => {
            let rule = read_rule(dataset)?;
            let mut r = Report::new("check", &[&dataset.display().to_string()]);
            r.detail("complete", rule.is_complete());
            if rule.is_complete() {
                r.axiom("marginality", &check_marginality(&rule)?);
                let bm = bm_joint_with(&rule, exec)?;
                r.axiom("recursivity", &check_recursivity(&bm));
                r.axiom("non-negativity", &check_nonnegativity(&bm));
            } else {
                r.axiom("marginality", &check_marginality_partial(&rule));
                r.verdict("recursivity", "skipped");
                r.verdict("non-negativity", "skipped");
            }
            Ok(r)
        }
        Command::Bm { dataset, agent, graphs_out } => {
            let rule = read_rule(dataset)?;
            rule.require_complete()?;
            let mut r = Report::new("bm", &[&dataset.display().to_string()]);
            let bm = bm_joint_with(&rule, exec)?;
            let artifact = match agent {
                BmAgent::Joint => io::joint_polys_json(&bm),
                BmAgent::One | BmAgent::Two => {
                    let a = if *agent == BmAgent::One { Agent::First } else { Agent::Second };
                    let polys = bm.marginal(a).ok_or(jointchoice::Error::MarginalityFailure(
                        check_marginality(&rule)?.witnesses.len(),
                    ))?;
                    let set = if a == Agent::First { &bm.x_set } else { &bm.y_set };
                    io::marginal_polys_json(set, a.number(), polys)
                }
            };
            r.detail("nonzero_joint_polynomials", bm.joint.nonzero().count());
            if let Some(dir) = graphs_out {
                let lead = if *agent == BmAgent::Two { Agent::Second } else { Agent::First };
                let system = build_system(&bm, lead)?;
                fs::create_dir_all(dir)?;
                let mut write = |name: String, g: &jointchoice::graphs::LatticeFlowGraph| -> Result<()> {
                    let dot = dir.join(format!("{name}.dot"));
                    fs::write(&dot, g.to_dot(&name))?;
                    let json = dir.join(format!("{name}.json"));
                    fs::write(&json, serde_json::to_string_pretty(&g.to_json())?)?;
                    r.outputs.push(dot.display().to_string());
                    r.outputs.push(json.display().to_string());
                    Ok(())
                };
                write("marginal".into(), &system.marginal)?;
                for ((x, a), g) in &system.conditionals {
                    if !g.is_zero() {
                        let ground = &system.marginal.ground;
                        let name = format!("conditional_{}_{}", ground.label(*x), ground.labels_of(*a).join(""));
                        write(name, g)?;
                    }
                }
            }
            emit(cli, &mut r, serde_json::to_string_pretty(&artifact)?)?;
            Ok(r)
        }
        Command::Decompose { dataset, marginal } => {
            let rule = read_rule(dataset)?;
            let mut sink = trace_sink();
            let trace = cli.trace.then_some(&mut sink as &mut dyn FnMut(&TraceEvent));
            let mut r = Report::new("decompose", &[&dataset.display().to_string()]);
            match marginal {
                None => {
                    let nu = theorem2_decompose(&rule, trace)?;
                    r.detail("support", nu.len());
                    r.detail("negative_weights", nu.iter().filter(|(_, w)| is_negative(w)).count());
                    let m = AnyMeasure::OrderPairs(nu);
                    r.axiom("reproduction", &oracle::verify_measure_with(&rule, &m, exec)?);
                    emit(cli, &mut r, io::serialize_measure(&m, rule.x_set(), rule.y_set()))?;
                }
                Some(agent) => {
                    let (p1, p2) = marginal_rules(&rule)?;
                    let single = if agent.agent() == Agent::First { p1 } else { p2 };
                    let (mu, outcome) = lemma5_decompose(&single, trace)?;
                    r.detail("support", mu.len());
                    r.detail("phase1_iterations", outcome.phase1_iterations);
                    r.detail("phase2_iterations", outcome.phase2_iterations);
                    r.detail("initial_negative_edges", outcome.initial_negative_edges);
                    r.detail("edges", outcome.edge_count);
                    r.axiom("reproduction", &oracle::verify_order_measure(&single, &mu)?);
                    let m = AnyMeasure::Orders(mu);
                    emit(cli, &mut r, io::serialize_measure(&m, single.set(), single.set()))?;
                }
            }
            Ok(r)
        }
        Command::Rum { dataset, lead } => {
            let rule = read_rule(dataset)?;
            let lead = match lead {
                LeadArg::Auto => Lead::Auto,
                LeadArg::One => Lead::Agent(Agent::First),
                LeadArg::Two => Lead::Agent(Agent::Second),
            };
            let nu = theorem3_recover(&rule, lead)?;
            let mut r = Report::new("rum", &[&dataset.display().to_string()]);
            r.detail("support", nu.len());
            let m = AnyMeasure::OrderPairs(nu);
            r.axiom("reproduction", &oracle::verify_measure_with(&rule, &m, exec)?);
            emit(cli, &mut r, io::serialize_measure(&m, rule.x_set(), rule.y_set()))?;
            Ok(r)
        }
        Command::Unique { dataset, agent, brute_force } => {
            let rule = read_rule(dataset)?;
            let bm = bm_joint_with(&rule, exec)?;
            let system = build_system(&bm, agent.agent())?;
            let check = unique_rum_check(&system.marginal)?;
            let mut r = Report::new("unique", &[&dataset.display().to_string()]);
            r.verdict("unique_rum", if check.unique { "unique" } else { "non-unique" });
            let ground = &system.marginal.ground;
            r.detail("supported_paths", jointchoice::graphs::count_supported_paths(&system.marginal) as u64);
            if let Some(p) = &check.failing {
                let order = jointchoice::graphs::path_to_order(p);
                r.detail("path_without_certificate", order.labels(ground).join(">"));
            }
            if *brute_force {
                let (p1, p2) = marginal_rules(&rule)?;
                let single = if agent.agent() == Agent::First { p1 } else { p2 };
                let bf = oracle::brute_force_unique_rum(&single, exec)?;
                r.verdict("oracle_agreement", if bf.is_unique() == check.unique { "pass" } else { "fail" });
            }
            Ok(r)
        }
        Command::Separable { dataset, budgets } => {
            let rule = read_rule(dataset)?;
            let pairs = budgets
                .iter()
                .map(|b| io::parse_budget_pair(b, rule.x_set(), rule.y_set()))
                .collect::<Result<Vec<_>, _>>()?;
            let listed = (!pairs.is_empty()).then_some(pairs.as_slice());
            let cap = cli.cap.unwrap_or(oracle::DEFAULT_CHOICE_PAIR_CAP);
            let mut r = Report::new("separable", &[&dataset.display().to_string()]);
            match oracle::lp_stochastic_separability(&rule, listed, cap)? {
                LpVerdict::Feasible(pi) => {
                    r.verdict("stochastic_separability", "feasible");
                    let m = AnyMeasure::ChoicePairs(pi);
                    r.axiom("certificate", &oracle::verify_measure_with(&rule, &m, exec)?);
                    emit(cli, &mut r, io::serialize_measure(&m, rule.x_set(), rule.y_set()))?;
                }
                LpVerdict::Infeasible { phase1_objective } => {
                    r.verdict("stochastic_separability", "infeasible");
                    r.detail("phase1_objective", format_rational(&phase1_objective));
                }
            }
            Ok(r)
        }
        Command::SepRum { dataset } => {
            let rule = read_rule(dataset)?;
            let cap = cli.cap.unwrap_or(oracle::DEFAULT_ORDER_PAIR_CAP);
            let mut r = Report::new("sep-rum", &[&dataset.display().to_string()]);
            match oracle::lp_separable_rum(&rule, cap)? {
                LpVerdict::Feasible(nu) => {
                    r.verdict("separable_rum", "feasible");
                    let m = AnyMeasure::OrderPairs(nu);
                    r.axiom("certificate", &oracle::verify_measure_with(&rule, &m, exec)?);
                    emit(cli, &mut r, io::serialize_measure(&m, rule.x_set(), rule.y_set()))?;
                }
                LpVerdict::Infeasible { phase1_objective } => {
                    r.verdict("separable_rum", "infeasible");
                    r.detail("phase1_objective", format_rational(&phase1_objective));
                }
            }
            Ok(r)
        }
        Command::Gen { seed, nx, ny, k, mode, measure_out } => {
            let mode = match mode {
                ModeArg::Probability => GeneratorMode::Probability,
                ModeArg::Signed => GeneratorMode::Signed,
                ModeArg::Arbitrary => GeneratorMode::Arbitrary,
                ModeArg::MarginalityViolating => GeneratorMode::MarginalityViolating,
            };
            let spec = GeneratorSpec { seed: *seed, nx: *nx, ny: *ny, k: *k, mode };
            let g = corpus::generate(&spec)?;
            if !g.rule.is_nonnegative() {
                bail!("generated rule has negative cells");
            }
            let mut r = Report::new("gen", &[]);
            r.detail("spec", serde_json::to_value(spec)?);
            if let (Some(path), Some(nu)) = (measure_out, &g.measure) {
                let m = AnyMeasure::OrderPairs(nu.clone());
                fs::write(path, io::serialize_measure(&m, g.rule.x_set(), g.rule.y_set()))?;
                r.outputs.push(path.display().to_string());
            }
            emit(cli, &mut r, io::serialize_dataset(&g.rule))?;
            Ok(r)
        }
        Command::Verify { dataset, measure } => {
            let rule = read_rule(dataset)?;
            let text = fs::read_to_string(measure).with_context(|| format!("reading {}", measure.display()))?;
            let m = io::parse_measure(&text, rule.x_set(), rule.y_set())?;
            let mut r = Report::new("verify", &[&dataset.display().to_string(), &measure.display().to_string()]);
            r.detail("measure_type", m.kind());
            r.axiom("reproduction", &oracle::verify_measure_with(&rule, &m, exec)?);
            Ok(r)
        }
        Command::Fixture { name } => {
            let f = corpus::fixture(name)?;
            let mut r = Report::new("fixture", &[name]);
            r.detail("description", f.description);
            emit(cli, &mut r, io::serialize_dataset(&f.rule))?;
            Ok(r)
        }
    }
}
