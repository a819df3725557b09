//! Command-line front end: evaluate terms, replay and search for rewrite
//! traces, run the differential harness, and drive the SSA pass and its
//! translation.
//!
//! Exit codes: 0 success, 1 input or replay error, 2 program raised an
//! error, 3 program reached `unreachable`, 4 fuel ran out, 5 a disagreement
//! was found, 6 search found no trace.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use unreach::eval::{eval, Observation, DEFAULT_FUEL};
use unreach::harness::{check_correctness, check_pair, HarnessConfig, HarnessReport, PoolKind};
use unreach::rewrite::{apply_trace, format_trace, normalize_unreachable, parse_trace, search_equiv, SearchConfig};
use unreach::safety::SafetyMode;
use unreach::term::{free_vars, parse_term, print_term, Const, Name, Term, VarSet};
use unreach::translate::{check_pruning, kh_proc, witness_search_config, PruningConfig};
use unreach::vminus::{
    eval_vminus, parse_vminus, print_vminus, simplify_function_cfg, simplify_unreachable, VFunction, VOutcome,
};

const EXIT_INPUT: u8 = 1;
const EXIT_ERR: u8 = 2;
const EXIT_UNDEF: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;
const EXIT_DISAGREE: u8 = 5;
const EXIT_NOT_FOUND: u8 = 6;

#[derive(Parser)]
#[command(
    name = "unreach",
    version,
    about = "A calculus with an unreachable construct, its rewrite rules, and an SSA pass"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Evaluation step limit.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Contexts for `harness`, input tuples for `vmin check83`.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Safety provider for rules that drop code: syntactic or integer.
    #[arg(long, default_value = "syntactic")]
    safety: SafetyMode,
    /// Search depth.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Search beam width.
    #[arg(long, default_value_t = 8)]
    width: usize,
}

impl Common {
    fn header(&self, cmd: &str) {
        eprintln!(
            "# unreach {cmd}: fuel={} seed={} samples={} safety={} depth={} width={}",
            self.fuel, self.seed, self.samples, self.safety, self.depth, self.width
        );
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            depth: self.depth,
            width: self.width,
            safety: self.safety,
            ..SearchConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Pool {
    Mixed,
    Integers,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a closed term and print what is observed.
    Eval {
        /// Term file, or `-` for stdin.
        #[arg(default_value = "-")]
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Replay a rewrite trace and print the resulting term.
    Rewrite {
        term: PathBuf,
        trace: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Propagate `unreachable` and eliminate branches to a fixpoint.
    Normalize {
        term: PathBuf,
        /// Also write the witness trace here.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a rewrite trace from one term to another.
    Search {
        from: PathBuf,
        to: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare a term with its rewrite under sampled closing contexts.
    Harness {
        term: PathBuf,
        /// Trace to replay on the term.
        #[arg(long, conflicts_with = "pair")]
        trace: Option<PathBuf>,
        /// Compare against this term directly instead of replaying a trace.
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Comma-separated variables to close; defaults to the free variables.
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<String>>,
        /// Compare even where the original reaches `unreachable`.
        #[arg(long)]
        unconditional: bool,
        #[arg(long, value_enum, default_value_t = Pool::Mixed)]
        pool: Pool,
        /// Print one JSON record per case.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
    /// SSA functions.
    Vmin {
        #[command(subcommand)]
        cmd: VminCmd,
    },
}

#[derive(Subcommand)]
enum VminCmd {
    /// Simplify every `unreachable` block to a fixpoint, or one block.
    Simplify {
        file: PathBuf,
        #[arg(long)]
        block: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the function on the given arguments.
    Run {
        file: PathBuf,
        #[arg(allow_hyphen_values = true)]
        args: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the function translated into a closed term.
    Translate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simplify one block and compare both translations on sampled inputs.
    Check83 {
        file: PathBuf,
        block: String,
        /// Also search for a rewrite trace between the translations.
        #[arg(long)]
        witness: bool,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure with a chosen exit code.
struct Exit(u8, anyhow::Error);

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Exit(EXIT_INPUT, e)
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_term(path: &Path) -> Result<Term> {
    let src = read_input(path)?;
    parse_term(&src).with_context(|| format!("parsing {}", path.display()))
}

fn read_function(path: &Path) -> Result<VFunction> {
    let src = read_input(path)?;
    parse_vminus(&src).with_context(|| format!("parsing {}", path.display()))
}

fn observation_code(o: &Observation) -> u8 {
    match o {
        Observation::Value(_) | Observation::Function => 0,
        Observation::ErrK(_) => EXIT_ERR,
        Observation::UndefHit => EXIT_UNDEF,
        Observation::Timeout(_) => EXIT_TIMEOUT,
    }
}

fn outcome_code(o: &VOutcome) -> u8 {
    match o {
        VOutcome::Returned(_) => 0,
        VOutcome::Errored => EXIT_ERR,
        VOutcome::HitUnreachable => EXIT_UNDEF,
        VOutcome::OutOfFuel => EXIT_TIMEOUT,
    }
}

fn run(cli: Cli) -> Result<u8, Exit> {
    match cli.cmd {
        Cmd::Eval { file, common } => {
            common.header("eval");
            let e = read_term(&file)?;
            let o = eval(&e, common.fuel).map_err(anyhow::Error::from)?;
            println!("{o}");
            Ok(observation_code(&o))
        }
        Cmd::Rewrite { term, trace, common } => {
            common.header("rewrite");
            let e = read_term(&term)?;
            let steps = parse_trace(&read_input(&trace)?).with_context(|| format!("parsing {}", trace.display()))?;
            match apply_trace(&e, &steps, common.safety) {
                Ok(out) => {
                    println!("{}", print_term(&out));
                    Ok(0)
                }
                Err(err) => Err(Exit(
                    EXIT_INPUT,
                    anyhow!("{} at step {}: {err}", err.source.kind(), err.index),
                )),
            }
        }
        Cmd::Normalize {
            term,
            emit_trace,
            common,
        } => {
            common.header("normalize");
            let e = read_term(&term)?;
            let (out, trace) = normalize_unreachable(&e, common.safety);
            println!("{}", print_term(&out));
            if let Some(path) = emit_trace {
                fs::write(&path, format_trace(&trace)).with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!("# {} steps", trace.len());
            Ok(0)
        }
        Cmd::Search { from, to, common } => {
            common.header("search");
            let (a, b) = (read_term(&from)?, read_term(&to)?);
            match search_equiv(&a, &b, &common.search()) {
                Some(trace) => {
                    print!("{}", format_trace(&trace));
                    eprintln!("# {} steps", trace.len());
                    Ok(0)
                }
                None => {
                    eprintln!("no trace within depth {}", common.depth);
                    Ok(EXIT_NOT_FOUND)
                }
            }
        }
        Cmd::Harness {
            term,
            trace,
            pair,
            delta,
            unconditional,
            pool,
            json,
            common,
        } => {
            common.header("harness");
            let e = read_term(&term)?;
            let config = HarnessConfig {
                fuel: common.fuel,
                num_contexts: common.samples,
                seed: common.seed,
                safety: common.safety,
                pool: match pool {
                    Pool::Mixed => PoolKind::Mixed,
                    Pool::Integers => PoolKind::Integers,
                },
                unconditional,
            };
            let report = match (&trace, &pair) {
                (_, Some(p)) => {
                    let other = read_term(p)?;
                    let delta = delta_or_free(delta, &[&e, &other]);
                    check_pair(&e, &other, &delta, &config).map_err(anyhow::Error::from)?
                }
                (Some(t), None) => {
                    let steps = parse_trace(&read_input(t)?).with_context(|| format!("parsing {}", t.display()))?;
                    let delta = delta_or_free(delta, &[&e]);
                    check_correctness(&e, &delta, &steps, &config).map_err(anyhow::Error::from)?
                }
                (None, None) => {
                    let delta = delta_or_free(delta, &[&e]);
                    check_correctness(&e, &delta, &[], &config).map_err(anyhow::Error::from)?
                }
            };
            print_report(&report, json);
            Ok(if report.counts.disagree > 0 { EXIT_DISAGREE } else { 0 })
        }
        Cmd::Vmin { cmd } => run_vmin(cmd),
    }
}

fn delta_or_free(delta: Option<Vec<String>>, terms: &[&Term]) -> VarSet {
    match delta {
        Some(names) => names.iter().filter(|s| !s.is_empty()).map(|s| Name::new(s)).collect(),
        None => terms.iter().flat_map(|t| free_vars(t)).collect(),
    }
}

fn print_report(report: &HarnessReport, json: bool) {
    if json {
        print!("{}", report.to_json_lines());
    } else {
        for case in report.disagreements() {
            let bundle = serde_json::to_string(&case.bundle).unwrap_or_default();
            println!("disagree in {}: {} vs {}", case.context, case.before, case.after);
            println!("  bundle {bundle}");
        }
    }
    println!("{}", report.summary());
}

fn parse_args(args: &[String]) -> Result<Vec<Const>> {
    args.iter()
        .map(|a| match parse_term(a) {
            Ok(Term::Const(c)) => Ok(c),
            _ => bail!("argument `{a}` is not a constant"),
        })
        .collect()
}

fn run_vmin(cmd: VminCmd) -> Result<u8, Exit> {
    match cmd {
        VminCmd::Simplify { file, block, common } => {
            common.header("vmin simplify");
            let f = read_function(&file)?;
            let out = match block {
                Some(l) => {
                    let (g, changed) = simplify_unreachable(&f, &Name::new(&l)).map_err(anyhow::Error::from)?;
                    eprintln!("# changed: {changed}");
                    g
                }
                None => {
                    let (g, trace) = simplify_function_cfg(&f).map_err(anyhow::Error::from)?;
                    let labels: Vec<&str> = trace.iter().map(Name::as_str).collect();
                    eprintln!("# simplified: [{}]", labels.join(", "));
                    g
                }
            };
            print!("{}", print_vminus(&out));
            Ok(0)
        }
        VminCmd::Run { file, args, common } => {
            common.header("vmin run");
            let f = read_function(&file)?;
            let args = parse_args(&args)?;
            let o = eval_vminus(&f, &args, common.fuel).map_err(anyhow::Error::from)?;
            println!("{o}");
            Ok(outcome_code(&o))
        }
        VminCmd::Translate { file, common } => {
            common.header("vmin translate");
            let f = read_function(&file)?;
            let t = kh_proc(&f).map_err(anyhow::Error::from)?;
            println!("{}", print_term(&t));
            Ok(0)
        }
        VminCmd::Check83 {
            file,
            block,
            witness,
            common,
        } => {
            common.header("vmin check83");
            let f = read_function(&file)?;
            let search = witness.then(|| SearchConfig {
                depth: common.depth,
                width: common.width,
                ..witness_search_config()
            });
            let cfg = PruningConfig {
                samples: common.samples,
                fuel: common.fuel,
                seed: common.seed,
                search,
                witness_max_blocks: usize::MAX,
            };
            let r = check_pruning(&f, &Name::new(&block), &cfg).map_err(anyhow::Error::from)?;
            for case in &r.cases {
                let args: Vec<String> = case.args.iter().map(ToString::to_string).collect();
                let after = case.after.as_ref().map_or("-".to_string(), ToString::to_string);
                println!("({}) {} / {}: {}", args.join(" "), case.before, after, case.verdict);
            }
            match &r.witness {
                Some(Some(trace)) => {
                    println!("witness:");
                    print!("{}", format_trace(trace));
                }
                Some(None) => println!("witness: none within depth {}", common.depth),
                None => {}
            }
            println!("{}", r.counts);
            Ok(if r.counts.disagree > 0 { EXIT_DISAGREE } else { 0 })
        }
    }
}

/// The error chain, skipping causes whose text the previous message
/// already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(code)
        }
    }
}
