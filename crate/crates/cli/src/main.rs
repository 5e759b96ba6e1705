//! `syllog`: decide, normalize and inspect formulas of the three-sorted set
//! language from the command line.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage error, 3 input error,
//! 10 SAT, 20 UNSAT, 30 UNKNOWN.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use syllog_core::decider::{decide_sat, decide_sat_h, DecideError, DecideOptions, Status, Verdict};
use syllog_core::encodings::Construct;
use syllog_core::normalizer::{normalize, NormalizeError, NormalizeOptions, NormalizedConjunction};
use syllog_core::relativizer::{bound_params, build_d_star, extend_to_model, relativize, RelativizeConfig};
use syllog_core::restriction::is_3lqsr;
use syllog_core::s5::{decide_s5, parse_modal, translate_s5, Modal, S5Options};
use syllog_core::selftest::{run_selftest, SelftestConfig, Suite};
use syllog_core::{parse, render, Formula, Interpretation, Sort};

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 3;
const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNKNOWN: u8 = 30;

#[derive(Parser, Debug)]
#[command(name = "syllog", version, about = "Satisfiability for a three-sorted quantified set language")]
struct Cli {
    /// Write a machine-readable report to this path.
    #[arg(long, global = true, env = "SYLLOG_JSON", value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the model found by a decision command to this path.
    #[arg(long, global = true, env = "SYLLOG_WITNESS", value_name = "PATH")]
    witness: Option<PathBuf>,
    /// Never search domains larger than this.
    #[arg(long, global = true, env = "SYLLOG_MAX_DOMAIN", value_parser = positive)]
    max_domain: Option<usize>,
    /// Abort normalization past this many disjuncts.
    #[arg(long, global = true, env = "SYLLOG_MAX_DISJUNCTS", value_parser = positive)]
    max_disjuncts: Option<usize>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "SYLLOG_THREADS", default_value_t = 0)]
    threads: usize,
    /// Seed for the randomized suites.
    #[arg(long, global = true, env = "SYLLOG_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide satisfiability of a formula.
    Solve { file: PathBuf },
    /// Decide a formula of the bounded-cardinality fragment.
    SolveH {
        #[arg(long)]
        h: usize,
        file: PathBuf,
    },
    /// Check the link condition on every nested quantifier.
    CheckRestriction { file: PathBuf },
    /// Print the normalized conjunctions of a formula.
    Normalize { file: PathBuf },
    /// Build a small subdomain for a model and restrict the model to it.
    Relativize {
        file: PathBuf,
        /// Interpretation satisfying the formula, as JSON.
        #[arg(long)]
        interp: PathBuf,
    },
    /// Print the model-size bound of each disjunct.
    Bound { file: PathBuf },
    /// Emit the formula defining a set-theoretic construct.
    Encode {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Construct::KINDS))]
        kind: String,
        /// Parameter names in order, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "A,X")]
        vars: Vec<String>,
        /// Cardinality for the bounded powersets.
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide a modal formula through its set-theoretic translation.
    S5 {
        #[arg(long, value_enum)]
        check: Check,
        /// Write the translated formula to this path.
        #[arg(long, value_name = "PATH")]
        emit_translation: Option<PathBuf>,
        file: PathBuf,
    },
    /// Run the randomized property suites.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        /// Suites to run, comma separated; all by default.
        #[arg(long, value_delimiter = ',')]
        suites: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Check {
    Sat,
    Valid,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// An error and the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait OrInput<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrInput<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: EXIT_INPUT, error: e.into() })
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_FAILED, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("syllog: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("starting the thread pool")?;
    }
    let opts = DecideOptions { max_domain: cli.max_domain, max_disjuncts: cli.max_disjuncts, ..Default::default() };
    let nopts = NormalizeOptions { max_disjuncts: cli.max_disjuncts };
    match &cli.command {
        Command::Solve { file } => {
            let f = read_formula(file)?;
            decision(cli, "solve", decide_sat(&f, &opts))
        }
        Command::SolveH { h, file } => {
            let f = read_formula(file)?;
            decision(cli, "solve-h", decide_sat_h(&f, *h, &opts))
        }
        Command::CheckRestriction { file } => {
            let f = read_formula(file)?;
            let report = is_3lqsr(&f);
            for e in &report.entries {
                println!("{:<8} {} within {}", verdict_name(e.verdict), e.inner_atom, e.outer_atom);
            }
            println!("member: {}", if report.member { "yes" } else { "no" });
            let mut doc = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
            doc["command"] = json!("check-restriction");
            write_json(cli, &doc)?;
            Ok(if report.member { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Normalize { file } => {
            let f = read_formula(file)?;
            let conjs = normalize(&f, &nopts).input()?;
            for c in &conjs {
                println!("{}", render(&c.to_formula()));
            }
            let doc = json!({
                "command": "normalize",
                "conjunctions": conjs.iter().map(NormalizedConjunction::to_json).collect::<Vec<_>>(),
            });
            write_json(cli, &doc)?;
            Ok(EXIT_OK)
        }
        Command::Bound { file } => {
            let f = read_formula(file)?;
            let conjs = normalize(&f, &nopts).input()?;
            let mut rows = Vec::new();
            let mut max = 0;
            for (i, c) in conjs.iter().enumerate() {
                let p = bound_params(c);
                let b = p.value();
                max = max.max(b);
                println!(
                    "disjunct {}: {b} (individuals {}, sets {}, nested {}, set prefix {}, nested prefix {})",
                    i + 1,
                    p.individuals,
                    p.sets,
                    p.nested,
                    p.max_set_prefix,
                    p.max_nested_prefix
                );
                rows.push(json!({ "formula": render(&c.to_formula()), "params": p, "bound": b }));
            }
            if conjs.is_empty() {
                println!("no satisfiable disjuncts");
            } else {
                println!("bound: {max}");
            }
            write_json(cli, &json!({ "command": "bound", "disjuncts": rows, "bound": max }))?;
            Ok(EXIT_OK)
        }
        Command::Relativize { file, interp } => relativize_cmd(cli, file, interp, &nopts),
        Command::Encode { kind, vars, h, out } => {
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            let c = Construct::from_kind(kind, &names, *h).map_err(|e| anyhow!(e)).input()?;
            let f = c.encode();
            let text = render(&f);
            match out {
                Some(p) => write_text(p, &text)?,
                None => println!("{text}"),
            }
            let doc = json!({
                "command": "encode",
                "kind": kind,
                "formula": text,
                "restricted": is_3lqsr(&f).member,
            });
            write_json(cli, &doc)?;
            Ok(EXIT_OK)
        }
        Command::S5 { check, emit_translation, file } => {
            let src = read(file)?;
            let phi = parse_modal(src.trim()).map_err(|e| anyhow!("{}: {e}", file.display())).input()?;
            if let Some(p) = emit_translation {
                write_text(p, &render(&translate_s5(&phi, true).formula()))?;
            }
            let s5opts = S5Options { decide: opts, ..Default::default() };
            let target = match check {
                Check::Sat => phi.clone(),
                Check::Valid => Modal::not(phi.clone()),
            };
            let v = decide_s5(&target, &s5opts).map_err(decide_failure)?;
            let (answer, code) = match (check, v.status) {
                (Check::Sat, Status::Sat) => ("SAT", EXIT_SAT),
                (Check::Sat, Status::Unsat) => ("UNSAT", EXIT_UNSAT),
                (Check::Valid, Status::Unsat) => ("valid", EXIT_OK),
                (Check::Valid, Status::Sat) => ("not valid", EXIT_FAILED),
                (_, Status::Unknown) => ("UNKNOWN", EXIT_UNKNOWN),
            };
            println!("{answer}");
            write_witness(cli, &v)?;
            let doc = json!({
                "command": "s5",
                "formula": phi.to_string(),
                "check": match check { Check::Sat => "sat", Check::Valid => "valid" },
                "answer": answer,
                "verdict": v.to_json(),
            });
            write_json(cli, &doc)?;
            Ok(code)
        }
        Command::Selftest { cases, suites } => {
            let suites = if suites.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suites
                    .iter()
                    .map(|s| {
                        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| anyhow!("unknown suite `{s}`"))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .input()?
            };
            let report = run_selftest(&SelftestConfig { seed: cli.seed, cases: *cases, suites });
            for r in &report.suites {
                println!(
                    "{:<22} {} cases, {} checks, {} violations",
                    r.suite.name(),
                    r.cases,
                    r.checked,
                    r.violations
                );
                if let Some(v) = &r.first_violation {
                    println!("  first violation: {v}");
                }
            }
            let mut doc = serde_json::to_value(&report).map_err(anyhow::Error::from)?;
            doc["command"] = json!("selftest");
            doc["passed"] = json!(report.passed());
            write_json(cli, &doc)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

fn verdict_name(c: syllog_core::restriction::Certification) -> &'static str {
    use syllog_core::restriction::Certification::*;
    match c {
        Schema => "schema",
        Decided => "decided",
        Violated => "VIOLATED",
    }
}

fn decide_failure(e: DecideError) -> Failure {
    let code = match &e {
        DecideError::WitnessRejected => EXIT_FAILED,
        DecideError::TooLarge(_) | DecideError::Normalize(NormalizeError::TooManyDisjuncts(_)) => EXIT_UNKNOWN,
        _ => EXIT_INPUT,
    };
    Failure { code, error: e.into() }
}

fn decision(cli: &Cli, command: &str, v: Result<Verdict, DecideError>) -> Result<u8, Failure> {
    let v = v.map_err(decide_failure)?;
    let (name, code) = match v.status {
        Status::Sat => ("SAT", EXIT_SAT),
        Status::Unsat => ("UNSAT", EXIT_UNSAT),
        Status::Unknown => ("UNKNOWN", EXIT_UNKNOWN),
    };
    println!("{name}");
    println!("bound: {}", v.bound);
    if let Some(w) = &v.witness {
        println!("witness: {}", w.to_json());
    }
    write_witness(cli, &v)?;
    let mut doc = v.to_json();
    doc["command"] = json!(command);
    write_json(cli, &doc)?;
    Ok(code)
}

fn relativize_cmd(cli: &Cli, file: &Path, interp: &Path, nopts: &NormalizeOptions) -> Result<u8, Failure> {
    let f = read_formula(file)?;
    let raw: Value = serde_json::from_str(&read(interp)?)
        .with_context(|| format!("{}: not JSON", interp.display()))
        .input()?;
    let m = Interpretation::from_json(&raw).map_err(|e| anyhow!("{}: {e}", interp.display())).input()?;
    let conjs = normalize(&f, nopts).input()?;
    let mut found = None;
    for c in &conjs {
        if let Some(ext) = extend_to_model(&m, c).input()? {
            found = Some((c, ext));
            break;
        }
    }
    let (conj, model) =
        found.ok_or_else(|| anyhow!("the interpretation satisfies no normalized disjunct")).input()?;
    let ws = build_d_star(&model, conj).input()?;
    let cfg = RelativizeConfig {
        preserved_sets: conj.inventory.free(Sort::Set).iter().cloned().collect(),
        default_elem: None,
    };
    let r = relativize(&model, &ws.as_set(), &cfg).input()?;
    let satisfied = syllog_core::evaluate(&r.interpretation, &conj.to_formula()).input()?;
    println!("conjunction: {}", render(&conj.to_formula()));
    for (e, p) in &ws.elements {
        println!("{e}: {}", serde_json::to_string(p).map_err(anyhow::Error::from)?);
    }
    println!("relativized: {}", r.interpretation.to_json());
    println!("satisfied: {satisfied}");
    let doc = json!({
        "command": "relativize",
        "conjunction": render(&conj.to_formula()),
        "domain_witness_set": ws,
        "index_map": r.index_map,
        "default_elem": r.default_elem,
        "relativized": r.interpretation.to_json(),
        "satisfied": satisfied,
    });
    write_json(cli, &doc)?;
    Ok(if satisfied { EXIT_OK } else { EXIT_FAILED })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).input()
}

fn read_formula(path: &Path) -> Result<Formula, Failure> {
    let src = read(path)?;
    parse(&src).map_err(|e| anyhow!("{}: {e}", path.display())).input()
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json(cli: &Cli, doc: &Value) -> Result<(), Failure> {
    if let Some(p) = &cli.json {
        write_text(p, &serde_json::to_string_pretty(doc).map_err(anyhow::Error::from)?)?;
    }
    Ok(())
}

fn write_witness(cli: &Cli, v: &Verdict) -> Result<(), Failure> {
    if let (Some(p), Some(w)) = (&cli.witness, &v.witness) {
        write_text(p, &serde_json::to_string_pretty(&w.to_json()).map_err(anyhow::Error::from)?)?;
    }
    Ok(())
}
