//! `certivex` command-line driver.
//!
//! Exit codes: 0 success, 1 negative result (rejected program, failed
//! check, contract violation, counterexample), 2 incomplete or usage
//! error, 3 parse error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use certivex::cert::{self, CheckVerdict};
use certivex::corec::{
    dump_tree, func_ctx, initial_hstore, run_machine, translate_func, MachineRun, MachineState,
};
use certivex::harness::{self, Config};
use certivex::mutation::{self, Mutation};
use certivex::symexec::{verify_func, Verdict};
use certivex::syntax::{parse, simplify, Func, ParseError, Program};
use certivex::vfsem::{exec_stmt_fuel, exec_stmt_traced, func_correct_oracle, initial_store, pre_holds, VfOutcome};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCOMPLETE: u8 = 2;
const EXIT_PARSE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "certivex", version, about = "Certifying verifier for an annotated C dialect")]
struct Cli {
    /// Fuel for concrete runs: one unit per sequencing step and loop iteration.
    #[arg(long, global = true, env = "CERTIVEX_FUEL", default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Seed for random program generation.
    #[arg(long, global = true, env = "CERTIVEX_SEED", default_value_t = 42)]
    seed: u64,
    /// Number of generated programs for `difftest`.
    #[arg(long, global = true, env = "CERTIVEX_SAMPLES", default_value_t = 256)]
    samples: usize,
    /// Machine-readable JSON output.
    #[arg(long, global = true, env = "CERTIVEX_JSON")]
    json: bool,
    /// Print an execution trace, one state per line.
    #[arg(long, global = true, env = "CERTIVEX_TRACE")]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symbolically execute and discharge every obligation.
    Verify {
        file: PathBuf,
        /// Write a certificate here when the program verifies.
        #[arg(long, value_name = "PATH")]
        emit_cert: Option<PathBuf>,
    },
    /// Check a certificate against a source file.
    CheckCert { file: PathBuf, cert: PathBuf },
    /// Run the program concretely and check its contract.
    Run {
        file: PathBuf,
        /// Parameter value, `name=value`; repeatable.
        #[arg(long = "arg", value_name = "NAME=VALUE")]
        args: Vec<String>,
    },
    /// Print the core IR translation of the program body.
    Translate {
        file: PathBuf,
        /// One constructor per line instead of the compact form.
        #[arg(long)]
        tree: bool,
        /// Parameter value for the traced small-step run; repeatable.
        #[arg(long = "arg", value_name = "NAME=VALUE")]
        args: Vec<String>,
    },
    /// Differential testing over random programs.
    Difftest {
        /// Valuations tried per generated program.
        #[arg(long, env = "CERTIVEX_VALUATIONS", default_value_t = 256)]
        valuations: usize,
        /// Inject a seeded bug to check that the suites notice it.
        #[arg(long)]
        mutation: Option<Mutation>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn parse_file(path: &Path, json_out: bool) -> Result<(String, Program), Failure> {
    let source = read(path)?;
    match parse(&source) {
        Ok(p) => Ok((source, p)),
        Err(e) => Err(parse_failure(path, &e, json_out)),
    }
}

fn parse_failure(path: &Path, e: &ParseError, json_out: bool) -> Failure {
    if json_out {
        let v = json!({"verdict": "parse-error", "line": e.line, "col": e.col, "message": e.message});
        println!("{v}");
        fail(EXIT_PARSE, "")
    } else {
        fail(EXIT_PARSE, format!("{}:{e}", path.display()))
    }
}

fn param_values(f: &Func, args: &[String]) -> Result<BTreeMap<String, i64>, Failure> {
    let mut vals = BTreeMap::new();
    for a in args {
        let (name, value) = a
            .split_once('=')
            .ok_or_else(|| fail(EXIT_USAGE, format!("argument `{a}` is not NAME=VALUE")))?;
        if !f.params.iter().any(|p| p == name) {
            return Err(fail(EXIT_USAGE, format!("`{name}` is not a parameter of {}", f.name)));
        }
        let v: i32 = value
            .parse()
            .map_err(|_| fail(EXIT_USAGE, format!("value of `{name}` is not a 32-bit integer")))?;
        vals.insert(name.to_string(), i64::from(v));
    }
    if let Some(p) = f.params.iter().find(|p| !vals.contains_key(*p)) {
        return Err(fail(EXIT_USAGE, format!("missing --arg {p}=VALUE")));
    }
    Ok(vals)
}

fn cmd_verify(cli: &Cli, file: &Path, emit_cert: Option<&Path>) -> Result<(), Failure> {
    let (_, program) = parse_file(file, cli.json)?;
    let verdict = match verify_func(&program.main) {
        Ok(v) => v,
        Err(inc) => {
            if cli.json {
                let v = json!({
                    "verdict": "incomplete",
                    "obligation": inc.obligation.to_string(),
                    "reason": inc.reason,
                });
                println!("{v}");
            } else {
                println!("incomplete: {}", inc.obligation);
                println!("reason: {}", inc.reason);
            }
            return Err(fail(EXIT_INCOMPLETE, ""));
        }
    };
    match &verdict {
        Verdict::Verified { proofs, .. } => {
            if let Some(path) = emit_cert {
                let c = cert::emit(&program, &verdict).expect("verdict is verified");
                fs::write(path, cert::to_json(&c))
                    .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?;
            }
            if cli.json {
                let obligations: Vec<Value> = proofs.iter().map(|(o, _)| Value::String(o.to_string())).collect();
                let v = json!({
                    "verdict": "verified",
                    "obligations": obligations,
                    "certificate": emit_cert.map(|p| p.display().to_string()),
                });
                println!("{v}");
            } else {
                let n = proofs.len();
                println!("verified: {n} obligation{} discharged", if n == 1 { "" } else { "s" });
                for (o, _) in proofs {
                    println!("  {o}");
                }
                if let Some(p) = emit_cert {
                    println!("certificate written to {}", p.display());
                }
            }
            Ok(())
        }
        Verdict::Rejected { failed, countermodel } => {
            let model: BTreeMap<String, String> = countermodel
                .iter()
                .flatten()
                .map(|(s, v)| (s.to_string(), v.to_string()))
                .collect();
            if cli.json {
                let v = json!({
                    "verdict": "rejected",
                    "obligation": failed.to_string(),
                    "kind": failed.kind.to_string(),
                    "path": failed.path.to_string(),
                    "countermodel": model,
                });
                println!("{v}");
            } else {
                println!("rejected: {failed}");
                if !model.is_empty() {
                    let parts: Vec<String> = model.iter().map(|(s, v)| format!("{s} = {v}")).collect();
                    println!("countermodel: {}", parts.join(", "));
                }
            }
            Err(fail(EXIT_NEGATIVE, ""))
        }
    }
}

fn cmd_check_cert(cli: &Cli, file: &Path, cert_path: &Path) -> Result<(), Failure> {
    let source = read(file)?;
    let text = read(cert_path)?;
    let report = cert::check_text(&source, &text);
    if cli.json {
        let mut v = json!({
            "accepted": report.accepted(),
            "steps": report.steps,
            "replay_hash": report.replay_hash,
        });
        if let CheckVerdict::Rejected {
            phase,
            location,
            reason,
        } = &report.verdict
        {
            v["phase"] = json!(phase.to_string());
            v["location"] = json!(location);
            v["reason"] = json!(reason);
        }
        println!("{v}");
    } else {
        println!("{report}");
    }
    if report.accepted() {
        Ok(())
    } else {
        Err(fail(EXIT_NEGATIVE, ""))
    }
}

fn store_text(s: &BTreeMap<String, i64>) -> String {
    let parts: Vec<String> = s.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn cmd_run(cli: &Cli, file: &Path, args: &[String]) -> Result<(), Failure> {
    let (_, program) = parse_file(file, cli.json)?;
    let f = &program.main;
    let vals = param_values(f, args)?;
    if !pre_holds(f, &vals) {
        return Err(fail(EXIT_USAGE, "arguments do not satisfy the precondition"));
    }
    let sigma = initial_store(f, &vals);
    let mut trace = Vec::new();
    let out = if cli.trace {
        exec_stmt_traced(&sigma, &f.body, cli.fuel, &mut trace)
    } else {
        exec_stmt_fuel(&sigma, &f.body, cli.fuel)
    };
    let verdict = func_correct_oracle(f, &vals, cli.fuel);
    let store = match &out {
        VfOutcome::Normal(s) | VfOutcome::Return(_, s) => Some(store_text(s)),
        _ => None,
    };
    if cli.json {
        let v = json!({
            "outcome": out.to_string(),
            "store": store,
            "contract": verdict.as_ref().err().map_or_else(|| "ok".to_string(), |e| e.to_string()),
            "trace": if cli.trace { Some(&trace) } else { None },
        });
        println!("{v}");
    } else {
        for line in &trace {
            println!("{line}");
        }
        println!("{out}");
        if let Some(s) = store {
            println!("store {s}");
        }
        if let Err(e) = &verdict {
            if !matches!(out, VfOutcome::Ub(_)) {
                println!("contract violated: {e}");
            }
        }
    }
    verdict.map(|_| ()).map_err(|_| fail(EXIT_NEGATIVE, ""))
}

fn cmd_translate(cli: &Cli, file: &Path, tree: bool, args: &[String]) -> Result<(), Failure> {
    let (_, program) = parse_file(file, cli.json)?;
    let mut f = program.main.clone();
    f.body = simplify(&f.body);
    let core = translate_func(&f);
    let mut trace = Vec::new();
    let mut end = None;
    if cli.trace {
        let vals = param_values(&f, args)?;
        let h = initial_hstore(&func_ctx(&f), &initial_store(&f, &vals));
        end = Some(run_machine(MachineState::initial(&core, h), cli.fuel, Some(&mut trace)));
    }
    let end_text = end.map(|e| match e {
        MachineRun::Final(z) => format!("Final {z}"),
        MachineRun::Stuck(u) => format!("Stuck {u}"),
        MachineRun::Halted(v, s) => format!("Halted {v:?} {s}"),
        MachineRun::OutOfSteps => "OutOfSteps".to_string(),
    });
    if cli.json {
        let v = json!({
            "context": func_ctx(&f),
            "translation": core,
            "text": core.to_string(),
            "trace": if cli.trace { Some(&trace) } else { None },
            "end": end_text,
        });
        println!("{v}");
    } else {
        if tree {
            print!("{}", dump_tree(&core));
        } else {
            println!("{core}");
        }
        for line in &trace {
            println!("{line}");
        }
        if let Some(e) = end_text {
            println!("{e}");
        }
    }
    Ok(())
}

fn cmd_difftest(cli: &Cli, valuations: usize, m: Option<Mutation>) -> Result<(), Failure> {
    if cli.samples == 0 {
        return Err(fail(EXIT_USAGE, "--samples must be at least 1"));
    }
    if valuations == 0 {
        return Err(fail(EXIT_USAGE, "--valuations must be at least 1"));
    }
    let cfg = Config {
        fuel: cli.fuel,
        valuations,
        seed: cli.seed,
        programs: cli.samples,
        ..Config::default()
    };
    let _guard = m.map(mutation::inject);
    let report = harness::difftest(&cfg).map_err(|e| fail(EXIT_NEGATIVE, e))?;
    if cli.json {
        let suites: Vec<Value> = report
            .suites
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "cases": s.cases,
                    "checks": s.checks,
                    "counterexamples": s.counterexamples.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        let v = json!({
            "seed": report.seed,
            "programs": report.programs,
            "verified": report.verified,
            "mutation": m.map(|m| m.to_string()),
            "suites": suites,
            "counterexamples": report.counterexamples(),
        });
        println!("{v}");
    } else {
        if let Some(m) = m {
            println!("injected bug: {m}");
        }
        println!("{report}");
    }
    if report.counterexamples() == 0 {
        Ok(())
    } else {
        Err(fail(EXIT_NEGATIVE, ""))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify { file, emit_cert } => cmd_verify(&cli, file, emit_cert.as_deref()),
        Command::CheckCert { file, cert } => cmd_check_cert(&cli, file, cert),
        Command::Run { file, args } => cmd_run(&cli, file, args),
        Command::Translate { file, tree, args } => cmd_translate(&cli, file, *tree, args),
        Command::Difftest { valuations, mutation } => cmd_difftest(&cli, *valuations, *mutation),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
