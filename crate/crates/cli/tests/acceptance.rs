//! Acceptance gate. Runs without the libtest harness so that its one line
//! per criterion always reaches the test log; exits nonzero if any
//! criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::thread;
use std::time::{Duration, Instant};

use certivex::harness::{
    big_small_suite, corpus, detect, solver_oracle_suite, soundness_suite, tamper_suite, translation_suite,
    unroll_suite, Config, SensitivityConfig, Status, SuiteReport,
};
use certivex::mutation::Mutation;
use certivex::symexec::{collect_obligations, exec_func, SepNode};
use certivex::syntax::parse;

const SEED: u64 = 42;
const FUEL: u64 = 1_000_000;

/// Criterion 1.
const GOLDEN_RUN_FUEL: u64 = 100_000;
const GOLDEN_WALL: Duration = Duration::from_secs(1);
/// Criteria 2 to 4.
const PROGRAMS: usize = 500;
const MIN_VERIFIED: usize = 50;
const VALUATIONS: usize = 256;
/// Criterion 5.
const UNROLL_PROGRAMS: usize = 100;
/// Criterion 6.
const TAMPER_MUTATIONS: usize = 1000;
/// Criterion 7.
const SOLVER_INSTANCES: usize = 10_000;
/// Criterion 8: reduced suite sizes, run once per seeded bug.
const SENS_PROGRAMS: usize = 200;
const SENS_VALUATIONS: usize = 32;
const SENS_SOLVER: usize = 1000;
const SENS_TAMPER: usize = 200;
const SENS_UNROLL: usize = 30;
/// Every criterion allows zero counterexamples.
const TOLERANCE: usize = 0;

struct Outcome {
    criterion: u8,
    title: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(criterion: u8, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (passed, detail) = f();
    Outcome {
        criterion,
        title,
        passed,
        detail,
        elapsed: t.elapsed(),
    }
}

fn zero_counterexamples(r: &SuiteReport) -> (bool, String) {
    let mut detail = r.to_string();
    if let Some(c) = r.counterexamples.first() {
        detail.push_str(&format!("\n    first counterexample: {c}"));
    }
    (r.counterexamples.len() <= TOLERANCE, detail)
}

fn certivex(args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_certivex"))
        .args(args)
        .env_remove("CERTIVEX_FUEL")
        .output()
        .expect("binary runs");
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn branch_count(t: &SepNode) -> usize {
    match t {
        SepNode::Assume { rest, .. } | SepNode::Assert { rest, .. } | SepNode::Fresh { rest, .. } => branch_count(rest),
        SepNode::Branch { left, right } => 1 + branch_count(left) + branch_count(right),
        SepNode::Done => 0,
    }
}

fn golden() -> (bool, String) {
    let start = Instant::now();
    let file = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/programs/countdown.c");
    let source = std::fs::read_to_string(&file).unwrap();
    let tree = exec_func(&parse(&source).unwrap().main);
    let obligations = collect_obligations(&tree);
    let in_branch = |side: char| {
        obligations
            .iter()
            .filter(|o| o.path.to_string().starts_with(side))
            .map(|o| (o.hypotheses.as_slice().iter().map(|h| h.to_string()).collect::<Vec<_>>(), o.goal.to_string()))
            .collect::<Vec<_>>()
    };
    let left_hyps = vec!["(0 <= s0)".to_string(), "(0 < s0)".to_string()];
    let right_hyps = vec!["(0 <= s0)".to_string(), "(!(0 < s0))".to_string()];
    let left = in_branch('L');
    let right = in_branch('R');
    let mut problems = Vec::new();
    // A single branch node splits the tree into exactly two paths.
    if branch_count(&tree) != 1 {
        problems.push(format!("{} branch nodes", branch_count(&tree)));
    }
    if !left.iter().all(|(h, _)| *h == left_hyps) || !left.iter().any(|(_, g)| g == "(0 <= (s0 - 1))") {
        problems.push(format!("left branch {left:?}"));
    }
    if right != vec![(right_hyps, "(s0 == 0)".to_string())] {
        problems.push(format!("right branch {right:?}"));
    }

    let dir = std::env::temp_dir().join(format!("certivex-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cert = dir.join("countdown.cert.json");
    let (f, c) = (file.to_str().unwrap(), cert.to_str().unwrap());
    let (code, _) = certivex(&["verify", f, "--emit-cert", c]);
    if code != Some(0) {
        problems.push(format!("verify exit {code:?}"));
    }
    let (code, out) = certivex(&["check-cert", f, c]);
    if code != Some(0) {
        problems.push(format!("check-cert exit {code:?}: {}", out.trim()));
    }
    let fuel = GOLDEN_RUN_FUEL.to_string();
    let (code, out) = certivex(&["--fuel", &fuel, "run", f]);
    if code != Some(0) || out.lines().next() != Some("Return 0") {
        problems.push(format!("run exit {code:?}: {}", out.trim()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let wall = start.elapsed();
    if wall >= GOLDEN_WALL {
        problems.push(format!("took {wall:?}"));
    }
    (
        problems.is_empty(),
        if problems.is_empty() {
            format!("2 paths, {} obligations, certificate accepted, Return 0", obligations.len())
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let base = Config {
        fuel: FUEL,
        valuations: VALUATIONS,
        seed: SEED,
        programs: PROGRAMS,
        ..Config::default()
    };
    let sens = SensitivityConfig {
        base: Config {
            programs: SENS_PROGRAMS,
            valuations: SENS_VALUATIONS,
            ..base.clone()
        },
        solver_instances: SENS_SOLVER,
        tamper_mutations: SENS_TAMPER,
        unroll_programs: SENS_UNROLL,
    };

    // Timed alone so the wall-clock bound is not skewed by the suites.
    let c1 = timed(1, "golden countdown example", golden);
    let mut outcomes = thread::scope(|s| {
        let corpus_suites = s.spawn(|| {
            let cases = corpus(&base).expect("generated programs round-trip");
            let verified = cases.iter().filter(|c| c.status == Status::Verified).count();
            let c2 = timed(2, "symbolic-execution soundness", || {
                let (ok, detail) = zero_counterexamples(&soundness_suite(&base, &cases));
                (
                    ok && verified >= MIN_VERIFIED,
                    format!("{verified} of {} programs verified (need {MIN_VERIFIED}); {detail}", cases.len()),
                )
            });
            let c3 = timed(3, "translation soundness", || zero_counterexamples(&translation_suite(&base, &cases)));
            let c4 = timed(4, "big-step/small-step agreement", || {
                zero_counterexamples(&big_small_suite(&base, &cases))
            });
            let c6 = timed(6, "certificate tamper resistance", || {
                zero_counterexamples(&tamper_suite(&base, &cases, TAMPER_MUTATIONS))
            });
            vec![c2, c3, c4, c6]
        });
        let unroll = s.spawn(|| {
            timed(5, "loop unrolling", || zero_counterexamples(&unroll_suite(&base, UNROLL_PROGRAMS)))
        });
        let solver = s.spawn(|| {
            timed(7, "solver oracle agreement", || {
                zero_counterexamples(&solver_oracle_suite(SEED, SOLVER_INSTANCES))
            })
        });
        // Mutations are injected per thread, so the bugs run side by side.
        let detections: Vec<_> = Mutation::ALL
            .iter()
            .map(|&m| {
                let sens = &sens;
                s.spawn(move || detect(m, sens).expect("generated programs round-trip"))
            })
            .collect();
        let mut out = vec![c1];
        out.extend(corpus_suites.join().unwrap());
        out.push(unroll.join().unwrap());
        out.push(solver.join().unwrap());
        let t = Instant::now();
        let found: Vec<_> = detections.into_iter().map(|h| h.join().unwrap()).collect();
        let missed: Vec<String> = found
            .iter()
            .filter(|d| d.caught_by.is_empty())
            .map(|d| d.mutation.to_string())
            .collect();
        let summary: Vec<String> = found
            .iter()
            .map(|d| {
                let by: Vec<String> = d.caught_by.iter().map(|(s, n)| format!("{s} x{n}")).collect();
                format!("{} caught by [{}]", d.mutation, by.join(", "))
            })
            .collect();
        out.push(Outcome {
            criterion: 8,
            title: "harness sensitivity",
            passed: missed.is_empty(),
            detail: if missed.is_empty() {
                summary.join("; ")
            } else {
                format!("missed: {}; {}", missed.join(", "), summary.join("; "))
            },
            elapsed: t.elapsed(),
        });
        out
    });
    outcomes.sort_by_key(|o| o.criterion);

    println!("acceptance (seed {SEED}, fuel {FUEL}):");
    for o in &outcomes {
        println!(
            "[{}] criterion {}: {} ({:.1?})\n    {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.criterion,
            o.title,
            o.elapsed,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
