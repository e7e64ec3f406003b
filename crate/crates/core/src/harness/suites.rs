//! The property suites. Each returns a report whose counterexamples have
//! already been shrunk.

use crate::corec::{
    exec_core_counted, exec_core_fuel, func_ctx, initial_hstore, run_machine, store_rel, translate_func,
    unroll_once, CoreOutcome, MachineRun, MachineState,
};
use crate::solver::{check_witness, decide, forge_negative_farkas, Decision};
use crate::syntax::{pretty, Func, Program};
use crate::vfsem::{exec_stmt_fuel, func_correct_oracle, initial_store, pre_holds, VfOutcome};

use super::oracle::{brute_force_valid, random_instance};
use super::shrink::shrink;
use super::{
    case_rng, generate_case, sample_valuations, valuations_for, Case, Config, Counterexample, ParamValues,
    Status, Stream, SuiteReport,
};

/// Upper bound on property evaluations spent shrinking one counterexample.
pub const SHRINK_STEPS: usize = 1000;

fn source_of(f: &Func) -> String {
    pretty(&Program { main: f.clone() })
}

fn distinct(mut vals: Vec<ParamValues>) -> Vec<ParamValues> {
    vals.sort();
    vals.dedup();
    vals
}

fn counterexample(
    case: &Case,
    val: &ParamValues,
    detail: String,
    fails: impl FnMut(&Func) -> bool,
) -> Counterexample {
    let small = shrink(&case.func, fails, SHRINK_STEPS);
    Counterexample {
        case: case.index,
        detail,
        valuation: val.clone(),
        source: case.source.clone(),
        shrunk: (small != case.func).then(|| source_of(&small)),
    }
}

/// Verified programs must not fail their contract on any sampled
/// valuation.
pub fn soundness_suite(cfg: &Config, cases: &[Case]) -> SuiteReport {
    let mut rep = SuiteReport::new("soundness");
    let mut verified = 0;
    for case in cases {
        rep.cases += 1;
        if case.status != Status::Verified {
            continue;
        }
        verified += 1;
        for val in distinct(valuations_for(cfg, case)) {
            rep.checks += 1;
            if let Err(e) = func_correct_oracle(&case.func, &val, cfg.fuel) {
                let fails = |g: &Func| {
                    pre_holds(g, &val)
                        && super::status_of(g) == Status::Verified
                        && func_correct_oracle(g, &val, cfg.fuel).is_err()
                };
                rep.counterexamples
                    .push(counterexample(case, &val, format!("verified program fails: {e}"), fails));
                break;
            }
        }
    }
    rep.notes.push(format!("{verified} verified"));
    rep
}

/// Why a dialect run and a core run of the translation disagree.
fn translation_mismatch(f: &Func, val: &ParamValues, fuel: u64) -> Option<String> {
    let sigma = initial_store(f, val);
    let ctx = func_ctx(f);
    let core = translate_func(f);
    let h = initial_hstore(&ctx, &sigma);
    let compare = |fuel: u64| {
        let v = exec_stmt_fuel(&sigma, &f.body, fuel);
        let c = exec_core_fuel(&h, &core, fuel);
        let ok = match (&v, &c) {
            (VfOutcome::Normal(sv), CoreOutcome::ONormal(sh)) => store_rel(sv, &ctx, sh).is_ok(),
            (VfOutcome::Return(a, _), CoreOutcome::OReturn(b)) => a == b,
            (VfOutcome::Ub(a), CoreOutcome::Ub(b)) => a.kind == b.kind,
            (VfOutcome::FuelExhausted, CoreOutcome::FuelExhausted) => true,
            _ => false,
        };
        let exhausted = matches!(v, VfOutcome::FuelExhausted) || matches!(c, CoreOutcome::FuelExhausted);
        (ok, exhausted, format!("dialect {v}, core {c}"))
    };
    match compare(fuel) {
        (true, _, _) => None,
        (false, false, msg) => Some(msg),
        (false, true, _) => {
            let (ok, _, msg) = compare(fuel.saturating_mul(10));
            (!ok).then(|| format!("{msg} (at 10x fuel)"))
        }
    }
}

/// Dialect runs and core runs of the translation end in corresponding
/// outcomes.
pub fn translation_suite(cfg: &Config, cases: &[Case]) -> SuiteReport {
    let mut rep = SuiteReport::new("translation");
    for case in cases {
        rep.cases += 1;
        for val in distinct(valuations_for(cfg, case)) {
            rep.checks += 1;
            if let Some(msg) = translation_mismatch(&case.func, &val, cfg.fuel) {
                let fails = |g: &Func| translation_mismatch(g, &val, cfg.fuel).is_some();
                rep.counterexamples.push(counterexample(case, &val, msg, fails));
                break;
            }
        }
    }
    rep
}

/// Why the small-step machine disagrees with a terminating big-step run.
fn big_small_mismatch(f: &Func, val: &ParamValues, fuel: u64) -> Option<String> {
    let sigma = initial_store(f, val);
    let h = initial_hstore(&func_ctx(f), &sigma);
    let core = translate_func(f);
    let (big, spent) = exec_core_counted(&h, &core, fuel);
    if !matches!(big, CoreOutcome::OReturn(_) | CoreOutcome::Ub(_)) {
        return None;
    }
    // Between two fuel ticks the machine makes at most a bounded number of
    // moves per statement node.
    let cap = (spent + 1).saturating_mul(4 * (core.size() as u64 + 1));
    let small = run_machine(MachineState::initial(&core, h), cap, None);
    let ok = match (&big, &small) {
        (CoreOutcome::OReturn(a), MachineRun::Final(b)) => a == b,
        (CoreOutcome::Ub(a), MachineRun::Stuck(b)) => a.kind == b.kind,
        _ => false,
    };
    (!ok).then(|| format!("big-step {big}, small-step {small:?}"))
}

/// Terminating big-step runs are matched by the small-step machine.
pub fn big_small_suite(cfg: &Config, cases: &[Case]) -> SuiteReport {
    let mut rep = SuiteReport::new("big-small");
    for case in cases {
        rep.cases += 1;
        for val in distinct(valuations_for(cfg, case)) {
            rep.checks += 1;
            if let Some(msg) = big_small_mismatch(&case.func, &val, cfg.fuel) {
                let fails = |g: &Func| big_small_mismatch(g, &val, cfg.fuel).is_some();
                rep.counterexamples.push(counterexample(case, &val, msg, fails));
                break;
            }
        }
    }
    rep
}

/// Valuations tried per loop program in the unrolling suite.
const UNROLL_VALUATIONS: usize = 8;

fn unroll_mismatch(f: &Func, val: &ParamValues, fuel: u64) -> Option<String> {
    let sigma = initial_store(f, val);
    let h = initial_hstore(&func_ctx(f), &sigma);
    let core = translate_func(f);
    let original = exec_core_fuel(&h, &core, fuel);
    if original == CoreOutcome::FuelExhausted {
        return None;
    }
    for k in 0..core.loop_count() {
        let unrolled = unroll_once(&core, k).expect("loop index in range");
        let after = exec_core_fuel(&h, &unrolled, fuel + 1);
        if after != original {
            return Some(format!("loop {k}: original {original}, unrolled {after}"));
        }
    }
    None
}

/// Unrolling one loop once preserves terminating outcomes, given one
/// extra unit of fuel. Draws programs until `programs` of them contain a
/// loop.
pub fn unroll_suite(cfg: &Config, programs: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("unroll");
    let mut drawn = 0;
    // A derived seed keeps these programs apart from the main corpus.
    let ucfg = Config {
        seed: cfg.seed ^ 0x756e_726f_6c6c,
        ..cfg.clone()
    };
    while rep.cases < programs {
        let case = match generate_case(&ucfg, drawn) {
            Ok(c) => c,
            Err(e) => {
                rep.notes.push(e);
                drawn += 1;
                continue;
            }
        };
        drawn += 1;
        if translate_func(&case.func).loop_count() == 0 {
            continue;
        }
        rep.cases += 1;
        let mut rng = case_rng(cfg.seed, Stream::Unroll, case.index as u64);
        for val in distinct(sample_valuations(&case.func, UNROLL_VALUATIONS, &mut rng)) {
            rep.checks += 1;
            if let Some(msg) = unroll_mismatch(&case.func, &val, cfg.fuel) {
                let fails = |g: &Func| unroll_mismatch(g, &val, cfg.fuel).is_some();
                rep.counterexamples.push(counterexample(&case, &val, msg, fails));
                break;
            }
        }
    }
    rep.notes.push(format!("{drawn} programs drawn"));
    rep
}

/// `decide` against brute force on `instances` random bounded problems.
/// Valid verdicts must carry accepted witnesses, countermodels must be
/// genuine, and a forged witness for an invalid problem must be refused.
pub fn solver_oracle_suite(seed: u64, instances: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("solver-oracle");
    let (mut valid, mut forged) = (0, 0);
    for i in 0..instances {
        let mut rng = case_rng(seed, Stream::Solver, i as u64);
        let inst = random_instance(&mut rng);
        let (hyps, goal) = (inst.hyps(), inst.goal());
        rep.cases += 1;
        rep.checks += 1;
        let truth = brute_force_valid(&inst);
        let problem = match (&truth, decide(&hyps, &goal)) {
            (None, Decision::Valid(w)) => {
                valid += 1;
                check_witness(&hyps, &goal, &w).err().map(|r| format!("witness rejected: {r}"))
            }
            (Some(_), Decision::Invalid(nu)) => {
                (!inst.is_countermodel(&nu)).then(|| "countermodel does not refute the goal".to_string())
            }
            (None, Decision::Invalid(_)) => Some("valid problem decided invalid".into()),
            (Some(p), Decision::Valid(_)) => Some(format!("invalid problem decided valid, counterexample {p:?}")),
            (_, Decision::Incomplete(r)) => Some(format!("incomplete: {r}")),
        };
        let problem = problem.or_else(|| {
            truth.as_ref()?;
            let w = forge_negative_farkas(&hyps, &goal)?;
            forged += 1;
            rep.checks += 1;
            check_witness(&hyps, &goal, &w)
                .is_ok()
                .then(|| "forged witness accepted for an invalid problem".to_string())
        });
        if let Some(detail) = problem {
            rep.counterexamples.push(Counterexample {
                case: i,
                detail,
                valuation: ParamValues::new(),
                source: inst.to_string(),
                shrunk: None,
            });
        }
    }
    rep.notes.push(format!("{valid} valid"));
    rep.notes.push(format!("{forged} forged witnesses"));
    rep
}
