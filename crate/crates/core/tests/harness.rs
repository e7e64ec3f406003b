use std::time::{Duration, Instant};

use certivex::cert::{check, emit_at, to_json, tree_digest};
use certivex::harness::{corpus, difftest, round_trip, shrink, Config, Status};
use certivex::solver::{EnumBound, Witness};
use certivex::symexec::verify_func;
use certivex::syntax::{check_well_formed, parse, Func, Program, Stmt};
use certivex::vfsem::func_correct_oracle;
use proptest::prelude::*;

const STAMP: &str = "2000-01-01T00:00:00Z";

fn cfg(programs: usize) -> Config {
    Config {
        programs,
        valuations: 16,
        ..Config::default()
    }
}

#[test]
fn generated_programs_round_trip_and_are_well_formed() {
    let cases = corpus(&cfg(200)).expect("every program survives printing and parsing");
    assert_eq!(cases.len(), 200);
    for c in &cases {
        check_well_formed(&c.func).unwrap_or_else(|e| panic!("case {}: {e}\n{}", c.index, c.source));
        assert_eq!(parse(&c.source).unwrap().main, c.func);
        assert!(round_trip(&c.func).is_some());
    }
}

#[test]
fn corpus_and_report_are_reproducible() {
    let a = corpus(&cfg(60)).unwrap();
    let b = corpus(&cfg(60)).unwrap();
    let key = |cs: &[certivex::harness::Case]| cs.iter().map(|c| (c.source.clone(), c.status.clone())).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));

    let other = corpus(&Config { seed: 43, ..cfg(60) }).unwrap();
    assert_ne!(key(&a), key(&other), "the seed selects the corpus");

    let small = Config {
        programs: 12,
        valuations: 4,
        ..Config::default()
    };
    let r1 = difftest(&small).unwrap().to_string();
    let r2 = difftest(&small).unwrap().to_string();
    assert_eq!(r1, r2);
}

#[test]
fn a_useful_fraction_of_the_corpus_verifies() {
    let cases = corpus(&cfg(200)).unwrap();
    let verified = cases.iter().filter(|c| c.status == Status::Verified).count();
    // Below a tenth the soundness properties would be checked on too few programs.
    assert!(verified * 10 >= cases.len(), "{verified} of {} verified", cases.len());
    assert!(cases.iter().any(|c| c.status == Status::Rejected));
}

fn certify(f: &Func) -> Option<(Program, certivex::cert::Certificate)> {
    let program = Program { main: f.clone() };
    let verdict = verify_func(f).ok()?;
    let cert = emit_at(&program, &verdict, STAMP).ok()?;
    Some((program, cert))
}

#[test]
fn accepted_certificates_have_correct_programs() {
    let c = cfg(150);
    let cases = corpus(&c).unwrap();
    let mut certified = 0;
    for case in cases.iter().filter(|c| c.status == Status::Verified) {
        let (_, cert) = certify(&case.func).expect("verified programs are certified");
        let report = check(&case.source, &cert);
        assert!(report.accepted(), "case {}: {report}", case.index);
        assert_eq!(report.replay_hash, tree_digest(&cert.sep_tree));
        assert_eq!(report.steps, cert.obligations.len());
        for val in certivex::harness::valuations_for(&c, case) {
            func_correct_oracle(&case.func, &val, c.fuel)
                .unwrap_or_else(|e| panic!("case {} at {val:?}: {e}\n{}", case.index, case.source));
        }
        certified += 1;
    }
    assert!(certified > 0);
}

fn enum_points(w: &Witness) -> u64 {
    match w {
        Witness::Farkas { .. } => 0,
        Witness::CaseSplit { below, above, .. } => enum_points(below) + enum_points(above),
        Witness::Enum { bounds } => {
            let inner: u64 = bounds.iter().map(|b: &EnumBound| enum_points(&b.lo_proof) + enum_points(&b.hi_proof)).sum();
            let points = bounds.iter().fold(1u64, |acc, b| {
                let width = (&b.hi - &b.lo).to_string().parse::<u64>().unwrap_or(0) + 1;
                acc.saturating_mul(width)
            });
            inner + points
        }
        Witness::Cubes { cubes } => cubes.iter().map(enum_points).sum(),
    }
}

/// Bound on checking time per unit of certificate size, where a unit is a
/// byte of certificate text or a point of an `Enum` box. The corpus below
/// measures at most about 40 ns per unit.
const CHECK_NS_PER_UNIT: u128 = 2_000;
/// Fixed start-up allowance (parsing and re-executing the source).
const CHECK_BASE: Duration = Duration::from_millis(5);

#[test]
fn checking_is_linear_in_certificate_size() {
    let cases = corpus(&cfg(200)).unwrap();
    let mut worst = 0f64;
    let mut measured = 0;
    for case in cases.iter().filter(|c| c.status == Status::Verified) {
        let (_, cert) = certify(&case.func).unwrap();
        let units = to_json(&cert).len() as u64
            + cert.obligations.iter().map(|o| enum_points(&o.witness)).sum::<u64>();
        // Best of three damps scheduler noise.
        let took = (0..3)
            .map(|_| {
                let t = Instant::now();
                assert!(check(&case.source, &cert).accepted());
                t.elapsed()
            })
            .min()
            .unwrap();
        let budget = CHECK_BASE + Duration::from_nanos((units as u128 * CHECK_NS_PER_UNIT) as u64);
        assert!(took <= budget, "case {}: {took:?} for {units} units", case.index);
        worst = worst.max(took.as_nanos() as f64 / units as f64);
        measured += 1;
    }
    assert!(measured > 0);
    eprintln!("worst {worst:.0} ns per unit over {measured} certificates");
}

#[test]
fn the_minimal_program_has_one_obligation() {
    let src = "int main()\n    //@ requires true;\n    //@ ensures result == 0;\n{\n    return 0;\n}\n";
    let p = parse(src).unwrap();
    let (_, cert) = certify(&p.main).unwrap();
    assert_eq!(cert.obligations.len(), 1);
    assert_eq!(cert.obligations[0].goal, "(0 == 0)");
    assert!(check(src, &cert).accepted());
}

fn has_division(s: &Stmt) -> bool {
    let text = format!("{s:?}");
    text.contains("Div")
}

const DIV_PROGRAM: &str = "\
int main(int a)
    //@ requires 0 <= a && a <= 10;
    //@ ensures true;
{
    int x = a + 1;
    int y = 3;
    if (x < 5) {
        y = y * 2;
    } else {
        y = y / x;
    }
    x = x - 1;
    return y;
}
";

#[test]
fn shrinking_keeps_the_failure_and_makes_progress() {
    let f = parse(DIV_PROGRAM).unwrap().main;
    let fails = |g: &Func| has_division(&g.body);
    let small = shrink(&f, fails, 1000);
    assert!(fails(&small));
    let size = |g: &Func| format!("{:?}", g.body).len();
    assert!(size(&small) < size(&f), "{small:?}");
    check_well_formed(&small).unwrap();
    // A property that never fails leaves the program alone.
    assert_eq!(shrink(&f, |_| false, 1000), f);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn shrinking_generated_programs_preserves_failure(seed in 0u64..1000, idx in 0usize..4) {
        let cases = corpus(&Config { seed, programs: 4, ..Config::default() }).unwrap();
        let f = &cases[idx].func;
        let fails = |g: &Func| g.params.len() == f.params.len() && format!("{:?}", g.body).contains("While");
        if fails(f) {
            let small = shrink(f, fails, 200);
            prop_assert!(fails(&small));
            prop_assert!(check_well_formed(&small).is_ok());
        } else {
            prop_assert_eq!(&shrink(f, fails, 200), f);
        }
    }
}
