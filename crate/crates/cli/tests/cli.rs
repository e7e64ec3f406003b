use std::path::PathBuf;
use std::process::{Command, Output};

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/programs").join(name)
}

fn certivex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certivex"))
        .args(args)
        .env_remove("CERTIVEX_FUEL")
        .env_remove("CERTIVEX_SEED")
        .env_remove("CERTIVEX_SAMPLES")
        .env_remove("CERTIVEX_JSON")
        .env_remove("CERTIVEX_TRACE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(name: &str) -> String {
    program(name).display().to_string()
}

#[test]
fn verify_emits_a_certificate_that_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("countdown.cert.json");
    let cert = cert.to_str().unwrap();
    let out = certivex(&["verify", &p("countdown.c"), "--emit-cert", cert]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("4 obligations"));
    let out = certivex(&["check-cert", &p("countdown.c"), cert]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("accepted"));
}

#[test]
fn check_cert_rejects_wrong_source_and_tampered_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let cert_s = cert.to_str().unwrap();
    assert_eq!(certivex(&["verify", &p("countdown.c"), "--emit-cert", cert_s]).status.code(), Some(0));

    let out = certivex(&["check-cert", &p("return_zero.c"), cert_s]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("phase digest"), "{}", stdout(&out));

    let text = std::fs::read_to_string(&cert).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mult = v["obligations"][2]["witness"]["farkas"]["combination"][0]["mult"]
        .as_str()
        .expect("the invariant-preservation witness is a Farkas combination")
        .to_string();
    v["obligations"][2]["witness"]["farkas"]["combination"][0]["mult"] = format!("-{mult}").into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = certivex(&["--json", "check-cert", &p("countdown.c"), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["accepted"], false);
    assert_eq!(report["phase"], "witness");
}

#[test]
fn verify_exit_codes() {
    let out = certivex(&["verify", &p("countdown_wrong_post.c")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("countermodel: s0 = 0"), "{}", stdout(&out));

    let out = certivex(&["verify", &p("missing_invariant.c")]);
    assert_eq!(out.status.code(), Some(3));

    let out = certivex(&["--json", "verify", &p("countdown_wrong_post.c")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "rejected");
    assert_eq!(v["kind"], "postcondition");
    assert_eq!(v["countermodel"]["s0"], "0");

    let out = certivex(&["--json", "verify", &p("missing_invariant.c")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "parse-error");
    assert_eq!(v["line"], 6);
}

#[test]
fn verify_programs_with_parameters() {
    for name in ["clamp.c", "sum_to.c"] {
        let out = certivex(&["verify", &p(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
    }
}

#[test]
fn run_outcomes() {
    let out = certivex(&["run", &p("countdown.c")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next(), Some("Return 0"));

    let out = certivex(&["run", &p("div_zero.c")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out).lines().next(), Some("UB DivByZero @ 6:14"));

    let out = certivex(&["--fuel", "100", "run", &p("spin.c")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "FuelExhausted");

    let out = certivex(&["run", &p("clamp.c"), "--arg", "a=500", "--arg", "b=7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next(), Some("Return 7"));

    let out = certivex(&["run", &p("clamp.c"), "--arg", "a=1"]);
    assert_eq!(out.status.code(), Some(2), "missing parameter value is a usage error");
}

#[test]
fn run_trace_lists_rules() {
    let out = certivex(&["--trace", "run", &p("return_zero.c")]);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("Return 0 ")), "{text}");
}

#[test]
fn translate_forms() {
    let out = certivex(&["translate", &p("countdown.c")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Catch(Loop(Seq(If("));

    let out = certivex(&["translate", &p("return_zero.c")]);
    assert_eq!(stdout(&out).trim(), "Ret(Lit 0)");

    let out = certivex(&["translate", "--tree", &p("countdown.c")]);
    let text = stdout(&out);
    assert!(text.lines().count() >= 10, "one constructor per line: {text}");

    let out = certivex(&["translate", &p("missing_invariant.c")]);
    assert_eq!(out.status.code(), Some(3));

    let out = certivex(&["--trace", "translate", &p("return_zero.c")]);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("Down Ret(Lit 0)")), "{text}");
    assert_eq!(text.lines().last(), Some("Final 0"));
}

#[test]
fn difftest_small_run_and_usage_error() {
    let out = certivex(&["--samples", "0", "difftest"]);
    assert_eq!(out.status.code(), Some(2));

    let out = certivex(&["--samples", "12", "--seed", "7", "difftest", "--valuations", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.starts_with("seed 7: 12 programs"), "{text}");
    assert!(text.trim_end().ends_with("0 counterexamples"));
}

#[test]
fn difftest_is_reproducible() {
    let args = ["--json", "--samples", "10", "--seed", "3", "difftest", "--valuations", "4"];
    let a = certivex(&args);
    let b = certivex(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn difftest_reports_an_injected_bug() {
    let out = certivex(&["--samples", "40", "difftest", "--valuations", "8", "--mutation", "catch-counter"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("injected bug: catch-counter"));
}

#[test]
fn env_overrides_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_certivex"))
        .args(["run", &p("spin.c")])
        .env("CERTIVEX_FUEL", "50")
        .output()
        .unwrap();
    assert_eq!(stdout(&out).trim(), "FuelExhausted");
}
