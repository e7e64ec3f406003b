//! Differential and property suites over randomly generated programs.
//!
//! Every random choice is drawn from a ChaCha8 stream selected by the
//! configured seed, a purpose tag and a case index, so a report is a pure
//! function of its configuration.

pub mod gen;
mod oracle;
mod shrink;
mod suites;
mod tamper;

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mutation::{self, Mutation};
use crate::symexec::{verify_func, Verdict};
use crate::syntax::{parse, pretty, BExpr, Func, IExpr, Program, Stmt, INT_MAX, INT_MIN};
use crate::vfsem::pre_holds;

pub use gen::{GenConfig, Generator};
pub use oracle::{brute_force_valid, random_instance, Instance};
pub use shrink::shrink;
pub use suites::{
    big_small_suite, solver_oracle_suite, soundness_suite, translation_suite, unroll_suite,
};
pub use tamper::tamper_suite;

#[derive(Debug, Clone)]
pub struct Config {
    pub fuel: u64,
    /// Parameter valuations tried per program.
    pub valuations: usize,
    pub seed: u64,
    /// Generated programs per corpus.
    pub programs: usize,
    pub gen: GenConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            fuel: 1_000_000,
            valuations: 256,
            seed: 42,
            programs: 256,
            gen: GenConfig::default(),
        }
    }
}

/// Purpose tags keeping the random streams of different suites apart.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Program = 1,
    Valuation = 2,
    Solver = 3,
    Tamper = 4,
    Unroll = 5,
}

pub(crate) fn case_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | index);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Verified,
    Rejected,
    Incomplete,
}

/// One generated program, after a print and re-parse round trip.
#[derive(Debug, Clone)]
pub struct Case {
    pub index: usize,
    pub func: Func,
    pub source: String,
    pub status: Status,
}

pub type ParamValues = BTreeMap<String, i64>;

/// Generates `f`'s program, prints it and parses it back. `None` if the
/// round trip changes the program.
pub fn round_trip(f: &Func) -> Option<(Func, String)> {
    let source = pretty(&Program { main: f.clone() });
    let parsed = parse(&source).ok()?.main;
    (parsed == *f).then_some((parsed, source))
}

pub fn status_of(f: &Func) -> Status {
    match verify_func(f) {
        Ok(Verdict::Verified { .. }) => Status::Verified,
        Ok(Verdict::Rejected { .. }) => Status::Rejected,
        Err(_) => Status::Incomplete,
    }
}

/// The `i`-th generated program of `cfg`'s corpus.
pub fn generate_case(cfg: &Config, i: usize) -> Result<Case, String> {
    let mut rng = case_rng(cfg.seed, Stream::Program, i as u64);
    let f = Generator::new(&mut rng, cfg.gen.clone()).func();
    let Some((func, source)) = round_trip(&f) else {
        return Err(format!("case {i}: generated program does not survive printing and parsing"));
    };
    let status = status_of(&func);
    Ok(Case {
        index: i,
        func,
        source,
        status,
    })
}

/// Generated corpus with the verification status of each program. Fails
/// on the first program that does not survive a print/parse round trip.
pub fn corpus(cfg: &Config) -> Result<Vec<Case>, String> {
    (0..cfg.programs).map(|i| generate_case(cfg, i)).collect()
}

fn literals(f: &Func) -> Vec<i64> {
    fn ie(e: &IExpr, out: &mut Vec<i64>) {
        match e {
            IExpr::Lit(v) => out.push(*v),
            IExpr::Var(_) => {}
            IExpr::Unary(_, a, _) => ie(a, out),
            IExpr::Binary(_, l, r, _) => {
                ie(l, out);
                ie(r, out);
            }
        }
    }
    fn be(b: &BExpr, out: &mut Vec<i64>) {
        match b {
            BExpr::Lit(_) => {}
            BExpr::Cmp(_, l, r) => {
                ie(l, out);
                ie(r, out);
            }
            BExpr::Not(b) => be(b, out),
            BExpr::And(l, r) | BExpr::Or(l, r) => {
                be(l, out);
                be(r, out);
            }
        }
    }
    fn st(s: &Stmt, out: &mut Vec<i64>) {
        match s {
            Stmt::Skip => {}
            Stmt::Seq(a, b) => {
                st(a, out);
                st(b, out);
            }
            Stmt::Let(_, e, b) => {
                ie(e, out);
                st(b, out);
            }
            Stmt::Assign(_, e) | Stmt::Return(e) => ie(e, out),
            Stmt::If(c, a, b) => {
                be(c, out);
                st(a, out);
                st(b, out);
            }
            Stmt::While { cond, invariant, body } => {
                be(cond, out);
                be(invariant, out);
                st(body, out);
            }
        }
    }
    let mut out = Vec::new();
    be(&f.pre, &mut out);
    st(&f.body, &mut out);
    be(&f.post, &mut out);
    out
}

/// Up to `n` parameter valuations satisfying the precondition, drawn from
/// boundary values, literals of the program and their neighbours, and
/// uniform values.
pub fn sample_valuations(f: &Func, n: usize, rng: &mut ChaCha8Rng) -> Vec<ParamValues> {
    if f.params.is_empty() {
        return if pre_holds(f, &ParamValues::new()) {
            vec![ParamValues::new(); n]
        } else {
            Vec::new()
        };
    }
    let mut pool: Vec<i64> = vec![INT_MIN, INT_MIN + 1, -1, 0, 1, INT_MAX - 1, INT_MAX];
    for v in literals(f) {
        for d in [-1, 0, 1] {
            if let Some(w) = v.checked_add(d).filter(|w| (INT_MIN..=INT_MAX).contains(w)) {
                pool.push(w);
            }
        }
    }
    pool.sort_unstable();
    pool.dedup();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 64 {
        attempts += 1;
        let val: ParamValues = f
            .params
            .iter()
            .map(|p| {
                let r: f64 = rng.gen();
                let v = if r < 0.5 {
                    *pool.choose(rng).unwrap()
                } else if r < 0.85 {
                    rng.gen_range(-500..=500)
                } else {
                    rng.gen_range(INT_MIN..=INT_MAX)
                };
                (p.clone(), v)
            })
            .collect();
        if pre_holds(f, &val) {
            out.push(val);
        }
    }
    out
}

pub fn valuations_for(cfg: &Config, case: &Case) -> Vec<ParamValues> {
    let mut rng = case_rng(cfg.seed, Stream::Valuation, case.index as u64);
    sample_valuations(&case.func, cfg.valuations, &mut rng)
}

/// A property violation, with the program reduced by shrinking.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub case: usize,
    pub detail: String,
    pub valuation: ParamValues,
    pub source: String,
    pub shrunk: Option<String>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.valuation.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(f, "case {} [{}]: {}", self.case, vals.join(", "), self.detail)?;
        match &self.shrunk {
            Some(s) => write!(f, "shrunk program:\n{s}"),
            None => write!(f, "program:\n{}", self.source),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    /// Programs or instances examined.
    pub cases: usize,
    /// Individual comparisons performed.
    pub checks: usize,
    pub counterexamples: Vec<Counterexample>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub(crate) fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            cases: 0,
            checks: 0,
            counterexamples: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, {} checks, {} counterexamples",
            self.name,
            self.cases,
            self.checks,
            self.counterexamples.len()
        )?;
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

/// Reports of the three program suites over one corpus.
#[derive(Debug, Clone)]
pub struct DiffReport {
    pub seed: u64,
    pub programs: usize,
    pub verified: usize,
    pub suites: Vec<SuiteReport>,
}

impl DiffReport {
    pub fn counterexamples(&self) -> usize {
        self.suites.iter().map(|s| s.counterexamples.len()).sum()
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}: {} programs, {} verified", self.seed, self.programs, self.verified)?;
        for s in &self.suites {
            writeln!(f, "{s}")?;
            for c in &s.counterexamples {
                writeln!(f, "{c}")?;
            }
        }
        write!(f, "{} counterexamples", self.counterexamples())
    }
}

/// Soundness, translation and big-step/small-step suites over the corpus
/// of `cfg`.
pub fn difftest(cfg: &Config) -> Result<DiffReport, String> {
    let cases = corpus(cfg)?;
    let verified = cases.iter().filter(|c| c.status == Status::Verified).count();
    Ok(DiffReport {
        seed: cfg.seed,
        programs: cases.len(),
        verified,
        suites: vec![
            soundness_suite(cfg, &cases),
            translation_suite(cfg, &cases),
            big_small_suite(cfg, &cases),
        ],
    })
}

/// Sizes of the suites run under each seeded bug.
#[derive(Debug, Clone)]
pub struct SensitivityConfig {
    pub base: Config,
    pub solver_instances: usize,
    pub tamper_mutations: usize,
    pub unroll_programs: usize,
}

/// Which suites caught one seeded bug, with their counterexample counts.
#[derive(Debug, Clone)]
pub struct Detection {
    pub mutation: Mutation,
    pub caught_by: Vec<(&'static str, usize)>,
}

/// Runs every suite with `m` injected on this thread.
pub fn detect(m: Mutation, cfg: &SensitivityConfig) -> Result<Detection, String> {
    let _guard = mutation::inject(m);
    let cases = corpus(&cfg.base)?;
    let reports = vec![
        soundness_suite(&cfg.base, &cases),
        translation_suite(&cfg.base, &cases),
        big_small_suite(&cfg.base, &cases),
        unroll_suite(&cfg.base, cfg.unroll_programs),
        solver_oracle_suite(cfg.base.seed, cfg.solver_instances),
        tamper_suite(&cfg.base, &cases, cfg.tamper_mutations),
    ];
    Ok(Detection {
        mutation: m,
        caught_by: reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| (r.name, r.counterexamples.len()))
            .collect(),
    })
}
