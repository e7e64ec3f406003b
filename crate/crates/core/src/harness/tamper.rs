//! Single-field mutations of accepted certificates.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::cert::{check_text, emit_at, from_json, Certificate};
use crate::solver::forge_negative_farkas;
use crate::symexec::{verify_func, Verdict};
use crate::syntax::Program;

use super::{case_rng, Case, Config, Counterexample, ParamValues, Status, Stream, SuiteReport};

/// Fixed stamp so the pool is reproducible.
const STAMP: &str = "2000-01-01T00:00:00Z";
/// Certificates drawn from the corpus.
const POOL: usize = 16;
/// The one field whose value carries no meaning for checking.
const TIMESTAMP: &str = "/metadata/timestamp";

struct Entry {
    case: usize,
    source: String,
    cert: Certificate,
    value: Value,
    /// Per obligation, a forged witness if one exists.
    forgeries: Vec<Option<Value>>,
}

fn pointer(path: &[String]) -> String {
    path.iter()
        .map(|p| format!("/{}", p.replace('~', "~0").replace('/', "~1")))
        .collect()
}

#[derive(Clone, Copy)]
enum Target {
    Leaf,
    Array,
    Object,
}

fn targets(v: &Value, path: &mut Vec<String>, out: &mut Vec<(String, Target)>) {
    let here = pointer(path);
    if here == TIMESTAMP {
        return;
    }
    match v {
        Value::Array(items) => {
            if !items.is_empty() {
                out.push((here, Target::Array));
            }
            for (i, x) in items.iter().enumerate() {
                path.push(i.to_string());
                targets(x, path, out);
                path.pop();
            }
        }
        Value::Object(m) => {
            if !path.is_empty() {
                out.push((here, Target::Object));
            }
            for (k, x) in m {
                path.push(k.clone());
                targets(x, path, out);
                path.pop();
            }
        }
        _ => out.push((here, Target::Leaf)),
    }
}

fn mutate_string(s: &str, rng: &mut ChaCha8Rng, strings: &[String]) -> String {
    if let Ok(n) = s.parse::<i128>() {
        return match rng.gen_range(0..4) {
            0 => (n + 1).to_string(),
            1 => (n - 1).to_string(),
            2 => (-n).to_string(),
            _ => (n * 2 + 1).to_string(),
        };
    }
    let chars: Vec<char> = s.chars().collect();
    match rng.gen_range(0..4) {
        0 if !chars.is_empty() => {
            let mut c = chars.clone();
            let i = rng.gen_range(0..c.len());
            c[i] = *['0', '1', 'x', ' ', '<', '-', 'L', 'R', '/', 's']
                .choose(rng)
                .unwrap();
            c.into_iter().collect()
        }
        1 if !chars.is_empty() => {
            let mut c = chars.clone();
            c.remove(rng.gen_range(0..c.len()));
            c.into_iter().collect()
        }
        2 => format!("{s}0"),
        _ => strings.choose(rng).cloned().unwrap_or_default(),
    }
}

fn mutate_leaf(v: &Value, rng: &mut ChaCha8Rng, strings: &[String]) -> Value {
    match v {
        Value::Number(n) => {
            let n = n.as_i64().unwrap_or(0);
            Value::from(match rng.gen_range(0..4) {
                0 => n + 1,
                1 => n - 1,
                2 => -n,
                _ => n * 2 + 1,
            })
        }
        Value::String(s) => Value::String(mutate_string(s, rng, strings)),
        Value::Bool(b) => Value::Bool(!b),
        Value::Null => Value::from(0),
        _ => unreachable!("not a leaf"),
    }
}

fn mutate_array(v: &mut Value, rng: &mut ChaCha8Rng) {
    let Value::Array(items) = v else { unreachable!() };
    let i = rng.gen_range(0..items.len());
    match rng.gen_range(0..3) {
        0 => {
            items.remove(i);
        }
        1 => {
            let x = items[i].clone();
            items.insert(i, x);
        }
        _ if items.len() > 1 => {
            let j = (i + 1) % items.len();
            items.swap(i, j);
        }
        _ => {
            items.remove(i);
        }
    }
}

fn mutate_object(v: &mut Value, rng: &mut ChaCha8Rng) {
    let Value::Object(m) = v else { unreachable!() };
    if m.is_empty() || rng.gen_bool(0.3) {
        m.insert("extra".into(), Value::from(0));
    } else {
        let keys: Vec<String> = m.keys().cloned().collect();
        m.remove(keys.choose(rng).unwrap());
    }
}

fn all_strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(xs) => xs.iter().for_each(|x| all_strings(x, out)),
        Value::Object(m) => m.values().for_each(|x| all_strings(x, out)),
        _ => {}
    }
}

fn pool(cases: &[Case]) -> Vec<Entry> {
    let mut out = Vec::new();
    for case in cases.iter().filter(|c| c.status == Status::Verified) {
        if out.len() == POOL {
            break;
        }
        let Ok(verdict @ Verdict::Verified { .. }) = verify_func(&case.func) else {
            continue;
        };
        let program = Program {
            main: case.func.clone(),
        };
        let Ok(cert) = emit_at(&program, &verdict, STAMP) else {
            continue;
        };
        let Verdict::Verified { proofs, .. } = &verdict else { unreachable!() };
        let forgeries = proofs
            .iter()
            .map(|(o, _)| {
                forge_negative_farkas(o.hypotheses.as_slice(), &o.goal)
                    .map(|w| serde_json::to_value(w).expect("witness serialises"))
            })
            .collect();
        let value = serde_json::to_value(&cert).expect("certificate serialises");
        out.push(Entry {
            case: case.index,
            source: case.source.clone(),
            cert,
            value,
            forgeries,
        });
    }
    out
}

/// Applies `mutations` random single-field mutations to certificates of
/// verified corpus programs. A mutated certificate may be accepted only
/// if it deserialises to the original one.
pub fn tamper_suite(cfg: &Config, cases: &[Case], mutations: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("tamper");
    let entries = pool(cases);
    rep.cases = entries.len();
    if entries.is_empty() {
        rep.notes.push("no verified programs to certify".into());
        return rep;
    }
    // Unmutated certificates must pass, or the suite proves nothing.
    for e in &entries {
        let report = check_text(&e.source, &serde_json::to_string(&e.value).unwrap());
        if !report.accepted() {
            rep.counterexamples.push(Counterexample {
                case: e.case,
                detail: format!("original certificate {report}"),
                valuation: ParamValues::new(),
                source: e.source.clone(),
                shrunk: None,
            });
        }
    }
    let (mut neutral, mut rejected) = (0, 0);
    for i in 0..mutations {
        let mut rng = case_rng(cfg.seed, Stream::Tamper, i as u64);
        let e = entries.choose(&mut rng).unwrap();
        let mut strings = Vec::new();
        all_strings(&e.value, &mut strings);
        let mut spots = Vec::new();
        targets(&e.value, &mut Vec::new(), &mut spots);
        let mut mutated = e.value.clone();
        let mut what = String::new();
        for _ in 0..16 {
            mutated = e.value.clone();
            let (at, kind) = spots.choose(&mut rng).unwrap().clone();
            let node = mutated.pointer_mut(&at).expect("target exists");
            let forged = at
                .strip_prefix("/obligations/")
                .and_then(|r| r.strip_suffix("/witness"))
                .and_then(|r| r.parse::<usize>().ok())
                .and_then(|k| e.forgeries.get(k).cloned().flatten());
            what = match (kind, forged) {
                (Target::Object, Some(w)) if rng.gen_bool(0.5) => {
                    *node = w;
                    format!("forged witness at {at}")
                }
                (Target::Object, _) => {
                    mutate_object(node, &mut rng);
                    format!("field set changed at {at}")
                }
                (Target::Array, _) => {
                    mutate_array(node, &mut rng);
                    format!("array edited at {at}")
                }
                (Target::Leaf, _) => {
                    *node = mutate_leaf(node, &mut rng, &strings);
                    format!("value changed at {at}")
                }
            };
            if mutated != e.value {
                break;
            }
        }
        rep.checks += 1;
        let text = serde_json::to_string_pretty(&mutated).unwrap();
        let report = check_text(&e.source, &text);
        if !report.accepted() {
            rejected += 1;
        } else if from_json(&text).is_ok_and(|c| c == e.cert) {
            neutral += 1;
        } else {
            rep.counterexamples.push(Counterexample {
                case: e.case,
                detail: format!("mutation {i} accepted: {what}"),
                valuation: ParamValues::new(),
                source: e.source.clone(),
                shrunk: None,
            });
        }
    }
    rep.notes.push(format!("{rejected} rejected"));
    rep.notes.push(format!("{neutral} neutral"));
    rep
}
