//! Certificates of successful verification runs and their independent
//! checker.
//!
//! The checker re-parses the source, re-runs symbolic execution and
//! translation, and checks each recorded witness. It never calls the
//! solver's search.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corec::{translate_func, CoreStmt};
use crate::solver::{check_witness, Witness};
use crate::symexec::{collect_obligations, exec_func, SepNode, Side, Verdict};
use crate::symstore::SymProp;
use crate::syntax::{parse, pretty, simplify, Func, Program};

pub const CERT_VERSION: &str = "certivex-cert/1";
pub const TOOL: &str = "certivex";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contract {
    pub name: String,
    pub params: Vec<String>,
    pub pre: String,
    pub post: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binding {
    pub var: String,
    pub sym: String,
}

/// Single-successor SEP node in textual form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SepItem {
    Assume(String),
    Assert {
        prop: String,
        kind: String,
        loc: Option<String>,
    },
    Fresh(Vec<Binding>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentEnd {
    Branch,
    Done,
}

/// Maximal run of single-successor nodes below a branch choice. Segments
/// are listed in pre-order, left before right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub path: String,
    pub nodes: Vec<SepItem>,
    pub end: SegmentEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertObligation {
    pub path: String,
    pub kind: String,
    pub hypotheses: Vec<String>,
    pub goal: String,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub version: String,
    pub program_digest: String,
    pub func_contract: Contract,
    pub sep_tree: Vec<Segment>,
    pub obligations: Vec<CertObligation>,
    pub translation: CoreStmt,
    pub metadata: Metadata,
}

/// `sha256:` followed by the hex digest of the canonical source text.
pub fn program_digest(p: &Program) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(pretty(p).as_bytes())))
}

pub fn contract_of(f: &Func) -> Contract {
    Contract {
        name: f.name.clone(),
        params: f.params.clone(),
        pre: crate::syntax::pretty::bexpr(&f.pre),
        post: crate::syntax::pretty::bexpr(&f.post),
    }
}

fn path_text(branches: &[Side]) -> String {
    branches
        .iter()
        .map(|s| match s {
            Side::Left => 'L',
            Side::Right => 'R',
        })
        .collect()
}

/// Flattens a SEP tree into path segments.
pub fn segments(t: &SepNode) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut stack = vec![(t, Vec::new())];
    while let Some((mut node, path)) = stack.pop() {
        let mut nodes = Vec::new();
        let end = loop {
            match node {
                SepNode::Assume { prop, rest } => {
                    nodes.push(SepItem::Assume(prop.to_string()));
                    node = rest;
                }
                SepNode::Assert { prop, kind, loc, rest } => {
                    nodes.push(SepItem::Assert {
                        prop: prop.to_string(),
                        kind: kind.to_string(),
                        loc: loc.map(|l| l.to_string()),
                    });
                    node = rest;
                }
                SepNode::Fresh { bindings, rest } => {
                    nodes.push(SepItem::Fresh(
                        bindings
                            .iter()
                            .map(|(x, s)| Binding {
                                var: x.clone(),
                                sym: s.to_string(),
                            })
                            .collect(),
                    ));
                    node = rest;
                }
                SepNode::Branch { left, right } => {
                    let mut r = path.clone();
                    r.push(Side::Right);
                    stack.push((&**right, r));
                    let mut l = path.clone();
                    l.push(Side::Left);
                    stack.push((&**left, l));
                    break SegmentEnd::Branch;
                }
                SepNode::Done => break SegmentEnd::Done,
            }
        };
        out.push(Segment {
            path: path_text(&path),
            nodes,
            end,
        });
    }
    out
}

/// SHA-256 of the canonical JSON of a segment list.
pub fn tree_digest(segs: &[Segment]) -> String {
    let json = serde_json::to_string(segs).expect("segments serialise");
    format!("sha256:{}", hex::encode(Sha256::digest(json.as_bytes())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("only verified runs have certificates")]
pub struct NotVerified;

/// Certificate of a verified run of `p`, stamped with the current time.
pub fn emit(p: &Program, verdict: &Verdict) -> Result<Certificate, NotVerified> {
    let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    emit_at(p, verdict, &now)
}

/// As [`emit`] with an explicit timestamp.
pub fn emit_at(p: &Program, verdict: &Verdict, timestamp: &str) -> Result<Certificate, NotVerified> {
    let Verdict::Verified { tree, proofs } = verdict else {
        return Err(NotVerified);
    };
    let obligations = proofs
        .iter()
        .map(|(o, w)| CertObligation {
            path: o.path.to_string(),
            kind: o.kind.to_string(),
            hypotheses: o.hypotheses.as_slice().iter().map(|h| h.to_string()).collect(),
            goal: o.goal.to_string(),
            witness: w.clone(),
        })
        .collect();
    let mut f = p.main.clone();
    f.body = simplify(&f.body);
    Ok(Certificate {
        version: CERT_VERSION.to_string(),
        program_digest: program_digest(p),
        func_contract: contract_of(&p.main),
        sep_tree: segments(tree),
        obligations,
        translation: translate_func(&f),
        metadata: Metadata {
            tool: TOOL.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp: timestamp.to_string(),
        },
    })
}

/// Canonical file text: pretty JSON in declaration order, newline-terminated.
pub fn to_json(c: &Certificate) -> String {
    let mut s = serde_json::to_string_pretty(c).expect("certificate serialises");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Certificate, serde_json::Error> {
    serde_json::from_str(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Format,
    Digest,
    Replay,
    Witness,
    Translation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Format => "format",
            Phase::Digest => "digest",
            Phase::Replay => "replay",
            Phase::Witness => "witness",
            Phase::Translation => "translation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckVerdict {
    Accepted,
    Rejected {
        phase: Phase,
        location: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: CheckVerdict,
    /// Witnesses checked before the verdict was reached.
    pub steps: usize,
    /// Digest of the re-derived SEP tree; empty if replay was not reached.
    pub replay_hash: String,
}

impl CheckReport {
    pub fn accepted(&self) -> bool {
        self.verdict == CheckVerdict::Accepted
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            CheckVerdict::Accepted => write!(f, "accepted ({} witnesses, tree {})", self.steps, self.replay_hash),
            CheckVerdict::Rejected {
                phase,
                location,
                reason,
            } => write!(f, "rejected in phase {phase} at {location}: {reason}"),
        }
    }
}

struct Reporter {
    steps: usize,
    replay_hash: String,
}

impl Reporter {
    fn reject(&self, phase: Phase, location: impl Into<String>, reason: impl Into<String>) -> CheckReport {
        CheckReport {
            verdict: CheckVerdict::Rejected {
                phase,
                location: location.into(),
                reason: reason.into(),
            },
            steps: self.steps,
            replay_hash: self.replay_hash.clone(),
        }
    }
}

/// Checks certificate text against `source`.
pub fn check_text(source: &str, cert_text: &str) -> CheckReport {
    match from_json(cert_text) {
        Ok(c) => check(source, &c),
        Err(e) => Reporter {
            steps: 0,
            replay_hash: String::new(),
        }
        .reject(Phase::Format, format!("{}:{}", e.line(), e.column()), e.to_string()),
    }
}

fn first_diff<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    (0..a.len().max(b.len())).find(|&i| a.get(i) != b.get(i))
}

/// Accepts only if the source matches the digest and contract, the SEP
/// tree and obligation list re-derive exactly, every witness checks, and
/// the translation re-derives exactly.
pub fn check(source: &str, c: &Certificate) -> CheckReport {
    let mut r = Reporter {
        steps: 0,
        replay_hash: String::new(),
    };
    if c.version != CERT_VERSION {
        return r.reject(Phase::Format, "version", format!("unsupported format `{}`", c.version));
    }
    if c.metadata.tool != TOOL || c.metadata.tool_version != TOOL_VERSION {
        return r.reject(
            Phase::Format,
            "metadata",
            format!(
                "produced by {} {}, checker is {TOOL} {TOOL_VERSION}",
                c.metadata.tool, c.metadata.tool_version
            ),
        );
    }
    if chrono::DateTime::parse_from_rfc3339(&c.metadata.timestamp).is_err() {
        return r.reject(Phase::Format, "metadata.timestamp", "not an RFC 3339 timestamp");
    }

    let program = match parse(source) {
        Ok(p) => p,
        Err(e) => return r.reject(Phase::Digest, format!("source {}:{}", e.line, e.col), e.message),
    };
    if program_digest(&program) != c.program_digest {
        return r.reject(Phase::Digest, "program_digest", "source does not match the certified program");
    }
    if contract_of(&program.main) != c.func_contract {
        return r.reject(Phase::Digest, "func_contract", "contract does not match the source");
    }

    let tree = exec_func(&program.main);
    let segs = segments(&tree);
    r.replay_hash = tree_digest(&segs);
    if let Some(i) = first_diff(&segs, &c.sep_tree) {
        let at = c.sep_tree.get(i).map_or_else(|| format!("sep_tree[{i}]"), |s| format!("sep_tree[{i}] ({}/)", s.path));
        return r.reject(Phase::Replay, at, "SEP tree differs from symbolic execution of the source");
    }
    let obligations = collect_obligations(&tree);
    if obligations.len() != c.obligations.len() {
        return r.reject(
            Phase::Replay,
            "obligations",
            format!("{} obligations recorded, {} re-derived", c.obligations.len(), obligations.len()),
        );
    }
    for (i, (o, co)) in obligations.iter().zip(&c.obligations).enumerate() {
        let hyps: Vec<String> = o.hypotheses.as_slice().iter().map(SymProp::to_string).collect();
        if co.path != o.path.to_string() || co.kind != o.kind.to_string() || co.hypotheses != hyps || co.goal != o.goal.to_string()
        {
            return r.reject(Phase::Replay, format!("obligations[{i}]"), format!("does not match re-derived {o}"));
        }
    }

    for (i, (o, co)) in obligations.iter().zip(&c.obligations).enumerate() {
        if let Err(e) = check_witness(o.hypotheses.as_slice(), &o.goal, &co.witness) {
            return r.reject(Phase::Witness, format!("obligations[{i}] ({})", o.path), e.to_string());
        }
        r.steps += 1;
    }

    let mut f = program.main.clone();
    f.body = simplify(&f.body);
    if translate_func(&f) != c.translation {
        return r.reject(Phase::Translation, "translation", "does not equal the translation of the source");
    }

    CheckReport {
        verdict: CheckVerdict::Accepted,
        steps: r.steps,
        replay_hash: r.replay_hash,
    }
}
