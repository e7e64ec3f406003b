//! Seeded semantic bugs used to measure the sensitivity of the differential
//! suites. Off unless a [`Guard`] is alive on the current thread.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// The symbolic executor stops emitting range obligations for `+ - * -x`.
    DropOverflowCheck,
    /// The big-step core interpreter's `Catch` absorbs `OThrow 1` instead of
    /// `OThrow 0`.
    CatchCounter,
    /// Loop havoc omits the last assigned variable in name order.
    HavocSet,
    /// Translation appends a `Let` binder at the outer end of the context.
    DeBruijnShift,
    /// The witness checker accepts non-positive Farkas multipliers.
    FarkasSign,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::DropOverflowCheck,
        Mutation::CatchCounter,
        Mutation::HavocSet,
        Mutation::DeBruijnShift,
        Mutation::FarkasSign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropOverflowCheck => "drop-overflow-check",
            Mutation::CatchCounter => "catch-counter",
            Mutation::HavocSet => "havoc-set",
            Mutation::DeBruijnShift => "debruijn-shift",
            Mutation::FarkasSign => "farkas-sign",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mutation::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mutation `{s}` (expected one of: {})", names.join(", "))
            })
    }
}

thread_local! {
    static ACTIVE: Cell<Option<Mutation>> = const { Cell::new(None) };
}

/// Whether `m` is injected on this thread.
pub fn active(m: Mutation) -> bool {
    ACTIVE.with(|a| a.get() == Some(m))
}

/// Keeps a mutation injected until dropped.
#[must_use = "the mutation is removed when the guard is dropped"]
pub struct Guard {
    previous: Option<Mutation>,
}

pub fn inject(m: Mutation) -> Guard {
    let previous = ACTIVE.with(|a| a.replace(Some(m)));
    Guard { previous }
}

impl Drop for Guard {
    fn drop(&mut self) {
        ACTIVE.with(|a| a.set(self.previous));
    }
}
