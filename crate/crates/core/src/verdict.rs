use serde::{Deserialize, Serialize};

/// Outcome of a sampled check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every sample point was skipped as degenerate.
    DegeneratePointsOnly,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Aggregates per-point outcomes; `tested == 0` means nothing was checkable.
    pub fn aggregate(tested: usize, failed: usize) -> Self {
        if tested == 0 {
            Verdict::DegeneratePointsOnly
        } else if failed == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}
