use serde::{Deserialize, Serialize};

use super::Candidate;

/// Hardware budgets a candidate must fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub max_macs: u64,
    pub max_arena_bytes: u64,
    pub max_flash_bytes: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            max_macs: 470_000,
            max_arena_bytes: 264 * 1024,
            max_flash_bytes: 2 * 1024 * 1024,
        }
    }
}

impl Budgets {
    pub const UNLIMITED: Self = Self {
        max_macs: u64::MAX,
        max_arena_bytes: u64::MAX,
        max_flash_bytes: u64::MAX,
    };

    pub fn check(&self, c: &Candidate) -> BudgetCheck {
        BudgetCheck {
            macs: c.analysis.total_macs <= self.max_macs,
            arena: c.analysis.arena_bytes <= self.max_arena_bytes,
            flash: c.analysis.flash_bytes <= self.max_flash_bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub macs: bool,
    pub arena: bool,
    pub flash: bool,
}

impl BudgetCheck {
    pub fn passes(&self) -> bool {
        self.macs && self.arena && self.flash
    }
}

/// Per-budget rejection counts. A candidate can fail several budgets at once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub total: usize,
    pub kept: usize,
    pub over_macs: usize,
    pub over_arena: usize,
    pub over_flash: usize,
}

pub fn filter_candidates(cands: &[Candidate], budgets: &Budgets) -> (Vec<Candidate>, FilterCounts) {
    let mut counts = FilterCounts {
        total: cands.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for c in cands {
        let check = budgets.check(c);
        counts.over_macs += usize::from(!check.macs);
        counts.over_arena += usize::from(!check.arena);
        counts.over_flash += usize::from(!check.flash);
        if check.passes() {
            kept.push(c.clone());
        }
    }
    counts.kept = kept.len();
    (kept, counts)
}
