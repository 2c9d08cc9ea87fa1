use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::NODE_COST;
use crate::error::{Error, Result};

/// Byte budget for FP-tree nodes and the mining workspace.
///
/// A tree under construction may use `(100 - headroom_percent)%` of the
/// budget; the rest is left for the conditional trees built while mining it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub bytes: u64,
    pub headroom_percent: u64,
}

impl MemoryBudget {
    pub const DEFAULT_HEADROOM_PERCENT: u64 = 10;

    pub fn new(bytes: u64) -> Self {
        MemoryBudget {
            bytes,
            headroom_percent: Self::DEFAULT_HEADROOM_PERCENT,
        }
    }

    /// No practical limit.
    pub fn unlimited() -> Self {
        Self::new(u64::MAX / 2)
    }

    /// Smallest budget whose node limit is exactly `nodes`.
    pub fn with_node_limit(nodes: u64) -> Self {
        let usable = 100 - Self::DEFAULT_HEADROOM_PERCENT;
        let bytes = (nodes * NODE_COST * 100).div_ceil(usable);
        let b = Self::new(bytes);
        debug_assert_eq!(b.node_limit(), nodes);
        b
    }

    /// Largest node count a tree may reach before construction aborts.
    pub fn node_limit(&self) -> u64 {
        let usable = 100 - self.headroom_percent.min(100);
        (self.bytes as u128 * usable as u128 / 100 / NODE_COST as u128) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_limit() < 1 {
            return Err(Error::BudgetTooSmall { budget: self.bytes });
        }
        Ok(())
    }
}

#[derive(Debug)]
struct TrackerState {
    budget: u64,
    in_use: AtomicU64,
    peak: AtomicU64,
    violations: AtomicU64,
}

/// Tracks bytes held by live trees against the budget.
///
/// Exceeding the budget is allowed (mining completes) but each crossing is
/// counted as a violation.
#[derive(Clone, Debug)]
pub struct MemoryTracker(Arc<TrackerState>);

impl MemoryTracker {
    pub fn new(budget: &MemoryBudget) -> Self {
        MemoryTracker(Arc::new(TrackerState {
            budget: budget.bytes,
            in_use: AtomicU64::new(0),
            peak: AtomicU64::new(0),
            violations: AtomicU64::new(0),
        }))
    }

    #[inline]
    pub(crate) fn alloc(&self, bytes: u64) {
        let s = &self.0;
        let before = s.in_use.fetch_add(bytes, Ordering::Relaxed);
        let now = before + bytes;
        s.peak.fetch_max(now, Ordering::Relaxed);
        if before <= s.budget && now > s.budget {
            s.violations.fetch_add(1, Ordering::Relaxed);
        }
    }

    #[inline]
    pub(crate) fn release(&self, bytes: u64) {
        self.0.in_use.fetch_sub(bytes, Ordering::Relaxed);
    }

    pub fn in_use(&self) -> u64 {
        self.0.in_use.load(Ordering::Relaxed)
    }

    pub fn peak(&self) -> u64 {
        self.0.peak.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> u64 {
        self.0.violations.load(Ordering::Relaxed)
    }

    pub fn budget(&self) -> u64 {
        self.0.budget
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_limit_round_trips() {
        for n in [1, 3, 7, 1000, 123_457] {
            assert_eq!(MemoryBudget::with_node_limit(n).node_limit(), n);
        }
    }

    #[test]
    fn headroom_is_ten_percent() {
        let b = MemoryBudget::new(1000 * NODE_COST);
        assert_eq!(b.node_limit(), 900);
    }

    #[test]
    fn tiny_budget_is_rejected() {
        assert!(matches!(
            MemoryBudget::new(NODE_COST).validate(),
            Err(Error::BudgetTooSmall { .. })
        ));
    }

    #[test]
    fn violations_count_crossings() {
        let t = MemoryTracker::new(&MemoryBudget::new(100));
        t.alloc(60);
        t.alloc(60);
        t.alloc(10);
        assert_eq!(t.violations(), 1);
        t.release(130);
        t.alloc(101);
        assert_eq!(t.violations(), 2);
        assert_eq!(t.peak(), 130);
    }
}
