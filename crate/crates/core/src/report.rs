//! Per-run statistics shared by every miner.

use serde::{Deserialize, Serialize};

use crate::txdb::IoStats;

/// One projected group, with its predicted and realized tree size.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    /// Depth of the task that created the group.
    pub depth: u32,
    pub alpha: Vec<u32>,
    pub index: usize,
    pub n_items: usize,
    pub n_masters: usize,
    pub estimated_nodes: u64,
    /// Node count of the tree built for the group, when it fit.
    pub actual_nodes: Option<u64>,
    /// The group's tree hit the node limit.
    pub aborted: bool,
    pub write_db: bool,
    pub projected_bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub io: IoStats,
    /// Deepest task reached; 1 when the first tree fits.
    pub recursion_depth: u32,
    /// Groups created by tasks at each depth (index 0 is the root).
    pub groups_per_level: Vec<u64>,
    pub budget_violations: u64,
    pub itemsets_emitted: u64,
    pub wall_time_secs: f64,

    pub db_bytes: u64,
    pub block_size: u64,
    pub memory_budget: u64,
    pub node_limit: u64,
    pub n_transactions: u64,
    pub threshold: u64,
    pub n_frequent_items: usize,
    /// Mean number of frequent items per transaction.
    pub avg_frequent_items: f64,
    /// Groups at the root, when the root was decomposed.
    pub root_groups: Option<usize>,
    pub root_cut_point: Option<usize>,
    /// Nodes of the root trial tree.
    pub root_trial_nodes: u64,
    pub peak_tree_bytes: u64,
    /// Bytes written to projected databases, by depth of the creating task.
    pub projected_bytes_by_depth: Vec<u64>,
    pub groups: Vec<GroupRecord>,
    /// Bytes of candidate itemsets spilled to disk (partitioning only).
    pub candidate_spill_bytes: u64,
    pub n_candidates: u64,
}

impl RunReport {
    pub fn projected_bytes(&self) -> u64 {
        self.projected_bytes_by_depth.iter().sum()
    }

    pub(crate) fn add_groups(&mut self, depth: u32, n: usize) {
        let i = depth as usize - 1;
        if self.groups_per_level.len() <= i {
            self.groups_per_level.resize(i + 1, 0);
        }
        self.groups_per_level[i] += n as u64;
    }

    pub(crate) fn add_projected(&mut self, depth: u32, bytes: u64) {
        let i = depth as usize - 1;
        if self.projected_bytes_by_depth.len() <= i {
            self.projected_bytes_by_depth.resize(i + 1, 0);
        }
        self.projected_bytes_by_depth[i] += bytes;
    }
}
