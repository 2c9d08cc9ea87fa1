use serde::{Deserialize, Serialize};

use super::{Grouping, Statistics};
use crate::fpgrowth::Itemset;
use crate::fptree::FreqString;
use crate::txdb::SupportThreshold;

/// How one group's projected database is produced. Positions are freqstring
/// ranks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub index: usize,
    /// Half-open rank range of the group's master items.
    pub span: (usize, usize),
    pub removed_slaves: Vec<u32>,
    pub removed_masters: Vec<u32>,
    /// Itemsets (without the suffix α) settled from pair counts alone.
    pub direct_outputs: Vec<Itemset>,
    /// False when the group's tree is built straight from the parent database.
    pub write_db: bool,
    /// Predicted node count of the group's tree.
    pub estimated_nodes: u64,
}

impl GroupPlan {
    pub fn is_singleton(&self) -> bool {
        self.span.1 - self.span.0 == 1
    }

    /// Whether rank `r` appears in this group's projected database.
    pub fn keeps(&self, r: u32) -> bool {
        (r as usize) < self.span.1
            && self.removed_slaves.binary_search(&r).is_err()
            && self.removed_masters.binary_search(&r).is_err()
    }

    pub fn is_kept_master(&self, r: u32) -> bool {
        (self.span.0..self.span.1).contains(&(r as usize)) && self.removed_masters.binary_search(&r).is_err()
    }

    pub fn kept_masters(&self) -> impl Iterator<Item = u32> + '_ {
        (self.span.0 as u32..self.span.1 as u32).filter(|r| self.removed_masters.binary_search(r).is_err())
    }

    /// Nothing left to project or mine once pruning removed every master.
    pub fn is_settled(&self) -> bool {
        self.removed_masters.len() == self.span.1 - self.span.0
    }

    pub fn n_kept(&self) -> usize {
        self.span.1 - self.removed_slaves.len() - self.removed_masters.len()
    }
}

/// Plans every group of `grouping`.
///
/// With `pruning`, a master frequent together with at most one other item of
/// its projection is settled from the pair array (its itemsets are `{m}` and
/// possibly `{m, p}`) and removed, and slaves frequent with no remaining
/// master are removed. With `skip_write`, a multi-item group whose masters
/// outnumber half its items is not written but rebuilt from the parent.
pub fn plan_groups(
    stats: &Statistics,
    freqstring: &FreqString,
    grouping: &Grouping,
    threshold: &SupportThreshold,
    pruning: bool,
    skip_write: bool,
) -> Vec<GroupPlan> {
    let a = &stats.array;
    let frequent = |j: usize, k: usize| threshold.is_frequent(a.get(j, k));
    let mut plans = Vec::with_capacity(grouping.len());
    for (index, &(start, end)) in grouping.groups.iter().enumerate() {
        let mut removed_masters = Vec::new();
        let mut removed_slaves = Vec::new();
        let mut direct_outputs = Vec::new();
        if pruning {
            let partners_of = |j: usize| -> Vec<usize> { (0..end).filter(|&k| k != j && frequent(j, k)).collect() };
            let partners: Vec<Vec<usize>> = (start..end).map(partners_of).collect();
            let removed = |j: usize| partners[j - start].len() <= 1;
            for j in start..end {
                if !removed(j) {
                    continue;
                }
                removed_masters.push(j as u32);
                direct_outputs.push(Itemset {
                    items: vec![freqstring.items[j]],
                    support: freqstring.counts[j],
                });
                if let Some(&p) = partners[j - start].first() {
                    // two settled masters partnered with each other report the pair once
                    let twin = (start..end).contains(&p) && removed(p) && p > j;
                    if !twin {
                        let mut items = vec![freqstring.items[j], freqstring.items[p]];
                        items.sort_unstable();
                        direct_outputs.push(Itemset {
                            items,
                            support: a.get(j, p),
                        });
                    }
                }
            }
            let kept_masters: Vec<usize> = (start..end)
                .filter(|j| removed_masters.binary_search(&(*j as u32)).is_err())
                .collect();
            for s in 0..start {
                if !kept_masters.iter().any(|&m| frequent(m, s)) {
                    removed_slaves.push(s as u32);
                }
            }
        }

        let estimated_nodes = if let Some(&e) = grouping.estimated_nodes.get(index) {
            e
        } else if start == 0 {
            stats.scale(stats.shape.nu_prefix.get(end - 1).copied().unwrap_or(0))
        } else {
            stats.scale((start..end).map(|j| stats.master_nodes(j)).sum())
        };
        let mut plan = GroupPlan {
            index,
            span: (start, end),
            removed_slaves,
            removed_masters,
            direct_outputs,
            write_db: true,
            estimated_nodes,
        };
        let n_masters = plan.kept_masters().count();
        if skip_write && end - start > 1 && 2 * n_masters > plan.n_kept() {
            plan.write_db = false;
        }
        plans.push(plan);
    }
    plans
}
