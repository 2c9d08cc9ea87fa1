use super::{Grouping, Statistics};
use crate::fptree::{FpTree, NIL};
use crate::txdb::SupportThreshold;

/// Groups the items after the cut point by walking the partial tree.
///
/// A group grows while the nodes its own tree would hold stay within `ν`
/// once scaled to the whole database. Those nodes are the masters' nodes
/// and every ancestor whose item the projection keeps; with `pruning` a
/// slave is kept only when frequent together with some master, otherwise
/// all of them are. Unlike the `μ` sum this counts a slave shared by
/// several masters once and also counts slaves that one master keeps on
/// another master's paths.
pub fn group_items_traversed(
    stats: &Statistics,
    tree: &FpTree,
    cutpoint: usize,
    threshold: &SupportThreshold,
    pruning: bool,
) -> Grouping {
    let n = stats.n_frequent;
    if stats.shape.nu == 0 || stats.t_t == 0 {
        return Grouping::singletons(n);
    }
    let cut = cutpoint.clamp(1, n.max(1)).min(n);
    let mut groups = vec![(0, cut)];
    let mut estimates = vec![stats.scale(stats.shape.nu_prefix.get(cut - 1).copied().unwrap_or(0))];

    let mut walk = GroupWalk {
        tree,
        stamp: vec![NIL; tree.n_nodes() as usize + 1],
        by_rank: vec![0; n],
        kept: vec![false; n],
        start: cut,
        total: 0,
        group: 0,
    };
    let mut start = cut;
    while start < n {
        walk.reset(start);
        walk.add(start, stats, threshold, pruning);
        let mut total = walk.total;
        let mut end = start + 1;
        while end < n {
            walk.add(end, stats, threshold, pruning);
            if !stats.fits(walk.total) {
                break;
            }
            total = walk.total;
            end += 1;
        }
        groups.push((start, end));
        estimates.push(stats.scale(total));
        start = end;
    }
    Grouping {
        groups,
        cut_point: cut,
        estimated_nodes: estimates,
    }
}

struct GroupWalk<'a> {
    tree: &'a FpTree,
    /// Group that last visited each node.
    stamp: Vec<u32>,
    /// Visited nodes per rank.
    by_rank: Vec<u64>,
    kept: Vec<bool>,
    start: usize,
    total: u64,
    group: u32,
}

impl GroupWalk<'_> {
    fn reset(&mut self, start: usize) {
        self.group += 1;
        self.by_rank.fill(0);
        self.kept.fill(false);
        self.start = start;
        self.total = 0;
    }

    fn counts(&self, r: usize) -> bool {
        r >= self.start || self.kept[r]
    }

    fn add(&mut self, m: usize, stats: &Statistics, threshold: &SupportThreshold, pruning: bool) {
        let row = stats.array.row_before(m);
        for k in 0..self.start {
            if !self.kept[k] && (!pruning || threshold.is_frequent(row[k] as u64)) {
                self.kept[k] = true;
                self.total += self.by_rank[k];
            }
        }
        for idx in self.tree.node_list(m) {
            let mut p = idx;
            while p != FpTree::ROOT && self.stamp[p as usize] != self.group {
                self.stamp[p as usize] = self.group;
                let r = self.tree.node(p).rank as usize;
                self.by_rank[r] += 1;
                if self.counts(r) {
                    self.total += 1;
                }
                p = self.tree.node(p).parent;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fptree::{shape_stats, PairArray};
    use crate::txdb::ItemId;

    fn setup(n: u32, txs: &[&[u32]], t_d: u64, th: u64) -> (FpTree, Statistics, SupportThreshold) {
        let mut tree = FpTree::new((0..n).map(ItemId).collect(), None);
        let mut array = PairArray::new(n as usize);
        for tx in txs {
            tree.insert(tx, 1);
            array.add_transaction(tx, 1);
        }
        let t = SupportThreshold::absolute(th);
        let stats = Statistics {
            t_d,
            t_t: txs.len() as u64,
            shape: shape_stats(&tree, &array, &t),
            array,
            n_frequent: n as usize,
        };
        (tree, stats, t)
    }

    #[test]
    fn shared_slaves_count_once() {
        // c and d sit below the same a-b path
        let (tree, stats, t) = setup(4, &[&[0, 1, 2], &[0, 1, 3], &[0, 1, 2], &[0, 1, 3]], 4, 1);
        let g = group_items_traversed(&stats, &tree, 2, &t, true);
        assert_eq!(g.groups, vec![(0, 2), (2, 4)]);
        // a, b, c, d: one node each
        assert_eq!(g.estimated_nodes, vec![2, 4]);
    }

    #[test]
    fn overflowing_group_splits() {
        // every transaction is its own path, so each master brings two nodes
        let rows: &[&[u32]] = &[&[0, 2], &[1, 3], &[0, 4], &[1, 5]];
        let (tree, stats, t) = setup(6, rows, 8, 1);
        // ν = 6 and t_D/t_T = 2: a group fits while it holds at most 3 nodes
        let g = group_items_traversed(&stats, &tree, 2, &t, true);
        assert_eq!(g.groups, vec![(0, 2), (2, 3), (3, 4), (4, 5), (5, 6)]);
        assert_eq!(g.estimated_nodes, vec![4; 5]);
    }

    #[test]
    fn pruning_drops_unrelated_slaves() {
        // b lies on one of c's paths but is frequent with neither master
        let rows: &[&[u32]] = &[&[0, 1, 2], &[0, 2], &[0, 3], &[0, 3]];
        let (tree, stats, t) = setup(4, rows, 4, 2);
        let pruned = group_items_traversed(&stats, &tree, 2, &t, true);
        let full = group_items_traversed(&stats, &tree, 2, &t, false);
        assert_eq!(pruned.groups, full.groups);
        assert!(pruned.estimated_nodes[1] < full.estimated_nodes[1]);
    }
}
