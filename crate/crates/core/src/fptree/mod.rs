//! FP-trees in a per-tree node arena, with header table, node links and
//! the 2-itemset pair array.
//!
//! Nodes store the *rank* of their item in the tree's order (0 = most
//! frequent) rather than the item id; `order()` maps ranks back to ids.
//! Every branch lists ranks strictly ascending from the root.

mod array;
mod budget;
mod build;
mod stats;

use std::fmt::Write as _;

use crate::txdb::{ItemCounts, ItemId, SupportThreshold};

pub use self::array::PairArray;
pub use self::budget::{MemoryBudget, MemoryTracker};
pub use self::build::{build_tree, build_tree_filtered, conditional_tree, BuildOutcome};
pub use self::stats::{shape_stats, TreeShapeStats};

pub(crate) const NIL: u32 = u32::MAX;

/// Accounting cost of one node in bytes.
pub const NODE_COST: u64 = std::mem::size_of::<FpNode>() as u64;

/// Frequent items of a database in descending frequency, ties by ascending id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreqString {
    pub items: Vec<ItemId>,
    pub counts: Vec<u64>,
}

impl FreqString {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ItemId, u64)>, threshold: &SupportThreshold) -> Self {
        let mut v: Vec<(ItemId, u64)> = pairs
            .into_iter()
            .filter(|&(_, c)| threshold.is_frequent(c))
            .collect();
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let (items, counts) = v.into_iter().unzip();
        FreqString { items, counts }
    }

    pub fn from_counts(counts: &ItemCounts, threshold: &SupportThreshold) -> Self {
        Self::from_pairs(counts.iter(), threshold)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Dense id→rank lookup; ids outside the string map to `None`.
    pub fn rank_map(&self) -> RankMap {
        let size = self.items.iter().map(|i| i.index() + 1).max().unwrap_or(0);
        let mut ranks = vec![NIL; size];
        for (r, item) in self.items.iter().enumerate() {
            ranks[item.index()] = r as u32;
        }
        RankMap { ranks }
    }
}

#[derive(Clone, Debug)]
pub struct RankMap {
    ranks: Vec<u32>,
}

impl RankMap {
    #[inline]
    pub fn rank(&self, item: ItemId) -> Option<u32> {
        match self.ranks.get(item.index()) {
            Some(&r) if r != NIL => Some(r),
            _ => None,
        }
    }

    /// Maps a transaction to its sorted frequent-item ranks.
    pub fn project(&self, items: &[ItemId], out: &mut Vec<u32>) {
        out.clear();
        out.extend(items.iter().filter_map(|&i| self.rank(i)));
        out.sort_unstable();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FpNode {
    pub rank: u32,
    pub count: u32,
    pub parent: u32,
    pub first_child: u32,
    pub next_sibling: u32,
    /// Next node carrying the same item.
    pub next_same: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeaderEntry {
    pub count: u64,
    pub head: u32,
}

pub struct FpTree {
    nodes: Vec<FpNode>,
    /// Root children indexed by rank; the root's fan-out is the widest.
    root_children: Vec<u32>,
    header: Vec<HeaderEntry>,
    order: Vec<ItemId>,
    nodes_per_rank: Vec<u64>,
    inserted_tx: u64,
    empty_tx: u64,
    tracker: Option<MemoryTracker>,
}

impl FpTree {
    pub const ROOT: u32 = 0;

    pub fn new(order: Vec<ItemId>, tracker: Option<MemoryTracker>) -> Self {
        let n = order.len();
        FpTree {
            nodes: vec![FpNode {
                rank: NIL,
                count: 0,
                parent: NIL,
                first_child: NIL,
                next_sibling: NIL,
                next_same: NIL,
            }],
            root_children: vec![NIL; n],
            header: vec![HeaderEntry { count: 0, head: NIL }; n],
            order,
            nodes_per_rank: vec![0; n],
            inserted_tx: 0,
            empty_tx: 0,
            tracker,
        }
    }

    /// Item at each rank.
    pub fn order(&self) -> &[ItemId] {
        &self.order
    }

    pub fn n_items(&self) -> usize {
        self.order.len()
    }

    /// Live nodes, root excluded.
    pub fn n_nodes(&self) -> u64 {
        self.nodes.len() as u64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Total weight of inserted transactions, including empty ones.
    pub fn inserted_tx(&self) -> u64 {
        self.inserted_tx
    }

    /// Weight of inserted transactions that had no item of the order.
    pub fn empty_tx(&self) -> u64 {
        self.empty_tx
    }

    pub fn header(&self) -> &[HeaderEntry] {
        &self.header
    }

    pub fn header_count(&self, rank: usize) -> u64 {
        self.header[rank].count
    }

    pub fn node(&self, idx: u32) -> &FpNode {
        &self.nodes[idx as usize]
    }

    pub(crate) fn nodes_per_rank(&self) -> &[u64] {
        &self.nodes_per_rank
    }

    /// Nodes of one item, following the node links.
    pub fn node_list(&self, rank: usize) -> NodeList<'_> {
        NodeList {
            tree: self,
            next: self.header[rank].head,
        }
    }

    /// Children of `idx` in ascending rank order.
    pub fn children(&self, idx: u32) -> Vec<u32> {
        if idx == Self::ROOT {
            return self.root_children.iter().copied().filter(|&c| c != NIL).collect();
        }
        let mut out = Vec::new();
        let mut c = self.nodes[idx as usize].first_child;
        while c != NIL {
            out.push(c);
            c = self.nodes[c as usize].next_sibling;
        }
        out
    }

    /// Transactions ending exactly at `idx`.
    pub fn end_count(&self, idx: u32) -> u64 {
        let own = self.nodes[idx as usize].count as u64;
        let kids: u64 = self
            .children(idx)
            .iter()
            .map(|&c| self.nodes[c as usize].count as u64)
            .sum();
        own - kids
    }

    fn find_child(&self, parent: u32, rank: u32) -> Result<u32, u32> {
        // Ok(child) or Err(predecessor sibling, NIL if head)
        if parent == Self::ROOT {
            let c = self.root_children[rank as usize];
            return if c == NIL { Err(NIL) } else { Ok(c) };
        }
        let mut prev = NIL;
        let mut c = self.nodes[parent as usize].first_child;
        while c != NIL {
            let r = self.nodes[c as usize].rank;
            if r == rank {
                return Ok(c);
            }
            if r > rank {
                break;
            }
            prev = c;
            c = self.nodes[c as usize].next_sibling;
        }
        Err(prev)
    }

    /// Nodes that inserting `ranks` would create.
    pub fn nodes_needed(&self, ranks: &[u32]) -> u64 {
        let mut cur = Self::ROOT;
        for (i, &r) in ranks.iter().enumerate() {
            match self.find_child(cur, r) {
                Ok(c) => cur = c,
                Err(_) => return (ranks.len() - i) as u64,
            }
        }
        0
    }

    /// Inserts a rank list (strictly ascending) with multiplicity `weight`.
    pub fn insert(&mut self, ranks: &[u32], weight: u32) {
        debug_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        self.inserted_tx += weight as u64;
        if ranks.is_empty() {
            self.empty_tx += weight as u64;
            return;
        }
        let mut cur = Self::ROOT;
        for &r in ranks {
            self.header[r as usize].count += weight as u64;
            cur = match self.find_child(cur, r) {
                Ok(c) => {
                    self.nodes[c as usize].count += weight;
                    c
                }
                Err(prev) => self.push_node(cur, prev, r, weight),
            };
        }
    }

    fn push_node(&mut self, parent: u32, prev: u32, rank: u32, count: u32) -> u32 {
        let idx = self.nodes.len() as u32;
        let next_sibling = if parent == Self::ROOT {
            self.root_children[rank as usize] = idx;
            NIL
        } else if prev == NIL {
            std::mem::replace(&mut self.nodes[parent as usize].first_child, idx)
        } else {
            std::mem::replace(&mut self.nodes[prev as usize].next_sibling, idx)
        };
        let head = &mut self.header[rank as usize].head;
        let next_same = std::mem::replace(head, idx);
        self.nodes.push(FpNode {
            rank,
            count,
            parent,
            first_child: NIL,
            next_sibling,
            next_same,
        });
        self.nodes_per_rank[rank as usize] += 1;
        if let Some(t) = &self.tracker {
            t.alloc(NODE_COST);
        }
        idx
    }

    /// The chain of `(rank, count)` from the root if the tree has no branching.
    pub fn single_path(&self) -> Option<Vec<(u32, u64)>> {
        if self.root_children.iter().filter(|&&c| c != NIL).count() > 1 {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = self.root_children.iter().copied().find(|&c| c != NIL);
        while let Some(c) = cur {
            let node = &self.nodes[c as usize];
            path.push((node.rank, node.count as u64));
            if node.first_child != NIL && self.nodes[node.first_child as usize].next_sibling != NIL {
                return None;
            }
            cur = (node.first_child != NIL).then_some(node.first_child);
        }
        Some(path)
    }

    /// Calls `f(path_ranks, multiplicity)` for every distinct inserted
    /// transaction path, in depth-first ascending-rank order.
    pub fn for_each_path(&self, mut f: impl FnMut(&[u32], u64)) {
        let mut path: Vec<u32> = Vec::new();
        // (node, depth)
        let mut stack: Vec<(u32, usize)> = self.children(Self::ROOT).into_iter().rev().map(|c| (c, 0)).collect();
        while let Some((idx, depth)) = stack.pop() {
            path.truncate(depth);
            path.push(self.nodes[idx as usize].rank);
            let end = self.end_count(idx);
            if end > 0 {
                f(&path, end);
            }
            for c in self.children(idx).into_iter().rev() {
                stack.push((c, depth + 1));
            }
        }
    }

    /// Indented `item:count` lines, one per node, children in rank order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack: Vec<(u32, usize)> = self.children(Self::ROOT).into_iter().rev().map(|c| (c, 0)).collect();
        while let Some((idx, depth)) = stack.pop() {
            let node = &self.nodes[idx as usize];
            let _ = writeln!(
                out,
                "{:indent$}{}:{}",
                "",
                self.order[node.rank as usize],
                node.count,
                indent = depth * 2
            );
            for c in self.children(idx).into_iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

impl std::fmt::Debug for FpTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FpTree")
            .field("items", &self.order.len())
            .field("nodes", &self.n_nodes())
            .field("inserted_tx", &self.inserted_tx)
            .finish()
    }
}

impl Drop for FpTree {
    fn drop(&mut self) {
        if let Some(t) = &self.tracker {
            t.release(self.n_nodes() * NODE_COST);
        }
    }
}

/// Releases a tree and its arena in one deallocation.
pub fn discard_tree(tree: FpTree) {
    drop(tree);
}

pub struct NodeList<'a> {
    tree: &'a FpTree,
    next: u32,
}

impl Iterator for NodeList<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.next == NIL {
            return None;
        }
        let cur = self.next;
        self.next = self.tree.nodes[cur as usize].next_same;
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().copied().map(ItemId).collect()
    }

    /// D1 = {abd, bcd, ac, ab} with order a b c d.
    pub(crate) fn d1_tree(tracker: Option<MemoryTracker>) -> FpTree {
        let mut t = FpTree::new(ids(&[0, 1, 2, 3]), tracker);
        for tx in [&[0, 1, 3][..], &[1, 2, 3], &[0, 2], &[0, 1]] {
            t.insert(tx, 1);
        }
        t
    }

    #[test]
    fn d1_has_seven_nodes() {
        let t = d1_tree(None);
        assert_eq!(t.n_nodes(), 7);
        assert_eq!(t.dump(), "0:3\n  1:2\n    3:1\n  2:1\n1:1\n  2:1\n    3:1\n");
    }

    #[test]
    fn node_lists_sum_to_header_counts() {
        let t = d1_tree(None);
        for r in 0..4 {
            let sum: u64 = t.node_list(r).map(|n| t.node(n).count as u64).sum();
            assert_eq!(sum, t.header_count(r));
        }
        assert_eq!(t.header_count(0), 3);
        assert_eq!(t.header_count(3), 2);
    }

    #[test]
    fn paths_reconstruct_transactions() {
        let t = d1_tree(None);
        let mut got = Vec::new();
        t.for_each_path(|p, m| got.push((p.to_vec(), m)));
        got.sort();
        assert_eq!(
            got,
            vec![
                (vec![0, 1], 1),
                (vec![0, 1, 3], 1),
                (vec![0, 2], 1),
                (vec![1, 2, 3], 1)
            ]
        );
    }

    #[test]
    fn nodes_needed_counts_missing_suffix() {
        let t = d1_tree(None);
        assert_eq!(t.nodes_needed(&[0, 1]), 0);
        assert_eq!(t.nodes_needed(&[0, 1, 2]), 1);
        assert_eq!(t.nodes_needed(&[2, 3]), 2);
    }

    #[test]
    fn single_path_detection() {
        let mut t = FpTree::new(ids(&[5, 6]), None);
        t.insert(&[0, 1], 2);
        t.insert(&[0], 1);
        assert_eq!(t.single_path(), Some(vec![(0, 3), (1, 2)]));
        assert_eq!(d1_tree(None).single_path(), None);
        assert_eq!(FpTree::new(vec![], None).single_path(), Some(vec![]));
    }

    #[test]
    fn discard_returns_budget_to_baseline() {
        let tracker = MemoryTracker::new(&MemoryBudget::new(10_000));
        let t = d1_tree(Some(tracker.clone()));
        assert_eq!(tracker.in_use(), 7 * NODE_COST);
        discard_tree(t);
        assert_eq!(tracker.in_use(), 0);
        discard_tree(FpTree::new(vec![], Some(tracker.clone())));
        assert_eq!(tracker.in_use(), 0);
    }

    #[test]
    fn sequential_trees_peak_at_one_tree() {
        let tracker = MemoryTracker::new(&MemoryBudget::new(10_000));
        for _ in 0..1000 {
            discard_tree(d1_tree(Some(tracker.clone())));
        }
        assert_eq!(tracker.peak(), 7 * NODE_COST);
        assert_eq!(tracker.violations(), 0);
    }

    #[test]
    fn freqstring_orders_by_count_then_id() {
        let th = SupportThreshold::absolute(2);
        let fs = FreqString::from_pairs(
            [(ItemId(3), 2), (ItemId(0), 3), (ItemId(2), 2), (ItemId(1), 3), (ItemId(9), 1)],
            &th,
        );
        assert_eq!(fs.items, ids(&[0, 1, 2, 3]));
        assert_eq!(fs.counts, vec![3, 3, 2, 2]);
        let rm = fs.rank_map();
        assert_eq!(rm.rank(ItemId(2)), Some(2));
        assert_eq!(rm.rank(ItemId(9)), None);
    }
}
