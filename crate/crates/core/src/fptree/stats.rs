use serde::{Deserialize, Serialize};

use super::{FpTree, PairArray, NIL};
use crate::txdb::SupportThreshold;

/// Size statistics of a (possibly partial) tree, indexed by rank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShapeStats {
    /// Total node count.
    pub nu: u64,
    /// `nu_prefix[j]`: nodes left after trimming to ranks `0..=j`.
    pub nu_prefix: Vec<u64>,
    /// `mu[j]`: distinct ancestors `P` (rank `k < j`) of rank-`j` nodes with
    /// `A[j][k]` frequent; approximates the size of the conditional tree of `j`.
    pub mu: Vec<u64>,
}

pub fn shape_stats(tree: &FpTree, array: &PairArray, threshold: &SupportThreshold) -> TreeShapeStats {
    let n = tree.n_items();
    let mut nu_prefix = Vec::with_capacity(n);
    let mut acc = 0;
    for &c in tree.nodes_per_rank() {
        acc += c;
        nu_prefix.push(acc);
    }

    let mut mu = vec![0u64; n];
    let mut stamp = vec![NIL; tree.n_nodes() as usize + 1];
    for (j, m) in mu.iter_mut().enumerate() {
        let row = array.row_before(j);
        for idx in tree.node_list(j) {
            let mut p = tree.node(idx).parent;
            while p != FpTree::ROOT && stamp[p as usize] != j as u32 {
                stamp[p as usize] = j as u32;
                let k = tree.node(p).rank as usize;
                if threshold.is_frequent(row[k] as u64) {
                    *m += 1;
                }
                p = tree.node(p).parent;
            }
        }
    }

    TreeShapeStats {
        nu: tree.n_nodes(),
        nu_prefix,
        mu,
    }
}
