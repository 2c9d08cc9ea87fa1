//! Decomposition of a database into projected databases.
//!
//! A *grouping* splits the freqstring `i_1 … i_n` into consecutive groups
//! `β_1 … β_k`. The projected database of group `β_j` holds, for every
//! transaction touching `β_j`, its items from `β_1 … β_j`; the group's own
//! items are its *masters*, the earlier ones its *slaves*. Mining each
//! projection for itemsets that contain a master and taking the union gives
//! the frequent itemsets of the original database.

mod cost;
mod plan;
mod project;
mod traverse;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fptree::{FreqString, PairArray, TreeShapeStats};
use crate::txdb::{open_scan, DbLocator, DbWriter, IoContext, ItemCounts, ItemId, SupportThreshold};

pub use self::cost::{predict_costs, CostModel, CostPrediction};
pub use self::plan::{plan_groups, GroupPlan};
pub use self::project::{project_database, ProjectOptions};
pub use self::traverse::group_items_traversed;

/// Frequent items by descending count; `NoFrequentItems` if there are none.
pub fn compute_freqstring(counts: &ItemCounts, threshold: &SupportThreshold) -> Result<FreqString> {
    let fs = FreqString::from_counts(counts, threshold);
    if fs.is_empty() {
        return Err(Error::NoFrequentItems);
    }
    Ok(fs)
}

/// File name stem for projections of the database reached by `alpha`.
pub fn alpha_string(alpha: &[ItemId]) -> String {
    if alpha.is_empty() {
        return "e".to_string();
    }
    alpha.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

pub fn projection_path(dir: &Path, alpha: &[ItemId], group: usize) -> PathBuf {
    dir.join(format!("proj_{}_{}.db", alpha_string(alpha), group))
}

/// Projects `db` onto every item of `freqstring` in one scan.
///
/// The database for `i_j` holds `τ ∩ {i_1 … i_j}` for every `τ` containing
/// `i_j`, in source order. Returned in freqstring order.
pub fn naive_project(
    db: &DbLocator,
    freqstring: &FreqString,
    io: &IoContext,
    dir: &Path,
    alpha: &[ItemId],
) -> Result<Vec<DbLocator>> {
    let ranks = freqstring.rank_map();
    let mut writers = Vec::with_capacity(freqstring.len());
    for j in 0..freqstring.len() {
        writers.push(DbWriter::create(&DbLocator::binary(projection_path(dir, alpha, j)), io)?);
    }
    let mut scan = open_scan(db, io, None)?;
    let mut buf = Vec::new();
    let mut rbuf = Vec::new();
    let mut out: Vec<ItemId> = Vec::new();
    while scan.next_into(&mut buf)? {
        ranks.project(&buf, &mut rbuf);
        for (x, &j) in rbuf.iter().enumerate() {
            out.clear();
            out.extend(rbuf[..=x].iter().map(|&r| freqstring.items[r as usize]));
            out.sort_unstable();
            writers[j as usize].write(&out)?;
        }
    }
    writers.into_iter().map(DbWriter::finish).collect()
}

/// Removes a temporary projection, ignoring files that are already gone.
pub fn remove_projection(loc: &DbLocator) -> Result<()> {
    match fs::remove_file(&loc.path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(&loc.path, e)),
        _ => Ok(()),
    }
}

/// Statistics gathered from an aborted trial build.
#[derive(Clone, Debug)]
pub struct Statistics {
    /// Transactions in the database.
    pub t_d: u64,
    /// Transactions inserted into the partial tree.
    pub t_t: u64,
    pub shape: TreeShapeStats,
    /// Pair counts over the whole database.
    pub array: PairArray,
    pub n_frequent: usize,
}

impl Statistics {
    /// `x · t_D / t_T`, rounded up.
    pub fn scale(&self, x: u64) -> u64 {
        if self.t_t == 0 {
            return u64::MAX;
        }
        ((x as u128 * self.t_d as u128).div_ceil(self.t_t as u128)).min(u64::MAX as u128) as u64
    }

    /// Partial-tree nodes a master at rank `j` brings into its group's tree:
    /// the rank's own nodes plus the ancestors counted by `μ[j]`.
    pub fn master_nodes(&self, j: usize) -> u64 {
        let prefix = &self.shape.nu_prefix;
        let own = match j {
            0 => prefix.first().copied().unwrap_or(0),
            _ => prefix.get(j).map_or(0, |&p| p - prefix[j - 1]),
        };
        own + self.shape.mu.get(j).copied().unwrap_or(0)
    }

    /// Whether `x` nodes of the partial tree, scaled to the whole database,
    /// stay within the partial tree's size.
    fn fits(&self, x: u64) -> bool {
        x as u128 * self.t_d as u128 <= self.shape.nu as u128 * self.t_t as u128
    }
}

/// Below this many trial transactions the shape statistics are too noisy and
/// the transaction-ratio estimate is used instead.
pub const MIN_SHAPE_SAMPLE: u64 = 100;

/// Number of leading freqstring items that form the first group.
///
/// The largest `k` with `(ν[k] + max_{j≤k} μ[j]) · t_D/t_T ≤ ν`; when the
/// partial tree is too small to trust, `⌊n · t_T/t_D⌋`. Always at least 1.
pub fn estimate_cutpoint(stats: &Statistics) -> usize {
    let n = stats.n_frequent;
    if n == 0 {
        return 0;
    }
    if stats.t_t >= stats.t_d {
        return n;
    }
    let degenerate = stats.shape.nu_prefix.iter().all(|&v| v == 0);
    if stats.t_t < MIN_SHAPE_SAMPLE || degenerate {
        let k = (n as u128 * stats.t_t as u128 / stats.t_d.max(1) as u128) as usize;
        return k.clamp(1, n);
    }
    let mut k = 0;
    let mut mu_max = 0;
    for j in 0..n {
        mu_max = mu_max.max(stats.shape.mu[j]);
        if !stats.fits(stats.shape.nu_prefix[j] + mu_max) {
            break;
        }
        k = j + 1;
    }
    k.max(1)
}

/// A grouping of the freqstring: consecutive half-open rank ranges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    pub groups: Vec<(usize, usize)>,
    pub cut_point: usize,
    /// Predicted node count of each group's tree, when the grouping made one.
    #[serde(default)]
    pub estimated_nodes: Vec<u64>,
}

impl Grouping {
    /// One group per item.
    pub fn singletons(n: usize) -> Self {
        Grouping {
            groups: (0..n).map(|j| (j, j + 1)).collect(),
            cut_point: n.min(1),
            estimated_nodes: Vec::new(),
        }
    }

    /// Groups from explicit boundaries, e.g. `[2, 4]` for `ab.cd`.
    pub fn from_ends(ends: &[usize]) -> Self {
        let mut start = 0;
        let groups = ends
            .iter()
            .map(|&e| {
                let g = (start, e);
                start = e;
                g
            })
            .collect();
        Grouping {
            groups,
            cut_point: ends.first().copied().unwrap_or(0),
            estimated_nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Groups the items after the cut point greedily: a group grows while the
/// scaled sum of its masters' nodes and `μ` stays within `ν`, and the item
/// that would overflow it starts the next group.
pub fn group_items(stats: &Statistics, cutpoint: usize) -> Grouping {
    let n = stats.n_frequent;
    if stats.shape.nu == 0 || stats.t_t == 0 {
        return Grouping::singletons(n);
    }
    let cut = cutpoint.clamp(1, n.max(1)).min(n);
    let mut groups = vec![(0, cut)];
    let mut start = cut;
    while start < n {
        let mut sum = stats.master_nodes(start);
        let mut end = start + 1;
        while end < n && stats.fits(sum + stats.master_nodes(end)) {
            sum += stats.master_nodes(end);
            end += 1;
        }
        groups.push((start, end));
        start = end;
    }
    Grouping {
        groups,
        cut_point: cut,
        estimated_nodes: Vec::new(),
    }
}
