use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fpgrowth::{fpgrowth_star, ItemsetSink, MineOptions};
use crate::fptree::{FpTree, FreqString, MemoryBudget, MemoryTracker, PairArray};
use crate::projection::remove_projection;
use crate::report::RunReport;
use crate::txdb::{
    open_scan, BlockConfig, DbLocator, DbWriter, IoContext, ItemId, MinSupport, SupportThreshold,
};

#[derive(Clone, Debug)]
pub struct PartitionConfig {
    pub budget: MemoryBudget,
    pub block: BlockConfig,
    /// Where candidate spill files go; created if missing.
    pub tmp_dir: PathBuf,
    /// Candidates held in memory before the set is spilled to disk.
    pub spill_limit: usize,
    /// Number of transactions in the database, when known up front. An
    /// absolute threshold without it costs one extra counting scan.
    pub n_transactions: Option<u64>,
    pub single_path: bool,
}

impl PartitionConfig {
    pub const DEFAULT_SPILL_LIMIT: usize = 1 << 20;

    pub fn new(budget: MemoryBudget, tmp_dir: impl Into<PathBuf>) -> Self {
        PartitionConfig {
            budget,
            block: BlockConfig::default(),
            tmp_dir: tmp_dir.into(),
            spill_limit: Self::DEFAULT_SPILL_LIMIT,
            n_transactions: None,
            single_path: true,
        }
    }
}

/// Everything a partitioning run produced besides the itemsets.
#[derive(Clone, Debug)]
pub struct PartitionOutcome {
    pub report: RunReport,
    /// Transactions in each cell, in database order.
    pub cell_sizes: Vec<u64>,
    /// Distinct locally frequent itemsets, each sorted, in canonical order.
    pub candidates: Vec<Vec<ItemId>>,
}

/// Two-pass partitioning: every itemset frequent in the whole database is
/// frequent in some memory-sized cell, so mining each cell at a
/// proportionally scaled threshold yields a candidate superset that one
/// more scan verifies.
pub fn partition_mine(
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &PartitionConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<RunReport> {
    partition_mine_detailed(db, min_support, cfg, sink).map(|o| o.report)
}

pub fn partition_mine_detailed(
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &PartitionConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<PartitionOutcome> {
    let start = Instant::now();
    cfg.budget.validate()?;
    fs::create_dir_all(&cfg.tmp_dir).map_err(|e| Error::io(&cfg.tmp_dir, e))?;
    let io = IoContext::new(cfg.block);
    // spill traffic is charged separately so the scan count stays that of the input
    let spill_io = IoContext::new(cfg.block);
    let tracker = MemoryTracker::new(&cfg.budget);

    let n_known = match (min_support, cfg.n_transactions) {
        (MinSupport::Count(_), None) => {
            let mut scan = open_scan(db, &io, None)?;
            let mut buf = Vec::new();
            let mut n = 0;
            while scan.next_into(&mut buf)? {
                n += 1;
            }
            Some(n)
        }
        (_, n) => n,
    };
    let global = SupportThreshold::resolve(min_support, n_known.unwrap_or(0))?;
    let local_threshold = |n_i: u64| -> Result<SupportThreshold> {
        match (min_support, n_known) {
            (MinSupport::Count(s), Some(n)) if n > 0 => Ok(SupportThreshold::absolute(
                (s as u128 * n_i as u128).div_ceil(n as u128) as u64,
            )),
            (MinSupport::Count(s), _) => Ok(SupportThreshold::absolute(s)),
            (requested, _) => SupportThreshold::resolve(requested, n_i),
        }
    };

    let mut store = CandidateStore {
        set: HashSet::new(),
        limit: cfg.spill_limit.max(1),
        spill: None,
        spill_loc: DbLocator::binary(cfg.tmp_dir.join("partition_candidates.spill")),
        io: spill_io.clone(),
    };
    let opts = MineOptions {
        single_path: cfg.single_path,
        tracker: Some(tracker.clone()),
    };
    let node_limit = cfg.budget.node_limit();
    // raw transactions buffered ahead of the cell being built
    let fill_items = node_limit.saturating_mul(4);

    // Phase 1
    let mut scan = open_scan(db, &io, None)?;
    let mut buffer: VecDeque<Vec<ItemId>> = VecDeque::new();
    let mut buffered_items = 0u64;
    let mut eof = false;
    let mut cell_tx: Option<usize> = None;
    let mut cell_sizes = Vec::new();
    let mut n_total = 0u64;
    let mut tx = Vec::new();
    loop {
        while !eof && buffered_items < fill_items {
            if scan.next_into(&mut tx)? {
                buffered_items += tx.len() as u64;
                buffer.push_back(std::mem::take(&mut tx));
            } else {
                eof = true;
            }
        }
        if buffer.is_empty() {
            break;
        }
        let mut size = cell_tx.unwrap_or(buffer.len()).min(buffer.len());
        let (tree, array, threshold) = loop {
            let cell = buffer.range(..size);
            let threshold = local_threshold(size as u64)?;
            match build_cell(cell, &threshold, node_limit, &tracker) {
                Ok((tree, array)) => break (tree, array, threshold),
                Err(fitted) => {
                    if size == 1 {
                        return Err(Error::BudgetTooSmall { budget: cfg.budget.bytes });
                    }
                    // the trial tells how many fitted; halving guarantees progress
                    size = fitted.max(size / 2).min(size - 1);
                    cell_tx = Some(size);
                }
            }
        };
        cell_tx.get_or_insert(size);
        fpgrowth_star(&tree, &array, &[], &threshold, &mut store, None, &opts)?;
        drop(tree);
        for t in buffer.drain(..size) {
            buffered_items -= t.len() as u64;
        }
        cell_sizes.push(size as u64);
        n_total += size as u64;
    }
    drop(scan);
    log::debug!("partition: {} cells, {} candidates in memory", cell_sizes.len(), store.set.len());

    let global = match n_known {
        Some(_) => global,
        None => SupportThreshold::resolve(min_support, n_total)?,
    };

    // Phase 2
    let spilled = store.spill.is_some();
    let spill_bytes = match store.spill.take() {
        Some(w) => {
            let bytes = w.bytes_written();
            w.finish()?;
            bytes
        }
        None => 0,
    };
    let mut trie = Trie::new();
    for c in store.set.drain() {
        trie.insert(&c);
    }
    if spilled {
        let mut s = open_scan(&store.spill_loc, &spill_io, None)?;
        while s.next_into(&mut tx)? {
            trie.insert(&tx);
        }
        drop(s);
        remove_projection(&store.spill_loc)?;
    }
    let candidate_items: HashSet<ItemId> = trie.items();
    let mut scan = open_scan(db, &io, None)?;
    let mut filtered = Vec::new();
    while scan.next_into(&mut tx)? {
        filtered.clear();
        filtered.extend(tx.iter().copied().filter(|i| candidate_items.contains(i)));
        trie.count(&filtered);
    }
    drop(scan);

    let mut emitted = 0u64;
    let mut candidates = Vec::new();
    let mut result: Result<()> = Ok(());
    trie.walk(|items, count| {
        candidates.push(items.to_vec());
        if result.is_ok() && global.is_frequent(count) {
            emitted += 1;
            result = sink.emit(items, count);
        }
    });
    result?;
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let mut stats = io.stats();
    let spill = spill_io.stats();
    stats.blocks_read += spill.blocks_read;
    stats.blocks_written += spill.blocks_written;
    stats.bytes_read += spill.bytes_read;
    stats.bytes_written += spill.bytes_written;
    let report = RunReport {
        algorithm: "partition".to_string(),
        io: stats,
        recursion_depth: 1,
        itemsets_emitted: emitted,
        db_bytes: db.file_size()?,
        block_size: cfg.block.block_size,
        memory_budget: cfg.budget.bytes,
        node_limit,
        n_transactions: n_total,
        threshold: global.count(),
        peak_tree_bytes: tracker.peak(),
        budget_violations: tracker.violations(),
        candidate_spill_bytes: spill_bytes,
        n_candidates: candidates.len() as u64,
        wall_time_secs: start.elapsed().as_secs_f64(),
        ..RunReport::default()
    };
    Ok(PartitionOutcome {
        report,
        cell_sizes,
        candidates,
    })
}

/// Builds the tree of one cell in its own frequency order, or returns how
/// many transactions were inserted before the node limit was hit.
fn build_cell<'a>(
    cell: impl Iterator<Item = &'a Vec<ItemId>> + Clone,
    threshold: &SupportThreshold,
    node_limit: u64,
    tracker: &MemoryTracker,
) -> std::result::Result<(FpTree, PairArray), usize> {
    let mut counts: HashMap<ItemId, u64> = HashMap::new();
    for t in cell.clone() {
        for &i in t {
            *counts.entry(i).or_default() += 1;
        }
    }
    let fs = FreqString::from_pairs(counts, threshold);
    let ranks = fs.rank_map();
    let mut tree = FpTree::new(fs.items.clone(), Some(tracker.clone()));
    let mut array = PairArray::new(fs.len());
    let mut buf = Vec::new();
    for (done, t) in cell.enumerate() {
        ranks.project(t, &mut buf);
        if tree.n_nodes() + tree.nodes_needed(&buf) > node_limit {
            return Err(done);
        }
        tree.insert(&buf, 1);
        array.add_transaction(&buf, 1);
    }
    Ok((tree, array))
}

struct CandidateStore {
    set: HashSet<Vec<ItemId>>,
    limit: usize,
    spill: Option<DbWriter>,
    spill_loc: DbLocator,
    io: IoContext,
}

impl ItemsetSink for CandidateStore {
    fn emit(&mut self, items: &[ItemId], _support: u64) -> Result<()> {
        let mut v = items.to_vec();
        v.sort_unstable();
        self.set.insert(v);
        if self.set.len() >= self.limit {
            log::debug!("partition: spilling {} candidates", self.set.len());
            if self.spill.is_none() {
                self.spill = Some(DbWriter::create(&self.spill_loc, &self.io)?);
            }
            let w = self.spill.as_mut().unwrap();
            for c in self.set.drain() {
                w.write(&c)?;
            }
        }
        Ok(())
    }
}

/// Prefix trie over sorted candidate itemsets.
struct Trie {
    nodes: Vec<TrieNode>,
}

#[derive(Default)]
struct TrieNode {
    /// Sorted by item.
    children: Vec<(ItemId, u32)>,
    count: u64,
    terminal: bool,
}

impl Trie {
    fn new() -> Self {
        Trie {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, items: &[ItemId]) {
        let mut at = 0usize;
        for &i in items {
            at = match self.nodes[at].children.binary_search_by_key(&i, |c| c.0) {
                Ok(p) => self.nodes[at].children[p].1 as usize,
                Err(p) => {
                    let id = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[at].children.insert(p, (i, id as u32));
                    id
                }
            };
        }
        self.nodes[at].terminal = true;
    }

    fn items(&self) -> HashSet<ItemId> {
        self.nodes.iter().flat_map(|n| n.children.iter().map(|c| c.0)).collect()
    }

    /// Adds one to every candidate prefix contained in the sorted `tx`.
    fn count(&mut self, tx: &[ItemId]) {
        self.count_from(0, tx);
    }

    fn count_from(&mut self, node: usize, tx: &[ItemId]) {
        for (pos, &i) in tx.iter().enumerate() {
            if let Ok(p) = self.nodes[node].children.binary_search_by_key(&i, |c| c.0) {
                let child = self.nodes[node].children[p].1 as usize;
                self.nodes[child].count += 1;
                self.count_from(child, &tx[pos + 1..]);
            }
        }
    }

    fn walk(&self, mut f: impl FnMut(&[ItemId], u64)) {
        let mut path = Vec::new();
        self.walk_from(0, &mut path, &mut f);
    }

    fn walk_from(&self, node: usize, path: &mut Vec<ItemId>, f: &mut impl FnMut(&[ItemId], u64)) {
        for &(i, c) in &self.nodes[node].children {
            path.push(i);
            let n = &self.nodes[c as usize];
            if n.terminal {
                f(path, n.count);
            }
            self.walk_from(c as usize, path, f);
            path.pop();
        }
    }
}
