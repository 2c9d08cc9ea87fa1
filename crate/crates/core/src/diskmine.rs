//! The out-of-core driver.
//!
//! A task first tries to build the whole FP-tree of its database. If the tree
//! outgrows the budget, the partial tree and the pair array (completed by
//! reading the rest of the database) drive a grouping of the frequent items;
//! each group gets a projected database, mined in memory when the group has
//! several masters, or recursively when it has one.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpgrowth::{fpgrowth_star, CountingSink, DisjointnessCheck, Itemset, ItemsetSink, MineOptions};
use crate::fptree::{
    build_tree, build_tree_filtered, shape_stats, BuildOutcome, FpTree, FreqString, MemoryBudget, MemoryTracker,
    PairArray,
};
use crate::projection::{
    alpha_string, estimate_cutpoint, group_items, group_items_traversed, naive_project, plan_groups, project_database, remove_projection,
    GroupPlan, ProjectOptions, Statistics,
};
use crate::report::{GroupRecord, RunReport};
use crate::txdb::{
    open_scan, BlockConfig, DbLocator, DbWriter, IoContext, ItemCounts, ItemId, MinSupport, ScanPosition, Scanner,
    SupportThreshold,
};

/// The I/O-saving techniques applied while projecting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Techniques {
    /// Take a single-master child's item counts from the parent's pair array
    /// instead of scanning its database.
    pub child_counts_from_array: bool,
    /// Build a group's tree straight from the parent database when more than
    /// half of its items are masters.
    pub skip_write: bool,
    /// Derive the partial tree's transactions from the tree when projecting.
    pub tree_reuse: bool,
    /// Drop items the pair array shows to be useless for a group.
    pub pruning: bool,
}

impl Techniques {
    pub fn all() -> Self {
        Techniques {
            child_counts_from_array: true,
            skip_write: true,
            tree_reuse: true,
            pruning: true,
        }
    }

    pub fn none() -> Self {
        Techniques {
            child_counts_from_array: false,
            skip_write: false,
            tree_reuse: false,
            pruning: false,
        }
    }
}

impl Default for Techniques {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Clone, Debug)]
pub struct DiskmineConfig {
    pub budget: MemoryBudget,
    pub block: BlockConfig,
    /// Directory for projected databases; created if missing.
    pub tmp_dir: PathBuf,
    pub max_depth: u32,
    pub techniques: Techniques,
    /// Reject any itemset emitted twice. Holds every itemset in memory.
    pub check_disjoint: bool,
    pub single_path: bool,
    /// JSON-lines log of every decomposition.
    pub plan_log: Option<PathBuf>,
    /// Size groups by walking the partial tree instead of summing `μ`.
    pub traversal_grouping: bool,
}

impl DiskmineConfig {
    pub const DEFAULT_MAX_DEPTH: u32 = 16;

    pub fn new(budget: MemoryBudget, tmp_dir: impl Into<PathBuf>) -> Self {
        DiskmineConfig {
            budget,
            block: BlockConfig::default(),
            tmp_dir: tmp_dir.into(),
            max_depth: Self::DEFAULT_MAX_DEPTH,
            techniques: Techniques::all(),
            check_disjoint: false,
            single_path: true,
            plan_log: None,
            traversal_grouping: true,
        }
    }
}

/// Mines every itemset of `db` with support at least `min_support`.
pub fn diskmine(
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &DiskmineConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<RunReport> {
    run(Mode::Aggressive(cfg.techniques), "diskmine", db, min_support, cfg, sink)
}

/// Builds one tree with no budget and mines it: two scans, no projection.
pub fn memory_only(
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &DiskmineConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<RunReport> {
    let cfg = DiskmineConfig {
        budget: MemoryBudget::unlimited(),
        ..cfg.clone()
    };
    run(Mode::Aggressive(Techniques::all()), "memory-only", db, min_support, &cfg, sink)
}

/// Concatenates result parts. With `check` (the default in debug builds),
/// an itemset appearing in two parts is reported as an error.
pub fn union_results(parts: impl IntoIterator<Item = Vec<Itemset>>, check: bool) -> Result<Vec<Itemset>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for part in parts {
        for s in part {
            if check && !seen.insert(s.items.clone()) {
                return Err(Error::DuplicateItemset(s.items));
            }
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Mode {
    Aggressive(Techniques),
    /// One projected database per frequent item, every child counting its
    /// own database.
    Naive,
}

pub(crate) fn run(
    mode: Mode,
    name: &str,
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &DiskmineConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<RunReport> {
    let start = Instant::now();
    cfg.budget.validate()?;
    fs::create_dir_all(&cfg.tmp_dir).map_err(|e| Error::io(&cfg.tmp_dir, e))?;
    let io = IoContext::new(cfg.block);
    let counts = ItemCounts::from_scanner(open_scan(db, &io, None)?)?;
    let threshold = SupportThreshold::resolve(min_support, counts.n_transactions)?;
    let freq = FreqString::from_counts(&counts, &threshold);

    let mut report = RunReport {
        algorithm: name.to_string(),
        db_bytes: db.file_size()?,
        block_size: cfg.block.block_size,
        memory_budget: cfg.budget.bytes,
        node_limit: cfg.budget.node_limit(),
        n_transactions: counts.n_transactions,
        threshold: threshold.count(),
        n_frequent_items: freq.len(),
        avg_frequent_items: if counts.n_transactions == 0 {
            0.0
        } else {
            freq.counts.iter().sum::<u64>() as f64 / counts.n_transactions as f64
        },
        ..RunReport::default()
    };

    let plan_log = match &cfg.plan_log {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => None,
    };
    let tracker = MemoryTracker::new(&cfg.budget);
    let mut checked;
    let sink: &mut dyn ItemsetSink = if cfg.check_disjoint {
        checked = DisjointnessCheck::new(sink);
        &mut checked
    } else {
        sink
    };
    let mut engine = Engine {
        mode,
        cfg,
        io: io.clone(),
        tracker: tracker.clone(),
        threshold,
        sink,
        mine_opts: MineOptions {
            single_path: cfg.single_path,
            tracker: Some(tracker.clone()),
        },
        report: &mut report,
        plan_log,
        scratch: Vec::new(),
    };
    engine.solve(Task {
        db: db.clone(),
        alpha: Vec::new(),
        strip: None,
        counts: Some(counts),
        depth: 1,
        temp: false,
    })?;
    if let Some(mut log) = engine.plan_log.take() {
        log.flush().map_err(|e| Error::io(cfg.plan_log.as_ref().unwrap(), e))?;
    }

    report.io = io.stats();
    report.peak_tree_bytes = tracker.peak();
    report.budget_violations = tracker.violations();
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

struct Task {
    db: DbLocator,
    alpha: Vec<ItemId>,
    /// Item present in every transaction of `db` and already part of `alpha`.
    strip: Option<ItemId>,
    counts: Option<ItemCounts>,
    depth: u32,
    /// Delete `db` once the task is done.
    temp: bool,
}

/// How a task's own tree turned out.
struct Built {
    nodes: Option<u64>,
    aborted: bool,
}

struct Engine<'a> {
    mode: Mode,
    cfg: &'a DiskmineConfig,
    io: IoContext,
    tracker: MemoryTracker,
    threshold: SupportThreshold,
    sink: &'a mut dyn ItemsetSink,
    mine_opts: MineOptions,
    report: &'a mut RunReport,
    plan_log: Option<BufWriter<File>>,
    scratch: Vec<ItemId>,
}

impl Engine<'_> {
    fn emit(&mut self, alpha: &[ItemId], items: &[ItemId], support: u64) -> Result<()> {
        self.scratch.clear();
        self.scratch.extend_from_slice(alpha);
        self.scratch.extend_from_slice(items);
        self.scratch.sort_unstable();
        self.report.itemsets_emitted += 1;
        self.sink.emit(&self.scratch, support)
    }

    fn mine(&mut self, tree: &FpTree, array: &PairArray, alpha: &[ItemId], masters: Option<&[ItemId]>) -> Result<()> {
        let mut counting = CountingSink::new(&mut *self.sink);
        let r = fpgrowth_star(tree, array, alpha, &self.threshold, &mut counting, masters, &self.mine_opts);
        self.report.itemsets_emitted += counting.count;
        r
    }

    fn scan(&self, task: &Task, from: Option<ScanPosition>) -> Result<Scanner> {
        Ok(open_scan(&task.db, &self.io, from)?.excluding(task.strip))
    }

    fn enter(&mut self, depth: u32) -> Result<()> {
        if depth > self.cfg.max_depth {
            return Err(Error::MaxDepthExceeded(self.cfg.max_depth));
        }
        self.report.recursion_depth = self.report.recursion_depth.max(depth);
        Ok(())
    }

    fn solve(&mut self, mut task: Task) -> Result<Built> {
        let built = self.solve_inner(&mut task);
        if task.temp && built.is_ok() {
            remove_projection(&task.db)?;
        }
        built
    }

    fn solve_inner(&mut self, task: &mut Task) -> Result<Built> {
        self.enter(task.depth)?;
        let counts = match task.counts.take() {
            Some(c) => c,
            None => ItemCounts::from_scanner(self.scan(task, None)?)?,
        };
        let freq = FreqString::from_counts(&counts, &self.threshold);
        if freq.is_empty() {
            return Ok(Built {
                nodes: Some(0),
                aborted: false,
            });
        }
        let fill_array = matches!(self.mode, Mode::Aggressive(_));
        let outcome = build_tree(
            self.scan(task, None)?,
            &freq,
            &self.cfg.budget,
            Some(self.tracker.clone()),
            fill_array,
        )?;
        if task.depth == 1 {
            self.report.root_trial_nodes = outcome.tree().n_nodes();
        }
        match outcome {
            BuildOutcome::Complete { tree, array } => {
                self.mine(&tree, &array, &task.alpha, None)?;
                Ok(Built {
                    nodes: Some(tree.n_nodes()),
                    aborted: false,
                })
            }
            BuildOutcome::Aborted { tree, array, position } => {
                match self.mode {
                    Mode::Aggressive(t) => self.decompose(task, &freq, &counts, tree, array, position, t)?,
                    Mode::Naive => {
                        drop((tree, array));
                        self.naive_split(task, &freq)?
                    }
                }
                Ok(Built {
                    nodes: None,
                    aborted: true,
                })
            }
        }
    }

    fn naive_split(&mut self, task: &Task, freq: &FreqString) -> Result<()> {
        let locs = naive_project(&task.db, freq, &self.io, &self.cfg.tmp_dir, &task.alpha)?;
        self.report.add_groups(task.depth, locs.len());
        let mut bytes = 0;
        for l in &locs {
            bytes += l.file_size()?;
        }
        self.report.add_projected(task.depth, bytes);
        for (j, loc) in locs.into_iter().enumerate() {
            let m = freq.items[j];
            self.emit(&task.alpha, &[m], freq.counts[j])?;
            self.solve(Task {
                db: loc,
                alpha: with(&task.alpha, m),
                strip: Some(m),
                counts: None,
                depth: task.depth + 1,
                temp: true,
            })?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn decompose(
        &mut self,
        task: &Task,
        freq: &FreqString,
        counts: &ItemCounts,
        tree: FpTree,
        array: PairArray,
        position: ScanPosition,
        tech: Techniques,
    ) -> Result<()> {
        let stats = Statistics {
            t_d: counts.n_transactions,
            t_t: tree.inserted_tx(),
            shape: shape_stats(&tree, &array, &self.threshold),
            array,
            n_frequent: freq.len(),
        };
        let cut = estimate_cutpoint(&stats);
        let grouping = if self.cfg.traversal_grouping {
            group_items_traversed(&stats, &tree, cut, &self.threshold, tech.pruning)
        } else {
            group_items(&stats, cut)
        };
        let plans = plan_groups(&stats, freq, &grouping, &self.threshold, tech.pruning, tech.skip_write);
        if task.depth == 1 {
            self.report.root_groups = Some(plans.len());
            self.report.root_cut_point = Some(cut);
        }
        self.report.add_groups(task.depth, plans.len());
        self.log_plan(task, freq, &stats, cut, &plans)?;

        let reuse = tech.tree_reuse.then_some((&tree, position));
        let locs = project_database(
            &task.db,
            freq,
            &plans,
            &self.io,
            &self.cfg.tmp_dir,
            &task.alpha,
            ProjectOptions { tree_reuse: reuse },
        )?;
        drop(tree);

        for plan in &plans {
            for s in &plan.direct_outputs {
                self.emit(&task.alpha, &s.items, s.support)?;
            }
        }
        let mut total_bytes = 0;
        for (plan, loc) in plans.iter().zip(locs) {
            if plan.is_settled() {
                continue;
            }
            let projected_bytes = match &loc {
                Some(l) => l.file_size()?,
                None => 0,
            };
            total_bytes += projected_bytes;
            let rec = self.report.groups.len();
            self.report.groups.push(GroupRecord {
                depth: task.depth,
                alpha: task.alpha.iter().map(|i| i.0).collect(),
                index: plan.index,
                n_items: plan.n_kept(),
                n_masters: plan.kept_masters().count(),
                estimated_nodes: plan.estimated_nodes,
                write_db: loc.is_some(),
                projected_bytes,
                ..GroupRecord::default()
            });
            let built = if plan.is_singleton() {
                let j = plan.span.0;
                let m = freq.items[j];
                self.emit(&task.alpha, &[m], freq.counts[j])?;
                let child_counts = tech.child_counts_from_array.then(|| {
                    let pairs = (0..j)
                        .filter(|&k| plan.keeps(k as u32))
                        .map(|k| (freq.items[k], stats.array.get(j, k)));
                    ItemCounts::from_pairs(pairs, freq.counts[j])
                });
                self.solve(Task {
                    db: loc.expect("singleton groups are written"),
                    alpha: with(&task.alpha, m),
                    strip: Some(m),
                    counts: child_counts,
                    depth: task.depth + 1,
                    temp: true,
                })?
            } else {
                let built = self.mainmine(task, freq, plan, loc.as_ref())?;
                if let Some(l) = &loc {
                    remove_projection(l)?;
                }
                built
            };
            let r = &mut self.report.groups[rec];
            r.actual_nodes = built.nodes;
            r.aborted = built.aborted;
        }
        self.report.add_projected(task.depth, total_bytes);
        Ok(())
    }

    /// Mines a multi-master group from one tree in the parent's item order.
    fn mainmine(&mut self, task: &Task, freq: &FreqString, plan: &GroupPlan, loc: Option<&DbLocator>) -> Result<Built> {
        let depth = task.depth + 1;
        self.enter(depth)?;
        let kept: Vec<usize> = (0..plan.span.1).filter(|&r| plan.keeps(r as u32)).collect();
        let order = FreqString {
            items: kept.iter().map(|&r| freq.items[r]).collect(),
            counts: kept.iter().map(|&r| freq.counts[r]).collect(),
        };
        let first_master = kept.iter().position(|&r| r >= plan.span.0).unwrap_or(kept.len()) as u32;
        let masters: Vec<ItemId> = order.items[first_master as usize..].to_vec();
        let scanner = match loc {
            Some(l) => open_scan(l, &self.io, None)?,
            None => self.scan(task, None)?,
        };
        let has_master = |r: &[u32]| r.last().is_some_and(|&x| x >= first_master);
        let outcome = build_tree_filtered(
            scanner,
            &order,
            &self.cfg.budget,
            Some(self.tracker.clone()),
            true,
            has_master,
        )?;
        match outcome {
            BuildOutcome::Complete { tree, array } => {
                self.mine(&tree, &array, &task.alpha, Some(&masters))?;
                Ok(Built {
                    nodes: Some(tree.n_nodes()),
                    aborted: false,
                })
            }
            BuildOutcome::Aborted { .. } => {
                drop(outcome);
                log::debug!(
                    "group {} of [{}] outgrew its estimate; splitting by master",
                    plan.index,
                    alpha_string(&task.alpha)
                );
                let source = match loc {
                    Some(l) => Task {
                        db: l.clone(),
                        alpha: task.alpha.clone(),
                        strip: None,
                        counts: None,
                        depth,
                        temp: false,
                    },
                    None => Task {
                        db: task.db.clone(),
                        alpha: task.alpha.clone(),
                        strip: task.strip,
                        counts: None,
                        depth,
                        temp: false,
                    },
                };
                self.split_by_master(&source, &order, first_master, plan.index)?;
                Ok(Built {
                    nodes: None,
                    aborted: true,
                })
            }
        }
    }

    /// Writes one database per master `m` of `order[first_master..]` holding
    /// `τ ∩ {order[..=m]}` for every `τ` containing `m`, and mines each
    /// recursively.
    fn split_by_master(&mut self, source: &Task, order: &FreqString, first_master: u32, group: usize) -> Result<()> {
        let ranks = order.rank_map();
        let n_masters = order.len() - first_master as usize;
        let mut writers = Vec::with_capacity(n_masters);
        for x in 0..n_masters {
            let path = split_path(&self.cfg.tmp_dir, &source.alpha, group, x);
            writers.push(DbWriter::create(&DbLocator::binary(path), &self.io)?);
        }
        let mut scan = self.scan(source, None)?;
        let mut buf = Vec::new();
        let mut rbuf = Vec::new();
        let mut out = Vec::new();
        while scan.next_into(&mut buf)? {
            ranks.project(&buf, &mut rbuf);
            for (i, &r) in rbuf.iter().enumerate() {
                if r < first_master {
                    continue;
                }
                out.clear();
                out.extend(rbuf[..=i].iter().map(|&q| order.items[q as usize]));
                out.sort_unstable();
                writers[(r - first_master) as usize].write(&out)?;
            }
        }
        let locs: Vec<DbLocator> = writers.into_iter().map(DbWriter::finish).collect::<Result<_>>()?;
        let mut bytes = 0;
        for l in &locs {
            bytes += l.file_size()?;
        }
        self.report.add_projected(source.depth, bytes);
        self.report.add_groups(source.depth, locs.len());
        for (x, loc) in locs.into_iter().enumerate() {
            let r = first_master as usize + x;
            let m = order.items[r];
            self.emit(&source.alpha, &[m], order.counts[r])?;
            self.solve(Task {
                db: loc,
                alpha: with(&source.alpha, m),
                strip: Some(m),
                counts: None,
                depth: source.depth + 1,
                temp: true,
            })?;
        }
        Ok(())
    }

    fn log_plan(
        &mut self,
        task: &Task,
        freq: &FreqString,
        stats: &Statistics,
        cut: usize,
        plans: &[GroupPlan],
    ) -> Result<()> {
        let Some(log) = self.plan_log.as_mut() else {
            return Ok(());
        };
        let ids = |rs: &[u32]| rs.iter().map(|&r| freq.items[r as usize].0).collect::<Vec<_>>();
        let groups: Vec<_> = plans
            .iter()
            .map(|p| {
                serde_json::json!({
                    "index": p.index,
                    "masters": freq.items[p.span.0..p.span.1].iter().map(|i| i.0).collect::<Vec<_>>(),
                    "removed_slaves": ids(&p.removed_slaves),
                    "removed_masters": ids(&p.removed_masters),
                    "direct_outputs": p.direct_outputs.len(),
                    "write_db": p.write_db,
                    "estimated_nodes": p.estimated_nodes,
                })
            })
            .collect();
        let line = serde_json::json!({
            "depth": task.depth,
            "alpha": task.alpha.iter().map(|i| i.0).collect::<Vec<_>>(),
            "t_d": stats.t_d,
            "t_t": stats.t_t,
            "nu": stats.shape.nu,
            "n_frequent": stats.n_frequent,
            "cut_point": cut,
            "groups": groups,
        });
        let path = self.cfg.plan_log.as_ref().expect("log is open");
        writeln!(log, "{line}").map_err(|e| Error::io(path, e))
    }
}

fn with(alpha: &[ItemId], m: ItemId) -> Vec<ItemId> {
    let mut v = alpha.to_vec();
    v.push(m);
    v
}

fn split_path(dir: &Path, alpha: &[ItemId], group: usize, master: usize) -> PathBuf {
    dir.join(format!("proj_{}_{}m{}.db", alpha_string(alpha), group, master))
}
