mod common;

use common::*;
use diskmine_core::fpgrowth::{fpgrowth_star, CollectSink, MineOptions};
use diskmine_core::fptree::{build_tree, conditional_tree, shape_stats, BuildOutcome, FreqString, MemoryBudget, RankMap};
use diskmine_core::projection::{
    group_items_traversed, naive_project, plan_groups, project_database, Grouping, ProjectOptions, Statistics,
};
use diskmine_core::txdb::{count_items, open_scan, read_all};
use diskmine_core::{
    diskmine, naive_diskmine, partition_mine, DiskmineConfig, ItemId, MinSupport, PartitionConfig, SupportThreshold,
    Techniques,
};
use proptest::prelude::*;

fn freqstring(rows: &[Vec<u32>], threshold: &SupportThreshold) -> FreqString {
    let mut counts = std::collections::HashMap::new();
    for r in rows {
        for &i in r {
            *counts.entry(ItemId(i)).or_insert(0u64) += 1;
        }
    }
    FreqString::from_pairs(counts, threshold)
}

/// Builds the whole tree of `rows` in memory.
fn full_tree(
    dir: &std::path::Path,
    rows: &[Vec<u32>],
    threshold: &SupportThreshold,
) -> (diskmine_core::fptree::FpTree, diskmine_core::fptree::PairArray) {
    let db = write(dir, "full.db", rows);
    let fs = freqstring(rows, threshold);
    match build_tree(open_scan(&db, &io(), None).unwrap(), &fs, &MemoryBudget::unlimited(), None, true).unwrap() {
        BuildOutcome::Complete { tree, array } => (tree, array),
        BuildOutcome::Aborted { .. } => unreachable!("unlimited budget"),
    }
}

/// Itemsets of a projected database that contain one of `masters`.
fn with_master(rows: &[Vec<u32>], threshold: u64, masters: &[ItemId]) -> ResultMap {
    oracle(rows, threshold)
        .into_iter()
        .filter(|(items, _)| items.iter().any(|i| masters.contains(i)))
        .collect()
}

fn rows_of(loc: &diskmine_core::DbLocator) -> Vec<Vec<u32>> {
    read_all(loc, &io())
        .unwrap()
        .into_iter()
        .map(|t| t.items().iter().map(|i| i.0).collect())
        .collect()
}

fn random_ends(n: usize, cuts: &[usize]) -> Vec<usize> {
    let mut ends: Vec<usize> = cuts.iter().map(|c| 1 + c % n.max(1)).filter(|&e| e < n).collect();
    ends.push(n);
    ends.sort_unstable();
    ends.dedup();
    ends
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn miners_agree_with_oracle((rows, th) in small_db_with_threshold(), nodes in 3u64..40) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let expected = oracle(&rows, th);
        let mut cfg = DiskmineConfig::new(MemoryBudget::with_node_limit(nodes), dir.path().join("tmp"));
        cfg.check_disjoint = true;

        let mut sink = CollectSink::new();
        diskmine(&db, MinSupport::Count(th), &cfg, &mut sink).unwrap();
        prop_assert_eq!(&collected(sink), &expected);

        let mut sink = CollectSink::new();
        naive_diskmine(&db, MinSupport::Count(th), &cfg, &mut sink).unwrap();
        prop_assert_eq!(&collected(sink), &expected);

        let pc = PartitionConfig::new(MemoryBudget::with_node_limit(nodes.max(15)), dir.path().join("tmp"));
        let mut sink = CollectSink::new();
        partition_mine(&db, MinSupport::Count(th), &pc, &mut sink).unwrap();
        prop_assert_eq!(&collected(sink), &expected);
    }

    #[test]
    fn technique_subsets_agree((rows, th) in small_db_with_threshold(), mask in 0u8..32) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let mut cfg = DiskmineConfig::new(MemoryBudget::with_node_limit(6), dir.path().join("tmp"));
        cfg.check_disjoint = true;
        cfg.techniques = Techniques {
            child_counts_from_array: mask & 1 != 0,
            skip_write: mask & 2 != 0,
            tree_reuse: mask & 4 != 0,
            pruning: mask & 8 != 0,
        };
        cfg.traversal_grouping = mask & 16 != 0;
        let mut sink = CollectSink::new();
        diskmine(&db, MinSupport::Count(th), &cfg, &mut sink).unwrap();
        prop_assert_eq!(collected(sink), oracle(&rows, th));
    }

    /// The union over every frequent item `i_j` of the itemsets of its naive
    /// projection that contain `i_j` is the full result.
    #[test]
    fn naive_projections_cover_the_result((rows, th) in small_db_with_threshold()) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let t = SupportThreshold::absolute(th);
        let fs = freqstring(&rows, &t);
        let parts = naive_project(&db, &fs, &io(), dir.path(), &[]).unwrap();
        let mut union = ResultMap::new();
        for (j, loc) in parts.iter().enumerate() {
            for (items, s) in with_master(&rows_of(loc), th, &[fs.items[j]]) {
                prop_assert!(union.insert(items, s).is_none(), "projections overlap");
            }
        }
        prop_assert_eq!(union, oracle(&rows, th));
    }

    /// The same holds for any grouping, taking from each group's projection
    /// the itemsets that contain one of its masters.
    #[test]
    fn grouped_projections_cover_the_result(
        (rows, th) in small_db_with_threshold(),
        cuts in proptest::collection::vec(0usize..15, 0..5),
        reuse in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let t = SupportThreshold::absolute(th);
        let fs = freqstring(&rows, &t);
        prop_assume!(!fs.is_empty());
        let grouping = Grouping::from_ends(&random_ends(fs.len(), &cuts));
        let (stats, tree, position) = trial(&db, &fs, &t, 4);
        let plans = plan_groups(&stats, &fs, &grouping, &t, false, false);
        let reuse = if reuse { Some((&tree, position)) } else { None };
        let locs = project_database(&db, &fs, &plans, &io(), dir.path(), &[], ProjectOptions { tree_reuse: reuse }).unwrap();
        let mut union = ResultMap::new();
        for (plan, loc) in plans.iter().zip(&locs) {
            let masters = &fs.items[plan.span.0..plan.span.1];
            for (items, s) in with_master(&rows_of(loc.as_ref().unwrap()), th, masters) {
                prop_assert!(union.insert(items, s).is_none(), "groups overlap");
            }
        }
        prop_assert_eq!(union, oracle(&rows, th));
    }

    /// Items removed by pruning never matter: the direct outputs plus the
    /// pruned projections give the full result.
    #[test]
    fn pruning_is_sound(
        (rows, th) in small_db_with_threshold(),
        cuts in proptest::collection::vec(0usize..15, 0..5),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let t = SupportThreshold::absolute(th);
        let fs = freqstring(&rows, &t);
        prop_assume!(!fs.is_empty());
        let grouping = Grouping::from_ends(&random_ends(fs.len(), &cuts));
        let (stats, _tree, _) = trial(&db, &fs, &t, 4);
        let plans = plan_groups(&stats, &fs, &grouping, &t, true, false);
        let locs = project_database(&db, &fs, &plans, &io(), dir.path(), &[], ProjectOptions { tree_reuse: None }).unwrap();
        let mut union = ResultMap::new();
        for (plan, loc) in plans.iter().zip(&locs) {
            for s in &plan.direct_outputs {
                prop_assert!(union.insert(s.items.clone(), s.support).is_none(), "direct output repeated");
            }
            if let Some(loc) = loc {
                let masters: Vec<ItemId> = plan.kept_masters().map(|r| fs.items[r as usize]).collect();
                for (items, s) in with_master(&rows_of(loc), th, &masters) {
                    prop_assert!(union.insert(items, s).is_none(), "groups overlap");
                }
            } else {
                prop_assert!(plan.is_settled());
            }
        }
        prop_assert_eq!(union, oracle(&rows, th));
    }

    /// An aborted build loses nothing: the partial tree's paths plus the
    /// rest of the scan are the whole database.
    #[test]
    fn aborted_build_resumes_cleanly(rows in small_db(), nodes in 1u64..30) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let t = SupportThreshold::absolute(1);
        let fs = freqstring(&rows, &t);
        let ranks = fs.rank_map();
        let outcome = build_tree(open_scan(&db, &io(), None).unwrap(), &fs, &MemoryBudget::with_node_limit(nodes), None, true).unwrap();
        let mut got = Vec::new();
        outcome.tree().for_each_path(|p, m| {
            for _ in 0..m {
                got.push(p.to_vec());
            }
        });
        for _ in 0..outcome.tree().empty_tx() {
            got.push(Vec::new());
        }
        if let BuildOutcome::Aborted { position, tree, .. } = &outcome {
            prop_assert!(tree.n_nodes() <= nodes);
            prop_assert_eq!(position.transactions_consumed, tree.inserted_tx());
            let mut scan = open_scan(&db, &io(), Some(*position)).unwrap();
            let mut buf = Vec::new();
            let mut r = Vec::new();
            while scan.next_into(&mut buf).unwrap() {
                ranks.project(&buf, &mut r);
                got.push(r.clone());
            }
        }
        let mut want: Vec<Vec<u32>> = rows
            .iter()
            .map(|row| project(&ranks, row))
            .collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    /// Mining the conditional tree of an item gives the itemsets of its
    /// conditional database.
    #[test]
    fn conditional_tree_matches_conditional_database((rows, th) in small_db_with_threshold(), pick in 0usize..15) {
        let dir = tempfile::tempdir().unwrap();
        let t = SupportThreshold::absolute(th);
        let (tree, array) = full_tree(dir.path(), &rows, &t);
        prop_assume!(tree.n_items() > 0);
        let rank = pick % tree.n_items();
        let item = tree.order()[rank];
        let (cond, carray) = conditional_tree(&tree, &array, rank, &t, None);
        prop_assert_eq!(cond.inserted_tx(), tree.header_count(rank));
        let mut sink = CollectSink::new();
        fpgrowth_star(&cond, &carray, &[item], &t, &mut sink, None, &MineOptions::default()).unwrap();
        let mut got = collected(sink);
        got.insert(vec![item], tree.header_count(rank));

        // transactions containing the item, cut to the items ranked before it
        let before: Vec<ItemId> = tree.order()[..=rank].to_vec();
        let cond_rows: Vec<Vec<u32>> = rows
            .iter()
            .filter(|r| r.contains(&item.0))
            .map(|r| r.iter().copied().filter(|i| before.contains(&ItemId(*i))).collect())
            .collect();
        prop_assert_eq!(got, with_master(&cond_rows, th, &[item]));
    }

    #[test]
    fn single_path_shortcut_changes_nothing((rows, th) in small_db_with_threshold()) {
        let dir = tempfile::tempdir().unwrap();
        let t = SupportThreshold::absolute(th);
        let (tree, array) = full_tree(dir.path(), &rows, &t);
        let run = |single_path| {
            let mut sink = CollectSink::new();
            let opts = MineOptions { single_path, tracker: None };
            fpgrowth_star(&tree, &array, &[], &t, &mut sink, None, &opts).unwrap();
            collected(sink)
        };
        let on = run(true);
        prop_assert_eq!(&on, &run(false));
        prop_assert_eq!(on, oracle(&rows, th));
    }

    #[test]
    fn master_filter_keeps_itemsets_with_a_master(
        (rows, th) in small_db_with_threshold(),
        picks in proptest::collection::btree_set(0u32..15, 1..4),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let t = SupportThreshold::absolute(th);
        let (tree, array) = full_tree(dir.path(), &rows, &t);
        let masters: Vec<ItemId> = picks.into_iter().map(ItemId).collect();
        let mut sink = CollectSink::new();
        fpgrowth_star(&tree, &array, &[], &t, &mut sink, Some(&masters), &MineOptions::default()).unwrap();
        prop_assert_eq!(collected(sink), with_master(&rows, th, &masters));
    }

    /// A smaller budget may cost I/O but never changes the result.
    #[test]
    fn budget_does_not_change_the_result((rows, th) in small_db_with_threshold(), a in 2u64..50, b in 2u64..50) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let run = |nodes| {
            let cfg = DiskmineConfig::new(MemoryBudget::with_node_limit(nodes), dir.path().join("tmp"));
            let mut sink = CollectSink::new();
            diskmine(&db, MinSupport::Count(th), &cfg, &mut sink).unwrap();
            diskmine_core::fpgrowth::format_fimi(&sink.into_sorted())
        };
        prop_assert_eq!(run(a.min(b)), run(a.max(b)));
    }

    /// The shape statistics agree with a direct walk over the nodes.
    #[test]
    fn shape_stats_recount((rows, th) in small_db_with_threshold()) {
        let dir = tempfile::tempdir().unwrap();
        let t = SupportThreshold::absolute(th);
        let (tree, array) = full_tree(dir.path(), &rows, &t);
        let stats = shape_stats(&tree, &array, &t);
        let n = tree.n_items();
        let mut per_rank = vec![0u64; n];
        let mut ancestors = vec![std::collections::BTreeSet::new(); n];
        for idx in 1..=tree.n_nodes() as u32 {
            let node = tree.node(idx);
            let j = node.rank as usize;
            per_rank[j] += 1;
            let mut up = node.parent;
            while up != 0 {
                let a = tree.node(up);
                if t.is_frequent(array.get(j, a.rank as usize)) {
                    ancestors[j].insert(up);
                }
                up = a.parent;
            }
        }
        let mut acc = 0;
        for j in 0..n {
            acc += per_rank[j];
            prop_assert_eq!(stats.nu_prefix[j], acc);
            prop_assert_eq!(stats.mu[j], ancestors[j].len() as u64);
        }
        prop_assert_eq!(stats.nu, tree.n_nodes());
    }
}

fn project(ranks: &RankMap, row: &[u32]) -> Vec<u32> {
    let items: Vec<ItemId> = row.iter().map(|&i| ItemId(i)).collect();
    let mut out = Vec::new();
    ranks.project(&items, &mut out);
    out
}

/// Builds a trial tree limited to `nodes` and gathers its statistics. A
/// complete build stands in as a trial that consumed everything.
fn trial(
    db: &diskmine_core::DbLocator,
    fs: &FreqString,
    t: &SupportThreshold,
    nodes: u64,
) -> (Statistics, diskmine_core::fptree::FpTree, diskmine_core::txdb::ScanPosition) {
    let n_tx = count_items(db, &io()).unwrap().n_transactions;
    let outcome = build_tree(open_scan(db, &io(), None).unwrap(), fs, &MemoryBudget::with_node_limit(nodes), None, true).unwrap();
    let (tree, array, position) = match outcome {
        BuildOutcome::Aborted { tree, array, position } => (tree, array, position),
        BuildOutcome::Complete { tree, array } => {
            let position = diskmine_core::txdb::ScanPosition {
                byte_offset: db.file_size().unwrap(),
                transactions_consumed: tree.inserted_tx(),
            };
            (tree, array, position)
        }
    };
    let stats = Statistics {
        t_d: n_tx,
        t_t: tree.inserted_tx(),
        shape: shape_stats(&tree, &array, t),
        array,
        n_frequent: fs.len(),
    };
    (stats, tree, position)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Traversal groups tile the freqstring, and each group past the cut
    /// point is estimated at no fewer nodes than its masters hold in the
    /// partial tree.
    #[test]
    fn traversal_groups_tile_the_freqstring((rows, th) in small_db_with_threshold(), nodes in 3u64..30, cut in 1usize..15) {
        let dir = tempfile::tempdir().unwrap();
        let db = write(dir.path(), "d.db", &rows);
        let t = SupportThreshold::absolute(th);
        let fs = freqstring(&rows, &t);
        prop_assume!(!fs.is_empty());
        let (stats, tree, _) = trial(&db, &fs, &t, nodes);
        let g = group_items_traversed(&stats, &tree, cut, &t, true);
        let mut next = 0;
        for &(s, e) in &g.groups {
            prop_assert_eq!(s, next);
            prop_assert!(e > s);
            next = e;
        }
        prop_assert_eq!(next, fs.len());
        if stats.shape.nu == 0 || stats.t_t == 0 {
            // nothing to walk: singleton groups, sized later from the statistics
            prop_assert!(g.estimated_nodes.is_empty());
            return Ok(());
        }
        prop_assert_eq!(g.estimated_nodes.len(), g.groups.len());
        for (&(s, e), &est) in g.groups.iter().zip(&g.estimated_nodes).skip(1) {
            let own: u64 = (s..e).map(|j| tree.node_list(j).count() as u64).sum();
            prop_assert!(est >= own, "group {s}..{e}: estimate {est} < own nodes {own}");
        }
    }
}
