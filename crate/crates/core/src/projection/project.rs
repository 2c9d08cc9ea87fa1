use std::path::Path;

use super::{projection_path, GroupPlan};
use crate::error::{Error, Result};
use crate::fptree::{FpTree, FreqString};
use crate::txdb::{open_scan, DbLocator, DbWriter, IoContext, ItemId, ScanPosition};

#[derive(Clone, Copy, Debug)]
pub struct ProjectOptions<'a> {
    /// Re-derive the transactions held by the partial tree from the tree
    /// instead of reading them again.
    pub tree_reuse: Option<(&'a FpTree, ScanPosition)>,
}

/// Writes the projected database of every plan with `write_db` set and at
/// least one master left; other entries are `None`.
pub fn project_database(
    db: &DbLocator,
    freqstring: &FreqString,
    plans: &[GroupPlan],
    io: &IoContext,
    dir: &Path,
    alpha: &[ItemId],
    opts: ProjectOptions<'_>,
) -> Result<Vec<Option<DbLocator>>> {
    let n = freqstring.len();
    // owner[r]: the plan whose kept master is rank r, if it is written
    let mut owner = vec![usize::MAX; n];
    let mut writers: Vec<Option<DbWriter>> = Vec::with_capacity(plans.len());
    for (g, plan) in plans.iter().enumerate() {
        if !plan.write_db || plan.is_settled() {
            writers.push(None);
            continue;
        }
        for r in plan.kept_masters() {
            owner[r as usize] = g;
        }
        let loc = DbLocator::binary(projection_path(dir, alpha, plan.index));
        writers.push(Some(DbWriter::create(&loc, io)?));
    }

    let mut proj = Projector {
        freqstring,
        plans,
        owner: &owner,
        writers: &mut writers,
        out: Vec::new(),
        groups: Vec::new(),
    };

    let mut resume = None;
    if let Some((tree, position)) = opts.tree_reuse {
        let mut seen = tree.empty_tx();
        let mut err = None;
        tree.for_each_path(|ranks, mult| {
            seen += mult;
            if err.is_none() {
                if let Err(e) = proj.emit(ranks, mult) {
                    err = Some(e);
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if seen != tree.inserted_tx() || seen != position.transactions_consumed {
            return Err(Error::Consistency(format!(
                "partial tree yields {seen} transactions, expected {} (scan stopped after {})",
                tree.inserted_tx(),
                position.transactions_consumed
            )));
        }
        resume = Some(position);
    }

    let ranks = freqstring.rank_map();
    let mut scan = open_scan(db, io, resume)?;
    let mut buf = Vec::new();
    let mut rbuf = Vec::new();
    while scan.next_into(&mut buf)? {
        ranks.project(&buf, &mut rbuf);
        proj.emit(&rbuf, 1)?;
    }

    writers
        .into_iter()
        .map(|w| w.map(DbWriter::finish).transpose())
        .collect()
}

struct Projector<'a> {
    freqstring: &'a FreqString,
    plans: &'a [GroupPlan],
    owner: &'a [usize],
    writers: &'a mut Vec<Option<DbWriter>>,
    out: Vec<ItemId>,
    groups: Vec<usize>,
}

impl Projector<'_> {
    /// Writes one transaction (ascending ranks) `mult` times to every group
    /// it touches.
    fn emit(&mut self, ranks: &[u32], mult: u64) -> Result<()> {
        self.groups.clear();
        for &r in ranks {
            let g = self.owner[r as usize];
            if g != usize::MAX && self.groups.last() != Some(&g) {
                self.groups.push(g);
            }
        }
        for &g in &self.groups {
            let plan = &self.plans[g];
            self.out.clear();
            self.out.extend(
                ranks
                    .iter()
                    .take_while(|&&r| (r as usize) < plan.span.1)
                    .filter(|&&r| plan.keeps(r))
                    .map(|&r| self.freqstring.items[r as usize]),
            );
            self.out.sort_unstable();
            let w = self.writers[g].as_mut().expect("owner has a writer");
            for _ in 0..mult {
                w.write(&self.out)?;
            }
        }
        Ok(())
    }
}
