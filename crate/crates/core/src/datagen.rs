//! Synthetic market-basket databases.
//!
//! A pool of potentially large itemsets ("patterns") is drawn first; each
//! transaction is then assembled from weighted picks out of the pool, with
//! every picked item dropped with probability `1 - correlation`, until it
//! reaches a Poisson-distributed target length. Uniform random items pad
//! the rare transaction the patterns cannot fill.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::txdb::{DbLocator, DbWriter, IoContext, ItemId, Transaction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub n_transactions: u64,
    pub n_items: u32,
    /// Mean transaction length.
    pub avg_tx_len: f64,
    /// Mean pattern length.
    pub avg_pattern_len: f64,
    pub n_patterns: u32,
    /// Probability that an item of a picked pattern is kept. Also the mean
    /// fraction of items a pattern shares with the one drawn before it.
    pub correlation: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_transactions: 10_000,
            n_items: 1000,
            avg_tx_len: 10.0,
            avg_pattern_len: 4.0,
            n_patterns: 2000,
            correlation: 0.5,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.avg_tx_len > 0.0 && self.avg_tx_len.is_finite()) {
            return bad(format!("average transaction length must be positive, got {}", self.avg_tx_len));
        }
        if !(self.avg_pattern_len > 0.0 && self.avg_pattern_len <= self.avg_tx_len) {
            return bad(format!(
                "average pattern length {} must be positive and at most the transaction length {}",
                self.avg_pattern_len, self.avg_tx_len
            ));
        }
        if self.n_patterns == 0 {
            return bad("at least one pattern is required".into());
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return bad(format!("correlation {} outside [0, 1]", self.correlation));
        }
        if self.n_items == 0 && self.n_transactions > 0 {
            return bad("at least one item is required".into());
        }
        Ok(())
    }

    /// The transactions these parameters describe, in order.
    pub fn transactions(&self) -> Result<Generator> {
        Generator::new(self)
    }
}

/// Streams the transactions of one parameter set.
pub struct Generator {
    rng: ChaCha8Rng,
    patterns: Vec<Vec<u32>>,
    pick: Option<WeightedIndex<f64>>,
    tx_len: Poisson<f64>,
    keep: f64,
    n_items: u32,
    remaining: u64,
}

impl Generator {
    fn new(p: &GenParams) -> Result<Self> {
        p.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let tx_len = Poisson::new(p.avg_tx_len).map_err(|e| Error::Config(e.to_string()))?;
        if p.n_transactions == 0 {
            return Ok(Generator {
                rng,
                patterns: Vec::new(),
                pick: None,
                tx_len,
                keep: p.correlation,
                n_items: p.n_items,
                remaining: 0,
            });
        }
        let pat_len = Poisson::new(p.avg_pattern_len).map_err(|e| Error::Config(e.to_string()))?;
        let mut patterns: Vec<Vec<u32>> = Vec::with_capacity(p.n_patterns as usize);
        for _ in 0..p.n_patterns {
            let len = (pat_len.sample(&mut rng) as usize).clamp(1, p.n_items as usize);
            let mut items = BTreeSet::new();
            if let Some(prev) = patterns.last() {
                let share: f64 = Exp1.sample(&mut rng);
                let shared = ((share * p.correlation).min(1.0) * len as f64) as usize;
                for i in sample(&mut rng, prev.len(), shared.min(prev.len())) {
                    items.insert(prev[i]);
                }
            }
            while items.len() < len {
                items.insert(rng.random_range(0..p.n_items));
            }
            patterns.push(items.into_iter().collect());
        }
        let weights: Vec<f64> = (0..p.n_patterns).map(|_| Exp1.sample(&mut rng)).collect();
        let pick = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Generator {
            rng,
            patterns,
            pick: Some(pick),
            tx_len,
            keep: p.correlation,
            n_items: p.n_items,
            remaining: p.n_transactions,
        })
    }
}

impl Iterator for Generator {
    type Item = Transaction;

    fn next(&mut self) -> Option<Transaction> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let pick = self.pick.as_ref()?;
        let target = (self.tx_len.sample(&mut self.rng) as usize).clamp(1, self.n_items as usize);
        let mut items = BTreeSet::new();
        // bounded so a low correlation cannot stall the fill
        for _ in 0..4 * target {
            let pat = &self.patterns[pick.sample(&mut self.rng)];
            for &i in pat {
                if items.len() == target {
                    break;
                }
                if self.rng.random_bool(self.keep) {
                    items.insert(i);
                }
            }
            if items.len() == target {
                break;
            }
        }
        while items.len() < target {
            items.insert(self.rng.random_range(0..self.n_items));
        }
        Transaction::new(items.into_iter().map(ItemId).collect())
    }
}

/// Writes the database described by `params` to `out`, with the parameters
/// echoed to `<out>.params.json`.
pub fn generate(params: &GenParams, out: &DbLocator, io: &IoContext) -> Result<DbLocator> {
    let mut w = DbWriter::create(out, io)?;
    for t in params.transactions()? {
        w.write(t.items())?;
    }
    let loc = w.finish()?;
    let side = sidecar_path(out);
    let json = serde_json::to_string_pretty(params).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    Ok(loc)
}

pub fn sidecar_path(out: &DbLocator) -> PathBuf {
    let mut s = out.path.clone().into_os_string();
    s.push(".params.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txdb::{read_all, BlockConfig};

    fn small() -> GenParams {
        GenParams {
            n_transactions: 10_000,
            n_items: 1000,
            avg_tx_len: 10.0,
            avg_pattern_len: 4.0,
            n_patterns: 500,
            seed: 42,
            ..GenParams::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let a = generate(&small(), &DbLocator::text(dir.path().join("a.dat")), &io).unwrap();
        let b = generate(&small(), &DbLocator::text(dir.path().join("b.dat")), &io).unwrap();
        assert_eq!(fs::read(&a.path).unwrap(), fs::read(&b.path).unwrap());
        let side: GenParams = serde_json::from_str(&fs::read_to_string(sidecar_path(&a)).unwrap()).unwrap();
        assert_eq!(side, small());
    }

    #[test]
    fn mean_length_near_target() {
        let p = small();
        let txs: Vec<_> = p.transactions().unwrap().collect();
        assert_eq!(txs.len(), 10_000);
        let mean = txs.iter().map(|t| t.len()).sum::<usize>() as f64 / txs.len() as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.05, "mean {mean}");
        assert!(txs.iter().flat_map(|t| t.items()).all(|i| i.0 < 1000));
    }

    #[test]
    fn zero_transactions_is_a_valid_empty_db() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoContext::new(BlockConfig::default());
        let p = GenParams {
            n_transactions: 0,
            ..small()
        };
        let loc = generate(&p, &DbLocator::binary(dir.path().join("e.db")), &io).unwrap();
        assert!(read_all(&loc, &io).unwrap().is_empty());
    }

    #[test]
    fn rejects_patterns_longer_than_transactions() {
        let p = GenParams {
            avg_pattern_len: 20.0,
            ..small()
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }
}
