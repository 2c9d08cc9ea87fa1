//! Out-of-core frequent itemset mining.
//!
//! The miner decomposes a database that is too large for an in-memory FP-tree
//! into projected databases, grouping many items into one projection where
//! tree statistics say the result will fit the memory budget.

pub mod baselines;
pub mod datagen;
pub mod diskmine;
pub mod error;
pub mod fpgrowth;
pub mod fptree;
pub mod projection;
pub mod report;
pub mod txdb;

pub use error::{Error, Result};
pub use baselines::{brute_force_oracle, naive_diskmine, partition_mine, PartitionConfig};
pub use datagen::{generate, GenParams};
pub use diskmine::{diskmine, memory_only, DiskmineConfig, Techniques};
pub use fpgrowth::{CollectSink, FimiWriter, Itemset, ItemsetSink};
pub use fptree::MemoryBudget;
pub use report::RunReport;
pub use txdb::{BlockConfig, DbFormat, DbLocator, IoStats, ItemId, MinSupport, SupportThreshold, Transaction};
