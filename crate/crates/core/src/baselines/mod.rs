//! Comparison miners and the brute-force oracle.

mod oracle;
mod partition;

pub use oracle::{brute_force_oracle, brute_force_oracle_db, ORACLE_MAX_ITEMS};
pub use partition::{partition_mine, partition_mine_detailed, PartitionConfig, PartitionOutcome};

use crate::diskmine::{run, DiskmineConfig, Mode};
use crate::error::Result;
use crate::fpgrowth::ItemsetSink;
use crate::report::RunReport;
use crate::txdb::{DbLocator, MinSupport};

/// Projects the database once per frequent item, keeping every item in
/// every projection, and recurses into any projection whose tree does not
/// fit. Techniques from [`crate::diskmine::Techniques`] do not apply.
pub fn naive_diskmine(
    db: &DbLocator,
    min_support: MinSupport,
    cfg: &DiskmineConfig,
    sink: &mut dyn ItemsetSink,
) -> Result<RunReport> {
    run(Mode::Naive, "naive", db, min_support, cfg, sink)
}
