use serde::{Deserialize, Serialize};

/// Inputs of the closed-form I/O model. Sizes in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Database size `D`.
    pub d: f64,
    /// Block size `B`.
    pub b: f64,
    /// Memory `M`.
    pub m: f64,
    /// Size `T` of the full FP-tree.
    pub t: f64,
    /// Shrink ratio of a projected tree relative to its parent.
    pub c: f64,
    /// Average frequent items per transaction.
    pub n: f64,
    /// Number of groups.
    pub k: f64,
}

/// Predicted pass count and block transfers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostPrediction {
    pub passes: u32,
    /// `2·D/B + 3·D'/B` with the grouped projection size `D' = (k+1)/2·D`.
    pub io_general: f64,
    /// `2·D/B + n·3/2·D/B`.
    pub io_naive: f64,
    /// `2·D/B + k·3/2·D/B`.
    pub io_aggressive: f64,
    /// `3/2·D/B + k·D/B`.
    pub io_diskmine: f64,
}

/// Evaluates the model. Passes are `1 + ⌈log_c(M/T)⌉`, and 1 when the tree
/// fits in memory.
pub fn predict_costs(model: &CostModel) -> CostPrediction {
    let blocks = model.d / model.b;
    let passes = if model.t <= model.m {
        1
    } else {
        let levels = (model.m / model.t).ln() / model.c.ln();
        // absorb rounding in the logarithm when M/T is an exact power of c
        1 + (levels - 1e-9).ceil().max(0.0) as u32
    };
    let d_prime = (model.k + 1.0) / 2.0 * model.d;
    CostPrediction {
        passes,
        io_general: 2.0 * blocks + 3.0 * d_prime / model.b,
        io_naive: 2.0 * blocks + model.n * 1.5 * blocks,
        io_aggressive: 2.0 * blocks + model.k * 1.5 * blocks,
        io_diskmine: 1.5 * blocks + model.k * blocks,
    }
}
