/// Triangular matrix of 2-itemset counts over the ranks of one tree's order.
///
/// Cell `(j, k)` with `j != k` counts the transactions containing both the
/// item at rank `j` and the item at rank `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairArray {
    n: usize,
    cells: Vec<u32>,
}

impl PairArray {
    pub fn new(n: usize) -> Self {
        PairArray {
            n,
            cells: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn index(j: usize, k: usize) -> usize {
        debug_assert!(j > k);
        j * (j - 1) / 2 + k
    }

    /// Count for the unordered pair `{j, k}`; zero on the diagonal.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u64 {
        use std::cmp::Ordering::*;
        match j.cmp(&k) {
            Greater => self.cells[Self::index(j, k)] as u64,
            Less => self.cells[Self::index(k, j)] as u64,
            Equal => 0,
        }
    }

    /// Row `j` restricted to the ranks before it: `A[j][0..j]`.
    pub fn row_before(&self, j: usize) -> &[u32] {
        let start = j * j.saturating_sub(1) / 2;
        &self.cells[start..start + j]
    }

    /// Adds `weight` to every pair of a rank list sorted ascending.
    #[inline]
    pub fn add_transaction(&mut self, ranks: &[u32], weight: u32) {
        for (x, &j) in ranks.iter().enumerate().skip(1) {
            let base = j as usize * (j as usize - 1) / 2;
            for &k in &ranks[..x] {
                self.cells[base + k as usize] += weight;
            }
        }
    }
}
