use log::debug;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rnn::Subsequence;

/// Append-only store of every completed window, in stream order.
#[derive(Debug, Clone, Default)]
pub struct HistoricalPool {
    subsequences: Vec<Subsequence>,
}

/// Which pool entries a genome trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSelection {
    pub indices: Vec<usize>,
    /// No entries precede the validation tail, so the whole pool was used.
    pub cold_start: bool,
}

impl HistoricalPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sub: Subsequence) -> Result<()> {
        if let Some(last) = self.subsequences.last() {
            if sub.origin < last.origin + last.step_count() {
                return Err(Error::contract("pool entries must arrive in stream order"));
            }
        }
        self.subsequences.push(sub);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.subsequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsequences.is_empty()
    }

    pub fn get(&self, i: usize) -> &Subsequence {
        &self.subsequences[i]
    }

    pub fn all(&self) -> &[Subsequence] {
        &self.subsequences
    }

    /// The most recent `min(n, len)` entries, oldest first.
    pub fn validation_range(&self, n: usize) -> Result<std::ops::Range<usize>> {
        if self.is_empty() {
            return Err(Error::contract("validation requested from an empty pool"));
        }
        Ok(self.len().saturating_sub(n)..self.len())
    }

    pub fn get_validation_data(&self, n: usize) -> Result<&[Subsequence]> {
        Ok(&self.subsequences[self.validation_range(n)?])
    }

    /// Up to `num_train` distinct entries drawn uniformly from everything
    /// before the validation tail, or from the whole pool when that is empty.
    pub fn get_training_data<R: Rng + ?Sized>(
        &self,
        num_train: usize,
        num_validation: usize,
        rng: &mut R,
    ) -> Result<TrainingSelection> {
        let tail = self.validation_range(num_validation)?;
        let (available, cold_start) = if tail.start == 0 { (self.len(), true) } else { (tail.start, false) };
        if cold_start {
            debug!("cold start: training on all {} pool entries", self.len());
        }
        let mut indices = index::sample(rng, available, num_train.min(available)).into_vec();
        indices.sort_unstable();
        Ok(TrainingSelection { indices, cold_start })
    }
}
