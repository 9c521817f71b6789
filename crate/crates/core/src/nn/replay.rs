//! Fixed-capacity FIFO experience store with uniform sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    buf: VecDeque<T>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "replay buffer needs positive capacity");
        Self {
            capacity,
            buf: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends a sample, evicting the oldest one once full.
    pub fn push(&mut self, sample: T) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(sample);
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.buf.iter()
    }

    /// Uniform sample of `batch` distinct stored items; `None` until the
    /// buffer holds at least that many.
    pub fn sample<'a, R: Rng>(&'a self, rng: &mut R, batch: usize) -> Option<Vec<&'a T>> {
        if self.buf.len() < batch {
            return None;
        }
        let idx = rand::seq::index::sample(rng, self.buf.len(), batch);
        Some(idx.iter().map(|i| &self.buf[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eviction_is_first_in_first_out() {
        let mut rb = ReplayBuffer::new(3);
        for i in 0..5 {
            rb.push(i);
        }
        assert_eq!(rb.len(), 3);
        let held: Vec<i32> = rb.iter().copied().collect();
        assert_eq!(held, vec![2, 3, 4]);
    }

    #[test]
    fn sampling_needs_enough_samples_and_avoids_duplicates() {
        let mut rb = ReplayBuffer::new(100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(rb.sample(&mut rng, 4).is_none());
        for i in 0..10 {
            rb.push(i);
        }
        assert!(rb.sample(&mut rng, 11).is_none());
        for _ in 0..50 {
            let batch = rb.sample(&mut rng, 10).unwrap();
            let mut seen: Vec<i32> = batch.iter().map(|&&v| v).collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 10, "batch must sample without replacement");
        }
    }

    #[test]
    fn sampling_is_uniform_enough() {
        // Chi-square over 10 cells at 5000 draws; 5% critical value for
        // 9 degrees of freedom is 16.92, use a generous 25 to avoid flakes
        // while still catching gross bias.
        let mut rb = ReplayBuffer::new(10);
        for i in 0..10 {
            rb.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 10];
        let draws = 5000;
        for _ in 0..draws {
            let batch = rb.sample(&mut rng, 1).unwrap();
            counts[*batch[0] as usize] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 25.0, "chi-square {chi2} suggests biased sampling");
    }
}
