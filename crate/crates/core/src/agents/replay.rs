//! Experience replay.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    pub legal_next: Vec<bool>,
}

/// Fixed-capacity ring buffer; the oldest experience is overwritten first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("buffer_capacity", "must be at least 1"));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.items.get(index)
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut StreamRng) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.items.len())).collect()
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Vec<&Experience> {
        self.sample_indices(n, rng)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn exp(tag: f64) -> Experience {
        Experience {
            obs: vec![tag],
            action: 0,
            reward: tag,
            next_obs: vec![tag],
            done: false,
            legal_next: vec![true],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3).unwrap();
        for i in 0..5 {
            buf.push(exp(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let mut rewards: Vec<f64> = (0..3).map(|i| buf.get(i).unwrap().reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn sampling_is_uniform() {
        let n = 50;
        let mut buf = ReplayBuffer::new(n).unwrap();
        for i in 0..n {
            buf.push(exp(i as f64));
        }
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for i in buf.sample_indices(draws, &mut seeded(31)) {
            counts[i] += 1;
        }
        let expected = draws as f64 / n as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat}, p = {p}");
    }
}
