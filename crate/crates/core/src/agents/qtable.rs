//! Tabular Q-learning.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct QTable<K> {
    values: HashMap<K, Vec<f64>>,
    n_actions: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl<K: Hash + Eq + Clone> QTable<K> {
    pub fn new(n_actions: usize, alpha: f64, gamma: f64) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::config("n_actions", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        Ok(Self {
            values: HashMap::new(),
            n_actions,
            alpha,
            gamma,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Q-values of `state`; unseen states read as zero.
    pub fn get(&self, state: &K) -> Vec<f64> {
        self.values
            .get(state)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_actions])
    }

    pub fn value(&self, state: &K, action: usize) -> f64 {
        self.values.get(state).map_or(0.0, |q| q[action])
    }

    /// Largest Q over the legal actions, or `None` if none is legal.
    pub fn max_legal(&self, state: &K, legal: &[bool]) -> Option<f64> {
        (0..self.n_actions)
            .filter(|&a| legal.get(a).copied().unwrap_or(false))
            .map(|a| self.value(state, a))
            .reduce(f64::max)
    }

    /// Legal argmax with ties to the lowest index.
    pub fn best_action(&self, state: &K, legal: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for a in (0..self.n_actions).filter(|&a| legal.get(a).copied().unwrap_or(false)) {
            let q = self.value(state, a);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((a, q));
            }
        }
        best.map(|(a, _)| a)
    }

    /// `Q(s, a) += alpha (r + gamma max_a' Q(s', a') - Q(s, a))`; the max term
    /// is zero when `next` is `None` (terminal).
    pub fn update(&mut self, state: &K, action: usize, reward: f64, next: Option<(&K, &[bool])>) -> Result<()> {
        self.update_with_rate(state, action, reward, next, self.alpha)
    }

    pub fn update_with_rate(
        &mut self,
        state: &K,
        action: usize,
        reward: f64,
        next: Option<(&K, &[bool])>,
        alpha: f64,
    ) -> Result<()> {
        if action >= self.n_actions {
            return Err(Error::IllegalAction {
                action,
                reason: format!("expected 0..{}", self.n_actions),
            });
        }
        let future = match next {
            Some((s, legal)) => self.max_legal(s, legal).unwrap_or(0.0),
            None => 0.0,
        };
        let n = self.n_actions;
        let q = self.values.entry(state.clone()).or_insert_with(|| vec![0.0; n]);
        q[action] += alpha * (reward + self.gamma * future - q[action]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn zero_rate_leaves_table_unchanged() {
        let mut t: QTable<u8> = QTable::new(2, 0.0, 1.0).unwrap();
        t.update(&0, 1, 5.0, None).unwrap();
        assert_eq!(t.get(&0), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_arithmetic() {
        let mut t: QTable<u8> = QTable::new(2, 0.5, 1.0).unwrap();
        t.update(&0, 0, 1.0, Some((&1, &[true, true]))).unwrap();
        assert_eq!(t.value(&0, 0), 0.5);
        t.update(&0, 0, 1.0, None).unwrap();
        assert_eq!(t.value(&0, 0), 0.75);
        assert!(QTable::<u8>::new(2, 0.5, 1.5).is_err());
    }

    #[test]
    fn masked_max_ignores_illegal_actions() {
        let mut t: QTable<u8> = QTable::new(3, 1.0, 1.0).unwrap();
        t.update(&1, 2, 10.0, None).unwrap();
        t.update(&1, 0, -1.0, None).unwrap();
        assert_eq!(t.max_legal(&1, &[true, true, false]), Some(0.0));
        assert_eq!(t.best_action(&1, &[true, false, true]), Some(2));
        assert_eq!(t.best_action(&1, &[false, false, false]), None);
    }

    struct Mdp {
        /// transition[s][a] = distribution over next states
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        gamma: f64,
    }

    fn random_mdp() -> Mdp {
        let mut rng = seeded(2024);
        let (ns, na) = (10, 3);
        let transition = (0..ns)
            .map(|_| {
                (0..na)
                    .map(|_| {
                        let w: Vec<f64> = (0..ns).map(|_| rng.random_range(0.0..1.0)).collect();
                        let total: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / total).collect()
                    })
                    .collect()
            })
            .collect();
        let reward = (0..ns).map(|_| (0..na).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        Mdp { transition, reward, gamma: 0.5 }
    }

    fn value_iteration(m: &Mdp) -> Vec<Vec<f64>> {
        let (ns, na) = (m.reward.len(), m.reward[0].len());
        let mut q = vec![vec![0.0; na]; ns];
        for _ in 0..1000 {
            let v: Vec<f64> = q.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
            for s in 0..ns {
                for a in 0..na {
                    q[s][a] = m.reward[s][a] + m.gamma * (0..ns).map(|t| m.transition[s][a][t] * v[t]).sum::<f64>();
                }
            }
        }
        q
    }

    #[test]
    fn converges_to_value_iteration() {
        let m = random_mdp();
        let exact = value_iteration(&m);
        let mut table: QTable<usize> = QTable::new(3, 1.0, m.gamma).unwrap();
        let mut rng = seeded(9);
        let legal = [true; 3];
        let mut visits = vec![[0u64; 3]; 10];
        // synchronous sweeps with a visit-count rate n^-0.8
        for _ in 0..40_000 {
            for s in 0..10 {
                for a in 0..3 {
                    let u: f64 = rng.random_range(0.0..1.0);
                    let mut acc = 0.0;
                    let mut next = 9;
                    for (t, &p) in m.transition[s][a].iter().enumerate() {
                        acc += p;
                        if u < acc {
                            next = t;
                            break;
                        }
                    }
                    visits[s][a] += 1;
                    let rate = 1.0 / (visits[s][a] as f64).powf(0.8);
                    table
                        .update_with_rate(&s, a, m.reward[s][a], Some((&next, &legal)), rate)
                        .unwrap();
                }
            }
        }
        let err = (0..10)
            .flat_map(|s| (0..3).map(move |a| (s, a)))
            .map(|(s, a)| (table.value(&s, a) - exact[s][a]).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "max error {err}");
    }
}
