//! Ring-buffer experience replay.

use rand::Rng;

use crate::error::{Error, Result};

/// One stored interaction. `s` and `s_next` are the clean stacked observations;
/// the acting network saw `s + eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub eps: Vec<f64>,
    pub s_next: Vec<f64>,
    pub eps_next: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
}

impl Transition {
    pub fn noisy_obs(&self) -> Vec<f64> {
        self.s.iter().zip(&self.eps).map(|(a, b)| a + b).collect()
    }

    pub fn noisy_next_obs(&self) -> Vec<f64> {
        self.s_next.iter().zip(&self.eps_next).map(|(a, b)| a + b).collect()
    }

    fn check(&self, dim: usize) -> Result<()> {
        let ok = self.s.len() == dim
            && self.eps.len() == dim
            && self.s_next.len() == dim
            && self.eps_next.len() == dim;
        if !ok {
            return Err(Error::usage(format!("transition vectors must all have length {dim}")));
        }
        let finite = self
            .s
            .iter()
            .chain(&self.eps)
            .chain(&self.s_next)
            .chain(&self.eps_next)
            .all(|v| v.is_finite())
            && self.reward.is_finite();
        if !finite {
            return Err(Error::domain("transition holds non-finite values"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    entries: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::usage("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            obs_dim,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        t.check(self.obs_dim)?;
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// `n` entries drawn uniformly with replacement.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.entries.is_empty() {
            return Err(Error::usage("sampling from an empty replay buffer"));
        }
        Ok((0..n)
            .map(|_| &self.entries[rng.gen_range(0..self.entries.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }
}
