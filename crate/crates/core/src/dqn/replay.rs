use alloc::vec::Vec;
use rand::Rng;

use crate::action::Action;
use crate::mapping::StateTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: StateTensor,
    pub a: Action,
    pub r: f64,
    pub s_next: StateTensor,
    pub done: bool,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T = Transition> {
    capacity: usize,
    items: Vec<T>,
    /// Slot the next push overwrites once full.
    head: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::new(),
            head: 0,
        }
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

    pub fn push(&mut self, t: T) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Survivors from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let (new, old) = self.items.split_at(self.head);
        old.iter().chain(new)
    }

    /// `n` independent uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<&T>> {
        let idx = self.sample_indices(n, rng)?;
        Ok(idx.into_iter().map(|i| &self.items[i]).collect())
    }

    /// Storage indices of a uniform draw; see [`sample`](Self::sample).
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if self.items.is_empty() || self.items.len() < n {
            return Err(Error::NotReady {
                len: self.items.len(),
                wanted: n,
            });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn get(&self, storage_index: usize) -> &T {
        &self.items[storage_index]
    }
}
