//! Interleaved subpolicies running at different frequencies.
//!
//! Level 0 acts least often. One cycle is a level-0 step followed by `k`
//! repetitions of the level-1 cycle, recursively, so level `j` takes `k^j`
//! steps per cycle. Each level keeps at most one open (pending) transition
//! that spans from its action to the next time it acts.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::action::Action;
use crate::dqn::Transition;
use crate::mapping::StateTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelSchedule {
    pub n: usize,
    pub k: usize,
}

impl LevelSchedule {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Config(alloc::format!(
                "levels ({n}) and k ({k}) must be at least 1"
            )));
        }
        Ok(Self { n, k })
    }

    /// Level sequence of one full cycle.
    pub fn cycle(&self) -> Vec<usize> {
        fn expand(level: usize, n: usize, k: usize, out: &mut Vec<usize>) {
            out.push(level);
            if level + 1 < n {
                for _ in 0..k {
                    expand(level + 1, n, k, out);
                }
            }
        }
        let mut out = Vec::new();
        expand(0, self.n, self.k, &mut out);
        out
    }

    pub fn cycle_len(&self) -> usize {
        (0..self.n).map(|j| self.k.pow(j as u32)).sum()
    }

    /// The first `total` levels of the periodic sequence.
    pub fn sequence(&self, total: usize) -> Vec<usize> {
        let c = self.cycle();
        (0..total).map(|i| c[i % c.len()]).collect()
    }
}

/// Expands the schedule for `n` levels and ratio `k`.
pub fn schedule_sequence(n: usize, k: usize, total: usize) -> Result<Vec<usize>> {
    Ok(LevelSchedule::new(n, k)?.sequence(total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardAccumulation {
    /// Every open lower-frequency level also receives the reward.
    Accumulate,
    /// Each level sees only the rewards of its own actions.
    OwnStepOnly,
}

impl fmt::Display for RewardAccumulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardAccumulation::Accumulate => "on",
            RewardAccumulation::OwnStepOnly => "off",
        })
    }
}

impl FromStr for RewardAccumulation {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "true" | "accumulate" | "yes" => Ok(RewardAccumulation::Accumulate),
            "off" | "false" | "own" | "own_step_only" | "no" => Ok(RewardAccumulation::OwnStepOnly),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pending {
    pub s: StateTensor,
    pub a: Action,
    pub r: f64,
}

/// Open transitions, one slot per level.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingSet {
    slots: Vec<Option<Pending>>,
    mode: RewardAccumulation,
}

impl PendingSet {
    pub fn new(levels: usize, mode: RewardAccumulation) -> Self {
        Self {
            slots: vec![None; levels],
            mode,
        }
    }

    pub fn levels(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, level: usize) -> Option<&Pending> {
        self.slots[level].as_ref()
    }

    pub fn is_open(&self, level: usize) -> bool {
        self.slots[level].is_some()
    }

    /// Opens a transition for `level`. Its slot must be empty.
    pub fn record_step(&mut self, level: usize, s: StateTensor, a: Action) -> Result<()> {
        if self.slots[level].is_some() {
            return Err(Error::PendingOccupied { level });
        }
        self.slots[level] = Some(Pending { s, a, r: 0.0 });
        Ok(())
    }

    /// Credits the reward of a step taken by `acting`.
    pub fn accumulate_reward(&mut self, acting: usize, r: f64) {
        let upto = match self.mode {
            RewardAccumulation::Accumulate => 0,
            RewardAccumulation::OwnStepOnly => acting,
        };
        for slot in self.slots[upto..=acting].iter_mut().flatten() {
            slot.r += r;
        }
    }

    /// Closes `level`'s transition at `s_next`, if one is open.
    pub fn commit(&mut self, level: usize, s_next: &StateTensor, done: bool) -> Option<Transition> {
        self.slots[level].take().map(|p| Transition {
            s: p.s,
            a: p.a,
            r: p.r,
            s_next: s_next.clone(),
            done,
        })
    }

    /// Episode end: closes every open transition as terminal.
    pub fn flush(&mut self, s_next: &StateTensor) -> Vec<(usize, Transition)> {
        (0..self.slots.len())
            .filter_map(|l| self.commit(l, s_next, true).map(|t| (l, t)))
            .collect()
    }
}
