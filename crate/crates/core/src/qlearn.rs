//! Tabular independent Q-learning: sparse per-agent tables, the exploration
//! policy and the temporal-difference update.
//!
//! Tables are keyed by canonical state byte strings and store a dense action
//! row per visited state; unseen pairs read as exactly zero. The policy
//! plays the greedy action with probability `1 - epsilon` and spreads the
//! remaining mass uniformly over the non-greedy legal actions.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("legal action set is empty")]
    EmptyLegalSet,
    #[error("reward must be finite (got {0})")]
    NonFiniteReward(f64),
    #[error("malformed snapshot line {0}: {1}")]
    BadSnapshot(usize, String),
}

/// Canonical encoded state used as the sparse table key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u8]>);

impl StateKey {
    pub fn new(bytes: Vec<u8>) -> Self {
        StateKey(bytes.into_boxed_slice())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.0.len() * 2);
        for b in self.0.iter() {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(hex: &str) -> Option<Self> {
        if hex.len() % 2 != 0 {
            return None;
        }
        let mut bytes = Vec::with_capacity(hex.len() / 2);
        for i in (0..hex.len()).step_by(2) {
            bytes.push(u8::from_str_radix(&hex[i..i + 2], 16).ok()?);
        }
        Some(StateKey::new(bytes))
    }
}

impl Borrow<[u8]> for StateKey {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

/// Q-learning hyperparameters shared by the six games.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerParams {
    pub beta_refuel: f64,
    pub beta_app_placement: f64,
    pub beta_leader_move: f64,
    pub beta_clustering: f64,
    pub beta_follower_move: f64,
    pub beta_delegation: f64,
    /// Discount factor.
    pub discount: f64,
    /// Exploration probability at the first episode.
    pub epsilon_start: f64,
    /// Exploration probability at the last episode (linear decay).
    pub epsilon_end: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            beta_refuel: 0.1,
            beta_app_placement: 0.1,
            beta_leader_move: 0.1,
            beta_clustering: 0.1,
            beta_follower_move: 0.1,
            beta_delegation: 0.1,
            discount: 0.9,
            epsilon_start: 0.5,
            epsilon_end: 0.05,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, b) in [
            ("beta_refuel", self.beta_refuel),
            ("beta_apps", self.beta_app_placement),
            ("beta_leader_move", self.beta_leader_move),
            ("beta_clustering", self.beta_clustering),
            ("beta_follower_move", self.beta_follower_move),
            ("beta_delegation", self.beta_delegation),
        ] {
            if !(b > 0.0 && b <= 1.0) {
                return Err(format!("{name} must lie in (0, 1] (got {b})"));
            }
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(format!("sigma must lie in [0, 1] (got {})", self.discount));
        }
        for (name, e) in [
            ("eps_start", self.epsilon_start),
            ("eps_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return Err(format!("{name} must lie in [0, 1] (got {e})"));
            }
        }
        Ok(())
    }

    /// Linearly interpolated exploration probability for an episode index.
    pub fn epsilon_at(&self, episode: u32, total_episodes: u32) -> f64 {
        if total_episodes <= 1 {
            return self.epsilon_start;
        }
        let frac = episode as f64 / (total_episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Sparse action-value table for one agent in one game.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    actions: u16,
    rows: HashMap<StateKey, Box<[f64]>>,
}

impl QTable {
    pub fn new(actions: u16) -> Self {
        QTable {
            actions,
            rows: HashMap::new(),
        }
    }

    pub fn action_count(&self) -> u16 {
        self.actions
    }

    pub fn visited_states(&self) -> usize {
        self.rows.len()
    }

    /// Action value; exactly zero for unseen pairs.
    pub fn get(&self, state: &[u8], action: u16) -> f64 {
        self.rows
            .get(state)
            .map(|row| row[action as usize])
            .unwrap_or(0.0)
    }

    /// Max action value over a legal subset; zero for an empty subset
    /// (terminal convention).
    pub fn max_over(&self, state: &[u8], legal: &[u16]) -> f64 {
        if legal.is_empty() {
            return 0.0;
        }
        match self.rows.get(state) {
            None => 0.0,
            Some(row) => legal
                .iter()
                .map(|&a| row[a as usize])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Greedy action over the legal subset, lowest index on ties.
    pub fn greedy(&self, state: &[u8], legal: &[u16]) -> Result<u16, LearnError> {
        if legal.is_empty() {
            return Err(LearnError::EmptyLegalSet);
        }
        let row = self.rows.get(state);
        let mut best = legal[0];
        let mut best_q = row.map(|r| r[best as usize]).unwrap_or(0.0);
        for &a in &legal[1..] {
            let q = row.map(|r| r[a as usize]).unwrap_or(0.0);
            if q > best_q {
                best = a;
                best_q = q;
            }
        }
        Ok(best)
    }

    /// Exploration policy: the greedy action with probability `1 - epsilon`,
    /// otherwise a uniform draw over the remaining legal actions. A single
    /// legal action is returned deterministically.
    pub fn select<R: Rng>(
        &self,
        state: &[u8],
        legal: &[u16],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<u16, LearnError> {
        let best = self.greedy(state, legal)?;
        if legal.len() == 1 {
            return Ok(best);
        }
        if rng.gen::<f64>() < 1.0 - epsilon {
            return Ok(best);
        }
        let pick = rng.gen_range(0..legal.len() - 1);
        Ok(legal
            .iter()
            .copied()
            .filter(|&a| a != best)
            .nth(pick)
            .expect("non-best action exists when legal set has two or more"))
    }

    /// Temporal-difference update toward `r + sigma * max Q(s', legal')`.
    /// Mutates exactly the `(state, action)` cell.
    pub fn update(
        &mut self,
        state: &[u8],
        action: u16,
        reward: f64,
        next_state: &[u8],
        next_legal: &[u16],
        beta: f64,
        sigma: f64,
    ) -> Result<(), LearnError> {
        if !reward.is_finite() {
            return Err(LearnError::NonFiniteReward(reward));
        }
        let next_max = self.max_over(next_state, next_legal);
        let actions = self.actions as usize;
        let row = self
            .rows
            .entry(StateKey::new(state.to_vec()))
            .or_insert_with(|| vec![0.0; actions].into_boxed_slice());
        let q = row[action as usize];
        row[action as usize] = q + beta * (reward + sigma * next_max - q);
        Ok(())
    }

    /// Writes one `state_hex<TAB>action<TAB>value` row per stored pair,
    /// sorted for reproducible output.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut keys: Vec<&StateKey> = self.rows.keys().collect();
        keys.sort();
        for key in keys {
            let row = &self.rows[key];
            for (a, v) in row.iter().enumerate() {
                writeln!(w, "{}\t{}\t{}", key.to_hex(), a, v)?;
            }
        }
        Ok(())
    }

    /// Reads a snapshot produced by [`QTable::dump`].
    pub fn load<R: BufRead>(actions: u16, r: R) -> Result<Self, LearnError> {
        let mut table = QTable::new(actions);
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| LearnError::BadSnapshot(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let bad = |msg: &str| LearnError::BadSnapshot(i + 1, msg.to_string());
            let key = StateKey::from_hex(parts.next().ok_or_else(|| bad("missing state"))?)
                .ok_or_else(|| bad("bad state hex"))?;
            let action: u16 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad action"))?;
            let value: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad value"))?;
            let row = table
                .rows
                .entry(key)
                .or_insert_with(|| vec![0.0; actions as usize].into_boxed_slice());
            row[action as usize] = value;
        }
        Ok(table)
    }
}
