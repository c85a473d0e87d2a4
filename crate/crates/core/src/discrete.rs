//! Discrete-time restaurant: customers arrive one at a time and either join
//! table `i` with probability proportional to `W_i·S_i` or open a new table
//! with probability proportional to `θ`.
//!
//! Tables are indexed from 0 in order of creation. The first customer sits at
//! table 0, so after `n` arrivals the sizes sum to `n`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;

/// Binary-indexed prefix sums over table activities `W_i·S_i`.
#[derive(Debug, Clone, Default)]
pub struct ActivityTree {
    // 1-based Fenwick array; tree[0] unused.
    tree: Vec<f64>,
    len: usize,
}

fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl ActivityTree {
    pub fn new() -> Self {
        ActivityTree { tree: vec![0.0], len: 0 }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut t = ActivityTree { tree: vec![0.0; values.len() + 1], len: values.len() };
        for (i, &v) in values.iter().enumerate() {
            t.tree[i + 1] += v;
            let parent = i + 1 + lowbit(i + 1);
            if parent <= values.len() {
                let carry = t.tree[i + 1];
                t.tree[parent] += carry;
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, value: f64) {
        self.len += 1;
        let i = self.len;
        // Node i covers (i - lowbit(i), i]; its proper sub-ranges are the nodes i-1, i-2, i-4, ...
        let mut acc = value;
        let mut k = 1;
        while k < lowbit(i) {
            acc += self.tree[i - k];
            k <<= 1;
        }
        self.tree.push(acc);
    }

    pub fn add(&mut self, index: usize, delta: f64) {
        let mut i = index + 1;
        while i <= self.len {
            self.tree[i] += delta;
            i += lowbit(i);
        }
    }

    /// Sum of the first `count` activities.
    pub fn prefix(&self, count: usize) -> f64 {
        let mut i = count.min(self.len);
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lowbit(i);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len)
    }

    /// Index `i` with `prefix(i) <= u < prefix(i + 1)`, clamped to the last
    /// table when rounding puts `u` at or beyond the total.
    pub fn find(&self, u: f64) -> usize {
        let mut pos = 0;
        let mut rem = u;
        let mut step = if self.len == 0 { 0 } else { 1 << (usize::BITS - 1 - self.len.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= self.len && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(self.len.saturating_sub(1))
    }
}

/// Table chosen by a uniform `u` in `[0, total)`.
pub fn weighted_pick(tree: &ActivityTree, u: f64) -> usize {
    tree.find(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Event {
    NewTable { index: usize },
    Join { index: usize },
}

/// Steps between exact rebuilds of the activity tree.
pub const REBUILD_INTERVAL: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct RestaurantState {
    pub theta: f64,
    pub spec: FitnessSpec,
    pub weights: Vec<f64>,
    pub sizes: Vec<u64>,
    /// Arrival index at which each table was opened.
    pub births: Vec<u64>,
    pub n: u64,
    tree: ActivityTree,
    leader: usize,
    leader_changes: u64,
    since_rebuild: u64,
}

impl RestaurantState {
    /// One customer at table 0 with a freshly sampled weight.
    pub fn new(theta: f64, spec: FitnessSpec, rng: &mut (impl Rng + ?Sized)) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        let w = spec.sample(rng);
        Ok(Self::with_first_weight(theta, spec, w))
    }

    pub fn with_first_weight(theta: f64, spec: FitnessSpec, w: f64) -> Self {
        let mut tree = ActivityTree::new();
        tree.push(w);
        RestaurantState {
            theta,
            spec,
            weights: vec![w],
            sizes: vec![1],
            births: vec![1],
            n: 1,
            tree,
            leader: 0,
            leader_changes: 0,
            since_rebuild: 0,
        }
    }

    pub fn tables(&self) -> usize {
        self.sizes.len()
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    /// `B_n`: arrival index at which the current largest table was opened.
    pub fn leader_birth(&self) -> u64 {
        self.births[self.leader]
    }

    pub fn leader_changes(&self) -> u64 {
        self.leader_changes
    }

    pub fn total_activity(&self) -> f64 {
        self.tree.total()
    }

    pub fn tree(&self) -> &ActivityTree {
        &self.tree
    }

    pub fn rebuild_tree(&mut self) {
        let values: Vec<f64> = self.weights.iter().zip(&self.sizes).map(|(w, &s)| w * s as f64).collect();
        self.tree = ActivityTree::from_values(&values);
        self.since_rebuild = 0;
    }

    pub fn step(&mut self, rng: &mut (impl Rng + ?Sized)) -> Event {
        let total = self.tree.total();
        let u = rng.random::<f64>() * (self.theta + total);
        let event = if u < self.theta {
            let w = self.spec.sample(rng);
            self.weights.push(w);
            self.sizes.push(1);
            self.births.push(self.n + 1);
            self.tree.push(w);
            Event::NewTable { index: self.sizes.len() - 1 }
        } else {
            let i = weighted_pick(&self.tree, u - self.theta);
            self.sizes[i] += 1;
            self.tree.add(i, self.weights[i]);
            let (s, l) = (self.sizes[i], self.sizes[self.leader]);
            if i != self.leader && (s > l || (s == l && i < self.leader)) {
                self.leader = i;
                self.leader_changes += 1;
            }
            Event::Join { index: i }
        };
        self.n += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_INTERVAL {
            self.rebuild_tree();
        }
        event
    }

    /// The three largest tables as `(index, size)`, ties by smaller index.
    pub fn top3(&self) -> [Option<(usize, u64)>; 3] {
        let mut top: [Option<(usize, u64)>; 3] = [None; 3];
        for (i, &s) in self.sizes.iter().enumerate() {
            let mut cand = (i, s);
            for slot in top.iter_mut() {
                match slot {
                    None => {
                        *slot = Some(cand);
                        break;
                    }
                    Some(cur) if cand.1 > cur.1 => std::mem::swap(cur, &mut cand),
                    _ => {}
                }
            }
        }
        top
    }

    pub fn record(&self) -> DiscreteRecord {
        let top = self.top3();
        let size = |k: usize| top[k].map_or(0, |(_, s)| s);
        let n = self.n as f64;
        DiscreteRecord {
            n: self.n,
            k: self.tables() as u64,
            s1: size(0),
            s2: size(1),
            s3: size(2),
            s_first: self.sizes[0],
            share1: size(0) as f64 / n,
            share12: (size(0) + size(1)) as f64 / n,
            leader_index: self.leader,
            leader_birth: self.leader_birth(),
            leader_weight: self.weights[self.leader],
            leader_changes: self.leader_changes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteRecord {
    pub n: u64,
    pub k: u64,
    pub s1: u64,
    pub s2: u64,
    pub s3: u64,
    /// Size of the first table.
    pub s_first: u64,
    pub share1: f64,
    pub share12: f64,
    pub leader_index: usize,
    pub leader_birth: u64,
    pub leader_weight: f64,
    pub leader_changes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteConfig {
    pub theta: f64,
    pub spec: FitnessSpec,
    pub n_max: u64,
    /// Sorted arrival counts at which to emit a record; values above `n_max` are ignored.
    pub checkpoints: Vec<u64>,
}

impl DiscreteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if self.checkpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("checkpoints must be sorted".into()));
        }
        Ok(())
    }
}

/// `count` roughly log-spaced checkpoints in `[1, n_max]`, always including `n_max`.
pub fn log_checkpoints(n_max: u64, count: usize) -> Vec<u64> {
    let mut v: Vec<u64> = (0..count.max(1))
        .map(|i| {
            let f = if count <= 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            (n_max as f64).powf(f).round() as u64
        })
        .collect();
    v.push(n_max);
    v.sort_unstable();
    v.dedup();
    v
}

/// One trajectory up to `n_max`, recorded at each checkpoint.
pub fn run_discrete(cfg: &DiscreteConfig, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<DiscreteRecord>> {
    cfg.validate()?;
    let mut state = RestaurantState::new(cfg.theta, cfg.spec, rng)?;
    let mut out = Vec::with_capacity(cfg.checkpoints.len());
    for &c in cfg.checkpoints.iter().filter(|&&c| c >= 1 && c <= cfg.n_max) {
        while state.n < c {
            state.step(rng);
        }
        out.push(state.record());
    }
    Ok(out)
}
