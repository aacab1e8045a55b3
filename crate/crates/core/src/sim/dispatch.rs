//! Complexity queues and the dispatching policies that match waiting SRs to
//! idle workers.
//!
//! A worker of skill `k` may serve any SR whose complexity is at most `k`.
//! Dispatch repeatedly takes the waiting SR that ranks first under the policy
//! among those that some idle worker can serve, and hands it to the
//! lowest-skilled eligible idle worker (lowest cell index on ties). The loop
//! stops only when no waiting SR has an eligible idle worker, so dispatch is
//! work-conserving.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    /// Highest priority first, FIFO within a priority.
    #[serde(rename = "prio-pull")]
    PrioPull,
    /// Earliest SLA deadline first; SLA-exempt work has an infinite deadline.
    #[serde(rename = "edf")]
    Edf,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::PrioPull, Policy::Edf];

    pub fn name(self) -> &'static str {
        match self {
            Policy::PrioPull => "prio-pull",
            Policy::Edf => "edf",
        }
    }

    /// Queue ordering key of an SR under this policy.
    pub fn key(self, sr: usize, priority: usize, arrival: f64, deadline: f64) -> QueueKey {
        let primary = match self {
            Policy::PrioPull => priority as f64,
            Policy::Edf => deadline,
        };
        QueueKey { primary, arrival, sr }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown dispatching policy `{0}` (expected `prio-pull` or `edf`)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prio-pull" | "priopull" | "prio" => Ok(Policy::PrioPull),
            "edf" => Ok(Policy::Edf),
            _ => Err(UnknownPolicy(s.to_string())),
        }
    }
}

/// Total order of waiting SRs: smaller keys are served first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueKey {
    pub primary: f64,
    pub arrival: f64,
    pub sr: usize,
}

impl Eq for QueueKey {}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.arrival.total_cmp(&other.arrival))
            .then(self.sr.cmp(&other.sr))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One bounded queue per complexity level.
#[derive(Debug, Clone)]
pub struct ComplexityQueues {
    queues: Vec<BTreeSet<QueueKey>>,
    capacity: usize,
}

impl ComplexityQueues {
    pub fn new(n_skills: usize, capacity: usize) -> Self {
        Self { queues: vec![BTreeSet::new(); n_skills], capacity }
    }

    /// Enqueues unless the queue is full; returns whether the SR was accepted.
    pub fn push(&mut self, complexity: usize, key: QueueKey) -> bool {
        let q = &mut self.queues[complexity];
        if q.len() >= self.capacity {
            return false;
        }
        q.insert(key);
        true
    }

    pub fn is_full(&self, complexity: usize) -> bool {
        self.queues[complexity].len() >= self.capacity
    }

    pub fn len(&self, complexity: usize) -> usize {
        self.queues[complexity].len()
    }

    pub fn lengths(&self) -> Vec<u32> {
        self.queues.iter().map(|q| q.len() as u32).collect()
    }

    pub fn total(&self) -> usize {
        self.queues.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(BTreeSet::is_empty)
    }

    pub fn contains(&self, complexity: usize, key: &QueueKey) -> bool {
        self.queues[complexity].contains(key)
    }

    /// Waiting SRs of one complexity level in service order.
    pub fn iter(&self, complexity: usize) -> impl Iterator<Item = &QueueKey> {
        self.queues[complexity].iter()
    }

    pub fn head(&self, complexity: usize) -> Option<&QueueKey> {
        self.queues[complexity].first()
    }

    pub fn n_levels(&self) -> usize {
        self.queues.len()
    }

    fn pop(&mut self, complexity: usize) -> Option<QueueKey> {
        self.queues[complexity].pop_first()
    }
}

/// Idle worker counts per staffing cell together with each cell's skill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdleWorkers {
    pub idle: Vec<u32>,
    pub cell_skill: Vec<usize>,
}

impl IdleWorkers {
    pub fn new(cell_skill: Vec<usize>) -> Self {
        Self { idle: vec![0; cell_skill.len()], cell_skill }
    }

    /// Lowest-skilled cell with an idle worker able to serve `complexity`.
    pub fn best_cell_for(&self, complexity: usize) -> Option<usize> {
        self.idle
            .iter()
            .enumerate()
            .filter(|&(c, &n)| n > 0 && self.cell_skill[c] >= complexity)
            .min_by_key(|&(c, _)| (self.cell_skill[c], c))
            .map(|(c, _)| c)
    }

    pub fn total(&self) -> u32 {
        self.idle.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub sr: usize,
    pub complexity: usize,
    pub cell: usize,
}

/// Matches waiting SRs to idle workers until no further match is possible.
/// The queues must have been filled with keys built by the same policy.
pub fn dispatch(queues: &mut ComplexityQueues, idle: &mut IdleWorkers) -> Vec<Assignment> {
    let mut out = Vec::new();
    loop {
        let mut best: Option<(QueueKey, usize, usize)> = None;
        for k in 0..queues.n_levels() {
            let Some(head) = queues.head(k) else { continue };
            let Some(cell) = idle.best_cell_for(k) else { continue };
            if best.as_ref().is_none_or(|(b, _, _)| head < b) {
                best = Some((*head, k, cell));
            }
        }
        let Some((_, k, cell)) = best else { break };
        let key = queues.pop(k).expect("head exists");
        idle.idle[cell] -= 1;
        out.push(Assignment { sr: key.sr, complexity: k, cell });
    }
    out
}

/// Earliest-deadline-first dispatch over queues keyed by [`Policy::Edf`].
pub fn dispatch_edf(queues: &mut ComplexityQueues, idle: &mut IdleWorkers) -> Vec<Assignment> {
    dispatch(queues, idle)
}

/// Priority-pull dispatch over queues keyed by [`Policy::PrioPull`].
pub fn dispatch_prio_pull(queues: &mut ComplexityQueues, idle: &mut IdleWorkers) -> Vec<Assignment> {
    dispatch(queues, idle)
}
