//! Event-driven simulation of one replication.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use thiserror::Error;

use super::dispatch::{dispatch, ComplexityQueues, IdleWorkers, Policy};
use super::eventlog::{EventKind, EventRecord, SrInfo};
use super::feasibility::GrowthTest;
use super::state::SystemState;
use crate::model::{ServiceSystem, HOURS_PER_WEEK};
use crate::rng::{stream_rng, SimRng};

const MINUTES_PER_HOUR: f64 = 60.0;
const MINUTES_PER_DAY: f64 = 1440.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOptions {
    pub horizon_days: u32,
    /// Upper bound on the post-horizon drain; a replication that cannot
    /// empty its queues within it ends infeasible.
    pub max_drain_days: u32,
    /// Preempt-resume of lower-ranked in-service SRs (off by default).
    pub preemption: bool,
    pub growth: GrowthTest,
    pub record_events: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { horizon_days: 30, max_drain_days: 30, preemption: false, growth: GrowthTest::default(), record_events: false }
    }
}

impl SimOptions {
    pub fn with_horizon(horizon_days: u32) -> Self {
        Self { horizon_days, ..Self::default() }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("staffing vector has {got} cells, system has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cell {cell} has {value} workers, above w_max = {w_max}")]
    OutOfRange { cell: usize, value: u32, w_max: u32 },
    #[error("horizon must be at least one day")]
    ZeroHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceRequest {
    pub id: usize,
    pub customer: usize,
    pub priority: usize,
    pub complexity: usize,
    pub arrival: f64,
    /// Absolute deadline in minutes; infinite for SLA-exempt work.
    pub deadline: f64,
    pub remaining: f64,
    pub sla_exempt: bool,
}

/// Result of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub state: SystemState,
    /// Per (customer, priority), indexed like `state.sla_attainment`.
    pub arrivals: Vec<u64>,
    pub closed: Vec<u64>,
    pub met: Vec<u64>,
    pub dropped: Vec<u64>,
    pub unclosed: Vec<u64>,
    /// Per staffing cell, minutes.
    pub busy_minutes: Vec<f64>,
    pub staffed_minutes: Vec<f64>,
    pub max_queue_lengths: Vec<u32>,
    /// Hourly samples of the complexity queue lengths.
    pub queue_history: Vec<Vec<u32>>,
    pub end_minutes: f64,
    pub drained: bool,
    pub seed: u64,
    #[serde(skip)]
    pub events: Option<Vec<EventRecord>>,
}

#[derive(Debug, Clone, Copy)]
enum EventKindInner {
    Arrival(usize),
    Completion { slot: usize, token: u64 },
    HourTick(u64),
}

impl EventKindInner {
    fn rank(&self) -> u8 {
        match self {
            EventKindInner::Arrival(_) => 0,
            EventKindInner::Completion { .. } => 1,
            EventKindInner::HourTick(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKindInner,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Default)]
struct CellClock {
    staffed: u32,
    busy: u32,
    on_duty: bool,
    on_since: f64,
    off_since: f64,
    busy_minutes: f64,
    staffed_minutes: f64,
}

#[derive(Debug, Clone)]
struct Job {
    sr: usize,
    cell: usize,
    start: f64,
    token: u64,
    active: bool,
}

struct Engine<'a> {
    sys: &'a ServiceSystem,
    policy: Policy,
    opts: &'a SimOptions,
    rng: SimRng,
    now: f64,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    srs: Vec<ServiceRequest>,
    queues: ComplexityQueues,
    idle: IdleWorkers,
    cells: Vec<CellClock>,
    jobs: Vec<Job>,
    free_jobs: Vec<usize>,
    busy_total: usize,
    pending_arrivals: usize,
    arrival_dists: Vec<Vec<Option<Poisson<f64>>>>,
    arrivals: Vec<u64>,
    closed: Vec<u64>,
    met: Vec<u64>,
    dropped: Vec<u64>,
    max_queue: Vec<u32>,
    history: Vec<Vec<u32>>,
    log: Option<Vec<EventRecord>>,
}

impl<'a> Engine<'a> {
    fn new(sys: &'a ServiceSystem, theta: &[u32], policy: Policy, opts: &'a SimOptions, seed: u64) -> Self {
        let n_pairs = sys.n_customers * sys.n_priorities;
        let cell_skill = (0..sys.dimension()).map(|c| sys.cell_coords(c).1).collect();
        let cells = theta.iter().map(|&t| CellClock { staffed: t, ..CellClock::default() }).collect();
        let arrival_dists = sys
            .customers
            .iter()
            .map(|c| c.rates.iter().map(|&r| (r > 0.0).then(|| Poisson::new(r).expect("validated rate"))).collect())
            .collect();
        Self {
            sys,
            policy,
            opts,
            rng: stream_rng(seed, &[]),
            now: 0.0,
            heap: BinaryHeap::new(),
            seq: 0,
            srs: Vec::new(),
            queues: ComplexityQueues::new(sys.n_skills, sys.queue_capacity()),
            idle: IdleWorkers::new(cell_skill),
            cells,
            jobs: Vec::new(),
            free_jobs: Vec::new(),
            busy_total: 0,
            pending_arrivals: 0,
            arrival_dists,
            arrivals: vec![0; n_pairs],
            closed: vec![0; n_pairs],
            met: vec![0; n_pairs],
            dropped: vec![0; n_pairs],
            max_queue: vec![0; sys.n_skills],
            history: Vec::new(),
            log: opts.record_events.then(Vec::new),
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKindInner) {
        self.seq += 1;
        self.heap.push(Reverse(Event { time, seq: self.seq, kind }));
    }

    fn record(&mut self, kind: EventKind, sr: Option<usize>, cell: Option<usize>) {
        if let Some(log) = self.log.as_mut() {
            let info = match kind {
                EventKind::Arrive | EventKind::Drop => sr.map(|i| {
                    let r = &self.srs[i];
                    SrInfo {
                        customer: r.customer,
                        priority: r.priority,
                        complexity: r.complexity,
                        deadline: r.deadline,
                        service: r.remaining,
                    }
                }),
                _ => None,
            };
            log.push(EventRecord { time: self.now, kind, sr, cell, info });
        }
    }

    fn pair(&self, sr: usize) -> usize {
        let r = &self.srs[sr];
        r.customer * self.sys.n_priorities + r.priority
    }

    fn on_tick(&mut self, hour: u64) {
        let how = (hour % HOURS_PER_WEEK as u64) as usize;
        for cell in 0..self.cells.len() {
            let (shift, _) = self.sys.cell_coords(cell);
            let on = self.sys.on_duty(shift, how);
            let now = self.now;
            let c = &mut self.cells[cell];
            if on && !c.on_duty {
                c.on_duty = true;
                c.on_since = now;
                c.staffed_minutes += c.busy as f64 * (now - c.off_since);
                self.idle.idle[cell] = c.staffed - c.busy;
                self.record(EventKind::ShiftOn, None, Some(cell));
            } else if !on && c.on_duty {
                c.on_duty = false;
                c.staffed_minutes += c.staffed as f64 * (now - c.on_since);
                c.off_since = now;
                self.idle.idle[cell] = 0;
                self.record(EventKind::ShiftOff, None, Some(cell));
            }
        }
        self.history.push(self.queues.lengths());

        if hour < self.opts.horizon_days as u64 * 24 {
            self.generate_arrivals(how);
        }
        self.dispatch_waiting();
    }

    fn generate_arrivals(&mut self, how: usize) {
        let cap = self.sys.arrival_cap() as f64;
        for c in 0..self.sys.n_customers {
            let Some(dist) = self.arrival_dists[c][how] else { continue };
            let n = dist.sample(&mut self.rng).min(cap) as usize;
            for _ in 0..n {
                let t = self.now + MINUTES_PER_HOUR * self.rng.random::<f64>();
                let u: f64 = self.rng.random();
                let customer = &self.sys.customers[c];
                let mut acc = 0.0;
                let mut class = *customer.mix.last().expect("validated mix");
                for m in &customer.mix {
                    acc += m.probability;
                    if u < acc {
                        class = *m;
                        break;
                    }
                }
                let service = self.sys.service_time(class.priority, class.skill).sample(&mut self.rng);
                let deadline = match (customer.sla_exempt, self.sys.sla(c, class.priority)) {
                    (false, Some(s)) => t + s.deadline_minutes,
                    _ => f64::INFINITY,
                };
                let id = self.srs.len();
                self.srs.push(ServiceRequest {
                    id,
                    customer: c,
                    priority: class.priority,
                    complexity: class.skill,
                    arrival: t,
                    deadline,
                    remaining: service,
                    sla_exempt: customer.sla_exempt,
                });
                self.pending_arrivals += 1;
                self.schedule(t, EventKindInner::Arrival(id));
            }
        }
    }

    fn key_of(&self, sr: usize) -> super::dispatch::QueueKey {
        let r = &self.srs[sr];
        self.policy.key(sr, r.priority, r.arrival, r.deadline)
    }

    fn on_arrival(&mut self, sr: usize) {
        self.pending_arrivals -= 1;
        let pair = self.pair(sr);
        self.arrivals[pair] += 1;
        let k = self.srs[sr].complexity;
        let key = self.key_of(sr);
        if !self.queues.push(k, key) {
            self.dropped[pair] += 1;
            self.record(EventKind::Drop, Some(sr), None);
            return;
        }
        self.record(EventKind::Arrive, Some(sr), None);
        self.max_queue[k] = self.max_queue[k].max(self.queues.len(k) as u32);
        self.dispatch_waiting();
        if self.opts.preemption && self.is_waiting(sr) {
            self.try_preempt_for(sr);
        }
    }

    fn is_waiting(&self, sr: usize) -> bool {
        self.queues.contains(self.srs[sr].complexity, &self.key_of(sr))
    }

    fn try_preempt_for(&mut self, sr: usize) {
        let key = self.key_of(sr);
        let k = self.srs[sr].complexity;
        let victim = self
            .jobs
            .iter()
            .enumerate()
            .filter(|(_, j)| j.active && self.cells[j.cell].on_duty && self.idle.cell_skill[j.cell] >= k)
            .map(|(slot, j)| (slot, self.key_of(j.sr)))
            .filter(|(_, vk)| *vk > key)
            .max_by(|a, b| a.1.cmp(&b.1));
        let Some((slot, vkey)) = victim else { return };
        let (vsr, cell, start) = (self.jobs[slot].sr, self.jobs[slot].cell, self.jobs[slot].start);
        let vk = self.srs[vsr].complexity;
        if self.queues.is_full(vk) {
            return;
        }
        let elapsed = self.now - start;
        self.cells[cell].busy_minutes += elapsed;
        self.cells[cell].busy -= 1;
        self.busy_total -= 1;
        self.srs[vsr].remaining = (self.srs[vsr].remaining - elapsed).max(0.0);
        self.jobs[slot].active = false;
        self.free_jobs.push(slot);
        self.idle.idle[cell] += 1;
        self.record(EventKind::Preempt, Some(vsr), Some(cell));
        let requeued = self.queues.push(vk, vkey);
        debug_assert!(requeued);
        self.dispatch_waiting();
    }

    fn dispatch_waiting(&mut self) {
        for a in dispatch(&mut self.queues, &mut self.idle) {
            self.start_job(a.sr, a.cell);
        }
    }

    fn start_job(&mut self, sr: usize, cell: usize) {
        let token = self.seq + 1;
        let job = Job { sr, cell, start: self.now, token, active: true };
        let slot = match self.free_jobs.pop() {
            Some(s) => {
                self.jobs[s] = job;
                s
            }
            None => {
                self.jobs.push(job);
                self.jobs.len() - 1
            }
        };
        self.cells[cell].busy += 1;
        self.busy_total += 1;
        self.record(EventKind::Start, Some(sr), Some(cell));
        let done = self.now + self.srs[sr].remaining;
        self.schedule(done, EventKindInner::Completion { slot, token });
    }

    fn on_completion(&mut self, slot: usize, token: u64) {
        let job = &self.jobs[slot];
        if !job.active || job.token != token {
            return;
        }
        let (sr, cell, start) = (job.sr, job.cell, job.start);
        self.jobs[slot].active = false;
        self.free_jobs.push(slot);
        self.srs[sr].remaining = 0.0;
        let pair = self.pair(sr);
        self.closed[pair] += 1;
        if self.now <= self.srs[sr].deadline {
            self.met[pair] += 1;
        }
        let now = self.now;
        let c = &mut self.cells[cell];
        c.busy_minutes += now - start;
        c.busy -= 1;
        self.busy_total -= 1;
        if c.on_duty {
            self.idle.idle[cell] += 1;
        } else {
            c.staffed_minutes += now - c.off_since;
        }
        self.record(EventKind::Done, Some(sr), Some(cell));
        self.dispatch_waiting();
    }

    /// True when some non-empty queue has no staffed worker able to serve it.
    fn stalled(&self) -> bool {
        (0..self.sys.n_skills).any(|k| {
            self.queues.len(k) > 0
                && !(0..self.cells.len()).any(|c| self.cells[c].staffed > 0 && self.idle.cell_skill[c] >= k)
        })
    }

    fn run(mut self, seed: u64) -> SimOutcome {
        let horizon = self.opts.horizon_days as f64 * MINUTES_PER_DAY;
        let drain_limit = horizon + self.opts.max_drain_days as f64 * MINUTES_PER_DAY;
        self.schedule(0.0, EventKindInner::HourTick(0));
        let mut drained = true;

        while let Some(Reverse(ev)) = self.heap.pop() {
            self.now = ev.time;
            match ev.kind {
                EventKindInner::Arrival(sr) => self.on_arrival(sr),
                EventKindInner::Completion { slot, token } => self.on_completion(slot, token),
                EventKindInner::HourTick(h) => {
                    self.on_tick(h);
                    if self.now >= horizon && self.pending_arrivals == 0 {
                        if self.busy_total == 0 && self.stalled() {
                            drained = false;
                            break;
                        }
                        if self.now >= drain_limit {
                            drained = false;
                            break;
                        }
                    }
                    self.schedule(self.now + MINUTES_PER_HOUR, EventKindInner::HourTick(h + 1));
                }
            }
            if self.now >= horizon && self.pending_arrivals == 0 && self.busy_total == 0 && self.queues.is_empty() {
                break;
            }
        }
        self.finish(seed, drained)
    }

    fn finish(mut self, seed: u64, drained: bool) -> SimOutcome {
        let end = self.now;
        let n_pairs = self.arrivals.len();
        let mut unclosed = vec![0u64; n_pairs];
        for slot in 0..self.jobs.len() {
            if !self.jobs[slot].active {
                continue;
            }
            let (sr, cell, start) = (self.jobs[slot].sr, self.jobs[slot].cell, self.jobs[slot].start);
            let c = &mut self.cells[cell];
            c.busy_minutes += end - start;
            if !c.on_duty {
                c.staffed_minutes += end - c.off_since;
            }
            unclosed[self.pair(sr)] += 1;
        }
        for k in 0..self.sys.n_skills {
            for key in self.queues.iter(k) {
                unclosed[self.pair(key.sr)] += 1;
            }
        }
        for c in &mut self.cells {
            if c.on_duty {
                c.staffed_minutes += c.staffed as f64 * (end - c.on_since);
            }
        }
        let utilizations = self
            .cells
            .iter()
            .map(|c| if c.staffed_minutes > 0.0 { (c.busy_minutes / c.staffed_minutes).clamp(0.0, 1.0) } else { 0.0 })
            .collect();

        let n_p = self.sys.n_priorities;
        let sla_attainment = (0..n_pairs)
            .map(|pair| {
                let (c, p) = (pair / n_p, pair % n_p);
                let bound = !self.sys.customers[c].sla_exempt && self.sys.sla(c, p).is_some();
                if !bound {
                    return 1.0;
                }
                // SRs left open by an aborted drain count as misses.
                let denom = self.closed[pair] + if drained { 0 } else { unclosed[pair] };
                if denom > 0 {
                    self.met[pair] as f64 / denom as f64
                } else if self.arrivals[pair] > 0 {
                    0.0
                } else {
                    self.sys.sla(c, p).unwrap().target
                }
            })
            .collect();

        self.history.push(self.queues.lengths());
        let feasible = drained && self.opts.growth.is_feasible(&self.history);
        SimOutcome {
            state: SystemState { queue_lengths: self.queues.lengths(), utilizations, sla_attainment, feasible },
            arrivals: self.arrivals,
            closed: self.closed,
            met: self.met,
            dropped: self.dropped,
            unclosed,
            busy_minutes: self.cells.iter().map(|c| c.busy_minutes).collect(),
            staffed_minutes: self.cells.iter().map(|c| c.staffed_minutes).collect(),
            max_queue_lengths: self.max_queue,
            queue_history: self.history,
            end_minutes: end,
            drained,
            seed,
            events: self.log,
        }
    }
}

/// Simulates `horizon_days` of arrivals under staffing `theta`, then stops
/// arrivals and lets the system drain. Identical inputs (including `seed`)
/// give identical outcomes.
pub fn simulate_period(
    system: &ServiceSystem,
    theta: &[u32],
    policy: Policy,
    opts: &SimOptions,
    seed: u64,
) -> Result<SimOutcome, SimError> {
    if theta.len() != system.dimension() {
        return Err(SimError::DimensionMismatch { expected: system.dimension(), got: theta.len() });
    }
    if let Some((cell, &value)) = theta.iter().enumerate().find(|(_, &v)| v > system.w_max()) {
        return Err(SimError::OutOfRange { cell, value, w_max: system.w_max() });
    }
    if opts.horizon_days == 0 {
        return Err(SimError::ZeroHorizon);
    }
    Ok(Engine::new(system, theta, policy, opts, seed).run(seed))
}
