use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, SystemConfig};
use super::HOURS_PER_WEEK;
use crate::sim::service::TruncatedLogNormal;

/// SLA contract of one (customer, priority) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaTarget {
    pub target: f64,
    pub deadline_minutes: f64,
}

/// One (priority, complexity) outcome of a customer's SR mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixClass {
    pub priority: usize,
    pub skill: usize,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct CustomerModel {
    pub sla_exempt: bool,
    pub rates: Box<[f64; HOURS_PER_WEEK]>,
    pub mix: Vec<MixClass>,
}

/// Indexed, immutable form of a validated [`SystemConfig`].
///
/// Staffing cells are laid out shift-major: cell `s * n_skills + k` holds the
/// workers of skill `k` in shift `s`.
#[derive(Debug, Clone)]
pub struct ServiceSystem {
    config: SystemConfig,
    pub n_customers: usize,
    pub n_shifts: usize,
    pub n_skills: usize,
    pub n_priorities: usize,
    pub customers: Vec<CustomerModel>,
    service: Vec<TruncatedLogNormal>,
    sla: Vec<Option<SlaTarget>>,
    constraint_pairs: Vec<(usize, usize)>,
    shift_masks: Vec<[bool; HOURS_PER_WEEK]>,
}

impl ServiceSystem {
    pub fn new(config: SystemConfig) -> Result<Self, ConfigError> {
        let config = config.validate()?;
        let n_skills = config.skills.len();
        let n_priorities = config.priorities.len();
        let n_customers = config.customers.len();

        let customers = config
            .customers
            .iter()
            .map(|c| {
                let mut rates = Box::new([0.0; HOURS_PER_WEEK]);
                for (h, r) in rates.iter_mut().enumerate() {
                    *r = c.arrivals.rate(h);
                }
                let total: f64 = c.mix.iter().map(|m| m.weight).sum();
                let mix = c
                    .mix
                    .iter()
                    .filter(|m| m.weight > 0.0)
                    .map(|m| MixClass {
                        priority: config.priority_index(&m.priority).unwrap(),
                        skill: config.skill_index(&m.skill).unwrap(),
                        probability: m.weight / total,
                    })
                    .collect();
                CustomerModel { sla_exempt: c.sla_exempt, rates, mix }
            })
            .collect();

        let mut service = vec![TruncatedLogNormal::new(0.0, 1.0, 1.0); n_priorities * n_skills];
        for st in &config.service_times {
            let p = config.priority_index(&st.priority).unwrap();
            let k = config.skill_index(&st.skill).unwrap();
            service[p * n_skills + k] = TruncatedLogNormal::new(st.mu, st.sigma, config.truncation_minutes);
        }

        let mut sla = vec![None; n_customers * n_priorities];
        let mut constraint_pairs = Vec::with_capacity(config.sla.len());
        for s in &config.sla {
            let c = config.customer_index(&s.customer).unwrap();
            let p = config.priority_index(&s.priority).unwrap();
            if config.customers[c].sla_exempt {
                continue;
            }
            sla[c * n_priorities + p] = Some(SlaTarget { target: s.target, deadline_minutes: s.deadline_hours * 60.0 });
            constraint_pairs.push((c, p));
        }

        let shift_masks = config
            .shifts
            .iter()
            .map(|s| {
                let mut mask = [false; HOURS_PER_WEEK];
                for w in &s.windows {
                    for &d in &w.days {
                        for h in w.start_hour..w.end_hour {
                            mask[d as usize * 24 + h as usize] = true;
                        }
                    }
                }
                mask
            })
            .collect();

        Ok(Self {
            n_customers,
            n_shifts: config.shifts.len(),
            n_skills,
            n_priorities,
            customers,
            service,
            sla,
            constraint_pairs,
            shift_masks,
            config,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.n_shifts * self.n_skills
    }

    pub fn w_max(&self) -> u32 {
        self.config.w_max
    }

    pub fn queue_capacity(&self) -> usize {
        self.config.queue_capacity
    }

    pub fn arrival_cap(&self) -> u32 {
        self.config.arrival_cap_per_hour
    }

    pub fn cell(&self, shift: usize, skill: usize) -> usize {
        shift * self.n_skills + skill
    }

    /// `(shift, skill)` of a staffing cell.
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.n_skills, cell % self.n_skills)
    }

    pub fn service_time(&self, priority: usize, skill: usize) -> &TruncatedLogNormal {
        &self.service[priority * self.n_skills + skill]
    }

    pub fn sla(&self, customer: usize, priority: usize) -> Option<SlaTarget> {
        self.sla[customer * self.n_priorities + priority]
    }

    /// (customer, priority) pairs carrying an SLA constraint, in canonical order.
    pub fn constraint_pairs(&self) -> &[(usize, usize)] {
        &self.constraint_pairs
    }

    pub fn on_duty(&self, shift: usize, hour_of_week: usize) -> bool {
        self.shift_masks[shift][hour_of_week]
    }

    pub fn shift_mask(&self, shift: usize) -> &[bool; HOURS_PER_WEEK] {
        &self.shift_masks[shift]
    }

    /// Shifts that receive work arriving in `hour_of_week`: every shift on duty
    /// then, or else the next shift(s) to come on duty.
    pub fn receiving_shifts(&self, hour_of_week: usize) -> Vec<usize> {
        for offset in 0..HOURS_PER_WEEK {
            let h = (hour_of_week + offset) % HOURS_PER_WEEK;
            let on: Vec<usize> = (0..self.n_shifts).filter(|&s| self.on_duty(s, h)).collect();
            if !on.is_empty() {
                return on;
            }
        }
        Vec::new()
    }

    /// Share of expected weekly workload (SR arrivals times mean service
    /// time) landing in each (shift, skill) cell.
    ///
    /// Work arriving in an hour is split evenly over the shifts on duty in
    /// that hour; work arriving while no shift is on duty goes to the next
    /// shift(s) to start.
    pub fn workload_weights(&self) -> Result<WorkloadWeights, WorkloadError> {
        let mut load = vec![0.0; self.dimension()];
        for h in 0..HOURS_PER_WEEK {
            let shifts = self.receiving_shifts(h);
            if shifts.is_empty() {
                continue;
            }
            let split = 1.0 / shifts.len() as f64;
            for customer in &self.customers {
                let rate = customer.rates[h];
                if rate == 0.0 {
                    continue;
                }
                for class in &customer.mix {
                    let work = rate * class.probability * self.service_time(class.priority, class.skill).mean();
                    for &s in &shifts {
                        load[self.cell(s, class.skill)] += work * split;
                    }
                }
            }
        }
        let total: f64 = load.iter().sum();
        if !(total > 0.0) {
            return Err(WorkloadError::ZeroWorkload);
        }
        Ok(WorkloadWeights {
            n_shifts: self.n_shifts,
            n_skills: self.n_skills,
            weights: load.into_iter().map(|l| l / total).collect(),
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("total expected workload is zero")]
    ZeroWorkload,
}

impl WorkloadError {
    pub fn code(&self) -> &'static str {
        "zero_workload"
    }
}

/// Workload fractions per (shift, skill) cell; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadWeights {
    pub n_shifts: usize,
    pub n_skills: usize,
    pub weights: Vec<f64>,
}

impl WorkloadWeights {
    pub fn get(&self, shift: usize, skill: usize) -> f64 {
        self.weights[shift * self.n_skills + skill]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Fraction of workload per skill level, summed over shifts.
    pub fn skill_shares(&self) -> Vec<f64> {
        (0..self.n_skills)
            .map(|k| (0..self.n_shifts).map(|s| self.get(s, k)).sum())
            .collect()
    }

    pub fn uniform(n_shifts: usize, n_skills: usize) -> Self {
        let n = n_shifts * n_skills;
        Self { n_shifts, n_skills, weights: vec![1.0 / n as f64; n] }
    }
}
