//! On-disk service-system description and its validation.
//!
//! Config files are TOML. Every table is keyed by string ids; unknown fields
//! are rejected. `skills` are listed from the lowest to the highest level and
//! `priorities` from the highest (most urgent) to the lowest.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::HOURS_PER_WEEK;

pub const SCHEMA_VERSION: u32 = 1;

fn default_arrival_cap() -> u32 {
    10_000
}

fn default_truncation() -> f64 {
    100_000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema_version: u32,
    /// Upper bound on workers per (shift, skill) cell.
    pub w_max: u32,
    /// Per-skill queue bound; arrivals to a full queue depart.
    pub queue_capacity: usize,
    /// Service times are `min(exp(M), truncation_minutes)`.
    #[serde(default = "default_truncation")]
    pub truncation_minutes: f64,
    /// Hard cap on arrivals of one customer within one hour-of-week slot.
    #[serde(default = "default_arrival_cap")]
    pub arrival_cap_per_hour: u32,
    pub skills: Vec<String>,
    pub priorities: Vec<String>,
    pub shifts: Vec<ShiftSpec>,
    pub customers: Vec<CustomerSpec>,
    pub service_times: Vec<ServiceTimeSpec>,
    #[serde(default)]
    pub sla: Vec<SlaSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub id: String,
    pub windows: Vec<ShiftWindow>,
}

/// Working hours `[start_hour, end_hour)` on each listed day (0 = Monday).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftWindow {
    pub days: Vec<u8>,
    pub start_hour: u8,
    pub end_hour: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Internal work: loads the queues but is not subject to SLAs.
    #[serde(default)]
    pub sla_exempt: bool,
    /// SRs per hour; a single number or one value per hour of the week.
    pub arrivals: ArrivalProfile,
    /// Categorical distribution of (priority, complexity) over arriving SRs.
    pub mix: Vec<MixEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArrivalProfile {
    Flat(f64),
    Hourly(Vec<f64>),
}

impl ArrivalProfile {
    pub fn rate(&self, hour_of_week: usize) -> f64 {
        match self {
            ArrivalProfile::Flat(r) => *r,
            ArrivalProfile::Hourly(v) => v[hour_of_week],
        }
    }

    pub fn scaled(&self, factor: f64) -> ArrivalProfile {
        match self {
            ArrivalProfile::Flat(r) => ArrivalProfile::Flat(r * factor),
            ArrivalProfile::Hourly(v) => ArrivalProfile::Hourly(v.iter().map(|r| r * factor).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixEntry {
    pub priority: String,
    pub skill: String,
    pub weight: f64,
}

/// Parameters of the underlying normal of a truncated lognormal, in log-minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceTimeSpec {
    pub priority: String,
    pub skill: String,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaSpec {
    pub customer: String,
    pub priority: String,
    /// Fraction of closed SRs that must meet the deadline, in `[0, 1]`.
    pub target: f64,
    pub deadline_hours: f64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema(u32),
    #[error("config has no customers")]
    EmptyCustomerSet,
    #[error("config has no {0}")]
    EmptySet(&'static str),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown {kind} `{id}`")]
    UnknownReference { kind: &'static str, id: String },
    #[error("w_max must be at least 1, got {0}")]
    WMaxTooSmall(u32),
    #[error("queue_capacity must be at least 1")]
    QueueCapacityTooSmall,
    #[error("truncation_minutes must be positive and finite, got {0}")]
    InvalidTruncation(f64),
    #[error("arrival_cap_per_hour must be at least 1")]
    ArrivalCapTooSmall,
    #[error("customer `{customer}` has invalid rate {rate} at hour {hour}")]
    NegativeRate { customer: String, hour: usize, rate: f64 },
    #[error("customer `{customer}` lists {len} hourly rates, expected {HOURS_PER_WEEK}")]
    IntervalCount { customer: String, len: usize },
    #[error("customer `{0}` has an empty or non-positive SR mix")]
    InvalidMix(String),
    #[error("service time for ({priority}, {skill}) needs sigma > 0, got {sigma}")]
    NonPositiveSigma { priority: String, skill: String, sigma: f64 },
    #[error("service time for ({priority}, {skill}) has non-finite mu")]
    InvalidMu { priority: String, skill: String },
    #[error("no service time for ({priority}, {skill})")]
    MissingServiceTime { priority: String, skill: String },
    #[error("SLA target for ({customer}, {priority}) is {target}, outside [0, 1]")]
    SlaTargetOutOfRange { customer: String, priority: String, target: f64 },
    #[error("SLA deadline for ({customer}, {priority}) must be positive, got {hours}")]
    NonPositiveDeadline { customer: String, priority: String, hours: f64 },
    #[error("no SLA target for ({customer}, {priority}) which receives arrivals")]
    MissingSlaTarget { customer: String, priority: String },
    #[error("shift `{0}` has an invalid or empty working window")]
    InvalidShiftWindow(String),
}

impl ConfigError {
    /// Stable machine-readable name of the failure.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io(_) => "io",
            ConfigError::Parse(_) => "parse",
            ConfigError::UnsupportedSchema(_) => "unsupported_schema",
            ConfigError::EmptyCustomerSet => "empty_customer_set",
            ConfigError::EmptySet(_) => "empty_set",
            ConfigError::DuplicateId { .. } => "duplicate_id",
            ConfigError::UnknownReference { .. } => "unknown_reference",
            ConfigError::WMaxTooSmall(_) => "w_max_too_small",
            ConfigError::QueueCapacityTooSmall => "queue_capacity_too_small",
            ConfigError::InvalidTruncation(_) => "invalid_truncation",
            ConfigError::ArrivalCapTooSmall => "arrival_cap_too_small",
            ConfigError::NegativeRate { .. } => "negative_rate",
            ConfigError::IntervalCount { .. } => "interval_count",
            ConfigError::InvalidMix(_) => "invalid_mix",
            ConfigError::NonPositiveSigma { .. } => "nonpositive_sigma",
            ConfigError::InvalidMu { .. } => "invalid_mu",
            ConfigError::MissingServiceTime { .. } => "missing_service_time",
            ConfigError::SlaTargetOutOfRange { .. } => "sla_target_out_of_range",
            ConfigError::NonPositiveDeadline { .. } => "nonpositive_deadline",
            ConfigError::MissingSlaTarget { .. } => "missing_sla_target",
            ConfigError::InvalidShiftWindow(_) => "invalid_shift_window",
        }
    }
}

fn index_of(ids: &[String], kind: &'static str) -> Result<HashMap<String, usize>, ConfigError> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(ConfigError::DuplicateId { kind, id: id.clone() });
        }
    }
    Ok(map)
}

fn lookup(map: &HashMap<String, usize>, kind: &'static str, id: &str) -> Result<usize, ConfigError> {
    map.get(id)
        .copied()
        .ok_or_else(|| ConfigError::UnknownReference { kind, id: id.to_string() })
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)?.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn skill_index(&self, id: &str) -> Option<usize> {
        self.skills.iter().position(|s| s == id)
    }

    pub fn priority_index(&self, id: &str) -> Option<usize> {
        self.priorities.iter().position(|s| s == id)
    }

    pub fn customer_index(&self, id: &str) -> Option<usize> {
        self.customers.iter().position(|c| c.id == id)
    }

    /// Number of staffing cells, `|shifts| * |skills|`.
    pub fn dimension(&self) -> usize {
        self.shifts.len() * self.skills.len()
    }

    /// Checks every invariant and returns the config with its tables in
    /// canonical order. Validating an already-validated config is a no-op.
    pub fn validate(mut self) -> Result<Self, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::UnsupportedSchema(self.schema_version));
        }
        if self.customers.is_empty() {
            return Err(ConfigError::EmptyCustomerSet);
        }
        if self.shifts.is_empty() {
            return Err(ConfigError::EmptySet("shifts"));
        }
        if self.skills.is_empty() {
            return Err(ConfigError::EmptySet("skills"));
        }
        if self.priorities.is_empty() {
            return Err(ConfigError::EmptySet("priorities"));
        }
        if self.w_max < 1 {
            return Err(ConfigError::WMaxTooSmall(self.w_max));
        }
        if self.queue_capacity < 1 {
            return Err(ConfigError::QueueCapacityTooSmall);
        }
        if !(self.truncation_minutes.is_finite() && self.truncation_minutes > 0.0) {
            return Err(ConfigError::InvalidTruncation(self.truncation_minutes));
        }
        if self.arrival_cap_per_hour < 1 {
            return Err(ConfigError::ArrivalCapTooSmall);
        }

        let skills = index_of(&self.skills, "skill")?;
        let priorities = index_of(&self.priorities, "priority")?;
        let customer_ids: Vec<String> = self.customers.iter().map(|c| c.id.clone()).collect();
        let customers = index_of(&customer_ids, "customer")?;
        let shift_ids: Vec<String> = self.shifts.iter().map(|s| s.id.clone()).collect();
        index_of(&shift_ids, "shift")?;

        for shift in &mut self.shifts {
            if shift.windows.is_empty() {
                return Err(ConfigError::InvalidShiftWindow(shift.id.clone()));
            }
            for w in &mut shift.windows {
                if w.days.is_empty() || w.days.iter().any(|&d| d > 6) || w.start_hour >= w.end_hour || w.end_hour > 24 {
                    return Err(ConfigError::InvalidShiftWindow(shift.id.clone()));
                }
                w.days.sort_unstable();
                w.days.dedup();
            }
        }

        // Service times: complete (priority, skill) table.
        let mut seen = HashSet::new();
        for st in &self.service_times {
            let key = (lookup(&priorities, "priority", &st.priority)?, lookup(&skills, "skill", &st.skill)?);
            if !seen.insert(key) {
                return Err(ConfigError::DuplicateId {
                    kind: "service_time",
                    id: format!("{}/{}", st.priority, st.skill),
                });
            }
            if !st.mu.is_finite() {
                return Err(ConfigError::InvalidMu { priority: st.priority.clone(), skill: st.skill.clone() });
            }
            if !(st.sigma > 0.0 && st.sigma.is_finite()) {
                return Err(ConfigError::NonPositiveSigma {
                    priority: st.priority.clone(),
                    skill: st.skill.clone(),
                    sigma: st.sigma,
                });
            }
        }
        for p in &self.priorities {
            for k in &self.skills {
                if !seen.contains(&(priorities[p], skills[k])) {
                    return Err(ConfigError::MissingServiceTime { priority: p.clone(), skill: k.clone() });
                }
            }
        }
        self.service_times
            .sort_by_key(|st| (priorities[&st.priority], skills[&st.skill]));

        // SLA table.
        let mut sla_pairs = HashSet::new();
        for sla in &self.sla {
            let key = (lookup(&customers, "customer", &sla.customer)?, lookup(&priorities, "priority", &sla.priority)?);
            if !sla_pairs.insert(key) {
                return Err(ConfigError::DuplicateId { kind: "sla", id: format!("{}/{}", sla.customer, sla.priority) });
            }
            if !(0.0..=1.0).contains(&sla.target) {
                return Err(ConfigError::SlaTargetOutOfRange {
                    customer: sla.customer.clone(),
                    priority: sla.priority.clone(),
                    target: sla.target,
                });
            }
            if !(sla.deadline_hours > 0.0 && sla.deadline_hours.is_finite()) {
                return Err(ConfigError::NonPositiveDeadline {
                    customer: sla.customer.clone(),
                    priority: sla.priority.clone(),
                    hours: sla.deadline_hours,
                });
            }
        }
        self.sla.sort_by_key(|s| (customers[&s.customer], priorities[&s.priority]));

        // Customers: rates and mix.
        for (ci, customer) in self.customers.iter_mut().enumerate() {
            match &customer.arrivals {
                ArrivalProfile::Flat(r) => {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(ConfigError::NegativeRate { customer: customer.id.clone(), hour: 0, rate: *r });
                    }
                }
                ArrivalProfile::Hourly(v) => {
                    if v.len() != HOURS_PER_WEEK {
                        return Err(ConfigError::IntervalCount { customer: customer.id.clone(), len: v.len() });
                    }
                    if let Some((hour, &rate)) = v.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
                        return Err(ConfigError::NegativeRate { customer: customer.id.clone(), hour, rate });
                    }
                }
            }
            if customer.mix.is_empty()
                || customer.mix.iter().any(|m| !(m.weight.is_finite() && m.weight >= 0.0))
                || customer.mix.iter().map(|m| m.weight).sum::<f64>() <= 0.0
            {
                return Err(ConfigError::InvalidMix(customer.id.clone()));
            }
            let mut mix_keys = HashSet::new();
            for m in &customer.mix {
                let key = (lookup(&priorities, "priority", &m.priority)?, lookup(&skills, "skill", &m.skill)?);
                if !mix_keys.insert(key) {
                    return Err(ConfigError::DuplicateId {
                        kind: "mix",
                        id: format!("{}/{}/{}", customer.id, m.priority, m.skill),
                    });
                }
            }
            customer.mix.sort_by_key(|m| (priorities[&m.priority], skills[&m.skill]));

            let has_load = (0..HOURS_PER_WEEK).any(|h| customer.arrivals.rate(h) > 0.0);
            if has_load && !customer.sla_exempt {
                for m in customer.mix.iter().filter(|m| m.weight > 0.0) {
                    if !sla_pairs.contains(&(ci, priorities[&m.priority])) {
                        return Err(ConfigError::MissingSlaTarget {
                            customer: customer.id.clone(),
                            priority: m.priority.clone(),
                        });
                    }
                }
            }
        }

        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn small_fixture_is_accepted() {
        let cfg = fixtures::two_by_two().validate().unwrap();
        assert_eq!(cfg.dimension(), 4);
    }

    #[test]
    fn sla_target_above_one_is_rejected() {
        let mut cfg = fixtures::two_by_two();
        cfg.sla[0].target = 1.2;
        assert_eq!(cfg.validate().unwrap_err().code(), "sla_target_out_of_range");
    }

    #[test]
    fn no_customers_is_rejected() {
        let mut cfg = fixtures::two_by_two();
        cfg.customers.clear();
        assert_eq!(cfg.validate().unwrap_err().code(), "empty_customer_set");
    }

    #[test]
    fn distinct_failures_have_distinct_codes() {
        let mut c = fixtures::two_by_two();
        c.sla.clear();
        assert_eq!(c.validate().unwrap_err().code(), "missing_sla_target");

        let mut c = fixtures::two_by_two();
        c.customers[0].arrivals = ArrivalProfile::Flat(-1.0);
        assert_eq!(c.validate().unwrap_err().code(), "negative_rate");

        let mut c = fixtures::two_by_two();
        c.service_times[0].sigma = 0.0;
        assert_eq!(c.validate().unwrap_err().code(), "nonpositive_sigma");

        let mut c = fixtures::two_by_two();
        c.w_max = 0;
        assert_eq!(c.validate().unwrap_err().code(), "w_max_too_small");

        let mut c = fixtures::two_by_two();
        c.customers[0].arrivals = ArrivalProfile::Hourly(vec![1.0; 24]);
        assert_eq!(c.validate().unwrap_err().code(), "interval_count");

        let mut c = fixtures::two_by_two();
        c.service_times.pop();
        assert_eq!(c.validate().unwrap_err().code(), "missing_service_time");

        let mut c = fixtures::two_by_two();
        c.sla[0].deadline_hours = 0.0;
        assert_eq!(c.validate().unwrap_err().code(), "nonpositive_deadline");
    }

    #[test]
    fn exempt_customers_need_no_sla() {
        let mut c = fixtures::two_by_two();
        c.customers[0].sla_exempt = true;
        let c0 = c.customers[0].id.clone();
        c.sla.retain(|s| s.customer != c0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut text = fixtures::two_by_two().to_toml_string();
        text.insert_str(0, "bogus = 3\n");
        assert_eq!(SystemConfig::from_toml_str(&text).unwrap_err().code(), "parse");
    }

    #[test]
    fn toml_round_trip_and_idempotence() {
        let cfg = fixtures::two_by_two().validate().unwrap();
        let back = SystemConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.validate().unwrap(), cfg);
    }

    #[test]
    fn canonical_order_is_applied() {
        let mut c = fixtures::two_by_two();
        c.sla.reverse();
        c.service_times.reverse();
        let v = c.validate().unwrap();
        assert_eq!(v, fixtures::two_by_two().validate().unwrap());
    }
}
