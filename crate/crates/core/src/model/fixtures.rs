//! Small built-in service systems used by tests, benches and the CLI demo.

use super::config::*;

fn all_days() -> Vec<u8> {
    (0..7).collect()
}

fn shift(id: &str, start_hour: u8, end_hour: u8) -> ShiftSpec {
    ShiftSpec { id: id.into(), windows: vec![ShiftWindow { days: all_days(), start_hour, end_hour }] }
}

fn mix(priority: &str, skill: &str, weight: f64) -> MixEntry {
    MixEntry { priority: priority.into(), skill: skill.into(), weight }
}

fn service(priority: &str, skill: &str, mean_minutes: f64, sigma: f64) -> ServiceTimeSpec {
    // mean of exp(N(mu, sigma^2)) is exp(mu + sigma^2 / 2)
    ServiceTimeSpec { priority: priority.into(), skill: skill.into(), mu: mean_minutes.ln() - sigma * sigma / 2.0, sigma }
}

fn sla(customer: &str, priority: &str, target: f64, deadline_hours: f64) -> SlaSpec {
    SlaSpec { customer: customer.into(), priority: priority.into(), target, deadline_hours }
}

/// One customer, one skill, one priority, one round-the-clock shift.
/// Service times average 30 minutes.
pub fn single_server(rate_per_hour: f64) -> SystemConfig {
    SystemConfig {
        schema_version: SCHEMA_VERSION,
        w_max: 3,
        queue_capacity: 1000,
        truncation_minutes: 10_000.0,
        arrival_cap_per_hour: 10_000,
        skills: vec!["general".into()],
        priorities: vec!["P1".into()],
        shifts: vec![shift("always", 0, 24)],
        customers: vec![CustomerSpec {
            id: "solo".into(),
            name: None,
            sla_exempt: false,
            arrivals: ArrivalProfile::Flat(rate_per_hour),
            mix: vec![mix("P1", "general", 1.0)],
        }],
        service_times: vec![service("P1", "general", 30.0, 0.2)],
        sla: vec![sla("solo", "P1", 0.9, 8.0)],
    }
}

/// Two 12-hour shifts, two skills (low, high), two priorities, one SLA-bound
/// customer plus internal work. `w_max = 5`, so the lattice has 1296 points.
pub fn two_by_two() -> SystemConfig {
    SystemConfig {
        schema_version: SCHEMA_VERSION,
        w_max: 5,
        queue_capacity: 500,
        truncation_minutes: 2_000.0,
        arrival_cap_per_hour: 1_000,
        skills: vec!["low".into(), "high".into()],
        priorities: vec!["P1".into(), "P2".into()],
        shifts: vec![shift("day", 6, 18), ShiftSpec {
            id: "night".into(),
            windows: vec![
                ShiftWindow { days: all_days(), start_hour: 0, end_hour: 6 },
                ShiftWindow { days: all_days(), start_hour: 18, end_hour: 24 },
            ],
        }],
        customers: vec![
            CustomerSpec {
                id: "acme".into(),
                name: Some("Acme Corp".into()),
                sla_exempt: false,
                arrivals: ArrivalProfile::Flat(0.5),
                mix: vec![mix("P1", "low", 0.2), mix("P1", "high", 0.1), mix("P2", "low", 0.5), mix("P2", "high", 0.2)],
            },
            CustomerSpec {
                id: "internal".into(),
                name: None,
                sla_exempt: true,
                arrivals: ArrivalProfile::Flat(0.15),
                mix: vec![mix("P2", "low", 1.0)],
            },
        ],
        service_times: vec![
            service("P1", "low", 50.0, 0.5),
            service("P1", "high", 80.0, 0.5),
            service("P2", "low", 60.0, 0.5),
            service("P2", "high", 90.0, 0.5),
        ],
        sla: vec![sla("acme", "P1", 0.9, 4.0), sla("acme", "P2", 0.9, 12.0)],
    }
}

/// Hourly profile with `day` SRs/hour between 06:00 and 18:00 and `night`
/// otherwise.
pub fn day_night_profile(day: f64, night: f64) -> Vec<f64> {
    (0..super::HOURS_PER_WEEK).map(|h| if (6..18).contains(&(h % 24)) { day } else { night }).collect()
}

/// Three 8-hour shifts, three skills and four priorities, two customers with
/// weekday/weekend patterns. Used for workload-weight checks.
pub fn three_shift() -> SystemConfig {
    let weekday_heavy: Vec<f64> = (0..super::HOURS_PER_WEEK)
        .map(|h| {
            let (day, hour) = (h / 24, h % 24);
            let base = if day < 5 { 2.0 } else { 0.5 };
            if (8..17).contains(&hour) { base * 2.0 } else { base }
        })
        .collect();
    let mut cfg = SystemConfig {
        schema_version: SCHEMA_VERSION,
        w_max: 8,
        queue_capacity: 2000,
        truncation_minutes: 5_000.0,
        arrival_cap_per_hour: 1_000,
        skills: vec!["low".into(), "medium".into(), "high".into()],
        priorities: vec!["P1".into(), "P2".into(), "P3".into(), "P4".into()],
        shifts: vec![
            shift("S1", 0, 8),
            shift("S2", 8, 16),
            ShiftSpec {
                id: "S3".into(),
                windows: vec![
                    ShiftWindow { days: all_days(), start_hour: 16, end_hour: 24 },
                    // overlaps S2 on weekdays late afternoon
                    ShiftWindow { days: vec![0, 1, 2, 3, 4], start_hour: 14, end_hour: 16 },
                ],
            },
        ],
        customers: vec![
            CustomerSpec {
                id: "bossy".into(),
                name: Some("Bossy Corp".into()),
                sla_exempt: false,
                arrivals: ArrivalProfile::Hourly(weekday_heavy),
                mix: vec![mix("P1", "high", 0.1), mix("P2", "medium", 0.3), mix("P3", "low", 0.4), mix("P4", "low", 0.2)],
            },
            CustomerSpec {
                id: "cool".into(),
                name: Some("Cool Inc".into()),
                sla_exempt: false,
                arrivals: ArrivalProfile::Flat(1.0),
                mix: vec![mix("P1", "medium", 0.2), mix("P2", "high", 0.2), mix("P3", "medium", 0.3), mix("P4", "low", 0.3)],
            },
        ],
        service_times: Vec::new(),
        sla: vec![
            sla("bossy", "P1", 0.95, 4.0),
            sla("bossy", "P2", 0.95, 8.0),
            sla("bossy", "P3", 1.0, 24.0),
            sla("bossy", "P4", 1.0, 18.0),
            sla("cool", "P1", 0.89, 5.0),
            sla("cool", "P2", 0.98, 12.0),
            sla("cool", "P3", 0.95, 48.0),
            sla("cool", "P4", 0.95, 144.0),
        ],
    };
    let means = [[56.0, 60.0, 79.0], [56.0, 60.0, 79.0], [50.0, 40.0, 64.0], [45.0, 40.0, 44.0]];
    for (p, row) in means.iter().enumerate() {
        for (k, &m) in row.iter().enumerate() {
            cfg.service_times.push(service(&cfg.priorities[p].clone(), &cfg.skills[k].clone(), m, 0.6));
        }
    }
    cfg
}
