//! Shortage metrics computed from a run's output.
//!
//! For individual reactors the outage power at step `t` sums the rated
//! power of every reactor that is offline past its normal refuelling
//! outage, and the wasted-batch count sums the batches such reactors
//! have received since their current outage began. A reactor that has
//! never had an outage is measured from its commissioning step with no
//! grace period. For fleets the outage power is installed minus
//! generated power and no batches are wasted.
//!
//! Cumulative series are step sums multiplied by the step length, so
//! they are in MWe-months and batch-months whatever the step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exchange::FacilityId;
use crate::material::{Mass, SimClock};
use crate::reactor::{EventRecord, ReactorEvent};
use crate::scenario::{Paradigm, Scenario};
use crate::tables::{Row, Tables};

#[derive(Clone, Debug, PartialEq)]
pub struct ReactorInfo {
    pub id: FacilityId,
    pub power_mwe: f64,
    pub outage_steps: u64,
    pub commission_step: u64,
}

/// Reactor event history grouped per reactor, in log order.
#[derive(Clone, Debug)]
pub struct EventLog {
    reactors: Vec<ReactorInfo>,
    events: BTreeMap<FacilityId, Vec<(u64, ReactorEvent)>>,
    horizon: u64,
}

impl EventLog {
    pub fn new(reactors: Vec<ReactorInfo>, records: &[EventRecord], horizon: u64) -> Self {
        let mut events: BTreeMap<FacilityId, Vec<(u64, ReactorEvent)>> = BTreeMap::new();
        for r in records {
            events.entry(r.reactor).or_default().push((r.step, r.event));
        }
        for list in events.values_mut() {
            list.sort_by_key(|(step, _)| *step);
        }
        Self { reactors, events, horizon }
    }

    /// Rebuilds the log of individually modelled reactors from output tables.
    pub fn from_tables(tables: &Tables, horizon: u64) -> Result<Self, String> {
        let reactors = tables
            .reactors
            .iter()
            .filter(|r| !r.fleet)
            .map(|r| ReactorInfo {
                id: r.reactor,
                power_mwe: r.power_mwe,
                outage_steps: r.outage_steps,
                commission_step: r.commission_step,
            })
            .collect();
        let records = tables
            .events
            .iter()
            .map(|e| {
                ReactorEvent::from_parts(&e.event, e.count, e.kg)
                    .map(|event| EventRecord { step: e.t, reactor: e.reactor, event })
                    .ok_or_else(|| format!("unknown reactor event `{}`", e.event))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(reactors, &records, horizon))
    }

    pub fn reactors(&self) -> &[ReactorInfo] {
        &self.reactors
    }

    pub fn events_of(&self, id: FacilityId) -> &[(u64, ReactorEvent)] {
        self.events.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShortageSeries {
    pub outage_mwe: Vec<f64>,
    pub wasted_batches: Vec<u64>,
}

/// Outage power and wasted batches per step, one sweep per reactor.
pub fn shortage_series(log: &EventLog) -> ShortageSeries {
    let n = log.horizon as usize;
    let mut out = ShortageSeries { outage_mwe: vec![0.0; n], wasted_batches: vec![0; n] };
    for r in &log.reactors {
        let events = log.events_of(r.id);
        let end = events
            .iter()
            .find(|(_, e)| *e == ReactorEvent::Retire)
            .map_or(log.horizon, |(s, _)| *s)
            .min(log.horizon);
        let mut cursor = 0;
        let mut operating = false;
        let mut outage_start: Option<u64> = None;
        let mut received = 0u64;
        for t in r.commission_step..end {
            let (mut outage, mut cycle, mut got) = (false, false, 0u64);
            while cursor < events.len() && events[cursor].0 <= t {
                if events[cursor].0 == t {
                    match events[cursor].1 {
                        ReactorEvent::OutageStart => outage = true,
                        ReactorEvent::CycleStart => cycle = true,
                        ReactorEvent::BatchReceived(k) => got += u64::from(k),
                        _ => {}
                    }
                }
                cursor += 1;
            }
            if outage {
                outage_start = Some(t);
                received = 0;
            }
            received += got;
            if cycle {
                operating = true;
            } else if outage {
                operating = false;
            }
            let gate = outage_start.map_or(r.commission_step, |s| s + r.outage_steps);
            if !operating && t >= gate {
                out.outage_mwe[t as usize] += r.power_mwe;
                out.wasted_batches[t as usize] += received;
            }
        }
    }
    out
}

/// Running sum of a per-step series, scaled to months.
pub fn cumulative(series: &[f64], dt_months: u32) -> Vec<f64> {
    let mut acc = 0.0;
    series
        .iter()
        .map(|x| {
            acc += x * f64::from(dt_months);
            acc
        })
        .collect()
}

/// Generated power relative to the demand curve; `None` where the curve is zero.
pub fn normalized_power(generated: &[f64], curve: &[f64]) -> Vec<Option<f64>> {
    generated.iter().zip(curve).map(|(g, c)| (*c != 0.0).then(|| g / c)).collect()
}

/// Upper bound on the energy fuel sharing could have recovered, in
/// MWe-months, from cumulative wasted batch-months and a reactor's rating.
pub fn fuel_sharing_energy_bound(wasted_batch_months: f64, power_mwe: f64) -> f64 {
    wasted_batch_months * power_mwe
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: u64,
    pub month: u64,
    pub installed_mwe: f64,
    pub generated_mwe: f64,
    pub target_mwe: f64,
    pub normalized_power: Option<f64>,
    pub outage_mwe: f64,
    pub cumulative_outage_mwe_months: f64,
    pub wasted_batches: u64,
    pub cumulative_wasted_batch_months: f64,
    pub pu_inventory_kg: Mass,
    pub pu_withdrawn_kg: Mass,
}

impl Row for MetricsRow {
    const COLUMNS: &'static [&'static str] = &[
        "t",
        "month",
        "installed_mwe",
        "generated_mwe",
        "target_mwe",
        "normalized_power",
        "outage_mwe",
        "cumulative_outage_mwe_months",
        "wasted_batches",
        "cumulative_wasted_batch_months",
        "pu_inventory_kg",
        "pu_withdrawn_kg",
    ];
}

pub const METRICS_CSV: &str = "metrics.csv";

/// Per-step metrics of one run.
pub fn compute(scenario: &Scenario, tables: &Tables) -> Result<Vec<MetricsRow>, String> {
    let clock: SimClock = scenario.clock;
    let n = tables.power.len();
    let shortage = match scenario.paradigm() {
        Paradigm::Individual => shortage_series(&EventLog::from_tables(tables, n as u64)?),
        Paradigm::Fleet => ShortageSeries {
            outage_mwe: tables.power.iter().map(|p| (p.installed_mwe - p.generated_mwe).max(0.0)).collect(),
            wasted_batches: vec![0; n],
        },
    };
    let dt = clock.dt();
    let cum_outage = cumulative(&shortage.outage_mwe, dt);
    let wasted: Vec<f64> = shortage.wasted_batches.iter().map(|w| *w as f64).collect();
    let cum_wasted = cumulative(&wasted, dt);
    let generated: Vec<f64> = tables.power.iter().map(|p| p.generated_mwe).collect();
    let curve: Vec<f64> = tables.power.iter().map(|p| p.target_mwe).collect();
    let normalized = normalized_power(&generated, &curve);

    let fab = &scenario.facilities.fabrication_name;
    let product = scenario.facilities.fabrication_product;
    let mut pu_inventory = vec![Mass::ZERO; n];
    for row in tables.inventories.iter().filter(|r| r.holding == "fissile") {
        pu_inventory[row.t as usize] += row.pu239_kg;
    }
    let mut pu_withdrawn = vec![Mass::ZERO; n];
    for row in tables.flows.iter().filter(|f| &f.from == fab && f.commodity == product) {
        pu_withdrawn[row.t as usize] += row.pu239_kg;
    }

    Ok(tables
        .power
        .iter()
        .enumerate()
        .map(|(i, p)| MetricsRow {
            t: p.t,
            month: p.month,
            installed_mwe: p.installed_mwe,
            generated_mwe: p.generated_mwe,
            target_mwe: p.target_mwe,
            normalized_power: normalized[i],
            outage_mwe: shortage.outage_mwe[i],
            cumulative_outage_mwe_months: cum_outage[i],
            wasted_batches: shortage.wasted_batches[i],
            cumulative_wasted_batch_months: cum_wasted[i],
            pu_inventory_kg: pu_inventory[i],
            pu_withdrawn_kg: pu_withdrawn[i],
        })
        .collect())
}
