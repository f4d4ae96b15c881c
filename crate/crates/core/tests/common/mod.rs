#![allow(dead_code)]

use std::collections::BTreeMap;

use fcsim::metrics::{EventLog, ReactorInfo};
use fcsim::reactor::{EventRecord, ReactorEvent, ReactorSpec, ReactorState};
use fcsim::scenario::{bundled_sources, Case, Scenario, ScenarioFile, SourceSection};
use fcsim::tables::Tables;
use fcsim::{Commodity, Mass, Material};
use rand::seq::SliceRandom;
use rand::Rng;

// ---- brute-force replay of the shortage definitions ----------------------

/// Per-step outage power and wasted batches, evaluated cell by cell from
/// the raw record list.
pub fn oracle(reactors: &[ReactorInfo], records: &[EventRecord], horizon: u64) -> (Vec<f64>, Vec<u64>) {
    let mut power = vec![0.0; horizon as usize];
    let mut wasted = vec![0u64; horizon as usize];
    for t in 0..horizon {
        for r in reactors {
            let mine: Vec<&EventRecord> = records.iter().filter(|e| e.reactor == r.id).collect();
            let retired = mine.iter().any(|e| e.event == ReactorEvent::Retire && e.step <= t);
            if t < r.commission_step || retired {
                continue;
            }
            // Latest on/off transition; at equal steps a start follows an outage.
            let rank = |e: &ReactorEvent| match e {
                ReactorEvent::OutageStart => Some(0),
                ReactorEvent::CycleStart => Some(1),
                _ => None,
            };
            let last = mine
                .iter()
                .filter(|e| e.step <= t)
                .filter_map(|e| rank(&e.event).map(|k| (e.step, k)))
                .max();
            let operating = matches!(last, Some((_, 1)));
            if operating {
                continue;
            }
            let tau = mine.iter().filter(|e| e.event == ReactorEvent::OutageStart && e.step <= t).map(|e| e.step).max();
            let (from, gate) = match tau {
                Some(s) => (s, s + r.outage_steps),
                None => (r.commission_step, r.commission_step),
            };
            if t < gate {
                continue;
            }
            power[t as usize] += r.power_mwe;
            wasted[t as usize] += mine
                .iter()
                .filter(|e| e.step >= from && e.step <= t)
                .map(|e| u64::from(e.event.count()))
                .sum::<u64>();
        }
    }
    (power, wasted)
}

const POWERS: [f64; 4] = [1080.0, 450.0, 900.0, 360.0];

/// A log produced by real reactor state machines fed at random.
pub fn simulated_log<R: Rng>(rng: &mut R) -> (Vec<ReactorInfo>, Vec<EventRecord>, u64) {
    let horizon = rng.gen_range(1..=100);
    let n = rng.gen_range(1..=10);
    let mut log = Vec::new();
    let mut infos = Vec::new();
    let mut units: Vec<(ReactorSpec, ReactorState)> = Vec::new();
    for id in 0..n {
        let spec = ReactorSpec {
            name: "r".into(),
            fresh_commodity: Commodity::FreshSfrFuel,
            spent_commodity: Commodity::SpentSfrFuel,
            batch: Mass::from_kg(10.0),
            batches_per_core: rng.gen_range(1..=5),
            cycle_steps: rng.gen_range(1..=8),
            outage_steps: rng.gen_range(0..=3),
            power_mwe: *POWERS.choose(rng).unwrap(),
            lifetime_steps: rng.gen_range(5..=120),
            fresh_recipe: fcsim::Recipe::new("f", [(fcsim::Isotope::Pu239, 1.0)]).unwrap(),
            spent_recipe: fcsim::Recipe::new("s", [(fcsim::Isotope::FissionProducts, 1.0)]).unwrap(),
        };
        let start = rng.gen_range(0..horizon);
        infos.push(ReactorInfo {
            id,
            power_mwe: spec.power_mwe,
            outage_steps: spec.outage_steps,
            commission_step: start,
        });
        let state = ReactorState::commission(id, &spec, start, &mut log);
        units.push((spec, state));
    }
    let supply_odds = rng.gen_range(0.1..1.0);
    for t in 0..horizon {
        for (spec, state) in units.iter_mut() {
            if state.commission_step() > t || state.is_retired() {
                continue;
            }
            if t >= state.retire_step() {
                state.retire(spec, t, &mut log);
                continue;
            }
            let need = state.lots_needed(spec);
            if need > 0 && rng.gen_bool(supply_odds) {
                let lots = rng.gen_range(1..=need);
                state.receive(spec, Material::from_recipe(spec.batch.times(u64::from(lots)), &spec.fresh_recipe), t, &mut log);
            }
            state.tick(spec, t, &mut log);
        }
    }
    (infos, log, horizon)
}

/// An arbitrary event soup, not necessarily one a reactor could produce.
pub fn random_log<R: Rng>(rng: &mut R) -> (Vec<ReactorInfo>, Vec<EventRecord>, u64) {
    let horizon = rng.gen_range(1..=100);
    let n = rng.gen_range(1..=10);
    let infos: Vec<ReactorInfo> = (0..n)
        .map(|id| ReactorInfo {
            id,
            power_mwe: *POWERS.choose(rng).unwrap(),
            outage_steps: rng.gen_range(0..=3),
            commission_step: rng.gen_range(0..horizon),
        })
        .collect();
    let mut records = Vec::new();
    for _ in 0..rng.gen_range(0..=200) {
        let r = &infos[rng.gen_range(0..infos.len())];
        let step = rng.gen_range(r.commission_step..horizon);
        let event = match rng.gen_range(0..10) {
            0..=2 => ReactorEvent::OutageStart,
            3..=5 => ReactorEvent::CycleStart,
            6..=7 => ReactorEvent::BatchReceived(rng.gen_range(1..=5)),
            8 => ReactorEvent::ShortageWait,
            _ if rng.gen_bool(0.2) => ReactorEvent::Retire,
            _ => ReactorEvent::Discharge(Mass::from_kg(1.0)),
        };
        records.push(EventRecord { step, reactor: r.id, event });
    }
    records.sort_by_key(|e| e.step);
    (infos, records, horizon)
}

pub fn event_log(infos: &[ReactorInfo], records: &[EventRecord], horizon: u64) -> EventLog {
    EventLog::new(infos.to_vec(), records, horizon)
}

// ---- scenario helpers ------------------------------------------------------

pub fn bundled_file(case: Case) -> ScenarioFile {
    let text = bundled_sources("eg23").unwrap().into_iter().find(|(c, _)| *c == case).unwrap().1;
    toml::from_str(text).unwrap()
}

/// `units` reactors of `reactor_type` with unlimited fresh fuel, no
/// builds and no retirements within `months`.
pub fn unconstrained(case: Case, reactor_type: &str, units: u32, months: u64) -> Scenario {
    let mut f = bundled_file(case);
    f.simulation.duration_months = months;
    f.initial_fleet.reactor_type = reactor_type.to_string();
    f.initial_fleet.units = units;
    f.initial_fleet.retire_start_month = 12_000;
    f.deployment.annual_growth = 0.0;
    f.deployment.base_capacity_mwe = 0.0;
    f.facilities.sources.push(SourceSection {
        name: "sfr_fuel_source".into(),
        commodity: Commodity::FreshSfrFuel,
        recipe: "sfr_fresh".into(),
    });
    Scenario::from_file(f).unwrap()
}

/// Checks the heavy-metal balance from written tables alone: at every
/// step, everything held equals everything emitted by sources plus
/// fleet retirement overdraws, exactly.
pub fn csv_balance(tables: &Tables, source_names: &[String]) -> Result<(), String> {
    let steps = tables.power.len();
    let mut entered = vec![Mass::ZERO; steps];
    for f in tables.flows.iter().filter(|f| source_names.contains(&f.from)) {
        entered[f.t as usize] += f.kg;
    }
    for e in tables.events.iter().filter(|e| e.event == "retirement_overdraw") {
        entered[e.t as usize] += e.kg;
    }
    let mut held = vec![Mass::ZERO; steps];
    for i in &tables.inventories {
        held[i.t as usize] += i.kg;
    }
    let mut running = Mass::ZERO;
    for t in 0..steps {
        running += entered[t];
        if running != held[t] {
            return Err(format!("step {t}: held {} kg, entered {} kg", held[t], running));
        }
    }
    Ok(())
}

/// Each logged overdraw equals the full cores retired minus what the
/// fleet's pooled core held at the end of the previous step.
pub fn overdraws_reconcile(tables: &Tables, core_size: &BTreeMap<String, Mass>) -> Result<usize, String> {
    let mut checked = 0;
    for e in tables.events.iter().filter(|e| e.event == "retirement_overdraw") {
        let retired = tables
            .deployments
            .iter()
            .find(|d| d.t == e.t && d.reactor_type == e.reactor_type)
            .map_or(0, |d| d.retired);
        let before = tables
            .inventories
            .iter()
            .find(|i| e.t > 0 && i.t == e.t - 1 && i.facility == e.reactor_type && i.holding == "core")
            .map_or(Mass::ZERO, |i| i.kg);
        let full = core_size[&e.reactor_type].times(u64::from(retired));
        if full.checked_sub(before) != Some(e.kg) {
            return Err(format!("step {}: overdraw {} kg, full cores {} kg, held {} kg", e.t, e.kg, full, before));
        }
        checked += 1;
    }
    Ok(checked)
}
