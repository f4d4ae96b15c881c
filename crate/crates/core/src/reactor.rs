//! Individually modelled reactors: batch cores, refuelling cycles,
//! outages, shortage-delayed starts and retirement.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::exchange::{fuel_sharing_preference, Commodity, FacilityId, Request};
use crate::material::{Mass, Material, Recipe};

/// Static reactor parameters, with durations already converted to steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactorSpec {
    pub name: String,
    pub fresh_commodity: Commodity,
    pub spent_commodity: Commodity,
    pub batch: Mass,
    pub batches_per_core: u32,
    /// Operating steps per cycle, excluding the refuelling outage.
    pub cycle_steps: u64,
    pub outage_steps: u64,
    pub power_mwe: f64,
    pub lifetime_steps: u64,
    pub fresh_recipe: Recipe,
    pub spent_recipe: Recipe,
}

impl ReactorSpec {
    pub fn core_size(&self) -> Mass {
        self.batch.times(u64::from(self.batches_per_core))
    }

    /// Cycle length including the outage.
    pub fn period_steps(&self) -> u64 {
        self.cycle_steps + self.outage_steps
    }

    /// Nameplate power scaled by the fraction of each period spent operating.
    pub fn effective_power_mwe(&self) -> f64 {
        self.power_mwe * self.cycle_steps as f64 / self.period_steps() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReactorEvent {
    Commission,
    CycleStart,
    OutageStart,
    /// First step offline past the normal outage (or at startup) for lack of fuel.
    ShortageWait,
    BatchReceived(u32),
    Discharge(Mass),
    Retire,
    /// Fleet retirement discharged more than the cores held.
    RetirementOverdraw(Mass),
}

impl ReactorEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            ReactorEvent::Commission => "commission",
            ReactorEvent::CycleStart => "cycle_start",
            ReactorEvent::OutageStart => "outage_start",
            ReactorEvent::ShortageWait => "shortage_wait",
            ReactorEvent::BatchReceived(_) => "batch_received",
            ReactorEvent::Discharge(_) => "discharge",
            ReactorEvent::Retire => "retire",
            ReactorEvent::RetirementOverdraw(_) => "retirement_overdraw",
        }
    }

    pub fn count(&self) -> u32 {
        match self {
            ReactorEvent::BatchReceived(n) => *n,
            _ => 0,
        }
    }

    pub fn mass(&self) -> Mass {
        match self {
            ReactorEvent::Discharge(m) | ReactorEvent::RetirementOverdraw(m) => *m,
            _ => Mass::ZERO,
        }
    }

    /// Inverse of `kind`/`count`/`mass`, for reading persisted logs.
    pub fn from_parts(kind: &str, count: u32, mass: Mass) -> Option<Self> {
        Some(match kind {
            "commission" => ReactorEvent::Commission,
            "cycle_start" => ReactorEvent::CycleStart,
            "outage_start" => ReactorEvent::OutageStart,
            "shortage_wait" => ReactorEvent::ShortageWait,
            "batch_received" => ReactorEvent::BatchReceived(count),
            "discharge" => ReactorEvent::Discharge(mass),
            "retire" => ReactorEvent::Retire,
            "retirement_overdraw" => ReactorEvent::RetirementOverdraw(mass),
            _ => return None,
        })
    }
}

impl fmt::Display for ReactorEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

impl FromStr for ReactorEvent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReactorEvent::from_parts(s, 0, Mass::ZERO).ok_or_else(|| format!("unknown reactor event `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventRecord {
    pub step: u64,
    pub reactor: FacilityId,
    pub event: ReactorEvent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Commissioned, waiting for a full first core.
    AwaitingFuel,
    Operating { steps_done: u64 },
    /// Refuelling outage that began at `since`; continues past the
    /// normal duration while the core is incomplete.
    Outage { since: u64, announced: bool },
    Retired,
}

#[derive(Clone, Debug)]
pub struct ReactorState {
    pub id: FacilityId,
    phase: Phase,
    core: VecDeque<Material>,
    commission_step: u64,
    retire_step: u64,
    operated: bool,
    waiting: bool,
}

impl ReactorState {
    /// A newly built reactor with an empty core.
    pub fn commission(id: FacilityId, spec: &ReactorSpec, t: u64, log: &mut Vec<EventRecord>) -> Self {
        log.push(EventRecord { step: t, reactor: id, event: ReactorEvent::Commission });
        Self {
            id,
            phase: Phase::AwaitingFuel,
            core: VecDeque::with_capacity(spec.batches_per_core as usize),
            commission_step: t,
            retire_step: t + spec.lifetime_steps,
            operated: false,
            waiting: false,
        }
    }

    /// A reactor that starts with a full core of fresh fuel and an
    /// explicit retirement step.
    pub fn preloaded(
        id: FacilityId,
        spec: &ReactorSpec,
        t: u64,
        retire_step: u64,
        core: Vec<Material>,
        log: &mut Vec<EventRecord>,
    ) -> Self {
        let mut r = Self::commission(id, spec, t, log);
        r.retire_step = retire_step;
        r.core.extend(core);
        r
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_retired(&self) -> bool {
        self.phase == Phase::Retired
    }

    pub fn commission_step(&self) -> u64 {
        self.commission_step
    }

    pub fn retire_step(&self) -> u64 {
        self.retire_step
    }

    pub fn batches_in_core(&self) -> usize {
        self.core.len()
    }

    pub fn core_mass(&self) -> Mass {
        self.core.iter().map(Material::mass).sum()
    }

    pub fn core_material(&self) -> impl Iterator<Item = &Material> {
        self.core.iter()
    }

    /// Whether the reactor produced power on its most recent tick.
    pub fn operated(&self) -> bool {
        self.operated
    }

    pub fn lots_needed(&self, spec: &ReactorSpec) -> u32 {
        if self.is_retired() {
            return 0;
        }
        spec.batches_per_core.saturating_sub(self.core.len() as u32)
    }

    pub fn generated_power(&self, spec: &ReactorSpec) -> f64 {
        if self.operated {
            spec.power_mwe
        } else {
            0.0
        }
    }

    /// Fresh-fuel request for the missing lots, if any.
    pub fn request(&self, spec: &ReactorSpec, fuel_sharing: bool) -> Option<Request> {
        let lots = self.lots_needed(spec);
        if lots == 0 {
            return None;
        }
        let req = Request::lots(self.id, spec.fresh_commodity, spec.batch, lots).ok()?;
        if fuel_sharing {
            let pref = fuel_sharing_preference(req.preference, lots).ok()?;
            Some(req.with_preference(pref))
        } else {
            Some(req)
        }
    }

    /// Loads delivered fresh fuel, one batch per lot.
    pub fn receive(&mut self, spec: &ReactorSpec, mut fuel: Material, t: u64, log: &mut Vec<EventRecord>) {
        let lots = fuel.mass().whole_lots(spec.batch);
        debug_assert_eq!(fuel.mass(), spec.batch.times(lots), "deliveries come in whole batches");
        for i in 0..lots {
            let batch = if i + 1 == lots { fuel.drain() } else { fuel.extract(spec.batch).expect("whole lots") };
            self.core.push_back(batch);
        }
        if lots > 0 {
            log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::BatchReceived(lots as u32) });
        }
    }

    /// Discharges the whole core as spent fuel and retires.
    pub fn retire(&mut self, spec: &ReactorSpec, t: u64, log: &mut Vec<EventRecord>) -> Material {
        self.operated = false;
        if self.is_retired() {
            return Material::empty();
        }
        let mut core = Material::empty();
        for b in self.core.drain(..) {
            core.absorb(b);
        }
        let spent = core.transmute(&spec.spent_recipe);
        log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::Retire });
        if !spent.is_empty() {
            log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::Discharge(spent.mass()) });
        }
        self.phase = Phase::Retired;
        spent
    }

    /// Advances one step. Returns spent fuel discharged this step.
    pub fn tick(&mut self, spec: &ReactorSpec, t: u64, log: &mut Vec<EventRecord>) -> Vec<Material> {
        self.operated = false;
        if self.is_retired() {
            return Vec::new();
        }
        if t >= self.retire_step {
            let spent = self.retire(spec, t, log);
            return if spent.is_empty() { Vec::new() } else { vec![spent] };
        }

        match self.phase {
            Phase::AwaitingFuel => self.try_start(spec, t, log),
            Phase::Outage { since, announced } => {
                if !announced {
                    log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::OutageStart });
                    self.phase = Phase::Outage { since, announced: true };
                }
                if t >= since + spec.outage_steps {
                    self.try_start(spec, t, log);
                }
            }
            Phase::Operating { .. } | Phase::Retired => {}
        }

        let mut discharges = Vec::new();
        if let Phase::Operating { steps_done } = self.phase {
            self.operated = true;
            let steps_done = steps_done + 1;
            if steps_done >= spec.cycle_steps {
                let oldest = self.core.pop_front().expect("operating core is full");
                let spent = oldest.transmute(&spec.spent_recipe);
                log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::Discharge(spent.mass()) });
                discharges.push(spent);
                self.phase = Phase::Outage { since: t + 1, announced: false };
            } else {
                self.phase = Phase::Operating { steps_done };
            }
        }
        discharges
    }

    fn try_start(&mut self, spec: &ReactorSpec, t: u64, log: &mut Vec<EventRecord>) {
        if self.core.len() == spec.batches_per_core as usize {
            log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::CycleStart });
            self.phase = Phase::Operating { steps_done: 0 };
            self.waiting = false;
        } else if !self.waiting {
            log.push(EventRecord { step: t, reactor: self.id, event: ReactorEvent::ShortageWait });
            self.waiting = true;
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::material::Isotope;

    pub(crate) fn spec(batch_kg: f64, n: u32, cycle: u64, outage: u64, power: f64) -> ReactorSpec {
        ReactorSpec {
            name: "test".into(),
            fresh_commodity: Commodity::FreshSfrFuel,
            spent_commodity: Commodity::SpentSfrFuel,
            batch: Mass::from_kg(batch_kg),
            batches_per_core: n,
            cycle_steps: cycle,
            outage_steps: outage,
            power_mwe: power,
            lifetime_steps: 960,
            fresh_recipe: Recipe::new("fresh", [(Isotope::Pu239, 0.14), (Isotope::U238, 0.86)]).unwrap(),
            spent_recipe: Recipe::new("spent", [(Isotope::Pu239, 0.15), (Isotope::U238, 0.85)]).unwrap(),
        }
    }

    fn fresh(spec: &ReactorSpec, lots: u64) -> Material {
        Material::from_recipe(spec.batch.times(lots), &spec.fresh_recipe)
    }

    /// Runs with every request filled in full; returns (power series, discharged masses per step).
    fn run_unconstrained(spec: &ReactorSpec, steps: u64) -> (Vec<f64>, Vec<Mass>) {
        let mut log = Vec::new();
        let mut r = ReactorState::commission(1, spec, 0, &mut log);
        let mut power = Vec::new();
        let mut out = Vec::new();
        for t in 0..steps {
            if let Some(req) = r.request(spec, false) {
                r.receive(spec, Material::from_recipe(req.quantity, &spec.fresh_recipe), t, &mut log);
            }
            let d = r.tick(spec, t, &mut log);
            power.push(r.generated_power(spec));
            out.push(d.iter().map(Material::mass).sum());
        }
        (power, out)
    }

    #[test]
    fn lwr_monthly_discharges_one_batch_every_period() {
        let s = spec(29_565.0, 3, 15, 3, 1080.0);
        let (power, out) = run_unconstrained(&s, 18 * 10);
        let discharges: Vec<usize> = (0..out.len()).filter(|&t| !out[t].is_zero()).collect();
        assert_eq!(discharges, (0..10).map(|k| 14 + 18 * k).collect::<Vec<_>>());
        let total: Mass = out.iter().copied().sum();
        assert_eq!(total.kg() / 180.0, 1642.5);
        assert_eq!(power.iter().filter(|p| **p > 0.0).count(), 150);
    }

    #[test]
    fn sfr_quarterly_rate() {
        let s = spec(8_025.0, 5, 4, 1, 450.0);
        let (_, out) = run_unconstrained(&s, 5 * 12);
        let total: Mass = out.iter().copied().sum();
        assert_eq!(total.kg() / (60.0 * 3.0), 535.0);
    }

    #[test]
    fn zero_outage_reactor_never_idles_with_fuel() {
        let s = spec(29_565.0, 3, 18, 0, 900.0);
        let (power, _) = run_unconstrained(&s, 180);
        assert!(power.iter().all(|p| *p == 900.0));
    }

    #[test]
    fn retirement_discharges_full_core() {
        let s = spec(8_025.0, 5, 12, 3, 450.0);
        let mut log = Vec::new();
        let mut r = ReactorState::preloaded(3, &s, 0, 7, vec![fresh(&s, 1); 5], &mut log);
        for t in 0..7 {
            r.tick(&s, t, &mut log);
        }
        let out = r.tick(&s, 7, &mut log);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mass(), s.core_size());
        assert!(r.is_retired());
        assert_eq!(r.core_mass(), Mass::ZERO);
        assert_eq!(r.lots_needed(&s), 0);
    }

    #[test]
    fn lots_needed_counts_missing_batches() {
        let s = spec(8_025.0, 5, 12, 3, 450.0);
        let mut log = Vec::new();
        let mut r = ReactorState::commission(1, &s, 0, &mut log);
        assert_eq!(r.lots_needed(&s), 5);
        r.receive(&s, fresh(&s, 4), 0, &mut log);
        assert_eq!(r.lots_needed(&s), 1);
        r.receive(&s, fresh(&s, 1), 0, &mut log);
        assert_eq!(r.lots_needed(&s), 0);
        assert!(r.request(&s, false).is_none());
    }

    #[test]
    fn partial_core_never_operates() {
        let s = spec(29_565.0, 3, 15, 3, 1080.0);
        let mut log = Vec::new();
        let mut r = ReactorState::commission(1, &s, 0, &mut log);
        r.receive(&s, fresh(&s, 2), 0, &mut log);
        for t in 0..5 {
            r.tick(&s, t, &mut log);
            assert!(!r.operated());
            assert_eq!(r.generated_power(&s), 0.0);
        }
        let waits = log.iter().filter(|e| e.event == ReactorEvent::ShortageWait).count();
        assert_eq!(waits, 1);
        r.receive(&s, fresh(&s, 1), 5, &mut log);
        r.tick(&s, 5, &mut log);
        assert_eq!(r.generated_power(&s), 1080.0);
    }

    #[test]
    fn sharing_preference_applies_to_requests() {
        let s = spec(8_025.0, 5, 12, 3, 450.0);
        let mut log = Vec::new();
        let r = ReactorState::commission(1, &s, 0, &mut log);
        assert_eq!(r.request(&s, false).unwrap().preference, 1.0);
        assert!(r.request(&s, true).unwrap().preference < 1.0);
    }
}
