//! The time-stepping kernel.
//!
//! Each step runs five phases in a fixed order:
//!
//! 1. deployment: retirements, then new builds;
//! 2. facility ticks (storage cooling, separations, fabrication offers),
//!    using inventories held at the start of the step;
//! 3. the exchange: requests, bids, allocation and delivery;
//! 4. reactor ticks, with discharged fuel sent straight to storage;
//! 5. a snapshot of power, flows and inventories.
//!
//! Material made in phase 2 is only offered from the next step's
//! phase 3, so every hop through a facility costs one step.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exchange::{Allocator, Bid, Commodity, ExchangeError, FacilityId, GreedyAllocator, Request};
use crate::facilities::{Fabrication, Separations, Source, Storage};
use crate::fleet::{FleetError, FleetState};
use crate::material::{Isotope, Mass, Material, MaterialError};
use crate::reactor::{EventRecord, ReactorEvent, ReactorSpec, ReactorState};
use crate::scenario::{Paradigm, Scenario};
use crate::tables::{DeploymentRow, EventRow, FlowRow, InventoryRow, PowerRow, ReactorRow, Tables};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("step {t}: mass balance broken, {held} kg held but {expected} kg entered")]
    MassBalance { t: u64, held: Mass, expected: Mass },
    #[error("step {t}: exchange: {source}")]
    Exchange { t: u64, source: ExchangeError },
    #[error("step {t}: {source}")]
    Material { t: u64, source: MaterialError },
    #[error("step {t}: {source}")]
    Fleet { t: u64, source: FleetError },
    #[error("step {t}: {message}")]
    Settlement { t: u64, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Source(usize),
    Storage(usize),
    Separations(usize),
    Fabrication,
    Reactor(usize),
    Fleet(usize),
}

struct Unit {
    ty: usize,
    state: ReactorState,
}

enum Reactors {
    Individual { first_id: FacilityId, units: Vec<Unit>, active: Vec<usize> },
    Fleet(Vec<FleetState>),
}

pub struct Simulation {
    scenario: Scenario,
    types: Vec<ReactorSpec>,
    type_index: BTreeMap<String, usize>,
    sources: Vec<Source>,
    du_source: usize,
    storages: Vec<Storage>,
    storage_for: BTreeMap<Commodity, usize>,
    separations: Vec<Separations>,
    fabrication: Fabrication,
    nodes: BTreeMap<FacilityId, Node>,
    reactors: Reactors,
    next_id: FacilityId,
    overdraw: Mass,
    log: Vec<EventRecord>,
    step_flows: BTreeMap<(String, String, Commodity), Material>,
    tables: Tables,
    t: u64,
}

/// Runs a scenario to its horizon and returns the output tables.
pub fn run(scenario: &Scenario) -> Result<Tables, SimError> {
    let mut sim = Simulation::new(scenario.clone())?;
    while sim.t < sim.scenario.clock.horizon() {
        sim.step()?;
    }
    Ok(sim.finish())
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let fac = &scenario.facilities;
        let mut next_id: FacilityId = 1;
        let mut id = || {
            next_id += 1;
            next_id - 1
        };
        let mut nodes = BTreeMap::new();

        let mut sources = Vec::new();
        for (name, commodity, recipe) in &fac.sources {
            let s = Source::new(id(), name.clone(), *commodity, recipe.clone());
            nodes.insert(s.id, Node::Source(sources.len()));
            sources.push(s);
        }
        let du_source = sources.iter().position(|s| s.name == fac.du_source).expect("validated");
        let mut storages = Vec::new();
        let mut storage_for = BTreeMap::new();
        for (name, commodity) in &fac.storage {
            let s = Storage::new(id(), name.clone(), *commodity, fac.residence_steps);
            nodes.insert(s.id, Node::Storage(storages.len()));
            storage_for.entry(*commodity).or_insert(storages.len());
            storages.push(s);
        }
        let mut separations = Vec::new();
        for cfg in &fac.separations {
            let s = Separations::new(id(), cfg.name.clone(), cfg.feed, cfg.throughput.clone(), fac.streams.clone());
            nodes.insert(s.id, Node::Separations(separations.len()));
            separations.push(s);
        }
        let fabrication =
            Fabrication::new(id(), fac.fabrication_name.clone(), fac.fabrication_product, fac.fissile_fraction);
        nodes.insert(fabrication.id, Node::Fabrication);

        let types: Vec<ReactorSpec> = scenario.reactor_types.values().cloned().collect();
        let type_index = types.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
        let reactors = match scenario.paradigm() {
            Paradigm::Individual => Reactors::Individual { first_id: next_id, units: Vec::new(), active: Vec::new() },
            Paradigm::Fleet => {
                let fleets: Vec<FleetState> = types.iter().map(|s| FleetState::new(id(), s.clone())).collect();
                for (i, f) in fleets.iter().enumerate() {
                    nodes.insert(f.id, Node::Fleet(i));
                }
                Reactors::Fleet(fleets)
            }
        };

        let mut sim = Self {
            scenario,
            types,
            type_index,
            sources,
            du_source,
            storages,
            storage_for,
            separations,
            fabrication,
            nodes,
            reactors,
            next_id,
            overdraw: Mass::ZERO,
            log: Vec::new(),
            step_flows: BTreeMap::new(),
            tables: Tables::default(),
            t: 0,
        };
        sim.place_initial_fleet();
        Ok(sim)
    }

    /// Current step: the next one `step` will run.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn finish(mut self) -> Tables {
        let clock = self.scenario.clock;
        let type_of = |id: FacilityId, reactors: &Reactors, types: &[ReactorSpec]| match reactors {
            Reactors::Individual { first_id, units, .. } => types[units[(id - first_id) as usize].ty].name.clone(),
            Reactors::Fleet(fleets) => fleets.iter().find(|f| f.id == id).expect("fleet id").spec.name.clone(),
        };
        self.tables.events = self
            .log
            .iter()
            .map(|e| EventRow {
                t: e.step,
                month: clock.month_of(e.step),
                reactor: e.reactor,
                reactor_type: type_of(e.reactor, &self.reactors, &self.types),
                event: e.event.kind().to_string(),
                count: e.event.count(),
                kg: e.event.mass(),
            })
            .collect();
        self.tables.reactors = match &self.reactors {
            Reactors::Individual { units, .. } => units
                .iter()
                .map(|u| {
                    let spec = &self.types[u.ty];
                    ReactorRow {
                        reactor: u.state.id,
                        reactor_type: spec.name.clone(),
                        fleet: false,
                        power_mwe: spec.power_mwe,
                        outage_steps: spec.outage_steps,
                        batches_per_core: spec.batches_per_core,
                        commission_step: u.state.commission_step(),
                    }
                })
                .collect(),
            Reactors::Fleet(fleets) => fleets
                .iter()
                .map(|f| ReactorRow {
                    reactor: f.id,
                    reactor_type: f.spec.name.clone(),
                    fleet: true,
                    power_mwe: f.spec.power_mwe,
                    outage_steps: f.spec.outage_steps,
                    batches_per_core: f.spec.batches_per_core,
                    commission_step: 0,
                })
                .collect(),
        };
        self.tables
    }

    fn place_initial_fleet(&mut self) {
        let ty = self.type_index[&self.scenario.initial_type];
        let spec = self.types[ty].clone();
        let plan = self.scenario.deployment.initial.clone();
        let dt = self.scenario.dt();
        let source = self.source_for(spec.fresh_commodity).expect("validated");
        let src_name = self.sources[source].name.clone();
        match &mut self.reactors {
            Reactors::Individual { units, active, .. } => {
                for k in 1..=plan.units {
                    let core: Vec<Material> = (0..spec.batches_per_core).map(|_| self.sources[source].emit(spec.batch)).collect();
                    for b in &core {
                        record_flow(&mut self.step_flows, &src_name, &spec.name, spec.fresh_commodity, b);
                    }
                    let retire_step = plan.month_of(k, dt) / u64::from(dt);
                    let state = ReactorState::preloaded(self.next_id, &spec, 0, retire_step, core, &mut self.log);
                    self.next_id += 1;
                    active.push(units.len());
                    units.push(Unit { ty, state });
                }
            }
            Reactors::Fleet(fleets) => {
                let fleet = &mut fleets[ty];
                fleet.build(plan.units);
                let mut fuel = self.sources[source].emit(fleet.capacity());
                record_flow(&mut self.step_flows, &src_name, &spec.name, spec.fresh_commodity, &fuel);
                fleet.refuel(&mut fuel);
                debug_assert!(fuel.is_empty());
                for k in 1..=plan.units {
                    fleet.schedule_retirement(plan.month_of(k, dt) / u64::from(dt), 1);
                }
            }
        }
        self.push_deployment_row(&spec.name, plan.units, 0);
    }

    fn source_for(&self, commodity: Commodity) -> Option<usize> {
        self.sources.iter().position(|s| s.commodity == commodity)
    }

    fn installed_units(&self) -> BTreeMap<String, u32> {
        let mut out: BTreeMap<String, u32> = self.types.iter().map(|s| (s.name.clone(), 0)).collect();
        match &self.reactors {
            Reactors::Individual { units, active, .. } => {
                for &i in active {
                    *out.get_mut(&self.types[units[i].ty].name).expect("known type") += 1;
                }
            }
            Reactors::Fleet(fleets) => {
                for f in fleets {
                    out.insert(f.spec.name.clone(), f.units());
                }
            }
        }
        out
    }

    fn push_deployment_row(&mut self, ty: &str, built: u32, retired: u32) {
        let installed = self.installed_units()[ty];
        self.tables.deployments.push(DeploymentRow {
            t: self.t,
            month: self.scenario.clock.month_of(self.t),
            reactor_type: ty.to_string(),
            built,
            retired,
            installed,
        });
    }

    fn store_spent(&mut self, ty: usize, spent: Material) {
        if spent.is_empty() {
            return;
        }
        let spec = &self.types[ty];
        let s = self.storage_for[&spec.spent_commodity];
        record_flow(&mut self.step_flows, &spec.name, &self.storages[s].name, spec.spent_commodity, &spent);
        self.storages[s].receive(self.t, spent);
    }

    /// Runs one step.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.deploy()?;
        self.tick_facilities();
        self.exchange()?;
        let generated = self.tick_reactors();
        self.snapshot(generated)
    }

    fn deploy(&mut self) -> Result<(), SimError> {
        let t = self.t;
        let mut retired: BTreeMap<usize, u32> = BTreeMap::new();
        let mut spent = Vec::new();
        match &mut self.reactors {
            Reactors::Individual { units, active, .. } => {
                active.retain(|&i| {
                    let u = &mut units[i];
                    if u.state.retire_step() > t {
                        return true;
                    }
                    spent.push((u.ty, u.state.retire(&self.types[u.ty], t, &mut self.log)));
                    *retired.entry(u.ty).or_default() += 1;
                    false
                });
            }
            Reactors::Fleet(fleets) => {
                for (ty, f) in fleets.iter_mut().enumerate() {
                    let Some(r) = f.retire_due(t).map_err(|source| SimError::Fleet { t, source })? else {
                        continue;
                    };
                    self.log.push(EventRecord { step: t, reactor: f.id, event: ReactorEvent::Retire });
                    if !r.overdraw.is_zero() {
                        self.overdraw += r.overdraw;
                        self.log.push(EventRecord { step: t, reactor: f.id, event: ReactorEvent::RetirementOverdraw(r.overdraw) });
                    }
                    spent.push((ty, r.discharged));
                    retired.insert(ty, r.units);
                }
            }
        }
        for (ty, m) in spent {
            self.store_spent(ty, m);
        }

        let month = self.scenario.clock.month_of(t);
        let order = self.scenario.deployment.plan(month, &self.installed_units());
        let mut built: BTreeMap<usize, u32> = BTreeMap::new();
        if let Some(order) = order {
            let ty = self.type_index[&order.reactor_type];
            let spec = &self.types[ty];
            match &mut self.reactors {
                Reactors::Individual { units, active, .. } => {
                    for _ in 0..order.units {
                        let state = ReactorState::commission(self.next_id, spec, t, &mut self.log);
                        self.next_id += 1;
                        active.push(units.len());
                        units.push(Unit { ty, state });
                    }
                }
                Reactors::Fleet(fleets) => {
                    fleets[ty].build(order.units);
                    fleets[ty].schedule_retirement(t + spec.lifetime_steps, order.units);
                }
            }
            built.insert(ty, order.units);
        }
        let touched: Vec<usize> = retired.keys().chain(built.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        for ty in touched {
            let name = self.types[ty].name.clone();
            self.push_deployment_row(&name, built.get(&ty).copied().unwrap_or(0), retired.get(&ty).copied().unwrap_or(0));
        }
        Ok(())
    }

    fn tick_facilities(&mut self) {
        for s in &mut self.storages {
            s.tick(self.t);
        }
        for s in &mut self.separations {
            s.tick(self.t);
        }
        self.fabrication.tick();
    }

    fn requests(&self) -> Vec<Request> {
        let mut requests = Vec::new();
        let sharing = self.scenario.fuel_sharing_preference;
        match &self.reactors {
            Reactors::Individual { units, active, .. } => {
                for &i in active {
                    let u = &units[i];
                    requests.extend(u.state.request(&self.types[u.ty], sharing));
                }
            }
            Reactors::Fleet(fleets) => requests.extend(fleets.iter().filter_map(FleetState::request)),
        }
        for s in &self.separations {
            let offered: Mass =
                self.storages.iter().filter(|st| st.commodity == s.input_commodity).map(Storage::biddable).sum();
            let want = s.wanted(self.t).map_or(offered, |w| w.min(offered));
            requests.extend(Request::divisible(s.id, s.input_commodity, want).ok());
        }
        let fissile: Mass = self.separations.iter().map(Separations::biddable_fissile).sum();
        requests.extend(Request::divisible(self.fabrication.id, Commodity::SeparatedFissile, fissile).ok());
        requests
    }

    fn bids(&self, requests: &[Request]) -> (Vec<Bid>, BTreeMap<FacilityId, Mass>) {
        let mut bids = Vec::new();
        let mut caps = BTreeMap::new();
        for (i, r) in requests.iter().enumerate() {
            for s in self.sources.iter().filter(|s| s.commodity == r.commodity) {
                bids.push(Bid { supplier: s.id, request: i, available: r.quantity });
            }
            if self.fabrication.output_commodity == r.commodity && !self.fabrication.capacity().is_zero() {
                bids.push(Bid { supplier: self.fabrication.id, request: i, available: self.fabrication.capacity() });
                caps.insert(self.fabrication.id, self.fabrication.capacity());
            }
            for s in self.storages.iter().filter(|s| s.commodity == r.commodity && !s.biddable().is_zero()) {
                bids.push(Bid { supplier: s.id, request: i, available: s.biddable() });
                caps.insert(s.id, s.biddable());
            }
            if r.commodity == Commodity::SeparatedFissile {
                for s in self.separations.iter().filter(|s| !s.biddable_fissile().is_zero()) {
                    bids.push(Bid { supplier: s.id, request: i, available: s.biddable_fissile() });
                    caps.insert(s.id, s.biddable_fissile());
                }
            }
        }
        (bids, caps)
    }

    fn node(&self, id: FacilityId) -> Node {
        if let Some(n) = self.nodes.get(&id) {
            return *n;
        }
        match &self.reactors {
            Reactors::Individual { first_id, .. } => Node::Reactor((id - first_id) as usize),
            Reactors::Fleet(_) => unreachable!("fleet ids are registered"),
        }
    }

    fn name_of(&self, node: Node) -> String {
        match node {
            Node::Source(i) => self.sources[i].name.clone(),
            Node::Storage(i) => self.storages[i].name.clone(),
            Node::Separations(i) => self.separations[i].name.clone(),
            Node::Fabrication => self.fabrication.name.clone(),
            Node::Reactor(i) => match &self.reactors {
                Reactors::Individual { units, .. } => self.types[units[i].ty].name.clone(),
                Reactors::Fleet(_) => unreachable!(),
            },
            Node::Fleet(i) => match &self.reactors {
                Reactors::Fleet(fleets) => fleets[i].spec.name.clone(),
                Reactors::Individual { .. } => unreachable!(),
            },
        }
    }

    fn exchange(&mut self) -> Result<(), SimError> {
        let t = self.t;
        let requests = self.requests();
        if requests.is_empty() {
            return Ok(());
        }
        let (bids, caps) = self.bids(&requests);
        let allocations =
            GreedyAllocator.resolve(&requests, &bids, &caps).map_err(|source| SimError::Exchange { t, source })?;
        let material_err = |source| SimError::Material { t, source };

        for a in allocations {
            let from = self.node(a.supplier);
            let to = self.node(a.requester);
            let material = match from {
                Node::Source(i) => self.sources[i].emit(a.mass),
                Node::Storage(i) => self.storages[i].withdraw(a.mass).map_err(material_err)?,
                Node::Separations(i) => self.separations[i].withdraw_fissile(a.mass).map_err(material_err)?,
                Node::Fabrication => {
                    let made = self.fabrication.fabricate(a.mass, &mut self.sources[self.du_source]);
                    if made.fuel.mass() != a.mass {
                        return Err(SimError::Settlement {
                            t,
                            message: format!("fabrication made {} kg of {} kg allocated", made.fuel.mass(), a.mass),
                        });
                    }
                    if !made.du_used.is_zero() {
                        let du = &self.sources[self.du_source];
                        let du_mat = Material::from_recipe(made.du_used, &du.recipe);
                        record_flow(&mut self.step_flows, &du.name, &self.fabrication.name, du.commodity, &du_mat);
                    }
                    made.fuel
                }
                Node::Reactor(_) | Node::Fleet(_) => {
                    return Err(SimError::Settlement { t, message: "reactors do not supply material".into() })
                }
            };
            let (from_name, to_name) = (self.name_of(from), self.name_of(to));
            record_flow(&mut self.step_flows, &from_name, &to_name, a.commodity, &material);
            match to {
                Node::Reactor(i) => {
                    let Reactors::Individual { units, .. } = &mut self.reactors else { unreachable!() };
                    let u = &mut units[i];
                    u.state.receive(&self.types[u.ty], material, t, &mut self.log);
                }
                Node::Fleet(i) => {
                    let Reactors::Fleet(fleets) = &mut self.reactors else { unreachable!() };
                    let mut material = material;
                    fleets[i].refuel(&mut material);
                    if !material.is_empty() {
                        return Err(SimError::Settlement { t, message: "fleet was sent more fuel than it asked for".into() });
                    }
                }
                Node::Separations(i) => self.separations[i].receive(material),
                Node::Fabrication => self.fabrication.receive_fissile(material),
                Node::Source(_) | Node::Storage(_) => {
                    return Err(SimError::Settlement { t, message: "unexpected requester".into() })
                }
            }
        }
        Ok(())
    }

    fn tick_reactors(&mut self) -> f64 {
        let t = self.t;
        let mut generated = 0.0;
        let mut spent = Vec::new();
        match &mut self.reactors {
            Reactors::Individual { units, active, .. } => {
                for &i in active.iter() {
                    let u = &mut units[i];
                    let spec = &self.types[u.ty];
                    for m in u.state.tick(spec, t, &mut self.log) {
                        spent.push((u.ty, m));
                    }
                    generated += u.state.generated_power(spec);
                }
            }
            Reactors::Fleet(fleets) => {
                for (ty, f) in fleets.iter_mut().enumerate() {
                    generated += f.generated_power();
                    spent.push((ty, f.discharge()));
                }
            }
        }
        for (ty, m) in spent {
            self.store_spent(ty, m);
        }
        generated
    }

    fn snapshot(&mut self, generated: f64) -> Result<(), SimError> {
        let t = self.t;
        let month = self.scenario.clock.month_of(t);
        let installed = self.scenario.deployment.installed_capacity(&self.installed_units());
        self.tables.power.push(PowerRow {
            t,
            month,
            installed_mwe: installed,
            generated_mwe: generated,
            target_mwe: self.scenario.deployment.target_capacity(month),
        });

        for ((from, to, commodity), m) in std::mem::take(&mut self.step_flows) {
            self.tables.flows.push(FlowRow {
                t,
                month,
                from,
                to,
                commodity,
                kg: m.mass(),
                pu239_kg: m.isotope_mass(Isotope::Pu239),
            });
        }

        let mut held = Vec::new();
        for s in &self.storages {
            held.push((s.name.clone(), "stored".to_string(), s.inventory()));
        }
        for s in &self.separations {
            held.push((s.name.clone(), "feed".into(), s.input().clone()));
            held.push((s.name.clone(), "fissile".into(), s.output().fissile.clone()));
            held.push((s.name.clone(), "uranium".into(), s.output().uranium.clone()));
            held.push((s.name.clone(), "waste".into(), s.output().waste.clone()));
        }
        held.push((self.fabrication.name.clone(), "fissile".into(), self.fabrication.fissile().clone()));
        let mut cores: Vec<Material> = vec![Material::empty(); self.types.len()];
        match &self.reactors {
            Reactors::Individual { units, active, .. } => {
                for &i in active {
                    for b in units[i].state.core_material() {
                        cores[units[i].ty].absorb(b.clone());
                    }
                }
            }
            Reactors::Fleet(fleets) => {
                for (ty, f) in fleets.iter().enumerate() {
                    cores[ty] = f.core_material().clone();
                }
            }
        }
        for (ty, core) in cores.into_iter().enumerate() {
            held.push((self.types[ty].name.clone(), "core".into(), core));
        }

        let total: Mass = held.iter().map(|(_, _, m)| m.mass()).sum();
        let entered: Mass = self.sources.iter().map(Source::emitted).sum::<Mass>() + self.overdraw;
        for (facility, holding, m) in held {
            self.tables.inventories.push(InventoryRow {
                t,
                month,
                facility,
                holding,
                kg: m.mass(),
                pu239_kg: m.isotope_mass(Isotope::Pu239),
            });
        }
        if total != entered {
            return Err(SimError::MassBalance { t, held: total, expected: entered });
        }
        self.t += 1;
        Ok(())
    }
}

fn record_flow(
    flows: &mut BTreeMap<(String, String, Commodity), Material>,
    from: &str,
    to: &str,
    commodity: Commodity,
    m: &Material,
) {
    if m.is_empty() {
        return;
    }
    flows.entry((from.to_string(), to.to_string(), commodity)).or_insert_with(Material::empty).absorb(m.clone());
}
