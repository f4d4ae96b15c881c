//! Non-reactor facilities: recipe sources, cooling storage, separations
//! and fuel fabrication.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::exchange::{Commodity, FacilityId};
use crate::material::{Isotope, Mass, Material, MaterialError, Recipe, ISOTOPE_COUNT};

/// Emits fresh material of one recipe, without limit unless capped.
#[derive(Clone, Debug)]
pub struct Source {
    pub id: FacilityId,
    pub name: String,
    pub commodity: Commodity,
    pub recipe: Recipe,
    pub capacity: Option<Mass>,
    emitted: Mass,
}

impl Source {
    pub fn new(id: FacilityId, name: impl Into<String>, commodity: Commodity, recipe: Recipe) -> Self {
        Self { id, name: name.into(), commodity, recipe, capacity: None, emitted: Mass::ZERO }
    }

    pub fn emit(&mut self, mass: Mass) -> Material {
        self.emitted += mass;
        Material::from_recipe(mass, &self.recipe)
    }

    /// Cumulative mass emitted since the start of the run.
    pub fn emitted(&self) -> Mass {
        self.emitted
    }
}

/// Holds spent fuel until it has cooled for a minimum number of steps;
/// releases it oldest first.
#[derive(Clone, Debug)]
pub struct Storage {
    pub id: FacilityId,
    pub name: String,
    pub commodity: Commodity,
    pub residence_steps: u64,
    items: VecDeque<(u64, Material)>,
    biddable: Mass,
}

impl Storage {
    pub fn new(id: FacilityId, name: impl Into<String>, commodity: Commodity, residence_steps: u64) -> Self {
        Self { id, name: name.into(), commodity, residence_steps, items: VecDeque::new(), biddable: Mass::ZERO }
    }

    pub fn receive(&mut self, t: u64, material: Material) {
        if material.is_empty() {
            return;
        }
        match self.items.back_mut() {
            Some((arrived, held)) if *arrived == t => held.absorb(material),
            _ => self.items.push_back((t, material)),
        }
    }

    /// Ages the inventory and returns the mass that may be offered at `t`.
    pub fn tick(&mut self, t: u64) -> Mass {
        self.biddable = self
            .items
            .iter()
            .take_while(|(arrived, _)| t >= arrived + self.residence_steps)
            .map(|(_, m)| m.mass())
            .sum();
        self.biddable
    }

    pub fn biddable(&self) -> Mass {
        self.biddable
    }

    /// Removes `mass` of cooled material, oldest first.
    pub fn withdraw(&mut self, mass: Mass) -> Result<Material, MaterialError> {
        if mass > self.biddable {
            return Err(MaterialError::InsufficientMass { requested: mass, available: self.biddable });
        }
        let mut out = Material::empty();
        let mut need = mass;
        while !need.is_zero() {
            let (_, front) = self.items.front_mut().expect("biddable mass is held");
            if front.mass() <= need {
                need = need.saturating_sub(front.mass());
                out.absorb(self.items.pop_front().expect("front exists").1);
            } else {
                out.absorb(front.extract(need)?);
                need = Mass::ZERO;
            }
        }
        self.biddable = self.biddable.saturating_sub(mass);
        Ok(out)
    }

    pub fn inventory(&self) -> Material {
        self.items.iter().fold(Material::empty(), |acc, (_, m)| acc.mix(m))
    }

    pub fn inventory_mass(&self) -> Mass {
        self.items.iter().map(|(_, m)| m.mass()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Fissile,
    Uranium,
    Waste,
}

/// Which output stream each isotope is routed to by separations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamMap([Stream; ISOTOPE_COUNT]);

impl StreamMap {
    pub fn new(routes: [(Isotope, Stream); ISOTOPE_COUNT]) -> Result<Self, String> {
        let mut out: [Option<Stream>; ISOTOPE_COUNT] = [None; ISOTOPE_COUNT];
        for (iso, s) in routes {
            if out[iso.index()].replace(s).is_some() {
                return Err(format!("isotope {iso} routed twice"));
            }
        }
        let mut map = [Stream::Waste; ISOTOPE_COUNT];
        for iso in Isotope::ALL {
            map[iso.index()] = out[iso.index()].ok_or_else(|| format!("isotope {iso} has no stream"))?;
        }
        Ok(Self(map))
    }

    pub fn stream(&self, iso: Isotope) -> Stream {
        self.0[iso.index()]
    }

    /// Mass fraction of a recipe that belongs to `stream`.
    pub fn stream_fraction(&self, recipe: &Recipe, stream: Stream) -> f64 {
        Isotope::ALL.iter().filter(|i| self.stream(**i) == stream).map(|i| recipe.fraction(*i)).sum()
    }
}

impl Default for StreamMap {
    /// Pu and Am to the fissile stream, U to the uranium stream, the rest to waste.
    fn default() -> Self {
        Self([Stream::Uranium, Stream::Uranium, Stream::Fissile, Stream::Fissile, Stream::Waste, Stream::Waste])
    }
}

/// Per-step processing limit, possibly changing over time.
#[derive(Clone, Debug, PartialEq)]
pub enum Throughput {
    Unlimited,
    /// `(from_step, per_step_cap)` entries in ascending step order; zero
    /// before the first entry.
    Schedule(Vec<(u64, Mass)>),
}

impl Throughput {
    /// Cap at step `t`; `None` means unlimited.
    pub fn cap_at(&self, t: u64) -> Option<Mass> {
        match self {
            Throughput::Unlimited => None,
            Throughput::Schedule(entries) => {
                Some(entries.iter().take_while(|(from, _)| *from <= t).last().map_or(Mass::ZERO, |(_, cap)| *cap))
            }
        }
    }

    /// Converts an annual rate to a per-step cap, rounding down so that a
    /// year of steps never exceeds the annual figure.
    pub fn per_step(annual: Mass, dt_months: u32) -> Mass {
        Mass::from_mg(annual.mg() * u64::from(dt_months) / 12)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamOutput {
    pub fissile: Material,
    pub uranium: Material,
    pub waste: Material,
}

#[derive(Clone, Debug)]
pub struct Separations {
    pub id: FacilityId,
    pub name: String,
    pub input_commodity: Commodity,
    pub throughput: Throughput,
    pub streams: StreamMap,
    input: Material,
    output: StreamOutput,
    biddable_fissile: Mass,
    processed_last: Mass,
}

impl Separations {
    pub fn new(
        id: FacilityId,
        name: impl Into<String>,
        input_commodity: Commodity,
        throughput: Throughput,
        streams: StreamMap,
    ) -> Self {
        Self {
            id,
            name: name.into(),
            input_commodity,
            throughput,
            streams,
            input: Material::empty(),
            output: StreamOutput::default(),
            biddable_fissile: Mass::ZERO,
            processed_last: Mass::ZERO,
        }
    }

    pub fn receive(&mut self, material: Material) {
        self.input.absorb(material);
    }

    /// How much more input it will accept for processing next step;
    /// `None` means no limit.
    pub fn wanted(&self, t: u64) -> Option<Mass> {
        self.throughput.cap_at(t).map(|cap| cap.saturating_sub(self.input.mass()))
    }

    /// Processes up to this step's cap of buffered input. Fissile output
    /// held before processing stays the only fissile biddable this step.
    pub fn tick(&mut self, t: u64) -> StreamOutput {
        self.biddable_fissile = self.output.fissile.mass();
        let amount = match self.throughput.cap_at(t) {
            Some(cap) => cap.min(self.input.mass()),
            None => self.input.mass(),
        };
        self.processed_last = amount;
        let mut feed = self.input.extract(amount).expect("bounded by input");
        let streams = &self.streams;
        let produced = StreamOutput {
            fissile: feed.partition(|i| streams.stream(i) == Stream::Fissile),
            uranium: feed.partition(|i| streams.stream(i) == Stream::Uranium),
            waste: feed.drain(),
        };
        self.output.fissile.absorb(produced.fissile.clone());
        self.output.uranium.absorb(produced.uranium.clone());
        self.output.waste.absorb(produced.waste.clone());
        produced
    }

    pub fn processed_last(&self) -> Mass {
        self.processed_last
    }

    pub fn biddable_fissile(&self) -> Mass {
        self.biddable_fissile
    }

    pub fn withdraw_fissile(&mut self, mass: Mass) -> Result<Material, MaterialError> {
        if mass > self.biddable_fissile {
            return Err(MaterialError::InsufficientMass { requested: mass, available: self.biddable_fissile });
        }
        self.biddable_fissile = self.biddable_fissile.saturating_sub(mass);
        self.output.fissile.extract(mass)
    }

    pub fn input(&self) -> &Material {
        &self.input
    }

    pub fn output(&self) -> &StreamOutput {
        &self.output
    }
}

/// Result of one fabrication call.
#[derive(Clone, Debug, PartialEq)]
pub struct Fabricated {
    pub fuel: Material,
    pub fissile_used: Mass,
    pub du_used: Mass,
}

/// Blends separated fissile material with depleted uranium to the
/// target recipe's fissile-stream fraction.
#[derive(Clone, Debug)]
pub struct Fabrication {
    pub id: FacilityId,
    pub name: String,
    pub output_commodity: Commodity,
    /// Mass fraction of each output drawn from the fissile inventory.
    pub fissile_fraction: f64,
    fissile: Material,
    capacity: Mass,
}

impl Fabrication {
    pub fn new(id: FacilityId, name: impl Into<String>, output_commodity: Commodity, fissile_fraction: f64) -> Self {
        Self {
            id,
            name: name.into(),
            output_commodity,
            fissile_fraction,
            fissile: Material::empty(),
            capacity: Mass::ZERO,
        }
    }

    pub fn receive_fissile(&mut self, material: Material) {
        self.fissile.absorb(material);
    }

    pub fn fissile(&self) -> &Material {
        &self.fissile
    }

    fn max_output(&self, fissile: Mass) -> Mass {
        if self.fissile_fraction <= 0.0 {
            return Mass::MAX;
        }
        // The small offset absorbs division round-off at exact multiples.
        Mass::from_mg((fissile.mg() as f64 / self.fissile_fraction + 1e-6).floor() as u64)
    }

    /// Fixes this step's offer from the fissile inventory held now.
    pub fn tick(&mut self) -> Mass {
        self.capacity = self.max_output(self.fissile.mass());
        self.capacity
    }

    /// Output that may be offered this step.
    pub fn capacity(&self) -> Mass {
        self.capacity
    }

    /// Makes up to `demand` of fuel; less when fissile inventory binds.
    /// DU is drawn from `du` without limit.
    pub fn fabricate(&mut self, demand: Mass, du: &mut Source) -> Fabricated {
        let out = demand.min(self.max_output(self.fissile.mass()));
        let fissile_used =
            Mass::from_mg((out.mg() as f64 * self.fissile_fraction).round() as u64).min(self.fissile.mass()).min(out);
        let du_used = out.saturating_sub(fissile_used);
        let mut fuel = self.fissile.extract(fissile_used).expect("clamped to inventory");
        fuel.absorb(du.emit(du_used));
        self.capacity = self.capacity.saturating_sub(out);
        Fabricated { fuel, fissile_used, du_used }
    }
}
