//! Aggregate reactor fleet with continuous fuel flow.
//!
//! A fleet of `units` identical reactors shares one pooled core
//! inventory. The fraction of the fleet that operates is the pooled fill
//! fraction, spent fuel leaves every step in proportion to it, and fuel
//! is requested just in time to top the pool back up.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exchange::{Commodity, FacilityId, Request};
use crate::material::{Mass, Material};
use crate::reactor::ReactorSpec;

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("cannot retire {requested} units from a fleet of {units}")]
    RetireTooMany { requested: u32, units: u32 },
}

/// Result of retiring units: the full cores discharged, and how much of
/// that exceeded what the pooled core actually held.
#[derive(Clone, Debug, PartialEq)]
pub struct Retirement {
    pub units: u32,
    pub discharged: Material,
    pub overdraw: Mass,
}

#[derive(Clone, Debug)]
pub struct FleetState {
    pub id: FacilityId,
    pub spec: ReactorSpec,
    units: u32,
    core: Material,
    retirements: BTreeMap<u64, u32>,
}

impl FleetState {
    pub fn new(id: FacilityId, spec: ReactorSpec) -> Self {
        Self { id, spec, units: 0, core: Material::empty(), retirements: BTreeMap::new() }
    }

    pub fn units(&self) -> u32 {
        self.units
    }

    pub fn inventory(&self) -> Mass {
        self.core.mass()
    }

    pub fn core_material(&self) -> &Material {
        &self.core
    }

    pub fn capacity(&self) -> Mass {
        self.spec.core_size().times(u64::from(self.units))
    }

    pub fn fill_fraction(&self) -> f64 {
        let cap = self.capacity();
        if cap.is_zero() {
            0.0
        } else {
            self.inventory().mg() as f64 / cap.mg() as f64
        }
    }

    /// Number of units able to operate: `units * inventory / capacity`.
    pub fn n_operating(&self) -> f64 {
        f64::from(self.units) * self.fill_fraction()
    }

    pub fn generated_power(&self) -> f64 {
        self.spec.power_mwe * self.n_operating()
    }

    pub fn installed_power(&self) -> f64 {
        self.spec.power_mwe * f64::from(self.units)
    }

    /// Spent fuel for one step: `(batch / period) * units * inventory / capacity`,
    /// rounded to the milligram and never more than the pool holds.
    pub fn discharge(&mut self) -> Material {
        let cap = self.capacity();
        if cap.is_zero() {
            return Material::empty();
        }
        let num = u128::from(self.spec.batch.mg()) * u128::from(self.units) * u128::from(self.inventory().mg());
        let den = u128::from(self.spec.period_steps()) * u128::from(cap.mg());
        let amount = Mass::from_mg(((num + den / 2) / den) as u64).min(self.inventory());
        let burnt = self.core.extract(amount).expect("clamped to inventory");
        burnt.transmute(&self.spec.spent_recipe)
    }

    pub fn deficit(&self) -> Mass {
        self.capacity().saturating_sub(self.inventory())
    }

    /// Takes as much of `offered` as fits in the pooled core; whatever
    /// does not fit is left in `offered`.
    pub fn refuel(&mut self, offered: &mut Material) -> Mass {
        let take = self.deficit().min(offered.mass());
        let fuel = offered.extract(take).expect("bounded by offered mass");
        self.core.absorb(fuel);
        take
    }

    /// The fleet's fuel request for this step: exactly the empty core space.
    pub fn request(&self) -> Option<Request> {
        Request::divisible(self.id, self.fresh_commodity(), self.deficit()).ok()
    }

    pub fn fresh_commodity(&self) -> Commodity {
        self.spec.fresh_commodity
    }

    /// Adds units with empty cores.
    pub fn build(&mut self, units: u32) {
        self.units += units;
    }

    pub fn schedule_retirement(&mut self, step: u64, units: u32) {
        if units > 0 {
            *self.retirements.entry(step).or_default() += units;
        }
    }

    /// Units scheduled to retire at or before `t` that have not yet retired.
    pub fn due(&self, t: u64) -> u32 {
        self.retirements.range(..=t).map(|(_, u)| *u).sum()
    }

    pub fn retire_due(&mut self, t: u64) -> Result<Option<Retirement>, FleetError> {
        let units = self.due(t);
        if units == 0 {
            return Ok(None);
        }
        let later = self.retirements.split_off(&(t + 1));
        self.retirements = later;
        self.retire(units).map(Some)
    }

    /// Retires units, discharging a full core for each one regardless of
    /// the pool's fill. The pool is drawn down to zero at most; any excess
    /// is reported as `overdraw`.
    pub fn retire(&mut self, units: u32) -> Result<Retirement, FleetError> {
        if units > self.units {
            return Err(FleetError::RetireTooMany { requested: units, units: self.units });
        }
        let full = self.spec.core_size().times(u64::from(units));
        let removed = full.min(self.inventory());
        self.core.extract(removed).expect("bounded by inventory");
        self.units -= units;
        Ok(Retirement {
            units,
            discharged: Material::from_recipe(full, &self.spec.spent_recipe),
            overdraw: full.saturating_sub(removed),
        })
    }
}
