//! Scenario files: a TOML document per case, parsed and validated into a
//! [`Scenario`] with every duration converted to time steps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deployment::{DeploymentPlan, Era, InitialRetirement};
use crate::exchange::Commodity;
use crate::facilities::{Stream, StreamMap, Throughput};
use crate::material::{Isotope, Mass, Recipe, SimClock};
use crate::reactor::ReactorSpec;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), message: message.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    MI,
    MF,
    QI,
    QF,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Paradigm {
    Individual,
    Fleet,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::MI, Case::MF, Case::QI, Case::QF];

    pub fn dt_months(self) -> u32 {
        match self {
            Case::MI | Case::MF => 1,
            Case::QI | Case::QF => 3,
        }
    }

    pub fn paradigm(self) -> Paradigm {
        match self {
            Case::MI | Case::QI => Paradigm::Individual,
            Case::MF | Case::QF => Paradigm::Fleet,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Case::MI => "MI",
            Case::MF => "MF",
            Case::QI => "QI",
            Case::QF => "QF",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Case::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown case `{s}`"))
    }
}

// ---- file schema ---------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub simulation: SimulationSection,
    pub recipes: BTreeMap<String, BTreeMap<String, f64>>,
    pub reactors: BTreeMap<String, ReactorSection>,
    pub initial_fleet: InitialFleetSection,
    pub deployment: DeploymentSection,
    pub facilities: FacilitiesSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub case: Case,
    pub dt_months: u32,
    pub duration_months: u64,
    #[serde(default)]
    pub fuel_sharing_preference: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactorSection {
    pub fresh_fuel: Commodity,
    pub spent_fuel: Commodity,
    pub fresh_recipe: String,
    pub spent_recipe: String,
    pub batch_kg: f64,
    pub batches_per_core: u32,
    pub cycle_months: u64,
    pub outage_months: u64,
    pub power_mwe: f64,
    pub lifetime_months: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialFleetSection {
    pub reactor_type: String,
    pub units: u32,
    pub retire_start_month: u64,
    pub retire_span_months: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentSection {
    pub build_period_months: u64,
    pub base_capacity_mwe: f64,
    pub annual_growth: f64,
    pub eras: Vec<EraSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EraSection {
    pub reactor_type: String,
    pub from_month: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_month: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacilitiesSection {
    pub cooling_months: u64,
    pub streams: StreamsSection,
    pub sources: Vec<SourceSection>,
    pub storage: Vec<StorageSection>,
    pub separations: Vec<SeparationsSection>,
    pub fabrication: FabricationSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamsSection {
    pub fissile: Vec<String>,
    pub uranium: Vec<String>,
    pub waste: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub name: String,
    pub commodity: Commodity,
    pub recipe: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSection {
    pub name: String,
    pub commodity: Commodity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationsSection {
    pub name: String,
    pub feed: Commodity,
    /// Omitted means unlimited throughput.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<Vec<CapacityStep>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityStep {
    pub from_month: u64,
    pub mthm_per_year: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricationSection {
    pub name: String,
    pub product: Commodity,
    pub target_recipe: String,
    pub du_source: String,
}

// ---- validated scenario --------------------------------------------------

#[derive(Clone, Debug)]
pub struct SeparationsConfig {
    pub name: String,
    pub feed: Commodity,
    pub throughput: Throughput,
}

#[derive(Clone, Debug)]
pub struct FacilityConfig {
    pub residence_steps: u64,
    pub streams: StreamMap,
    pub sources: Vec<(String, Commodity, Recipe)>,
    pub storage: Vec<(String, Commodity)>,
    pub separations: Vec<SeparationsConfig>,
    pub fabrication_name: String,
    pub fabrication_product: Commodity,
    pub fabrication_target: Recipe,
    pub fissile_fraction: f64,
    pub du_source: String,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub case: Case,
    pub clock: SimClock,
    pub fuel_sharing_preference: bool,
    pub seed: u64,
    pub recipes: BTreeMap<String, Recipe>,
    pub reactor_types: BTreeMap<String, ReactorSpec>,
    pub initial_type: String,
    pub deployment: DeploymentPlan,
    pub facilities: FacilityConfig,
    file: ScenarioFile,
}

impl Scenario {
    pub fn paradigm(&self) -> Paradigm {
        self.case.paradigm()
    }

    pub fn dt(&self) -> u32 {
        self.clock.dt()
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn with_fuel_sharing(mut self, on: bool) -> Self {
        self.fuel_sharing_preference = on;
        self.file.simulation.fuel_sharing_preference = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.file.simulation.seed = seed;
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("scenario schema serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let sim = &file.simulation;
        if sim.dt_months != sim.case.dt_months() {
            return Err(invalid(
                "simulation.dt_months",
                format!("case {} requires a {}-month step, got {}", sim.case, sim.case.dt_months(), sim.dt_months),
            ));
        }
        let clock = SimClock::new(sim.dt_months, sim.duration_months).map_err(|e| invalid("simulation", e))?;
        let steps = |path: String, months: u64| clock.steps("value", months).map_err(|e| invalid(path, e));

        let mut recipes = BTreeMap::new();
        for (name, fractions) in &file.recipes {
            let mut pairs = Vec::new();
            for (iso, f) in fractions {
                let iso = Isotope::from_str(iso).map_err(|e| invalid(format!("recipes.{name}.{iso}"), e))?;
                pairs.push((iso, *f));
            }
            let recipe = Recipe::new(name.clone(), pairs).map_err(|e| invalid(format!("recipes.{name}"), e))?;
            recipes.insert(name.clone(), recipe);
        }
        let recipe = |path: String, name: &str| {
            recipes.get(name).cloned().ok_or_else(|| invalid(path, format!("unknown recipe `{name}`")))
        };

        let mut reactor_types = BTreeMap::new();
        for (name, r) in &file.reactors {
            let at = |field: &str| format!("reactors.{name}.{field}");
            if !(r.batch_kg > 0.0) {
                return Err(invalid(at("batch_kg"), "must be positive"));
            }
            if r.batches_per_core == 0 {
                return Err(invalid(at("batches_per_core"), "must be at least 1"));
            }
            if r.cycle_months == 0 {
                return Err(invalid(at("cycle_months"), "must be positive"));
            }
            if !(r.power_mwe >= 0.0) {
                return Err(invalid(at("power_mwe"), "must be non-negative"));
            }
            let spec = ReactorSpec {
                name: name.clone(),
                fresh_commodity: r.fresh_fuel,
                spent_commodity: r.spent_fuel,
                batch: Mass::from_kg(r.batch_kg),
                batches_per_core: r.batches_per_core,
                cycle_steps: steps(at("cycle_months"), r.cycle_months)?,
                outage_steps: steps(at("outage_months"), r.outage_months)?,
                power_mwe: r.power_mwe,
                lifetime_steps: steps(at("lifetime_months"), r.lifetime_months)?,
                fresh_recipe: recipe(at("fresh_recipe"), &r.fresh_recipe)?,
                spent_recipe: recipe(at("spent_recipe"), &r.spent_recipe)?,
            };
            reactor_types.insert(name.clone(), spec);
        }
        let known_type = |path: &str, ty: &str| {
            if reactor_types.contains_key(ty) {
                Ok(())
            } else {
                Err(invalid(path, format!("unknown reactor type `{ty}`")))
            }
        };

        let init = &file.initial_fleet;
        known_type("initial_fleet.reactor_type", &init.reactor_type)?;
        steps("initial_fleet.retire_start_month".into(), init.retire_start_month)?;

        let dep = &file.deployment;
        steps("deployment.build_period_months".into(), dep.build_period_months)?;
        if dep.build_period_months == 0 {
            return Err(invalid("deployment.build_period_months", "must be positive"));
        }
        let mut eras = Vec::new();
        for (i, e) in dep.eras.iter().enumerate() {
            known_type(&format!("deployment.eras[{i}].reactor_type"), &e.reactor_type)?;
            steps(format!("deployment.eras[{i}].from_month"), e.from_month)?;
            if let Some(u) = e.until_month {
                steps(format!("deployment.eras[{i}].until_month"), u)?;
            }
            eras.push(Era { reactor_type: e.reactor_type.clone(), from_month: e.from_month, until_month: e.until_month });
        }
        let deployment = DeploymentPlan {
            build_period_months: dep.build_period_months,
            base_capacity_mwe: dep.base_capacity_mwe,
            annual_growth: dep.annual_growth,
            eras,
            initial: InitialRetirement {
                units: init.units,
                start_month: init.retire_start_month,
                span_months: init.retire_span_months,
            },
            unit_power_mwe: reactor_types.iter().map(|(k, s)| (k.clone(), s.effective_power_mwe())).collect(),
        };

        let fac = &file.facilities;
        let residence_steps = steps("facilities.cooling_months".into(), fac.cooling_months)?;
        let streams = parse_streams(&fac.streams)?;
        let mut sources = Vec::new();
        for (i, s) in fac.sources.iter().enumerate() {
            sources.push((s.name.clone(), s.commodity, recipe(format!("facilities.sources[{i}].recipe"), &s.recipe)?));
        }
        let storage = fac.storage.iter().map(|s| (s.name.clone(), s.commodity)).collect();
        let mut separations = Vec::new();
        for (i, s) in fac.separations.iter().enumerate() {
            let throughput = match &s.capacity {
                None => Throughput::Unlimited,
                Some(entries) => {
                    let mut sched = Vec::new();
                    for (j, c) in entries.iter().enumerate() {
                        let path = format!("facilities.separations[{i}].capacity[{j}]");
                        let step = steps(format!("{path}.from_month"), c.from_month)?;
                        if !(c.mthm_per_year >= 0.0) {
                            return Err(invalid(format!("{path}.mthm_per_year"), "must be non-negative"));
                        }
                        if sched.last().is_some_and(|(prev, _)| *prev >= step) {
                            return Err(invalid(path, "capacity steps must be in increasing month order"));
                        }
                        sched.push((step, Throughput::per_step(Mass::from_tonnes(c.mthm_per_year), clock.dt())));
                    }
                    Throughput::Schedule(sched)
                }
            };
            separations.push(SeparationsConfig { name: s.name.clone(), feed: s.feed, throughput });
        }
        let fab = &fac.fabrication;
        let target = recipe("facilities.fabrication.target_recipe".into(), &fab.target_recipe)?;
        let fissile_fraction = streams.stream_fraction(&target, Stream::Fissile);
        if !fac.sources.iter().any(|s| s.name == fab.du_source) {
            return Err(invalid("facilities.fabrication.du_source", format!("unknown source `{}`", fab.du_source)));
        }
        let facilities = FacilityConfig {
            residence_steps,
            streams,
            sources,
            storage,
            separations,
            fabrication_name: fab.name.clone(),
            fabrication_product: fab.product,
            fabrication_target: target,
            fissile_fraction,
            du_source: fab.du_source.clone(),
        };

        for (name, spec) in &reactor_types {
            let fresh_supplied = facilities.sources.iter().any(|(_, c, _)| *c == spec.fresh_commodity)
                || facilities.fabrication_product == spec.fresh_commodity;
            if !fresh_supplied {
                return Err(invalid(format!("reactors.{name}.fresh_fuel"), "no facility supplies this commodity"));
            }
            if !facilities.storage.iter().any(|(_, c)| *c == spec.spent_commodity) {
                return Err(invalid(format!("reactors.{name}.spent_fuel"), "no storage accepts this commodity"));
            }
        }

        Ok(Self {
            case: sim.case,
            clock,
            fuel_sharing_preference: sim.fuel_sharing_preference,
            seed: sim.seed,
            recipes,
            reactor_types,
            initial_type: init.reactor_type.clone(),
            deployment,
            facilities,
            file,
        })
    }
}

fn parse_streams(s: &StreamsSection) -> Result<StreamMap, ScenarioError> {
    let mut routes = Vec::new();
    for (list, stream, key) in [
        (&s.fissile, Stream::Fissile, "fissile"),
        (&s.uranium, Stream::Uranium, "uranium"),
        (&s.waste, Stream::Waste, "waste"),
    ] {
        for iso in list {
            let iso = Isotope::from_str(iso).map_err(|e| invalid(format!("facilities.streams.{key}"), e))?;
            routes.push((iso, stream));
        }
    }
    let routes: [(Isotope, Stream); 6] =
        routes.try_into().map_err(|_| invalid("facilities.streams", "every isotope must be routed exactly once"))?;
    StreamMap::new(routes).map_err(|e| invalid("facilities.streams", e))
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_toml_str(&text).map_err(|e| match e {
        ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

const EG23: [(Case, &str); 4] = [
    (Case::MI, include_str!("../scenarios/eg23_MI.toml")),
    (Case::MF, include_str!("../scenarios/eg23_MF.toml")),
    (Case::QI, include_str!("../scenarios/eg23_QI.toml")),
    (Case::QF, include_str!("../scenarios/eg23_QF.toml")),
];

/// Raw text of the bundled scenario files of a suite.
pub fn bundled_sources(suite: &str) -> Result<Vec<(Case, &'static str)>, ScenarioError> {
    match suite {
        "eg23" => Ok(EG23.to_vec()),
        other => Err(ScenarioError::UnknownSuite(other.to_string())),
    }
}

pub fn bundled(suite: &str) -> Result<Vec<Scenario>, ScenarioError> {
    bundled_sources(suite)?.into_iter().map(|(_, text)| Scenario::from_toml_str(text)).collect()
}

pub fn bundled_case(suite: &str, case: Case) -> Result<Scenario, ScenarioError> {
    let (_, text) = bundled_sources(suite)?
        .into_iter()
        .find(|(c, _)| *c == case)
        .ok_or_else(|| ScenarioError::UnknownSuite(format!("{suite}/{case}")))?;
    Scenario::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_mi_is_monthly_individual() {
        let s = bundled_case("eg23", Case::MI).unwrap();
        assert_eq!(s.dt(), 1);
        assert_eq!(s.paradigm(), Paradigm::Individual);
        assert_eq!(s.clock.horizon(), 2400);
        let lwr = &s.reactor_types["lwr"];
        assert_eq!(lwr.core_size(), Mass::from_kg(88_695.0));
        assert_eq!(lwr.effective_power_mwe(), 900.0);
        assert!((s.facilities.fissile_fraction - 0.14).abs() < 1e-12);
    }

    #[test]
    fn quarterly_individual_sfr_is_valid() {
        let s = bundled_case("eg23", Case::QI).unwrap();
        let sfr = &s.reactor_types["sfr"];
        assert_eq!((sfr.cycle_steps, sfr.outage_steps), (4, 1));
        assert_eq!(sfr.effective_power_mwe(), 360.0);
    }

    #[test]
    fn non_divisible_cycle_is_rejected() {
        let text = bundled_sources("eg23").unwrap()[2].1.replace("cycle_months = 12", "cycle_months = 17");
        let err = Scenario::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.starts_with("reactors.sfr.cycle_months"), "{err}");
        assert!(err.contains("not a multiple"), "{err}");
    }

    #[test]
    fn case_and_step_must_agree() {
        let text = bundled_sources("eg23").unwrap()[0].1.replace("dt_months = 1", "dt_months = 3");
        let err = Scenario::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.starts_with("simulation.dt_months"), "{err}");
    }

    #[test]
    fn missing_fields_and_unknown_recipes_are_reported() {
        let text = bundled_sources("eg23").unwrap()[0].1.replace("batch_kg = 8025.0\n", "");
        let err = Scenario::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("batch_kg"), "{err}");

        let text = bundled_sources("eg23").unwrap()[0].1.replace("spent_recipe = \"sfr_spent\"", "spent_recipe = \"nope\"");
        let err = Scenario::from_toml_str(&text).unwrap_err().to_string();
        assert_eq!(err, "reactors.sfr.spent_recipe: unknown recipe `nope`");
    }

    #[test]
    fn round_trips_through_toml() {
        let s = bundled_case("eg23", Case::QF).unwrap().with_fuel_sharing(true);
        let again = Scenario::from_toml_str(&s.to_toml()).unwrap();
        assert_eq!(again.file(), s.file());
        assert!(again.fuel_sharing_preference);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(bundled("eg99"), Err(ScenarioError::UnknownSuite(_))));
    }
}
