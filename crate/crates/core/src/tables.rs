//! Per-step output tables and their CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{Commodity, FacilityId};
use crate::material::Mass;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub t: u64,
    pub month: u64,
    pub installed_mwe: f64,
    pub generated_mwe: f64,
    pub target_mwe: f64,
}

/// Material moved between two facilities (or reactor types) in one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub t: u64,
    pub month: u64,
    pub from: String,
    pub to: String,
    pub commodity: Commodity,
    pub kg: Mass,
    pub pu239_kg: Mass,
}

/// Material held at the end of a step. Reactor cores are summed per type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InventoryRow {
    pub t: u64,
    pub month: u64,
    pub facility: String,
    pub holding: String,
    pub kg: Mass,
    pub pu239_kg: Mass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: u64,
    pub month: u64,
    pub reactor: FacilityId,
    pub reactor_type: String,
    pub event: String,
    pub count: u32,
    pub kg: Mass,
}

/// One row per individual reactor, or per fleet in the fleet paradigm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactorRow {
    pub reactor: FacilityId,
    pub reactor_type: String,
    pub fleet: bool,
    pub power_mwe: f64,
    pub outage_steps: u64,
    pub batches_per_core: u32,
    pub commission_step: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentRow {
    pub t: u64,
    pub month: u64,
    pub reactor_type: String,
    pub built: u32,
    pub retired: u32,
    pub installed: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tables {
    pub power: Vec<PowerRow>,
    pub flows: Vec<FlowRow>,
    pub inventories: Vec<InventoryRow>,
    pub events: Vec<EventRow>,
    pub reactors: Vec<ReactorRow>,
    pub deployments: Vec<DeploymentRow>,
}

pub const POWER_CSV: &str = "power.csv";
pub const FLOWS_CSV: &str = "flows.csv";
pub const INVENTORIES_CSV: &str = "inventories.csv";
pub const EVENTS_CSV: &str = "reactor_events.csv";
pub const REACTORS_CSV: &str = "reactors.csv";
pub const DEPLOYMENTS_CSV: &str = "deployments.csv";

impl Tables {
    pub fn write_dir(&self, dir: &Path) -> Result<(), TableError> {
        std::fs::create_dir_all(dir).map_err(|source| TableError::Io { path: dir.display().to_string(), source })?;
        write_csv(&dir.join(POWER_CSV), &self.power)?;
        write_csv(&dir.join(FLOWS_CSV), &self.flows)?;
        write_csv(&dir.join(INVENTORIES_CSV), &self.inventories)?;
        write_csv(&dir.join(EVENTS_CSV), &self.events)?;
        write_csv(&dir.join(REACTORS_CSV), &self.reactors)?;
        write_csv(&dir.join(DEPLOYMENTS_CSV), &self.deployments)
    }

    pub fn read_dir(dir: &Path) -> Result<Self, TableError> {
        Ok(Self {
            power: read_csv(&dir.join(POWER_CSV))?,
            flows: read_csv(&dir.join(FLOWS_CSV))?,
            inventories: read_csv(&dir.join(INVENTORIES_CSV))?,
            events: read_csv(&dir.join(EVENTS_CSV))?,
            reactors: read_csv(&dir.join(REACTORS_CSV))?,
            deployments: read_csv(&dir.join(DEPLOYMENTS_CSV))?,
        })
    }
}

/// Writes rows with a header line. An empty table still gets its header.
pub fn write_csv<T: Row>(path: &Path, rows: &[T]) -> Result<(), TableError> {
    let p = || path.display().to_string();
    let file = File::create(path).map_err(|source| TableError::Io { path: p(), source })?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(T::COLUMNS).map_err(|source| TableError::Csv { path: p(), source })?;
    for row in rows {
        w.serialize(row).map_err(|source| TableError::Csv { path: p(), source })?;
    }
    let mut inner = w.into_inner().map_err(|e| TableError::Io { path: p(), source: e.into_error() })?;
    inner.flush().map_err(|source| TableError::Io { path: p(), source })
}

pub fn read_csv<T: Row>(path: &Path) -> Result<Vec<T>, TableError> {
    let p = || path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|source| TableError::Csv { path: p(), source })?;
    r.deserialize().collect::<Result<_, _>>().map_err(|source| TableError::Csv { path: p(), source })
}

/// A row type with a fixed column order, so empty tables keep a header.
pub trait Row: Serialize + DeserializeOwned {
    const COLUMNS: &'static [&'static str];
}

macro_rules! row {
    ($ty:ty, [$($col:literal),+ $(,)?]) => {
        impl Row for $ty {
            const COLUMNS: &'static [&'static str] = &[$($col),+];
        }
    };
}

row!(PowerRow, ["t", "month", "installed_mwe", "generated_mwe", "target_mwe"]);
row!(FlowRow, ["t", "month", "from", "to", "commodity", "kg", "pu239_kg"]);
row!(InventoryRow, ["t", "month", "facility", "holding", "kg", "pu239_kg"]);
row!(EventRow, ["t", "month", "reactor", "reactor_type", "event", "count", "kg"]);
row!(ReactorRow, ["reactor", "reactor_type", "fleet", "power_mwe", "outage_steps", "batches_per_core", "commission_step"]);
row!(DeploymentRow, ["t", "month", "reactor_type", "built", "retired", "installed"]);
