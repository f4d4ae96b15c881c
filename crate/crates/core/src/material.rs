//! Time base, isotopic materials and mass bookkeeping.
//!
//! Masses are held as integer milligrams so that every transfer in a
//! simulation conserves heavy metal exactly. Compositions are mass
//! fractions over a fixed, small isotope set.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MG_PER_KG: u64 = 1_000_000;

/// Tolerance used when validating that composition fractions sum to one.
pub const FRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("insufficient mass: requested {requested} kg from {available} kg")]
    InsufficientMass { requested: Mass, available: Mass },
    #[error("recipe `{name}`: fractions sum to {sum}, expected 1")]
    FractionSum { name: String, sum: f64 },
    #[error("recipe `{name}`: negative or non-finite fraction for {isotope}")]
    BadFraction { name: String, isotope: Isotope },
    #[error("unknown isotope `{0}`")]
    UnknownIsotope(String),
    #[error("invalid mass literal `{0}`")]
    BadMassLiteral(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("time step must be 1 or 3 months, got {0}")]
    UnsupportedStep(u32),
    #[error("{what} of {months} months is not a multiple of the {dt}-month time step")]
    NotDivisible { what: String, months: u64, dt: u32 },
}

/// Discrete simulation clock. `dt` is the step duration in months.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimClock {
    pub t: u64,
    dt: u32,
    horizon: u64,
}

impl SimClock {
    pub fn new(dt_months: u32, duration_months: u64) -> Result<Self, ClockError> {
        if dt_months != 1 && dt_months != 3 {
            return Err(ClockError::UnsupportedStep(dt_months));
        }
        let horizon = steps_for(dt_months, "simulation duration", duration_months)?;
        Ok(Self { t: 0, dt: dt_months, horizon })
    }

    pub fn dt(&self) -> u32 {
        self.dt
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn month(&self) -> u64 {
        self.month_of(self.t)
    }

    pub fn month_of(&self, step: u64) -> u64 {
        step * u64::from(self.dt)
    }

    /// Converts a duration in months to whole steps, rejecting durations
    /// that do not line up with the step size.
    pub fn steps(&self, what: &str, months: u64) -> Result<u64, ClockError> {
        steps_for(self.dt, what, months)
    }

    pub fn at(&self, t: u64) -> Self {
        Self { t, ..*self }
    }
}

fn steps_for(dt: u32, what: &str, months: u64) -> Result<u64, ClockError> {
    if months % u64::from(dt) != 0 {
        return Err(ClockError::NotDivisible { what: what.to_string(), months, dt });
    }
    Ok(months / u64::from(dt))
}

/// Heavy-metal mass, stored in milligrams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mass(u64);

impl Mass {
    pub const ZERO: Mass = Mass(0);
    pub const MAX: Mass = Mass(u64::MAX);

    pub const fn from_mg(mg: u64) -> Self {
        Mass(mg)
    }

    /// Rounds to the nearest milligram; negative and NaN inputs give zero.
    pub fn from_kg(kg: f64) -> Self {
        if kg.is_nan() || kg <= 0.0 {
            return Mass(0);
        }
        Mass((kg * MG_PER_KG as f64).round() as u64)
    }

    pub fn from_tonnes(t: f64) -> Self {
        Self::from_kg(t * 1000.0)
    }

    pub const fn mg(self) -> u64 {
        self.0
    }

    pub fn kg(self) -> f64 {
        self.0 as f64 / MG_PER_KG as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, other: Mass) -> Option<Mass> {
        self.0.checked_sub(other.0).map(Mass)
    }

    pub fn saturating_sub(self, other: Mass) -> Mass {
        Mass(self.0.saturating_sub(other.0))
    }

    pub fn times(self, n: u64) -> Mass {
        Mass(self.0 * n)
    }

    /// Number of whole `lot`s contained in this mass.
    pub fn whole_lots(self, lot: Mass) -> u64 {
        if lot.0 == 0 {
            0
        } else {
            self.0 / lot.0
        }
    }

    /// Largest multiple of `lot` not exceeding this mass.
    pub fn floor_to(self, lot: Mass) -> Mass {
        lot.times(self.whole_lots(lot))
    }
}

impl Add for Mass {
    type Output = Mass;
    fn add(self, rhs: Mass) -> Mass {
        Mass(self.0 + rhs.0)
    }
}

impl AddAssign for Mass {
    fn add_assign(&mut self, rhs: Mass) {
        self.0 += rhs.0;
    }
}

impl Sum for Mass {
    fn sum<I: Iterator<Item = Mass>>(iter: I) -> Mass {
        iter.fold(Mass::ZERO, |a, b| a + b)
    }
}

/// Formats as kilograms with exactly six fractional digits.
impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / MG_PER_KG, self.0 % MG_PER_KG)
    }
}

impl Serialize for Mass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a non-negative decimal kilogram literal exactly (at most six
/// fractional digits).
impl FromStr for Mass {
    type Err = MaterialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MaterialError::BadMassLiteral(s.to_string());
        let s = s.trim();
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() || frac.len() > 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = whole.parse().map_err(|_| bad())?;
        let frac_mg: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().map_err(|_| bad())?
        };
        whole
            .checked_mul(MG_PER_KG)
            .and_then(|w| w.checked_add(frac_mg))
            .map(Mass)
            .ok_or_else(bad)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Isotope {
    U235,
    U238,
    Pu239,
    Am241,
    /// Lumped fission products.
    #[serde(rename = "FP")]
    FissionProducts,
    #[serde(rename = "other")]
    Other,
}

pub const ISOTOPE_COUNT: usize = 6;

impl Isotope {
    pub const ALL: [Isotope; ISOTOPE_COUNT] = [
        Isotope::U235,
        Isotope::U238,
        Isotope::Pu239,
        Isotope::Am241,
        Isotope::FissionProducts,
        Isotope::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Isotope::U235 => "U235",
            Isotope::U238 => "U238",
            Isotope::Pu239 => "Pu239",
            Isotope::Am241 => "Am241",
            Isotope::FissionProducts => "FP",
            Isotope::Other => "other",
        }
    }
}

impl fmt::Display for Isotope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Isotope {
    type Err = MaterialError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Isotope::ALL
            .into_iter()
            .find(|iso| iso.name() == s)
            .ok_or_else(|| MaterialError::UnknownIsotope(s.to_string()))
    }
}

/// A named, fixed composition in mass fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    name: String,
    fractions: [f64; ISOTOPE_COUNT],
}

impl Recipe {
    pub fn new<I>(name: impl Into<String>, fractions: I) -> Result<Self, MaterialError>
    where
        I: IntoIterator<Item = (Isotope, f64)>,
    {
        let name = name.into();
        let mut out = [0.0; ISOTOPE_COUNT];
        for (iso, f) in fractions {
            if !f.is_finite() || f < 0.0 {
                return Err(MaterialError::BadFraction { name, isotope: iso });
            }
            out[iso.index()] += f;
        }
        let sum: f64 = out.iter().sum();
        if (sum - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(MaterialError::FractionSum { name, sum });
        }
        Ok(Self { name, fractions: out })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fraction(&self, iso: Isotope) -> f64 {
        self.fractions[iso.index()]
    }

    pub fn fractions(&self) -> &[f64; ISOTOPE_COUNT] {
        &self.fractions
    }
}

/// A quantity of material: per-isotope masses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Material {
    isotopes: [Mass; ISOTOPE_COUNT],
}

impl Material {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_isotopes(isotopes: [Mass; ISOTOPE_COUNT]) -> Self {
        Self { isotopes }
    }

    /// `mass` of material with the recipe's composition. Isotope masses
    /// are apportioned so that they sum to `mass` exactly.
    pub fn from_recipe(mass: Mass, recipe: &Recipe) -> Self {
        let total: f64 = recipe.fractions.iter().sum();
        let ideal = recipe.fractions.map(|f| mass.mg() as f64 * f / total);
        let mut parts = ideal.map(|x| x.floor() as u64);
        let mut rem: Vec<(usize, f64)> = ideal
            .iter()
            .zip(parts.iter())
            .enumerate()
            .map(|(i, (x, p))| (i, x - *p as f64))
            .collect();
        let assigned: u64 = parts.iter().sum();
        let mut leftover = mass.mg().saturating_sub(assigned);
        rem.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in rem.iter().cycle() {
            if leftover == 0 {
                break;
            }
            if recipe.fractions[*i] > 0.0 {
                parts[*i] += 1;
                leftover -= 1;
            }
        }
        Self { isotopes: parts.map(Mass) }
    }

    pub fn mass(&self) -> Mass {
        self.isotopes.iter().copied().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.mass().is_zero()
    }

    pub fn isotope_mass(&self, iso: Isotope) -> Mass {
        self.isotopes[iso.index()]
    }

    pub fn isotopes(&self) -> &[Mass; ISOTOPE_COUNT] {
        &self.isotopes
    }

    /// Mass fraction of `iso`; zero for empty material.
    pub fn fraction(&self, iso: Isotope) -> f64 {
        let total = self.mass();
        if total.is_zero() {
            0.0
        } else {
            self.isotope_mass(iso).mg() as f64 / total.mg() as f64
        }
    }

    pub fn mix(&self, other: &Material) -> Material {
        let mut out = self.clone();
        out.absorb(other.clone());
        out
    }

    pub fn absorb(&mut self, other: Material) {
        for (a, b) in self.isotopes.iter_mut().zip(other.isotopes) {
            *a += b;
        }
    }

    /// Splits off `take` of this material, both parts keeping the
    /// original composition (to the milligram).
    pub fn split(&self, take: Mass) -> Result<(Material, Material), MaterialError> {
        let mut remainder = self.clone();
        let taken = remainder.extract(take)?;
        Ok((taken, remainder))
    }

    /// Removes `take` from this material and returns it.
    pub fn extract(&mut self, take: Mass) -> Result<Material, MaterialError> {
        let total = self.mass();
        if take > total {
            return Err(MaterialError::InsufficientMass { requested: take, available: total });
        }
        if take == total {
            return Ok(std::mem::take(self));
        }
        let weights = self.isotopes.map(|m| u128::from(m.mg()));
        let taken = apportion(take.mg(), &weights, u128::from(total.mg()));
        for (have, t) in self.isotopes.iter_mut().zip(taken) {
            *have = Mass(have.0 - t);
        }
        Ok(Material { isotopes: taken.map(Mass) })
    }

    /// Takes everything, leaving this material empty.
    pub fn drain(&mut self) -> Material {
        std::mem::take(self)
    }

    /// Same mass, new composition. Used where a facility boundary
    /// substitutes a recipe (fresh fuel in, spent fuel out).
    pub fn transmute(&self, recipe: &Recipe) -> Material {
        Material::from_recipe(self.mass(), recipe)
    }

    /// Splits by isotope: the returned material holds the isotopes for
    /// which `select` is true; `self` keeps the rest.
    pub fn partition(&mut self, select: impl Fn(Isotope) -> bool) -> Material {
        let mut out = Material::empty();
        for iso in Isotope::ALL {
            if select(iso) {
                out.isotopes[iso.index()] = std::mem::take(&mut self.isotopes[iso.index()]);
            }
        }
        out
    }
}

/// Largest-remainder apportionment of `amount` across integer `weights`
/// summing to `total`. Each part is at most its weight and the parts sum
/// to `amount` exactly.
fn apportion(amount: u64, weights: &[u128; ISOTOPE_COUNT], total: u128) -> [u64; ISOTOPE_COUNT] {
    let amount = u128::from(amount);
    let mut parts = [0u64; ISOTOPE_COUNT];
    let mut rems = [(0u128, 0usize); ISOTOPE_COUNT];
    let mut assigned = 0u128;
    for (i, w) in weights.iter().enumerate() {
        let num = w * amount;
        parts[i] = (num / total) as u64;
        rems[i] = (num % total, i);
        assigned += num / total;
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut leftover = amount - assigned;
    for (r, i) in rems {
        if leftover == 0 {
            break;
        }
        if r > 0 {
            parts[i] += 1;
            leftover -= 1;
        }
    }
    debug_assert_eq!(leftover, 0);
    parts
}
