//! Build and retirement planning along an exponential capacity curve.

use std::collections::BTreeMap;

/// A reactor type that may be built from `from_month` until (excluding)
/// `until_month`.
#[derive(Clone, Debug, PartialEq)]
pub struct Era {
    pub reactor_type: String,
    pub from_month: u64,
    pub until_month: Option<u64>,
}

/// Uniformly staggered retirement of the fleet present at the start.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialRetirement {
    pub units: u32,
    pub start_month: u64,
    pub span_months: u64,
}

impl InitialRetirement {
    /// Retirement month of initial unit `k` (1-based), snapped to the step grid:
    /// `start + round((k - 1) * span / units / dt) * dt`.
    pub fn month_of(&self, k: u32, dt: u32) -> u64 {
        let num = u64::from(k - 1) * self.span_months;
        let den = u64::from(self.units) * u64::from(dt);
        let slots = (2 * num + den) / (2 * den);
        self.start_month + slots * u64::from(dt)
    }

    /// Number of initial units retiring exactly at `month`.
    pub fn retiring_at(&self, month: u64, dt: u32) -> u32 {
        (1..=self.units).filter(|&k| self.month_of(k, dt) == month).count() as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOrder {
    pub reactor_type: String,
    pub units: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeploymentPlan {
    pub build_period_months: u64,
    pub base_capacity_mwe: f64,
    pub annual_growth: f64,
    pub eras: Vec<Era>,
    pub initial: InitialRetirement,
    /// Capacity credited per installed unit of each type.
    pub unit_power_mwe: BTreeMap<String, f64>,
}

impl DeploymentPlan {
    pub fn target_capacity(&self, month: u64) -> f64 {
        self.base_capacity_mwe * (1.0 + self.annual_growth).powf(month as f64 / 12.0)
    }

    pub fn is_build_boundary(&self, month: u64) -> bool {
        month % self.build_period_months == 0
    }

    pub fn available_type(&self, month: u64) -> Option<&str> {
        self.eras
            .iter()
            .find(|e| month >= e.from_month && e.until_month.map_or(true, |u| month < u))
            .map(|e| e.reactor_type.as_str())
    }

    pub fn installed_capacity(&self, installed: &BTreeMap<String, u32>) -> f64 {
        installed
            .iter()
            .map(|(ty, units)| f64::from(*units) * self.unit_power_mwe.get(ty).copied().unwrap_or(0.0))
            .sum()
    }

    /// Units to build at `month` to close the gap to the target curve.
    /// `installed` counts every unit not yet retired, fuelled or not.
    pub fn plan(&self, month: u64, installed: &BTreeMap<String, u32>) -> Option<BuildOrder> {
        if !self.is_build_boundary(month) {
            return None;
        }
        let ty = self.available_type(month)?;
        let unit = *self.unit_power_mwe.get(ty)?;
        let deficit = self.target_capacity(month) - self.installed_capacity(installed);
        if deficit <= 0.0 || unit <= 0.0 {
            return None;
        }
        let units = (deficit / unit - 1e-9).ceil() as u32;
        (units > 0).then(|| BuildOrder { reactor_type: ty.to_string(), units })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> DeploymentPlan {
        DeploymentPlan {
            build_period_months: 21,
            base_capacity_mwe: 90_000.0,
            annual_growth: 0.01,
            eras: vec![
                Era { reactor_type: "lwr".into(), from_month: 0, until_month: Some(420) },
                Era { reactor_type: "sfr".into(), from_month: 420, until_month: None },
            ],
            initial: InitialRetirement { units: 100, start_month: 180, span_months: 480 },
            unit_power_mwe: [("lwr_initial".to_string(), 900.0), ("lwr".into(), 900.0), ("sfr".into(), 360.0)]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn target_curve() {
        let p = plan();
        assert_eq!(p.target_capacity(0), 90_000.0);
        assert!((p.target_capacity(12) - 90_900.0).abs() < 1e-6);
        let y200 = p.target_capacity(2400);
        assert!((y200 / 90_000.0 - 1.01f64.powi(200)).abs() < 1e-9);
        assert!((y200 - 658_000.0).abs() < 1_000.0);
    }

    #[test]
    fn plans_ceiling_of_deficit() {
        let p = plan();
        let month = 441;
        let target = p.target_capacity(month);
        let sfr_units = ((target - 1_000.0) / 360.0).floor() as u32;
        let residual = target - f64::from(sfr_units) * 360.0;
        let installed: BTreeMap<String, u32> = [("sfr".to_string(), sfr_units)].into_iter().collect();
        let order = p.plan(month, &installed).unwrap();
        assert_eq!(order.reactor_type, "sfr");
        assert_eq!(order.units, (residual / 360.0).ceil() as u32);

        let exact: BTreeMap<String, u32> = [("lwr_initial".to_string(), 100)].into_iter().collect();
        assert_eq!(p.plan(0, &exact), None);
        let over: BTreeMap<String, u32> = [("lwr".to_string(), 1_000)].into_iter().collect();
        assert_eq!(p.plan(21, &over), None);
        assert_eq!(p.plan(20, &BTreeMap::new()), None);
    }

    #[test]
    fn deficit_of_1000_mwe_needs_three_sfrs() {
        let mut p = plan();
        p.base_capacity_mwe = 1_000.0;
        p.annual_growth = 0.0;
        let order = p.plan(420, &BTreeMap::new()).unwrap();
        assert_eq!(order, BuildOrder { reactor_type: "sfr".into(), units: 3 });
    }

    #[test]
    fn initial_retirement_stagger() {
        let p = plan();
        assert_eq!(p.initial.month_of(1, 1), 180);
        assert_eq!(p.initial.month_of(100, 1), 655);
        let months: Vec<u64> = (1..=100).map(|k| p.initial.month_of(k, 1)).collect();
        assert!(months.iter().all(|m| (180..=660).contains(m)));
        assert!(months.windows(2).all(|w| w[0] <= w[1]));
        let total: u32 = (0..=700).map(|m| p.initial.retiring_at(m, 1)).sum();
        assert_eq!(total, 100);
        let quarterly: u32 = (0..=700).step_by(3).map(|m| p.initial.retiring_at(m, 3)).sum();
        assert_eq!(quarterly, 100);
        assert_eq!(p.initial.retiring_at(179, 1), 0);
    }

    #[test]
    fn replacement_wave_is_rebuilt() {
        let p = plan();
        let month = 21 * 10;
        let full = (p.target_capacity(month) / 900.0).ceil() as u32;
        let after_wave: BTreeMap<String, u32> = [("lwr".to_string(), full - 5)].into_iter().collect();
        assert_eq!(p.plan(month, &after_wave).unwrap().units, 5);
    }
}
