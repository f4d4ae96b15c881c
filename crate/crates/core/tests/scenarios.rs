mod common;

use common::bundled_file;
use fcsim::scenario::{bundled, parse_scenario, Case, Paradigm, Scenario, ScenarioFile};

/// Blanks out the fields allowed to differ between cases.
fn normalized(mut f: ScenarioFile) -> ScenarioFile {
    f.simulation.case = Case::MI;
    f.simulation.dt_months = 1;
    for ty in ["lwr", "sfr"] {
        let r = f.reactors.get_mut(ty).unwrap();
        r.cycle_months = 0;
        r.outage_months = 0;
        r.power_mwe = 0.0;
    }
    f
}

#[test]
fn bundled_cases_differ_only_in_step_paradigm_and_reactor_table() {
    let base = normalized(bundled_file(Case::MI));
    for case in Case::ALL {
        assert_eq!(normalized(bundled_file(case)), base, "case {case}");
    }
}

#[test]
fn bundled_reactor_parameters_per_case() {
    for case in Case::ALL {
        let s = bundled("eg23").unwrap().into_iter().find(|s| s.case == case).unwrap();
        assert_eq!(s.dt(), case.dt_months());
        let months = |ty: &str| {
            let r = &s.file().reactors[ty];
            (r.cycle_months, r.outage_months, r.power_mwe)
        };
        match case.paradigm() {
            Paradigm::Individual => {
                assert_eq!(months("lwr"), (15, 3, 1080.0));
                assert_eq!(months("sfr"), (12, 3, 450.0));
            }
            Paradigm::Fleet => {
                assert_eq!(months("lwr"), (18, 0, 900.0));
                assert_eq!(months("sfr"), (15, 0, 360.0));
            }
        }
        assert_eq!(months("lwr_initial"), (18, 0, 900.0));
        assert_eq!(s.reactor_types["lwr"].effective_power_mwe(), 900.0);
        assert_eq!(s.reactor_types["sfr"].effective_power_mwe(), 360.0);
    }
}

#[test]
fn parse_from_file_and_report_paths() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("mi.toml");
    std::fs::write(&good, toml::to_string(&bundled_file(Case::MI)).unwrap()).unwrap();
    let s = parse_scenario(&good).unwrap();
    assert_eq!((s.dt(), s.paradigm()), (1, Paradigm::Individual));

    let mut f = bundled_file(Case::QI);
    f.reactors.get_mut("sfr").unwrap().cycle_months = 17;
    let err = Scenario::from_file(f).unwrap_err().to_string();
    assert!(err.starts_with("reactors.sfr.cycle_months:"), "{err}");

    let mut f = bundled_file(Case::QF);
    f.facilities.separations[0].capacity.as_mut().unwrap()[0].from_month = 181;
    let err = Scenario::from_file(f).unwrap_err().to_string();
    assert!(err.starts_with("facilities.separations[0].capacity[0].from_month:"), "{err}");

    let mut f = bundled_file(Case::MF);
    f.recipes.get_mut("du").unwrap().insert("U238".into(), 0.9);
    let err = Scenario::from_file(f).unwrap_err().to_string();
    assert!(err.starts_with("recipes.du:"), "{err}");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[simulation]\ncase = \"MI\"\n").unwrap();
    let err = parse_scenario(&bad).unwrap_err().to_string();
    assert!(err.contains("bad.toml") && err.contains("missing field"), "{err}");
    assert!(parse_scenario(dir.path().join("absent.toml")).is_err());
}
