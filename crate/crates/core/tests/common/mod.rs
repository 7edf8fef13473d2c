#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tdgnep::cli::{autarky, parse_scenario, Scenario};
use tdgnep::economy::Allocation;
use tdgnep::gnep::{solve, SolveOutcome};

/// Fixtures whose equilibria the acceptance checks look at.
pub const FIXTURES: &[&str] =
    &["cobb2", "cobb2_m1", "bliss_m1", "exchange_m1", "satiated", "two_households", "capacity"];

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.scn"))
}

pub fn scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn solve_fixture(sc: &Scenario) -> (SolveOutcome, Allocation) {
    let model = &sc.model;
    let game = model.to_gnep(model.compute_r()).unwrap();
    let x0 = model.profile(&autarky(model)).unwrap();
    let out = solve(&game, &x0, &sc.solver.schedule).unwrap();
    let alloc = model.allocation(&out.profile).unwrap();
    (out, alloc)
}

pub fn tdgnep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdgnep")).args(args).output().unwrap()
}

/// Value of `key` in a `key = value` report.
pub fn report_value(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(" = ").map(str::to_string))
}

pub fn report_real(text: &str, key: &str) -> f64 {
    report_value(text, key).unwrap_or_else(|| panic!("no `{key}` in report")).parse().unwrap()
}
