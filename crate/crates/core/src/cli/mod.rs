//! Command-line front end: `solve`, `verify` and `oracle`.

pub mod report;
pub mod scenario;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::economy::{Allocation, EconomyModel, PriceSet};
use crate::error::{Error, Result};
use crate::fnspace::Trajectory;
use crate::gnep::solve;
use crate::verify::{brute_force_oracle, certify, OracleOptions, DEFAULT_ORACLE_BUDGET};
use report::Report;
pub use scenario::{parse_scenario, serialize_scenario, Document, OutputSettings, Scenario, SolverSettings};
pub use table::{read_table, write_table};

pub const EXIT_ACCEPTED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
/// The solver converged or a profile was read, but the certificate was
/// rejected.
pub const EXIT_REJECTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tdgnep", version, about = "Solve and certify time-dependent abstract economies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and certify the result.
    Solve(Common),
    /// Certify a time-series table against a scenario without solving.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Table to check (defaults to the scenario's series file in the output directory).
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Brute-force grid equilibria of a tiny scenario.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid points per coordinate.
        #[arg(long, default_value_t = 21)]
        resolution: usize,
        /// Largest number of profiles to enumerate.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: u128,
        /// Solve artifact to compare against (defaults to the series file if present).
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    pub scenario: PathBuf,
    /// `section.key=value` or `producer|consumer.index.key=value`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replaces the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// A bare value sets every certificate tolerance; `name=value` sets one
    /// of producer, consumer, price, clearing, walras, gap, inner.
    #[arg(long = "tolerance", value_name = "[NAME=]VALUE")]
    pub tolerances: Vec<String>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(common) => cmd_solve(&common),
        Command::Verify { common, profile } => cmd_verify(&common, profile.as_deref()),
        Command::Oracle { common, resolution, budget, profile } => {
            cmd_oracle(&common, resolution, budget, profile.as_deref())
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_ERROR
        }
    }
}

fn tolerance_override(sc: &mut Scenario, spec: &str) -> Result<()> {
    let parse = |v: &str| match v.trim().parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(Error::InvalidArgument(format!("tolerance `{spec}` must be a positive real"))),
    };
    let Some((name, value)) = spec.split_once('=') else {
        let v = parse(spec)?;
        sc.tolerances = crate::verify::Tolerances::uniform(v);
        return Ok(());
    };
    let v = parse(value)?;
    let t = &mut sc.tolerances;
    match name.trim() {
        "producer" => t.producer = v,
        "consumer" => t.consumer = v,
        "price" => t.price = v,
        "clearing" => t.clearing = v,
        "walras" => t.walras = v,
        "gap" => sc.solver.schedule.gap_tolerance = v,
        "inner" => sc.solver.schedule.inner.tolerance = v,
        other => return Err(Error::InvalidArgument(format!("unknown tolerance `{other}`"))),
    }
    Ok(())
}

/// Reads the scenario and applies overrides, the seed and tolerances.
pub fn load(common: &Common) -> Result<Scenario> {
    let text = fs::read_to_string(&common.scenario).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", common.scenario.display())))
    })?;
    let mut doc = Document::parse(&text)?;
    for o in &common.overrides {
        doc.apply_override(o)?;
    }
    let mut sc = doc.interpret()?;
    if let Some(seed) = common.seed {
        sc.solver.seed = seed;
    }
    for t in &common.tolerances {
        tolerance_override(&mut sc, t)?;
    }
    sc.model.validate_seeded(sc.solver.seed).into_result()?;
    Ok(sc)
}

fn write(dir: &Path, name: &Path, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Zero production, endowment consumption and uniform prices.
pub fn autarky(model: &EconomyModel) -> Allocation {
    Allocation {
        production: vec![Trajectory::zeros(model.grid, model.commodities); model.producers()],
        consumption: model.consumers.iter().map(|c| c.endowment.clone()).collect(),
        prices: PriceSet::new(model.grid, model.commodities).uniform(),
    }
}

fn header(report: &mut Report, command: &str, common: &Common, sc: &Scenario) {
    report.text("command", command);
    report.text("scenario", &common.scenario.display().to_string());
    report.int("seed", sc.solver.seed);
}

pub fn cmd_solve(common: &Common) -> Result<i32> {
    let sc = load(common)?;
    let model = &sc.model;
    let sched = &sc.solver.schedule;
    let game = model.game(model.compute_r())?;
    let x0 = model.profile(&autarky(model))?;
    let out = solve(&game, &x0, sched)?;
    let alloc = model.allocation(&out.profile)?;

    let mut rep = Report::default();
    header(&mut rep, "solve", common, &sc);
    rep.flag("solver.converged", out.converged);
    rep.int("solver.iterations", out.iterations as u64);
    rep.real("solver.gap", out.gap);
    // last step taken; the final iterate has no successor
    let residual = out.trace.iter().rev().map(|e| e.residual).find(|r| r.is_finite()).unwrap_or(0.0);
    rep.real("solver.residual", residual);
    rep.real("solver.initial_projection", out.initial_projection);
    for (nu, g) in out.per_player_gap.iter().enumerate() {
        rep.real(&format!("solver.player_gap.{nu}"), *g);
    }
    rep.real("tolerance.gap", sched.gap_tolerance);
    rep.real("tolerance.inner", sched.inner.tolerance);

    let code = match certify(model, &alloc, &sc.tolerances, &sched.inner) {
        Ok(cert) => {
            rep.certificate(&cert);
            if !out.converged {
                EXIT_NOT_CONVERGED
            } else if cert.accepted {
                EXIT_ACCEPTED
            } else {
                EXIT_REJECTED
            }
        }
        Err(err) => {
            rep.tolerances(&sc.tolerances);
            rep.text("certificate.error", &err.to_string());
            if out.converged {
                EXIT_REJECTED
            } else {
                EXIT_NOT_CONVERGED
            }
        }
    };
    rep.text("status", status(code));
    write(&common.out_dir, &sc.output.series, &write_table(model, &alloc)?)?;
    let path = write(&common.out_dir, &sc.output.report, &rep.render())?;
    print!("{}", rep.render());
    if code != EXIT_ACCEPTED {
        eprintln!("{} (report in {})", status(code), path.display());
    }
    Ok(code)
}

fn status(code: i32) -> &'static str {
    match code {
        EXIT_ACCEPTED => "accepted",
        EXIT_NOT_CONVERGED => "not-converged",
        EXIT_REJECTED => "rejected",
        _ => "error",
    }
}

fn profile_path(common: &Common, sc: &Scenario, profile: Option<&Path>) -> PathBuf {
    profile.map_or_else(|| common.out_dir.join(&sc.output.series), Path::to_path_buf)
}

fn read_profile(model: &EconomyModel, path: &Path) -> Result<Allocation> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_table(model, &text).map_err(|e| match e {
        Error::Parse { line, message } => {
            Error::Parse { line, message: format!("{}: {message}", path.display()) }
        }
        other => other,
    })
}

pub fn cmd_verify(common: &Common, profile: Option<&Path>) -> Result<i32> {
    let sc = load(common)?;
    let path = profile_path(common, &sc, profile);
    let alloc = read_profile(&sc.model, &path)?;
    let cert = certify(&sc.model, &alloc, &sc.tolerances, &sc.solver.schedule.inner)?;
    let mut rep = Report::default();
    header(&mut rep, "verify", common, &sc);
    rep.text("profile", &path.display().to_string());
    rep.certificate(&cert);
    let code = if cert.accepted { EXIT_ACCEPTED } else { EXIT_REJECTED };
    rep.text("status", status(code));
    write(&common.out_dir, Path::new("verify_report.txt"), &rep.render())?;
    print!("{}", rep.render());
    Ok(code)
}

pub fn cmd_oracle(common: &Common, resolution: usize, budget: u128, profile: Option<&Path>) -> Result<i32> {
    let sc = load(common)?;
    let model = &sc.model;
    let opts = OracleOptions { resolution, budget, ..Default::default() };
    let out = brute_force_oracle(model, &opts)?;
    let mut rep = Report::default();
    header(&mut rep, "oracle", common, &sc);
    rep.int("oracle.resolution", resolution as u64);
    rep.text("oracle.profiles_searched", &out.profiles_searched.to_string());
    rep.real("oracle.gap", out.gap);
    rep.int("oracle.minimizer_count", out.minimizer_count as u64);
    let cols = &table::header(model)[1..];
    for (n, m) in out.minimizers.iter().enumerate().take(8) {
        let values = m.production.iter().chain(&m.consumption).chain([&m.prices]).flat_map(|t| t.values().to_vec());
        for (c, v) in cols.iter().zip(values) {
            rep.real(&format!("minimizer.{n}.{c}"), v);
        }
    }

    let path = profile_path(common, &sc, profile);
    if profile.is_some() || path.exists() {
        let alloc = read_profile(model, &path)?;
        if let Some((idx, dev)) = out.nearest(&alloc) {
            rep.text("comparison.profile", &path.display().to_string());
            rep.int("comparison.nearest_minimizer", idx as u64);
            for (c, d) in cols.iter().zip(&dev) {
                rep.real(&format!("comparison.cells.{c}"), *d);
            }
            rep.real("comparison.max_cells", dev.iter().cloned().fold(0.0, f64::max));
        }
    }
    write(&common.out_dir, Path::new("oracle_report.txt"), &rep.render())?;
    print!("{}", rep.render());
    Ok(EXIT_ACCEPTED)
}
