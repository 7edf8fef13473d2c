//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixture_path, report_real, report_value, scenario, solve_fixture, tdgnep, FIXTURES};
use tdgnep::economy::{project_prices, Allocation, EconomyModel, PriceSet};
use tdgnep::gnep::{check_semistrict, ni_gap_detailed, BoxSampler, ConvexityCheck, InnerOptions, StrategyProfile};
use tdgnep::verify::{brute_force_oracle, certify, OracleOptions};
use tdgnep::{Execution, TimeGrid, Trajectory};

const QUADRATURE_REL: f64 = 1e-12;
const QUADRATURE_CASES: usize = 1_000;
const QUADRATURE_BUDGET: Duration = Duration::from_secs(1);

const COBB2_PRODUCER_GAP: f64 = 1e-8;
const COBB2_GAP: f64 = 1e-6;
const COBB2_BUDGET: Duration = Duration::from_secs(60);

const CLEARING: f64 = 1e-6;
const PROFIT_FLOOR: f64 = -1e-10;
const MIN_ACCEPTED: usize = 5;

const WALRAS: f64 = 1e-6;

const FIXED_POINT_DISTANCE: f64 = 1e-6;
const PROFILES_PER_FIXTURE: usize = 10;

const ORACLE_RESOLUTION: usize = 21;
const ORACLE_CELLS: f64 = 2.0;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);

const UTILITY_TRIALS: usize = 10_000;
const PLANTED_TRIALS: usize = 1_000;
const PLANTED_SEEDS: u64 = 20;
const PLANTED_RATE: f64 = 0.99;

type Verdict = (bool, String);

fn quadrature() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9ad);
    let mut worst: f64 = 0.0;
    for case in 0..QUADRATURE_CASES {
        let horizon = rng.gen_range(0.1..10.0);
        let m = rng.gen_range(1..60);
        let l = rng.gen_range(1..4);
        let grid = TimeGrid::new(horizon, m).unwrap();
        let edge = |k: usize| horizon * k as f64 / m as f64;
        let psi: Vec<f64> = (0..m * l).map(|_| rng.gen_range(0.1..2.0)).collect();
        let psi_t = Trajectory::from_values(grid, l, psi.clone()).unwrap();
        let (phi_t, exact) = if case % 2 == 0 {
            let phi: Vec<f64> = (0..m * l).map(|_| rng.gen_range(0.1..2.0)).collect();
            let exact: f64 = (0..m)
                .map(|k| (edge(k + 1) - edge(k)) * (0..l).map(|h| phi[k * l + h] * psi[k * l + h]).sum::<f64>())
                .sum();
            (Trajectory::from_values(grid, l, phi).unwrap(), exact)
        } else {
            let alpha: Vec<f64> = (0..l).map(|_| rng.gen_range(0.1..2.0)).collect();
            let beta: Vec<f64> = (0..l).map(|_| rng.gen_range(0.0..1.0)).collect();
            let phi = Trajectory::sample(grid, l, |t, h| alpha[h] + beta[h] * t).unwrap();
            let exact: f64 = (0..m)
                .map(|k| {
                    let (a, b) = (edge(k), edge(k + 1));
                    (0..l)
                        .map(|h| psi[k * l + h] * (alpha[h] * (b - a) + beta[h] * (b * b - a * a) / 2.0))
                        .sum::<f64>()
                })
                .sum();
            (phi, exact)
        };
        let got = phi_t.inner_product(&psi_t).unwrap();
        worst = worst.max((got - exact).abs() / exact.abs());
    }
    let elapsed = start.elapsed();
    (
        worst <= QUADRATURE_REL && elapsed < QUADRATURE_BUDGET,
        format!("{QUADRATURE_CASES} cases, worst relative error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn cobb2_soundness() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = tdgnep(&[
        "solve",
        fixture_path("cobb2").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    let report = String::from_utf8_lossy(&out.stdout).into_owned();
    if out.status.code() != Some(0) {
        return (false, format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let (pg, cg, mg) = (
        report_real(&report, "producer_gap.0"),
        report_real(&report, "consumer_gap.0"),
        report_real(&report, "price_gap"),
    );
    (
        pg <= COBB2_PRODUCER_GAP && cg <= COBB2_GAP && mg <= COBB2_GAP && elapsed < COBB2_BUDGET,
        format!("exit 0, producer {pg:.2e}, consumer {cg:.2e}, price {mg:.2e}, {elapsed:.2?}"),
    )
}

struct Solved {
    name: &'static str,
    cert: tdgnep::verify::EquilibriumCertificate,
}

fn solve_all() -> Vec<Solved> {
    FIXTURES
        .iter()
        .map(|&name| {
            let sc = scenario(name);
            let (_, alloc) = solve_fixture(&sc);
            let cert = certify(&sc.model, &alloc, &sc.tolerances, &sc.solver.schedule.inner).unwrap();
            Solved { name, cert }
        })
        .collect()
}

fn clearing_and_profits(solved: &[Solved]) -> Verdict {
    let accepted: Vec<&Solved> = solved.iter().filter(|s| s.cert.accepted).collect();
    let mut bad = Vec::new();
    let (mut worst_clear, mut worst_profit) = (f64::NEG_INFINITY, f64::INFINITY);
    for s in &accepted {
        let c = s.cert.clearing_integrals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let p = s.cert.producer_profits.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_clear = worst_clear.max(c);
        worst_profit = worst_profit.min(p);
        if c > CLEARING || p < PROFIT_FLOOR {
            bad.push(s.name);
        }
    }
    (
        accepted.len() >= MIN_ACCEPTED && bad.is_empty(),
        format!(
            "{}/{} fixtures accepted, max clearing integral {worst_clear:.2e}, min profit {worst_profit:.2e}{}",
            accepted.len(),
            solved.len(),
            if bad.is_empty() { String::new() } else { format!(", violations in {bad:?}") }
        ),
    )
}

fn walras(solved: &[Solved]) -> Verdict {
    let mut applicable = 0;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for s in solved.iter().filter(|s| s.cert.accepted && s.cert.walras.applicable) {
        applicable += 1;
        worst = worst.max(s.cert.walras.residual.abs());
        ok &= s.cert.walras.residual.abs() <= WALRAS;
    }
    let sat = solved.iter().find(|s| s.name == "satiated").expect("satiated fixture");
    let w = &sat.cert.walras;
    let sat_ok = !w.applicable && w.residual <= WALRAS;
    (
        ok && applicable > 0 && sat_ok,
        format!(
            "{applicable} applicable fixtures, max |residual| {worst:.2e}; satiated: applicable = {}, residual {:.3e}",
            w.applicable, w.residual
        ),
    )
}

fn random_profile(model: &EconomyModel, rng: &mut ChaCha8Rng) -> Allocation {
    let (grid, l) = (model.grid, model.commodities);
    let n = grid.intervals() * l;
    let production: Vec<Trajectory> = model
        .producers
        .iter()
        .map(|a| {
            let v = a.lower.values().iter().zip(a.upper.values()).map(|(lo, up)| rng.gen_range(*lo..=*up)).collect();
            Trajectory::from_values(grid, l, v).unwrap()
        })
        .collect();
    let prices =
        project_prices(&Trajectory::from_values(grid, l, (0..n).map(|_| rng.gen_range(0.0..3.0)).collect()).unwrap());
    let caps = model.truncated_consumption_bound(model.compute_r());
    let consumption = (0..model.consumers())
        .map(|i| {
            let (lo, up) = model.consumer_box(i, &caps);
            let b = Trajectory::from_values(grid, l, lo.iter().zip(&up).map(|(a, c)| rng.gen_range(*a..=*c)).collect())
                .unwrap();
            let budget = model.budget_rhs(i, &production, &prices).unwrap();
            let mut theta = (budget / prices.inner_product(&b).unwrap()).min(1.0);
            for (h, cap) in caps.iter().enumerate() {
                theta = theta.min(cap / b.integral(h));
            }
            b.scaled(theta * (1.0 - 1e-9))
        })
        .collect();
    Allocation { production, consumption, prices }
}

/// Analytic equilibria of the single-interval fixtures.
fn known_equilibrium(name: &str, model: &EconomyModel) -> Allocation {
    let g = model.grid;
    let c = |v: &[f64]| Trajectory::constant(g, v).unwrap();
    match name {
        "cobb2_m1" => Allocation {
            production: vec![c(&[0.2, 0.4])],
            consumption: vec![c(&[1.2, 1.4])],
            prices: c(&[0.6, 0.4]),
        },
        "bliss_m1" => Allocation { production: vec![c(&[0.5])], consumption: vec![c(&[1.3])], prices: c(&[1.0]) },
        "exchange_m1" => {
            Allocation { production: vec![], consumption: vec![c(&[1.0, 1.0])], prices: c(&[0.6, 0.4]) }
        }
        "satiated" => Allocation {
            production: vec![c(&[0.3, 0.1])],
            consumption: vec![c(&[0.9, 0.7])],
            prices: PriceSet::new(g, 2).uniform(),
        },
        other => panic!("no known equilibrium for {other}"),
    }
}

fn gap_fixed_point_equivalence() -> Verdict {
    let inner = InnerOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5);
    let (mut checked, mut zero_gap, mut violations) = (0, 0, Vec::new());
    for name in ["cobb2_m1", "bliss_m1", "exchange_m1", "satiated"] {
        let model = scenario(name).model;
        let game = model.to_gnep(model.compute_r()).unwrap();
        let mut profiles: Vec<Allocation> = (0..PROFILES_PER_FIXTURE).map(|_| random_profile(&model, &mut rng)).collect();
        profiles.push(known_equilibrium(name, &model));
        for (n, alloc) in profiles.iter().enumerate() {
            let x = model.profile(alloc).unwrap();
            let rep = ni_gap_detailed(&game, &x, None, &inner, Execution::default()).unwrap();
            let br = StrategyProfile::new(rep.responses.iter().map(|r| r.point.clone()).collect()).unwrap();
            let dist = x.distance(&br).unwrap();
            let gap_zero = rep.total <= game.players() as f64 * inner.tolerance;
            let fixed = dist <= FIXED_POINT_DISTANCE;
            checked += 1;
            zero_gap += gap_zero as usize;
            if gap_zero != fixed {
                violations.push(format!("{name}#{n}: gap {:.2e}, |x − BR(x)| {dist:.2e}", rep.total));
            }
        }
    }
    (
        violations.is_empty() && zero_gap > 0,
        format!(
            "{checked} profiles, {zero_gap} with zero gap, {} disagreements{}",
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(": {}", violations.join("; ")) }
        ),
    )
}

fn oracle_agreement() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["cobb2_m1", "bliss_m1", "exchange_m1"] {
        let sc = scenario(name);
        let (_, alloc) = solve_fixture(&sc);
        let start = Instant::now();
        let opts = OracleOptions { resolution: ORACLE_RESOLUTION, ..Default::default() };
        let out = brute_force_oracle(&sc.model, &opts).unwrap();
        let elapsed = start.elapsed();
        let cells = out.cells_from(&alloc);
        ok &= cells <= ORACLE_CELLS && elapsed < ORACLE_BUDGET;
        lines.push(format!("{name} {cells:.3} cells in {elapsed:.2?}"));
    }
    (ok, lines.join(", "))
}

fn convexity_checks() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, who) in [("cobb2", "shifted-log"), ("satiated", "quadratic"), ("exchange_m1", "linear")] {
        let model = scenario(name).model;
        let consumer = &model.consumers[0];
        assert_eq!(consumer.set.utility.name(), who);
        let caps = model.truncated_consumption_bound(model.compute_r());
        let (lower, upper) = model.consumer_box(0, &caps);
        let sampler = BoxSampler { grid: model.grid, dim: model.commodities, lower, upper };
        let (u, floor) = (consumer.set.utility.clone(), consumer.set.floor.clone());
        let f = move |b: &Trajectory| u.value(b, &floor);
        let pass = check_semistrict(&f, &sampler, &ConvexityCheck::new(UTILITY_TRIALS, 17)).passed();
        ok &= pass;
        parts.push(format!("{who} {}", if pass { "passes" } else { "fails" }));
    }

    // ⟨⟨x, x⟩⟩ is convex and not quasiconcave on a symmetric box
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let sampler = BoxSampler { grid, dim: 2, lower: vec![-1.0; 8], upper: vec![1.0; 8] };
    let planted = |x: &Trajectory| x.inner_product(x).unwrap();
    let caught = (0..PLANTED_SEEDS)
        .filter(|&seed| !check_semistrict(&planted, &sampler, &ConvexityCheck::new(PLANTED_TRIALS, seed)).passed())
        .count();
    let rate = caught as f64 / PLANTED_SEEDS as f64;
    ok &= rate >= PLANTED_RATE;
    parts.push(format!("planted function falsified on {caught}/{PLANTED_SEEDS} seeds"));
    (ok, parts.join(", "))
}

fn determinism_and_round_trip() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut accepted = 0;
    for name in FIXTURES {
        let scn = fixture_path(name);
        let scn = scn.to_str().unwrap();
        let (a, b) = (root.path().join(format!("{name}-a")), root.path().join(format!("{name}-b")));
        let ra = tdgnep(&["solve", scn, "--out-dir", a.to_str().unwrap()]);
        let rb = tdgnep(&["solve", scn, "--out-dir", b.to_str().unwrap()]);
        let same = fs::read(a.join("series.csv")).unwrap() == fs::read(b.join("series.csv")).unwrap();
        if !same {
            ok = false;
            notes.push(format!("{name}: tables differ"));
        }
        if ra.status.code() == Some(0) && rb.status.code() == Some(0) {
            accepted += 1;
            let v = tdgnep(&["verify", scn, "--out-dir", a.to_str().unwrap()]);
            if v.status.code() != Some(0) {
                ok = false;
                let rep = String::from_utf8_lossy(&v.stdout);
                notes.push(format!("{name}: verify exit {:?} ({:?})", v.status.code(), report_value(&rep, "failure.0")));
            }
        }
    }
    (
        ok && accepted > 0,
        format!(
            "{} fixtures byte-identical across runs, {accepted} success artifacts re-verified{}",
            FIXTURES.len(),
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    )
}

fn main() {
    let solved = solve_all();
    let results: Vec<(&str, Verdict)> = vec![
        ("quadrature exactness", quadrature()),
        ("cobb2 definition-level soundness", cobb2_soundness()),
        ("market clearing and nonnegative profits", clearing_and_profits(&solved)),
        ("Walras residual", walras(&solved)),
        ("zero gap iff fixed point", gap_fixed_point_equivalence()),
        ("oracle equivalence", oracle_agreement()),
        ("generalized-convexity checks", convexity_checks()),
        ("determinism and round-trip", determinism_and_round_trip()),
    ];
    let mut failed = 0;
    for (n, (name, (pass, detail))) in results.iter().enumerate() {
        println!("{} criterion {}: {name}: {detail}", if *pass { "PASS" } else { "FAIL" }, n + 1);
        failed += !pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
