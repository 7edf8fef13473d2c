//! Exhaustive search for grid equilibria of tiny economies.
//!
//! Every player's strategy space is replaced by a uniform grid (the price
//! simplex by its grid points `p_1 = i/(g−1)`), best responses are taken
//! over the same grids, and the profiles with the smallest grid gap are
//! returned.

use crate::economy::{Allocation, EconomyModel, PriceSet};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fnspace::Trajectory;

pub const DEFAULT_ORACLE_BUDGET: u128 = 50_000_000;
const MAX_RESOLUTION: usize = 21;
const MAX_REPORTED: usize = 256;
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Grid points per coordinate.
    pub resolution: usize,
    /// Largest number of profiles the search may enumerate.
    pub budget: u128,
    pub execution: Execution,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { resolution: MAX_RESOLUTION, budget: DEFAULT_ORACLE_BUDGET, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// Smallest grid gap found.
    pub gap: f64,
    /// Profiles attaining it (at most 256 are kept).
    pub minimizers: Vec<Allocation>,
    pub minimizer_count: usize,
    /// Grid spacing per player (producers, consumers, prices) and commodity.
    pub cell_widths: Vec<Vec<f64>>,
    pub profiles_searched: u128,
}

fn linspace(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    (0..g)
        .map(|i| if i + 1 == g { hi } else { lo + (hi - lo) * i as f64 / (g - 1) as f64 })
        .collect()
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Grid equilibria of a model with `m = 1`, `l ≤ 2`, `s ≤ 1`, `r ≤ 1`.
pub fn brute_force_oracle(model: &EconomyModel, opts: &OracleOptions) -> Result<OracleOutcome> {
    let (s, r, l) = (model.producers(), model.consumers(), model.commodities);
    if model.grid.intervals() != 1 || l > 2 || s > 1 || r > 1 {
        return Err(Error::Unsupported(format!(
            "the oracle handles m = 1, l ≤ 2, s ≤ 1, r ≤ 1 (got m = {}, l = {l}, s = {s}, r = {r})",
            model.grid.intervals()
        )));
    }
    let g = opts.resolution;
    if !(2..=MAX_RESOLUTION).contains(&g) {
        return Err(Error::InvalidArgument(format!(
            "oracle resolution must lie in 2..={MAX_RESOLUTION}, got {g}"
        )));
    }
    model.validate().into_result()?;

    let grid = model.grid;
    let dt = grid.dt();
    let mass = PriceSet::new(grid, l).cell_mass();
    let traj = |v: &[f64]| Trajectory::from_values(grid, l, v.to_vec()).expect("oracle point shape");

    let mut widths = Vec::new();
    let producers: Vec<Vec<f64>> = if s == 1 {
        let set = &model.producers[0];
        let lo = set.lower.values();
        let up = set.upper.values();
        widths.push((0..l).map(|h| (up[h] - lo[h]) / (g - 1) as f64).collect());
        product(&(0..l).map(|h| linspace(lo[h], up[h], g)).collect::<Vec<_>>())
            .into_iter()
            .filter(|a| set.cuts.iter().all(|c| dt * dot(c.coef.values(), a) <= c.rhs + TIE))
            .collect()
    } else {
        vec![vec![0.0; l]]
    };
    let consumers: Vec<Vec<f64>> = if r == 1 {
        let caps = model.truncated_consumption_bound(model.compute_r());
        let (lo, up) = model.consumer_box(0, &caps);
        widths.push((0..l).map(|h| (up[h] - lo[h]) / (g - 1) as f64).collect());
        let pts = product(&(0..l).map(|h| linspace(lo[h], up[h], g)).collect::<Vec<_>>());
        if model.truncation {
            pts.into_iter().filter(|b| (0..l).all(|h| dt * b[h] <= caps[h] + TIE)).collect()
        } else {
            pts
        }
    } else {
        Vec::new()
    };
    let prices: Vec<Vec<f64>> = if l == 1 {
        widths.push(vec![0.0]);
        vec![vec![mass]]
    } else {
        widths.push(vec![mass / (g - 1) as f64; 2]);
        linspace(0.0, 1.0, g).into_iter().map(|w| vec![w * mass, (1.0 - w) * mass]).collect()
    };
    // with no consumer the only consumption "profile" is the empty one
    let consumer_count = consumers.len().max(1);

    let size = producers.len() as u128 * consumer_count as u128 * prices.len() as u128;
    if size > opts.budget {
        return Err(Error::OracleBudget { size, budget: opts.budget });
    }

    let xi: Vec<f64> = if r == 1 { model.consumers[0].endowment.values().to_vec() } else { vec![0.0; l] };
    let profit = |p: &[f64], a: &[f64]| if s == 1 { dt * dot(p, a) } else { 0.0 };

    let producer_best: Vec<f64> = prices
        .iter()
        .map(|p| producers.iter().map(|a| profit(p, a)).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let utilities: Vec<f64> = consumers.iter().map(|b| model.utility(0, &traj(b))).collect();
    // budget_rhs[a][p], best_utility[a][p]
    let budgets: Vec<Vec<f64>> = producers
        .iter()
        .map(|a| {
            prices
                .iter()
                .map(|p| {
                    let share = if s == 1 && r == 1 { model.shares[0][0] } else { 0.0 };
                    dt * dot(p, &xi) + (share * profit(p, a)).max(0.0)
                })
                .collect()
        })
        .collect();
    let affordable = |b: &[f64], p: &[f64], rhs: f64| dt * dot(p, b) <= rhs + TIE * (1.0 + rhs.abs());
    let best_utility: Vec<Vec<f64>> = opts.execution.map(producers.len(), |ai| {
        prices
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                consumers
                    .iter()
                    .zip(&utilities)
                    .filter(|(b, _)| affordable(b, p, budgets[ai][pi]))
                    .map(|(_, u)| *u)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    });

    let excess = |a: &[f64], b: Option<&Vec<f64>>| -> Vec<f64> {
        (0..l).map(|h| b.map_or(0.0, |b| b[h] - xi[h]) - a[h]).collect()
    };

    let per_producer = opts.execution.map(producers.len(), |ai| {
        let a = &producers[ai];
        let mut best = f64::INFINITY;
        let mut hits: Vec<(usize, usize)> = Vec::new();
        #[allow(clippy::needless_range_loop)]
        for bi in 0..consumer_count {
            let b = consumers.get(bi);
            let z = excess(a, b);
            let price_values: Vec<f64> = prices.iter().map(|p| dt * dot(p, &z)).collect();
            let price_best = price_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (pi, p) in prices.iter().enumerate() {
                let mut gap = producer_best[pi] - profit(p, a) + price_best - price_values[pi];
                if let Some(b) = b {
                    if !affordable(b, p, budgets[ai][pi]) {
                        continue;
                    }
                    gap += best_utility[ai][pi] - utilities[bi];
                }
                if gap < best - TIE {
                    best = gap;
                    hits.clear();
                }
                if gap <= best + TIE {
                    hits.push((bi, pi));
                }
            }
        }
        (best, hits)
    });

    let best = per_producer.iter().map(|(g, _)| *g).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Infeasible { player: s, detail: "no affordable grid consumption".into() });
    }
    let mut minimizers = Vec::new();
    let mut count = 0usize;
    for (ai, (gap, hits)) in per_producer.iter().enumerate() {
        if *gap > best + TIE {
            continue;
        }
        for &(bi, pi) in hits {
            count += 1;
            if minimizers.len() < MAX_REPORTED {
                minimizers.push(Allocation {
                    production: if s == 1 { vec![traj(&producers[ai])] } else { Vec::new() },
                    consumption: if r == 1 { vec![traj(&consumers[bi])] } else { Vec::new() },
                    prices: traj(&prices[pi]),
                });
            }
        }
    }
    Ok(OracleOutcome {
        gap: best.max(0.0),
        minimizers,
        minimizer_count: count,
        cell_widths: widths,
        profiles_searched: size,
    })
}

impl OracleOutcome {
    /// Per-coordinate distance, in grid cells, from `alloc` to each
    /// minimizer. Coordinates run over producers, consumers and prices,
    /// commodity by commodity.
    pub fn cell_deviations(&self, alloc: &Allocation) -> Vec<Vec<f64>> {
        self.minimizers
            .iter()
            .map(|m| {
                let pairs = m
                    .production
                    .iter()
                    .zip(&alloc.production)
                    .chain(m.consumption.iter().zip(&alloc.consumption))
                    .chain(std::iter::once((&m.prices, &alloc.prices)));
                pairs
                    .enumerate()
                    .flat_map(|(player, (x, y))| {
                        let w = &self.cell_widths[player];
                        x.values()
                            .iter()
                            .zip(y.values())
                            .enumerate()
                            .map(move |(h, (a, b))| if w[h] > 0.0 { (a - b).abs() / w[h] } else { 0.0 })
                    })
                    .collect()
            })
            .collect()
    }

    /// The minimizer closest to `alloc` in the max-cell metric, with its
    /// per-coordinate deviations.
    pub fn nearest(&self, alloc: &Allocation) -> Option<(usize, Vec<f64>)> {
        self.cell_deviations(alloc)
            .into_iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let (ma, mb) = (a.iter().cloned().fold(0.0, f64::max), b.iter().cloned().fold(0.0, f64::max));
                ma.total_cmp(&mb)
            })
    }

    /// Largest per-coordinate distance from `alloc` to the nearest
    /// minimizer, in grid cells of each coordinate.
    pub fn cells_from(&self, alloc: &Allocation) -> f64 {
        self.nearest(alloc).map_or(f64::INFINITY, |(_, d)| d.into_iter().fold(0.0, f64::max))
    }
}
