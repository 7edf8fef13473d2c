//! Certification of candidate equilibria of an [`EconomyModel`].
//!
//! Each check recomputes its maximum from the model data at the candidate
//! point: closed forms for box production sets and for the price set, a
//! linear program for production sets with cuts, and a certified ascent for
//! consumers with nonlinear utility.

mod oracle;

use std::sync::Arc;

use crate::economy::{Allocation, ConsumerFeasible, EconomyModel, PriceSet, Utility};
use crate::error::{Error, Result};
use crate::fnspace::Trajectory;
use crate::gnep::ascent::{Ascent, StopRule};
use crate::gnep::{best_response_from, InnerOptions, Polytope, StrategyProfile};

pub use oracle::{brute_force_oracle, OracleOptions, OracleOutcome, DEFAULT_ORACLE_BUDGET};

/// Slack for `â^j ∈ A_j` and `b̂^i ∈ D_i(â, p̂) ∩ S`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Slack for `p̂ ∈ P`.
pub const PRICE_MEMBERSHIP_TOL: f64 = 1e-10;
/// Projected utility gradient below this norm counts as satiation.
pub const SATIATION_GRADIENT: f64 = 1e-8;
/// Cap slack required before the Walras identity is asserted.
pub const CAP_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub producer: f64,
    pub consumer: f64,
    pub price: f64,
    pub clearing: f64,
    pub walras: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { producer: 1e-6, consumer: 1e-6, price: 1e-6, clearing: 1e-6, walras: 1e-6 }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { producer: tol, consumer: tol, price: tol, clearing: tol, walras: tol }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalrasCheck {
    /// `Σ_i ⟨⟨p̂, b̂^i − ξ^i⟩⟩ − Σ_j ⟨⟨p̂, â^j⟩⟩`
    pub residual: f64,
    pub applicable: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub producer_gaps: Vec<f64>,
    pub producer_profits: Vec<f64>,
    pub consumer_gaps: Vec<f64>,
    pub price_gap: f64,
    pub clearing_integrals: Vec<f64>,
    pub walras: WalrasCheck,
    pub tolerances: Tolerances,
    pub accepted: bool,
}

impl EquilibriumCertificate {
    /// Reasons for rejection, empty when accepted.
    pub fn failures(&self) -> Vec<String> {
        let t = &self.tolerances;
        let mut out = Vec::new();
        for (j, g) in self.producer_gaps.iter().enumerate() {
            if !(*g <= t.producer) {
                out.push(format!("producer {j} gap {g:.3e} exceeds {:.1e}", t.producer));
            }
        }
        for (i, g) in self.consumer_gaps.iter().enumerate() {
            if !(*g <= t.consumer) {
                out.push(format!("consumer {i} gap {g:.3e} exceeds {:.1e}", t.consumer));
            }
        }
        if !(self.price_gap <= t.price) {
            out.push(format!("price gap {:.3e} exceeds {:.1e}", self.price_gap, t.price));
        }
        for (h, c) in self.clearing_integrals.iter().enumerate() {
            if !(*c <= t.clearing) {
                out.push(format!("commodity {h} clearing integral {c:.3e} exceeds {:.1e}", t.clearing));
            }
        }
        let w = self.walras.residual;
        let ok = if self.walras.applicable { w.abs() <= t.walras } else { w <= t.walras };
        if !ok {
            out.push(format!("Walras residual {w:.3e} outside tolerance {:.1e}", t.walras));
        }
        out
    }
}

fn check_production(model: &EconomyModel, production: &[Trajectory]) -> Result<()> {
    if production.len() != model.producers() {
        return Err(Error::Shape(format!(
            "expected {} production plans, got {}",
            model.producers(),
            production.len()
        )));
    }
    for (j, a) in production.iter().enumerate() {
        if a.grid() != model.grid || a.dim() != model.commodities {
            return Err(Error::Shape(format!("production plan {j} has the wrong shape")));
        }
        match model.production_set(j)?.check(a.values(), MEMBERSHIP_TOL) {
            Err(Error::Membership { constraint, excess }) => {
                return Err(Error::Membership {
                    constraint: format!("producer {j}: {constraint}"),
                    excess,
                })
            }
            other => other?,
        }
    }
    Ok(())
}

/// `max_{a ∈ A_j} ⟨⟨p̂, a⟩⟩ − ⟨⟨p̂, â^j⟩⟩` for every producer.
pub fn check_pp(model: &EconomyModel, production: &[Trajectory], prices: &Trajectory) -> Result<Vec<f64>> {
    check_production(model, production)?;
    let dt = model.grid.dt();
    let mut gaps = Vec::with_capacity(production.len());
    for (j, a) in production.iter().enumerate() {
        let set = &model.producers[j];
        let best = if set.cuts.is_empty() {
            dt * prices
                .values()
                .iter()
                .zip(set.lower.values().iter().zip(set.upper.values()))
                .map(|(p, (lo, up))| (p * lo).max(p * up))
                .sum::<f64>()
        } else {
            let polytope = model.production_set(j)?;
            let (_, v) = polytope
                .maximize_linear(prices.values())
                .ok_or_else(|| Error::Infeasible { player: j, detail: "production set is empty".into() })?;
            dt * v
        };
        gaps.push((best - prices.inner_product(a)?).max(0.0));
    }
    Ok(gaps)
}

fn consumer_feasible(model: &EconomyModel, i: usize) -> Result<ConsumerFeasible> {
    ConsumerFeasible::new(Arc::new(model.clone()), i, model.compute_r())
}

/// `max_{b ∈ D_i(â,p̂) ∩ S} u_i(b) − u_i(b̂^i)` for every consumer, using
/// the certified upper bound of the inner solver.
pub fn check_cp(
    model: &EconomyModel,
    production: &[Trajectory],
    consumption: &[Trajectory],
    prices: &Trajectory,
    inner: &InnerOptions,
) -> Result<Vec<f64>> {
    check_production(model, production)?;
    let alloc = Allocation {
        production: production.to_vec(),
        consumption: consumption.to_vec(),
        prices: prices.clone(),
    };
    let x = model.profile(&alloc)?;
    let game = model.game(model.compute_r())?;
    let s = model.producers();
    let mut gaps = Vec::with_capacity(consumption.len());
    for (i, b) in consumption.iter().enumerate() {
        let (_, rivals) = x.split(s + i)?;
        let set = game.feasible_set(s + i, &rivals);
        if let Err(Error::Membership { constraint, excess }) = set.check(b.values(), MEMBERSHIP_TOL) {
            return Err(Error::Membership { constraint: format!("consumer {i}: {constraint}"), excess });
        }
        let br = best_response_from(&game, s + i, &rivals, Some(b), inner)?;
        let current = model.utility(i, b);
        let upper = br.value.max(current) + br.certified_gap;
        let gap = upper - current;
        gaps.push(if gap < -inner.tolerance { 0.0 } else { gap.max(0.0) });
    }
    Ok(gaps)
}

/// `max_{p ∈ P} ⟨⟨p, z⟩⟩ − ⟨⟨p̂, z⟩⟩` with `z` the excess demand. The maximum
/// over `P` sits at a vertex: mass `T/Δt` on the largest cell of `z`.
pub fn check_mp(
    model: &EconomyModel,
    production: &[Trajectory],
    consumption: &[Trajectory],
    prices: &Trajectory,
) -> Result<f64> {
    PriceSet::new(model.grid, model.commodities).check(prices, PRICE_MEMBERSHIP_TOL)?;
    let z = model.excess_demand(production, consumption)?;
    let top = z.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best = model.grid.horizon() * top;
    Ok((best - prices.inner_product(&z)?).max(0.0))
}

/// `∫ [Σ_i (b̂^i_h − ξ^i_h) − Σ_j â^j_h]` for every commodity.
pub fn check_market_clearing(
    model: &EconomyModel,
    production: &[Trajectory],
    consumption: &[Trajectory],
) -> Result<Vec<f64>> {
    Ok(model.excess_demand(production, consumption)?.integrals())
}

/// Largest utility gain available to consumer `i` over `B_i ∩ S` when the
/// budget is ignored, from `b` (a lower bound on `sup u_i − u_i(b)`).
fn headroom(model: &EconomyModel, i: usize, set: &Polytope, b: &Trajectory, inner: &InnerOptions) -> f64 {
    let spec = &model.consumers[i].set;
    let current = spec.utility.value(b, &spec.floor);
    let best = match &spec.utility {
        Utility::Linear { weights } => set
            .maximize_linear(weights.values())
            .map_or(current, |(_, v)| model.grid.dt() * v),
        utility => {
            let value = |y: &[f64]| utility.value(&b.with_values(y.to_vec()), &spec.floor);
            let gradient = |y: &[f64]| utility.gradient(&b.with_values(y.to_vec()), &spec.floor).into_values();
            let ascent = Ascent { set, dt: model.grid.dt(), value: &value, gradient: &gradient };
            let start = set.project(b.values());
            ascent.run(&start, StopRule::FrankWolfe(inner.tolerance), inner.max_iterations).value
        }
    };
    best - current
}

/// Walras residual, with the identity asserted only when some consumer is
/// numerically non-satiated on `B_i ∩ S` at `b̂^i` and has slack caps.
///
/// Non-satiation needs a projected utility gradient above
/// [`SATIATION_GRADIENT`] and a point of `B_i ∩ S` better than `b̂^i` by more
/// than the consumer tolerance, so that a consumer sitting within solver
/// accuracy of a bliss point counts as satiated.
pub fn check_walras(
    model: &EconomyModel,
    production: &[Trajectory],
    consumption: &[Trajectory],
    prices: &Trajectory,
    tolerances: &Tolerances,
    inner: &InnerOptions,
) -> Result<WalrasCheck> {
    let z = model.excess_demand(production, consumption)?;
    let residual = prices.inner_product(&z)?;
    let mut reasons = Vec::new();
    for (i, b) in consumption.iter().enumerate() {
        let feasible = consumer_feasible(model, i)?;
        let set = &feasible.base;
        let spec = &model.consumers[i].set;
        let g = spec.utility.gradient(b, &spec.floor);
        let moved: Vec<f64> = b.values().iter().zip(g.values()).map(|(x, gi)| x + gi).collect();
        let stepped = b.with_values(set.project(&moved));
        let projected = stepped.distance(b)?;
        if !(projected > SATIATION_GRADIENT) {
            reasons.push(format!("consumer {i} satiated (projected gradient {projected:.1e})"));
            continue;
        }
        let gain = headroom(model, i, set, b, inner);
        if !(gain > tolerances.consumer) {
            reasons.push(format!("consumer {i} satiated (best gain without budget {gain:.1e})"));
            continue;
        }
        if model.truncation {
            let caps = model.truncated_consumption_bound(model.compute_r());
            if let Some(h) = (0..model.commodities).find(|&h| caps[h] - b.integral(h) <= CAP_SLACK) {
                reasons.push(format!("consumer {i} cap on commodity {h} is active"));
                continue;
            }
        }
        return Ok(WalrasCheck {
            residual,
            applicable: true,
            reason: format!("consumer {i} non-satiated with slack caps"),
        });
    }
    let reason = if reasons.is_empty() { "no consumers".to_string() } else { reasons.join("; ") };
    Ok(WalrasCheck { residual, applicable: false, reason })
}

/// Runs every check at `alloc`. Membership failures are errors; gaps and
/// residuals beyond tolerance give a rejected certificate.
pub fn certify(
    model: &EconomyModel,
    alloc: &Allocation,
    tolerances: &Tolerances,
    inner: &InnerOptions,
) -> Result<EquilibriumCertificate> {
    let (a, b, p) = (&alloc.production, &alloc.consumption, &alloc.prices);
    let price_gap = check_mp(model, a, b, p)?;
    let producer_gaps = check_pp(model, a, p)?;
    let producer_profits = a.iter().map(|aj| p.inner_product(aj)).collect::<Result<Vec<_>>>()?;
    let consumer_gaps = check_cp(model, a, b, p, inner)?;
    let clearing_integrals = check_market_clearing(model, a, b)?;
    let walras = check_walras(model, a, b, p, tolerances, inner)?;
    let mut cert = EquilibriumCertificate {
        producer_gaps,
        producer_profits,
        consumer_gaps,
        price_gap,
        clearing_integrals,
        walras,
        tolerances: *tolerances,
        accepted: false,
    };
    cert.accepted = cert.failures().is_empty();
    Ok(cert)
}

/// [`certify`] for a game profile ordered producers, consumers, prices.
pub fn certify_profile(
    model: &EconomyModel,
    x: &StrategyProfile,
    tolerances: &Tolerances,
    inner: &InnerOptions,
) -> Result<EquilibriumCertificate> {
    certify(model, &model.allocation(x)?, tolerances, inner)
}
