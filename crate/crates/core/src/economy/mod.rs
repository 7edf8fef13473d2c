//! Time-dependent abstract economy: producers choosing plans `a^j ∈ A_j`,
//! consumers choosing `b^i` within their budgets, and a price player
//! choosing `p ∈ P`.
//!
//! Sign convention for plans: positive entries are outputs, negative
//! entries are inputs. Every trajectory in a model has dimension `l`.

mod game;
mod prices;

use crate::error::{Error, Result};
use crate::fnspace::{TimeGrid, Trajectory};
use crate::gnep::convexity::BoxSampler;
use crate::gnep::{check_semistrict, ConvexityCheck, ConvexityVerdict, StrategyProfile};

pub use game::{ConsumerFeasible, ConsumerObjective, PriceObjective, ProducerObjective};
pub use prices::{project_prices, PriceSet};

/// Trials used by [`EconomyModel::validate`] for each utility.
pub const VALIDATION_TRIALS: usize = 1_000;
/// Seed used by [`EconomyModel::validate`].
pub const VALIDATION_SEED: u64 = 0x7d6e_0001;
const SHARE_TOL: f64 = 1e-12;

/// `⟨⟨c, a⟩⟩ ≤ rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCut {
    pub coef: Trajectory,
    pub rhs: f64,
}

/// `A_j`: a box `lo ≤ a ≤ up` with optional affine cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionSet {
    pub lower: Trajectory,
    pub upper: Trajectory,
    pub cuts: Vec<AffineCut>,
}

impl ProductionSet {
    pub fn boxed(lower: Trajectory, upper: Trajectory) -> Self {
        Self { lower, upper, cuts: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    /// `⟨⟨c, b⟩⟩`
    Linear { weights: Trajectory },
    /// `Σ_h w_h log(ε + ∫(b_h − β_h))`
    ShiftedLog { weights: Vec<f64>, offset: f64 },
    /// `−(κ/2)‖b − target‖²`
    Quadratic { target: Trajectory, curvature: f64 },
}

impl Utility {
    pub fn name(&self) -> &'static str {
        match self {
            Utility::Linear { .. } => "linear",
            Utility::ShiftedLog { .. } => "shifted-log",
            Utility::Quadratic { .. } => "quadratic",
        }
    }

    /// `u(b)` for a consumer whose floor is `floor`. Outside the domain of
    /// the logarithm the value is `−∞`.
    pub fn value(&self, b: &Trajectory, floor: &Trajectory) -> f64 {
        match self {
            Utility::Linear { weights } => weights.inner_product(b).expect("utility shape"),
            Utility::ShiftedLog { weights, offset } => {
                let mut total = 0.0;
                for (h, w) in weights.iter().enumerate() {
                    let arg = offset + b.integral(h) - floor.integral(h);
                    if arg <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    total += w * arg.ln();
                }
                total
            }
            Utility::Quadratic { target, curvature } => {
                let d = b.sub(target).expect("utility shape");
                -0.5 * curvature * d.inner_product(&d).expect("utility shape")
            }
        }
    }

    /// `L²` gradient.
    pub fn gradient(&self, b: &Trajectory, floor: &Trajectory) -> Trajectory {
        match self {
            Utility::Linear { weights } => weights.clone(),
            Utility::ShiftedLog { weights, offset } => {
                let per: Vec<f64> = weights
                    .iter()
                    .enumerate()
                    .map(|(h, w)| w / (offset + b.integral(h) - floor.integral(h)))
                    .collect();
                Trajectory::constant(b.grid(), &per).expect("utility shape")
            }
            Utility::Quadratic { target, curvature } => {
                b.zip_with(target, |x, t| -curvature * (x - t)).expect("utility shape")
            }
        }
    }

    fn check(&self, grid: TimeGrid, l: usize, who: &str, out: &mut Vec<String>) {
        match self {
            Utility::Linear { weights } => {
                if weights.grid() != grid || weights.dim() != l {
                    out.push(format!("{who}: linear utility weights have the wrong shape"));
                }
            }
            Utility::ShiftedLog { weights, offset } => {
                if weights.len() != l {
                    out.push(format!("{who}: shifted-log needs {l} weights, got {}", weights.len()));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    out.push(format!("{who}: shifted-log weights must be positive"));
                }
                if !(offset.is_finite() && *offset > 0.0) {
                    out.push(format!("{who}: shifted-log offset must be positive"));
                }
            }
            Utility::Quadratic { target, curvature } => {
                if target.grid() != grid || target.dim() != l {
                    out.push(format!("{who}: quadratic target has the wrong shape"));
                }
                if !(curvature.is_finite() && *curvature > 0.0) {
                    out.push(format!("{who}: quadratic curvature must be positive"));
                }
            }
        }
    }
}

/// `B_i = {β ≤ b ≤ ub}` together with the consumer's utility.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSet {
    pub floor: Trajectory,
    pub upper: Trajectory,
    pub utility: Utility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consumer {
    pub set: ConsumptionSet,
    pub endowment: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyModel {
    pub grid: TimeGrid,
    pub commodities: usize,
    pub producers: Vec<ProductionSet>,
    pub consumers: Vec<Consumer>,
    /// `α[i][j]`: consumer `i`'s share of producer `j`'s profit.
    pub shares: Vec<Vec<f64>>,
    /// Intersect consumer sets with `S = Π S_h`.
    pub truncation: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }
}

/// Plans of all agents, split out of a game profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub production: Vec<Trajectory>,
    pub consumption: Vec<Trajectory>,
    pub prices: Trajectory,
}

impl EconomyModel {
    pub fn producers(&self) -> usize {
        self.producers.len()
    }

    pub fn consumers(&self) -> usize {
        self.consumers.len()
    }

    /// `s + r + 1`
    pub fn players(&self) -> usize {
        self.producers.len() + self.consumers.len() + 1
    }

    pub fn price_index(&self) -> usize {
        self.producers.len() + self.consumers.len()
    }

    fn shaped(&self, t: &Trajectory) -> bool {
        t.grid() == self.grid && t.dim() == self.commodities
    }

    fn check_shape(&self, t: &Trajectory, what: &str) -> Result<()> {
        if self.shaped(t) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what} must be a {}-dimensional trajectory on the model grid",
                self.commodities
            )))
        }
    }

    /// Checks the model invariants and runs the semistrict quasiconcavity
    /// check on every utility over the consumer's box.
    pub fn validate(&self) -> ValidationReport {
        self.validate_seeded(VALIDATION_SEED)
    }

    /// [`validate`](Self::validate) with the sampling seed given.
    pub fn validate_seeded(&self, seed: u64) -> ValidationReport {
        let mut v = Vec::new();
        let (s, r, l) = (self.producers(), self.consumers(), self.commodities);
        if l == 0 {
            v.push("at least one commodity is required".into());
            return ValidationReport { violations: v };
        }

        for (j, a) in self.producers.iter().enumerate() {
            let who = format!("producer {j}");
            if !self.shaped(&a.lower) || !self.shaped(&a.upper) {
                v.push(format!("{who}: bounds have the wrong shape"));
                continue;
            }
            let vals = a.lower.values().iter().zip(a.upper.values());
            if vals.clone().any(|(lo, up)| !(lo.is_finite() && up.is_finite())) {
                v.push(format!("{who}: bounds must be finite"));
            }
            if vals.clone().any(|(lo, up)| lo > up) {
                v.push(format!("{who}: lower bound exceeds upper bound"));
            }
            let zero_in_box = vals.clone().all(|(lo, up)| *lo <= 0.0 && *up >= 0.0);
            let zero_in_cuts = a.cuts.iter().all(|c| c.rhs >= 0.0);
            if !zero_in_box || !zero_in_cuts {
                v.push(format!("0 ∉ A_{j}"));
            }
            for (q, c) in a.cuts.iter().enumerate() {
                if !self.shaped(&c.coef) || !c.rhs.is_finite() {
                    v.push(format!("{who}: cut {q} is malformed"));
                }
            }
        }

        if self.shares.len() != r {
            v.push(format!("shares need one row per consumer ({r}), got {}", self.shares.len()));
        }
        for (i, row) in self.shares.iter().enumerate() {
            if row.len() != s {
                v.push(format!("consumer {i}: shares row length ≠ s"));
            }
            if row.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                v.push(format!("consumer {i}: shares must be nonnegative"));
            }
        }
        if self.shares.len() == r && self.shares.iter().all(|row| row.len() == s) {
            for j in 0..s {
                let total: f64 = self.shares.iter().map(|row| row[j]).sum();
                if (total - 1.0).abs() > SHARE_TOL {
                    v.push(format!("shares of production unit {j} do not sum to 1"));
                }
            }
        }

        let mut consumers_shaped = true;
        for (i, c) in self.consumers.iter().enumerate() {
            let who = format!("consumer {i}");
            let set = &c.set;
            if !self.shaped(&set.floor) || !self.shaped(&set.upper) || !self.shaped(&c.endowment) {
                v.push(format!("{who}: floor, upper bound and endowment need the model shape"));
                consumers_shaped = false;
                continue;
            }
            if c.endowment.values().iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                v.push(format!("{who}: endowment must be finite and nonnegative"));
            }
            let bounds = set.floor.values().iter().zip(set.upper.values());
            if bounds.clone().any(|(b, u)| !(b.is_finite() && u.is_finite())) {
                v.push(format!("{who}: consumption bounds must be finite"));
            }
            if bounds.clone().any(|(b, u)| b > u) {
                v.push(format!("{who}: floor exceeds upper bound"));
            }
            if self.truncation && set.floor.values().iter().any(|b| *b < 0.0) {
                v.push(format!("{who}: negative floor requires truncation to be disabled"));
            }
            if self.truncation && set.upper.values().iter().any(|u| *u < 0.0) {
                v.push(format!("{who}: upper bound below 0 leaves no nonnegative consumption"));
            }
            set.utility.check(self.grid, l, &who, &mut v);
        }

        if v.is_empty() && consumers_shaped {
            let caps = self.truncated_consumption_bound(self.compute_r());
            for (i, c) in self.consumers.iter().enumerate() {
                let (lower, upper) = self.consumer_box(i, &caps);
                let sampler = BoxSampler { grid: self.grid, dim: l, lower, upper };
                let floor = c.set.floor.clone();
                let utility = c.set.utility.clone();
                let f = move |b: &Trajectory| utility.value(b, &floor);
                let cfg = ConvexityCheck::new(VALIDATION_TRIALS, seed.wrapping_add(i as u64));
                if let ConvexityVerdict::Counterexample { trial, .. } = check_semistrict(&f, &sampler, &cfg) {
                    v.push(format!(
                        "consumer {i}: utility is not semistrictly quasiconcave (sample {trial})"
                    ));
                }
            }
        }
        ValidationReport { violations: v }
    }

    /// `⟨⟨p, ξ^i⟩⟩ + max{0, Σ_j α_ij ⟨⟨p, a^j⟩⟩}`
    pub fn budget_rhs(&self, i: usize, production: &[Trajectory], prices: &Trajectory) -> Result<f64> {
        if i >= self.consumers() {
            return Err(Error::InvalidArgument(format!("no consumer {i}")));
        }
        if production.len() != self.producers() {
            return Err(Error::Shape(format!(
                "expected {} production plans, got {}",
                self.producers(),
                production.len()
            )));
        }
        self.check_shape(prices, "price trajectory")?;
        let mut profit = 0.0;
        for (j, a) in production.iter().enumerate() {
            profit += self.shares[i][j] * prices.inner_product(a)?;
        }
        Ok(prices.inner_product(&self.consumers[i].endowment)? + profit.max(0.0))
    }

    /// `1 + max_h Σ_j Δt Σ_k max(|lo_j[k,h]|, |up_j[k,h]|)`
    pub fn compute_r(&self) -> f64 {
        let l = self.commodities;
        let dt = self.grid.dt();
        let mut worst = 0.0f64;
        for h in 0..l {
            let mut total = 0.0;
            for a in &self.producers {
                for k in 0..self.grid.intervals() {
                    total += dt * a.lower.get(k, h).abs().max(a.upper.get(k, h).abs());
                }
            }
            worst = worst.max(total);
        }
        1.0 + worst
    }

    /// `C_h = ∫ Σ_i ξ^i_h + R`
    pub fn truncated_consumption_bound(&self, r: f64) -> Vec<f64> {
        (0..self.commodities)
            .map(|h| self.consumers.iter().map(|c| c.endowment.integral(h)).sum::<f64>() + r)
            .collect()
    }

    /// Box of consumer `i` in the game: `[max(β,0), min(ub, C_h/Δt)]` with
    /// truncation, `[β, ub]` without.
    pub fn consumer_box(&self, i: usize, caps: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let set = &self.consumers[i].set;
        let l = self.commodities;
        let dt = self.grid.dt();
        if !self.truncation {
            return (set.floor.values().to_vec(), set.upper.values().to_vec());
        }
        let lower = set.floor.values().iter().map(|b| b.max(0.0)).collect();
        let upper = set
            .upper
            .values()
            .iter()
            .enumerate()
            .map(|(idx, u)| u.min(caps[idx % l] / dt))
            .collect();
        (lower, upper)
    }

    /// `z = Σ_i (b^i − ξ^i) − Σ_j a^j`
    pub fn excess_demand(&self, production: &[Trajectory], consumption: &[Trajectory]) -> Result<Trajectory> {
        if production.len() != self.producers() || consumption.len() != self.consumers() {
            return Err(Error::Shape(format!(
                "expected {} production and {} consumption plans, got {} and {}",
                self.producers(),
                self.consumers(),
                production.len(),
                consumption.len()
            )));
        }
        let mut z = vec![0.0; self.grid.intervals() * self.commodities];
        for (c, b) in self.consumers.iter().zip(consumption) {
            self.check_shape(b, "consumption plan")?;
            for ((zi, bi), xi) in z.iter_mut().zip(b.values()).zip(c.endowment.values()) {
                *zi += bi - xi;
            }
        }
        for a in production {
            self.check_shape(a, "production plan")?;
            for (zi, ai) in z.iter_mut().zip(a.values()) {
                *zi -= ai;
            }
        }
        Trajectory::from_values(self.grid, self.commodities, z)
    }

    pub fn utility(&self, i: usize, b: &Trajectory) -> f64 {
        let set = &self.consumers[i].set;
        set.utility.value(b, &set.floor)
    }

    pub fn allocation(&self, x: &StrategyProfile) -> Result<Allocation> {
        if x.players() != self.players() {
            return Err(Error::Shape(format!(
                "profile has {} blocks, economy has {} players",
                x.players(),
                self.players()
            )));
        }
        for b in x.blocks() {
            self.check_shape(b, "profile block")?;
        }
        let s = self.producers();
        let blocks = x.blocks();
        Ok(Allocation {
            production: blocks[..s].to_vec(),
            consumption: blocks[s..self.price_index()].to_vec(),
            prices: blocks[self.price_index()].clone(),
        })
    }

    pub fn profile(&self, alloc: &Allocation) -> Result<StrategyProfile> {
        let mut blocks = alloc.production.clone();
        blocks.extend(alloc.consumption.iter().cloned());
        blocks.push(alloc.prices.clone());
        let x = StrategyProfile::new(blocks)?;
        self.allocation(&x)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests;
