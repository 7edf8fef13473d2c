//! Generalized Nash games over trajectory spaces.
//!
//! Player `ν` picks a trajectory `x^ν` of dimension `n_ν` from a polytope
//! `X_ν(x^{−ν})` that may move with the rivals' choices, and maximizes
//! `θ_ν(x^ν, x^{−ν})`. A profile is an equilibrium exactly when it is a
//! fixed point of the product best-response map; [`ni_gap`] measures the
//! distance from that in payoff units and [`solve`] runs a damped
//! fixed-point iteration on it.

pub(crate) mod ascent;
pub mod convexity;
pub(crate) mod lp;
pub mod polytope;
mod response;
mod solver;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fnspace::{TimeGrid, Trajectory};

pub use convexity::{
    check_quasiconcave, check_semistrict, AntipodalSampler, BoxSampler, ConvexityCheck, ConvexityVerdict, LambdaDraw,
    PairSampler,
};
pub use polytope::{Constraint, Polytope};
pub use response::{best_response, best_response_from, proximal_response, InnerOptions, Response};
pub use solver::{
    ni_gap, ni_gap_detailed, solve, Damping, GapReport, ResponseRule, SolveOutcome, SolverSchedule,
    TraceEntry, UpdateOrder,
};

/// Objective classes with a supported maximization route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveClass {
    /// `θ(y) = ⟨⟨c(x^{−ν}), y⟩⟩ + const`
    Linear,
    /// Concave and continuously differentiable in the player's own block.
    Concave,
}

/// `θ_ν` as a function of the player's own block given the rivals.
pub trait Objective: Send + Sync {
    fn value(&self, own: &Trajectory, rivals: &RivalProfile) -> f64;

    /// Riesz representative in the `L²` pairing:
    /// `θ(y + δ) ≈ θ(y) + ⟨⟨gradient, δ⟩⟩`.
    fn gradient(&self, own: &Trajectory, rivals: &RivalProfile) -> Trajectory;

    fn class(&self) -> ObjectiveClass;
}

/// `X_ν(x^{−ν})` described as a polytope for each rival profile.
pub trait FeasibleMap: Send + Sync {
    fn polytope(&self, rivals: &RivalProfile) -> Polytope;

    fn depends_on_rivals(&self) -> bool;
}

impl FeasibleMap for Polytope {
    fn polytope(&self, _rivals: &RivalProfile) -> Polytope {
        self.clone()
    }

    fn depends_on_rivals(&self) -> bool {
        false
    }
}

type ValueFn = dyn Fn(&Trajectory, &RivalProfile) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Trajectory, &RivalProfile) -> Trajectory + Send + Sync;

/// Objective assembled from closures; handy for test games and fixtures.
pub struct FnObjective {
    class: ObjectiveClass,
    value: Box<ValueFn>,
    gradient: Box<GradFn>,
}

impl FnObjective {
    /// `θ(y) = ⟨⟨coef(rivals), y⟩⟩`.
    pub fn linear<C>(coef: C) -> Self
    where
        C: Fn(&RivalProfile) -> Trajectory + Send + Sync + Clone + 'static,
    {
        let c2 = coef.clone();
        Self {
            class: ObjectiveClass::Linear,
            value: Box::new(move |y, r| coef(r).inner_product(y).expect("coefficient shape")),
            gradient: Box::new(move |_, r| c2(r)),
        }
    }

    pub fn concave<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&Trajectory, &RivalProfile) -> f64 + Send + Sync + 'static,
        G: Fn(&Trajectory, &RivalProfile) -> Trajectory + Send + Sync + 'static,
    {
        Self {
            class: ObjectiveClass::Concave,
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }
}

impl Objective for FnObjective {
    fn value(&self, own: &Trajectory, rivals: &RivalProfile) -> f64 {
        (self.value)(own, rivals)
    }

    fn gradient(&self, own: &Trajectory, rivals: &RivalProfile) -> Trajectory {
        (self.gradient)(own, rivals)
    }

    fn class(&self) -> ObjectiveClass {
        self.class
    }
}

/// Full strategy vector `x = (x¹, …, x^p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    blocks: Vec<Trajectory>,
}

impl StrategyProfile {
    pub fn new(blocks: Vec<Trajectory>) -> Result<Self> {
        if let Some(first) = blocks.first() {
            if let Some(bad) = blocks.iter().position(|b| b.grid() != first.grid()) {
                return Err(Error::Shape(format!("block {bad} lives on a different grid")));
            }
        }
        Ok(Self { blocks })
    }

    pub fn players(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// `n = Σ_ν n_ν`
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn block(&self, nu: usize) -> &Trajectory {
        &self.blocks[nu]
    }

    pub fn blocks(&self) -> &[Trajectory] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Trajectory> {
        self.blocks
    }

    /// `x ↦ (x^ν, x^{−ν})`
    pub fn split(&self, nu: usize) -> Result<(Trajectory, RivalProfile)> {
        if nu >= self.blocks.len() {
            return Err(Error::InvalidArgument(format!(
                "player index {nu} out of range for {} players",
                self.blocks.len()
            )));
        }
        let mut rest = self.blocks.clone();
        let own = rest.remove(nu);
        Ok((own, RivalProfile { skipped: nu, blocks: rest }))
    }

    /// Inverse of [`split`](Self::split).
    pub fn merge(own: Trajectory, rivals: RivalProfile) -> Result<Self> {
        let mut blocks = rivals.blocks;
        if let Some(first) = blocks.first() {
            if first.grid() != own.grid() {
                return Err(Error::Shape("own block grid differs from rivals".into()));
            }
        }
        blocks.insert(rivals.skipped, own);
        Ok(Self { blocks })
    }

    pub(crate) fn rivals_of(&self, nu: usize) -> RivalProfile {
        let mut rest = self.blocks.clone();
        rest.remove(nu);
        RivalProfile { skipped: nu, blocks: rest }
    }

    pub(crate) fn set_block(&mut self, nu: usize, block: Trajectory) {
        self.blocks[nu] = block;
    }

    /// `‖x − y‖` over all blocks.
    pub fn distance(&self, other: &StrategyProfile) -> Result<f64> {
        if self.players() != other.players() {
            return Err(Error::Shape("profiles have different player counts".into()));
        }
        let mut sq = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            sq += a.distance(b)?.powi(2);
        }
        Ok(sq.sqrt())
    }
}

/// `x^{−ν}`: every block except the skipped player's, addressed by the
/// original player indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RivalProfile {
    skipped: usize,
    blocks: Vec<Trajectory>,
}

impl RivalProfile {
    pub fn empty(skipped: usize) -> Self {
        Self { skipped, blocks: Vec::new() }
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block of player `j` (`j ≠ skipped`).
    pub fn block(&self, j: usize) -> &Trajectory {
        assert_ne!(j, self.skipped, "player {j} is not a rival");
        if j < self.skipped {
            &self.blocks[j]
        } else {
            &self.blocks[j - 1]
        }
    }
}

#[derive(Clone)]
pub struct PlayerSpec {
    pub label: String,
    pub dim: usize,
    pub objective: Arc<dyn Objective>,
    pub feasible: Arc<dyn FeasibleMap>,
    /// Ambient box `K_ν`; every `X_ν` is intersected with it.
    pub ambient: Polytope,
}

impl fmt::Debug for PlayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlayerSpec")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("class", &self.objective.class())
            .field("rival_dependent", &self.feasible.depends_on_rivals())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct GnepInstance {
    grid: TimeGrid,
    players: Vec<PlayerSpec>,
}

impl GnepInstance {
    /// Checks shapes and that every `X_ν ∩ K_ν` is nonempty at the
    /// reference profile (each block at the point of `K_ν` nearest 0).
    pub fn new(grid: TimeGrid, players: Vec<PlayerSpec>) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::InvalidArgument("a game needs at least one player".into()));
        }
        for (nu, p) in players.iter().enumerate() {
            if p.dim == 0 {
                return Err(Error::InvalidArgument(format!("player {nu} has zero dimension")));
            }
            if p.ambient.len() != grid.intervals() * p.dim
                || p.ambient.intervals() != grid.intervals()
                || p.ambient.dim() != p.dim
            {
                return Err(Error::Shape(format!(
                    "player {nu}: ambient box does not match grid x dim"
                )));
            }
        }
        let inst = Self { grid, players };
        let reference = inst.reference_profile();
        for nu in 0..inst.players() {
            let set = inst.feasible_set(nu, &reference.rivals_of(nu));
            if set.len() != grid.intervals() * inst.players[nu].dim {
                return Err(Error::Shape(format!("player {nu}: feasible set has wrong size")));
            }
            if set.find_point().is_none() {
                return Err(Error::Infeasible {
                    player: nu,
                    detail: "no feasible strategy at the reference profile".into(),
                });
            }
        }
        Ok(inst)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn players(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, nu: usize) -> &PlayerSpec {
        &self.players[nu]
    }

    /// `X_ν(x^{−ν}) ∩ K_ν`
    pub fn feasible_set(&self, nu: usize, rivals: &RivalProfile) -> Polytope {
        let p = &self.players[nu];
        p.feasible
            .polytope(rivals)
            .intersect_box(p.ambient.lower(), p.ambient.upper())
    }

    pub fn objective_value(&self, nu: usize, x: &StrategyProfile) -> f64 {
        let (own, rivals) = x.split(nu).expect("player index");
        self.players[nu].objective.value(&own, &rivals)
    }

    pub(crate) fn reference_profile(&self) -> StrategyProfile {
        let blocks = self
            .players
            .iter()
            .map(|p| {
                let vals = p
                    .ambient
                    .lower()
                    .iter()
                    .zip(p.ambient.upper())
                    .map(|(l, u)| 0.0f64.clamp(*l, *u))
                    .collect();
                Trajectory::from_values(self.grid, p.dim, vals).expect("ambient box shape")
            })
            .collect();
        StrategyProfile { blocks }
    }

    /// Checks `x^ν ∈ X_ν(x^{−ν}) ∩ K_ν` for every player.
    pub fn check_feasible(&self, x: &StrategyProfile, tol: f64) -> Result<()> {
        if x.players() != self.players() {
            return Err(Error::Shape(format!(
                "profile has {} blocks, game has {} players",
                x.players(),
                self.players()
            )));
        }
        for nu in 0..self.players() {
            let block = x.block(nu);
            if block.grid() != self.grid || block.dim() != self.players[nu].dim {
                return Err(Error::Shape(format!("block {nu} has the wrong shape")));
            }
            let set = self.feasible_set(nu, &x.rivals_of(nu));
            if let Err(Error::Membership { constraint, excess }) = set.check(block.values(), tol) {
                return Err(Error::Infeasible {
                    player: nu,
                    detail: format!("strategy violates {constraint} by {excess:.3e}"),
                });
            }
        }
        Ok(())
    }
}
