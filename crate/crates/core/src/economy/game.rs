//! The economy as a game with `s + r + 1` players: producers first, then
//! consumers, then the price player.

use std::sync::Arc;

use super::{EconomyModel, PriceSet};
use crate::error::{Error, Result};
use crate::fnspace::Trajectory;
use crate::gnep::{
    FeasibleMap, GnepInstance, Objective, ObjectiveClass, PlayerSpec, Polytope, RivalProfile,
};

fn rival_plans(rivals: &RivalProfile, range: std::ops::Range<usize>) -> Vec<Trajectory> {
    range.map(|j| rivals.block(j).clone()).collect()
}

/// `θ_j = ⟨⟨p, a^j⟩⟩`
pub struct ProducerObjective {
    pub price_index: usize,
}

impl Objective for ProducerObjective {
    fn value(&self, own: &Trajectory, rivals: &RivalProfile) -> f64 {
        rivals.block(self.price_index).inner_product(own).expect("price shape")
    }

    fn gradient(&self, _own: &Trajectory, rivals: &RivalProfile) -> Trajectory {
        rivals.block(self.price_index).clone()
    }

    fn class(&self) -> ObjectiveClass {
        ObjectiveClass::Linear
    }
}

/// `θ = u_i(b^i)`
pub struct ConsumerObjective {
    pub model: Arc<EconomyModel>,
    pub consumer: usize,
}

impl Objective for ConsumerObjective {
    fn value(&self, own: &Trajectory, _rivals: &RivalProfile) -> f64 {
        self.model.utility(self.consumer, own)
    }

    fn gradient(&self, own: &Trajectory, _rivals: &RivalProfile) -> Trajectory {
        let set = &self.model.consumers[self.consumer].set;
        set.utility.gradient(own, &set.floor)
    }

    fn class(&self) -> ObjectiveClass {
        match self.model.consumers[self.consumer].set.utility {
            super::Utility::Linear { .. } => ObjectiveClass::Linear,
            _ => ObjectiveClass::Concave,
        }
    }
}

/// `θ = ⟨⟨p, Σ_i (b^i − ξ^i) − Σ_j a^j⟩⟩`
pub struct PriceObjective {
    pub model: Arc<EconomyModel>,
}

impl PriceObjective {
    fn excess(&self, rivals: &RivalProfile) -> Trajectory {
        let m = &self.model;
        let s = m.producers();
        let a = rival_plans(rivals, 0..s);
        let b = rival_plans(rivals, s..s + m.consumers());
        m.excess_demand(&a, &b).expect("profile shape")
    }
}

impl Objective for PriceObjective {
    fn value(&self, own: &Trajectory, rivals: &RivalProfile) -> f64 {
        self.excess(rivals).inner_product(own).expect("price shape")
    }

    fn gradient(&self, _own: &Trajectory, rivals: &RivalProfile) -> Trajectory {
        self.excess(rivals)
    }

    fn class(&self) -> ObjectiveClass {
        ObjectiveClass::Linear
    }
}

/// `D_i(a, p) ∩ S` (or `D_i(a, p)` without truncation).
pub struct ConsumerFeasible {
    pub model: Arc<EconomyModel>,
    pub consumer: usize,
    /// Consumer box with the integral caps already attached.
    pub base: Polytope,
}

impl ConsumerFeasible {
    pub fn new(model: Arc<EconomyModel>, consumer: usize, r: f64) -> Result<Self> {
        let caps = model.truncated_consumption_bound(r);
        let (lower, upper) = model.consumer_box(consumer, &caps);
        let (m, l) = (model.grid.intervals(), model.commodities);
        let dt = model.grid.dt();
        let mut base = Polytope::new(m, l, lower, upper)?;
        if model.truncation {
            for (h, cap) in caps.iter().enumerate() {
                let coef = (0..m * l).map(|idx| if idx % l == h { dt } else { 0.0 }).collect();
                base = base.with_inequality(format!("consumption cap on commodity {h}"), coef, *cap);
            }
        }
        Ok(Self { model, consumer, base })
    }
}

impl FeasibleMap for ConsumerFeasible {
    fn polytope(&self, rivals: &RivalProfile) -> Polytope {
        let m = &self.model;
        let p = rivals.block(m.price_index());
        let a = rival_plans(rivals, 0..m.producers());
        let rhs = m.budget_rhs(self.consumer, &a, p).expect("profile shape");
        let dt = m.grid.dt();
        let coef = p.values().iter().map(|v| dt * v).collect();
        self.base.clone().with_inequality(format!("budget of consumer {}", self.consumer), coef, rhs)
    }

    fn depends_on_rivals(&self) -> bool {
        true
    }
}

fn production_polytope(model: &EconomyModel, j: usize) -> Result<Polytope> {
    let a = &model.producers[j];
    let dt = model.grid.dt();
    let mut set = Polytope::new(
        model.grid.intervals(),
        model.commodities,
        a.lower.values().to_vec(),
        a.upper.values().to_vec(),
    )?;
    for (q, cut) in a.cuts.iter().enumerate() {
        let coef = cut.coef.values().iter().map(|c| dt * c).collect();
        set = set.with_inequality(format!("cut {q} of producer {j}"), coef, cut.rhs);
    }
    Ok(set)
}

impl EconomyModel {
    /// `A_j` in raw trajectory coordinates.
    pub fn production_set(&self, j: usize) -> Result<Polytope> {
        production_polytope(self, j)
    }

    /// The game whose equilibria are the economy's equilibria. Refused when
    /// [`validate`](Self::validate) reports violations or `r ≤ 0`.
    pub fn to_gnep(&self, r: f64) -> Result<GnepInstance> {
        self.validate().into_result()?;
        self.game(r)
    }

    /// [`to_gnep`](Self::to_gnep) without the validation pass.
    pub(crate) fn game(&self, r: f64) -> Result<GnepInstance> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("truncation margin must be positive, got {r}")));
        }
        let model = Arc::new(self.clone());
        let price = self.price_index();
        let (m, l) = (self.grid.intervals(), self.commodities);
        let mut players = Vec::with_capacity(self.players());

        for j in 0..self.producers() {
            let set = production_polytope(self, j)?;
            let ambient = Polytope::new(m, l, set.lower().to_vec(), set.upper().to_vec())?;
            players.push(PlayerSpec {
                label: format!("producer {j}"),
                dim: l,
                objective: Arc::new(ProducerObjective { price_index: price }),
                feasible: Arc::new(set),
                ambient,
            });
        }
        for i in 0..self.consumers() {
            let feasible = ConsumerFeasible::new(model.clone(), i, r)?;
            let ambient = Polytope::new(m, l, feasible.base.lower().to_vec(), feasible.base.upper().to_vec())?;
            players.push(PlayerSpec {
                label: format!("consumer {i}"),
                dim: l,
                objective: Arc::new(ConsumerObjective { model: model.clone(), consumer: i }),
                feasible: Arc::new(feasible),
                ambient,
            });
        }
        let prices = PriceSet::new(self.grid, l).polytope();
        let ambient = Polytope::new(m, l, prices.lower().to_vec(), prices.upper().to_vec())?;
        players.push(PlayerSpec {
            label: "prices".into(),
            dim: l,
            objective: Arc::new(PriceObjective { model }),
            feasible: Arc::new(prices),
            ambient,
        });
        GnepInstance::new(self.grid, players)
    }
}
