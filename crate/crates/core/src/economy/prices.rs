use crate::error::{Error, Result};
use crate::fnspace::{TimeGrid, Trajectory};
use crate::gnep::Polytope;

/// `P = {p ≥ 0, (1/T) ∫ Σ_h p_h = 1}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceSet {
    pub grid: TimeGrid,
    pub commodities: usize,
}

impl PriceSet {
    pub fn new(grid: TimeGrid, commodities: usize) -> Self {
        Self { grid, commodities }
    }

    /// `(1/T) ∫ Σ_h p_h`
    pub fn mean_mass(&self, p: &Trajectory) -> f64 {
        self.grid.dt() / self.grid.horizon() * p.values().iter().sum::<f64>()
    }

    /// Total raw mass `Σ p[k,h]` of any member: `T/Δt = m`.
    pub fn cell_mass(&self) -> f64 {
        self.grid.horizon() / self.grid.dt()
    }

    pub fn check(&self, p: &Trajectory, tol: f64) -> Result<()> {
        if p.grid() != self.grid || p.dim() != self.commodities {
            return Err(Error::Shape("price trajectory has the wrong shape".into()));
        }
        if let Some((idx, v)) = p.values().iter().enumerate().find(|(_, v)| **v < -tol) {
            return Err(Error::Membership {
                constraint: format!(
                    "price nonnegativity at interval {}, commodity {}",
                    idx / self.commodities,
                    idx % self.commodities
                ),
                excess: -v,
            });
        }
        let e = (self.mean_mass(p) - 1.0).abs();
        if e > tol {
            return Err(Error::Membership { constraint: "price normalization".into(), excess: e });
        }
        Ok(())
    }

    pub fn polytope(&self) -> Polytope {
        let n = self.grid.intervals() * self.commodities;
        let top = self.cell_mass();
        Polytope::new(self.grid.intervals(), self.commodities, vec![0.0; n], vec![top; n])
            .expect("price box is well formed")
            .with_equality("price normalization", vec![self.grid.dt() / self.grid.horizon(); n], 1.0)
    }

    /// Uniform member `p ≡ 1/l`.
    pub fn uniform(&self) -> Trajectory {
        Trajectory::constant(self.grid, &vec![1.0 / self.commodities as f64; self.commodities])
            .expect("price shape")
    }
}

/// Projection onto `P` in the `Δt`-weighted norm. With uniform weights this
/// is the Euclidean projection onto `{p ≥ 0, Σ p = m}`.
pub fn project_prices(q: &Trajectory) -> Trajectory {
    let mass = q.grid().intervals() as f64;
    let mut sorted = q.values().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite prices"));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (idx, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - mass) / (idx + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    q.map(|v| (v - shift).max(0.0))
}
