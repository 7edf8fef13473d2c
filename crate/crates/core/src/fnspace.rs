//! Piecewise-constant surrogate of `L²([0,T], ℝ^d)`.
//!
//! A [`TimeGrid`] splits `[0,T]` into `m` equal intervals. A [`Trajectory`]
//! holds one value per interval and coordinate, stored interval-major
//! (`values[k * d + h]`). The pairing of two such functions is computed
//! exactly as `Δt · Σ φ[k,h] ψ[k,h]`. Analytic integrands are sampled at
//! the interval midpoints `t_k = (k + ½) Δt`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if intervals == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one interval".into(),
            ));
        }
        Ok(Self { horizon, intervals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    /// Midpoint of interval `k`.
    pub fn node(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.intervals).map(move |k| self.node(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("trajectory dimension must be positive".into()));
        }
        if values.len() != grid.intervals() * dim {
            return Err(Error::Shape(format!(
                "expected {} values for {} intervals x dim {}, got {}",
                grid.intervals() * dim,
                grid.intervals(),
                dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite trajectory value at interval {}, coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        assert!(dim > 0, "trajectory dimension must be positive");
        Self {
            grid,
            dim,
            values: vec![0.0; grid.intervals() * dim],
        }
    }

    /// Time-constant trajectory with the given per-coordinate value.
    pub fn constant(grid: TimeGrid, value: &[f64]) -> Result<Self> {
        let values = (0..grid.intervals())
            .flat_map(|_| value.iter().copied())
            .collect();
        Self::from_values(grid, value.len(), values)
    }

    /// Midpoint samples of `f(t, h)`.
    pub fn sample<F: Fn(f64, usize) -> f64>(grid: TimeGrid, dim: usize, f: F) -> Result<Self> {
        let values = grid
            .nodes()
            .flat_map(|t| (0..dim).map(move |h| (t, h)))
            .map(|(t, h)| f(t, h))
            .collect();
        Self::from_values(grid, dim, values)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, k: usize, h: usize) -> f64 {
        self.values[k * self.dim + h]
    }

    /// Row of coordinates on interval `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "grid mismatch: (T={}, m={}) vs (T={}, m={})",
                self.grid.horizon,
                self.grid.intervals,
                other.grid.horizon,
                other.grid.intervals
            )));
        }
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// `⟨⟨φ,ψ⟩⟩ = ∫₀ᵀ φ(t)·ψ(t) dt`, exact for piecewise-constant functions.
    pub fn inner_product(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.grid.dt() * dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        (self.grid.dt() * dot(&self.values, &self.values)).sqrt()
    }

    pub fn distance(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        let sq: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.dt() * sq).sqrt())
    }

    /// `∫₀ᵀ φ_h(t) dt` for coordinate `h`.
    pub fn integral(&self, h: usize) -> f64 {
        self.grid.dt() * self.values.iter().skip(h).step_by(self.dim).sum::<f64>()
    }

    pub fn integrals(&self) -> Vec<f64> {
        (0..self.dim).map(|h| self.integral(h)).collect()
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> Trajectory {
        self.map(|v| c * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Trajectory {
        Trajectory {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Trajectory, f: F) -> Result<Trajectory> {
        self.check_compatible(other)?;
        Ok(Trajectory {
            grid: self.grid,
            dim: self.dim,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Same shape, new values. Used by the solvers that work on raw slices.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Trajectory {
        debug_assert_eq!(values.len(), self.values.len());
        Trajectory {
            grid: self.grid,
            dim: self.dim,
            values,
        }
    }
}

/// Entrywise `λ·x + (1−λ)·y`.
pub fn combine(lambda: f64, x: &Trajectory, y: &Trajectory) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "combination weight must lie in [0,1], got {lambda}"
        )));
    }
    // endpoints returned verbatim so that combine(1,x,y) == x bit for bit
    if lambda == 1.0 {
        x.check_compatible(y)?;
        return Ok(x.clone());
    }
    if lambda == 0.0 {
        x.check_compatible(y)?;
        return Ok(y.clone());
    }
    x.zip_with(y, |a, b| {
        if a == b {
            a
        } else {
            lambda * a + (1.0 - lambda) * b
        }
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(t: f64, m: usize) -> TimeGrid {
        TimeGrid::new(t, m).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = grid(1.0, 4);
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.125, 0.375, 0.625, 0.875]);
        let g = grid(2.0, 1);
        assert_eq!(g.dt(), 2.0);
        assert_eq!(g.node(0), 1.0);
        assert!(matches!(TimeGrid::new(1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(TimeGrid::new(0.0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(TimeGrid::new(-1.0, 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn inner_product_examples() {
        for m in [1, 3, 10, 17] {
            let g = grid(1.0, m);
            let one = Trajectory::constant(g, &[1.0]).unwrap();
            assert!((one.inner_product(&one).unwrap() - 1.0).abs() < 1e-15);
        }
        let g = grid(1.0, 2);
        let phi = Trajectory::sample(g, 1, |t, _| t).unwrap();
        assert_eq!(phi.values(), &[0.25, 0.75]);
        let one = Trajectory::constant(g, &[1.0]).unwrap();
        assert_eq!(phi.inner_product(&one).unwrap(), 0.5);

        let g = grid(2.0, 2);
        let phi = Trajectory::from_values(g, 1, vec![1.0, -1.0]).unwrap();
        let psi = Trajectory::from_values(g, 1, vec![1.0, 1.0]).unwrap();
        assert_eq!(phi.inner_product(&psi).unwrap(), 0.0);
    }

    #[test]
    fn shape_errors() {
        let a = Trajectory::zeros(grid(1.0, 2), 1);
        let b = Trajectory::zeros(grid(1.0, 3), 1);
        let c = Trajectory::zeros(grid(1.0, 2), 2);
        assert!(matches!(a.inner_product(&b), Err(Error::Shape(_))));
        assert!(matches!(a.inner_product(&c), Err(Error::Shape(_))));
        assert!(matches!(combine(0.5, &a, &c), Err(Error::Shape(_))));
        assert!(Trajectory::from_values(grid(1.0, 2), 1, vec![1.0]).is_err());
        assert!(Trajectory::from_values(grid(1.0, 1), 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn combine_examples() {
        let g = grid(1.0, 3);
        let x = Trajectory::sample(g, 2, |t, h| t + h as f64).unwrap();
        let y = Trajectory::sample(g, 2, |t, h| t * t - h as f64).unwrap();
        assert_eq!(combine(1.0, &x, &y).unwrap(), x);
        assert_eq!(combine(0.0, &x, &y).unwrap(), y);
        let two = Trajectory::constant(g, &[2.0]).unwrap();
        let zero = Trajectory::constant(g, &[0.0]).unwrap();
        let mid = combine(0.5, &two, &zero).unwrap();
        assert!(mid.values().iter().all(|&v| v == 1.0));
        assert!(combine(1.5, &x, &y).is_err());
        assert!(combine(-0.1, &x, &y).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(Trajectory::zeros(grid(3.0, 5), 2).norm(), 0.0);
        let one = Trajectory::constant(grid(4.0, 7), &[1.0]).unwrap();
        assert!((one.norm() - 2.0).abs() < 1e-15);
        let v = Trajectory::from_values(grid(1.0, 1), 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(v.norm(), 5.0);
    }

    fn traj_pair() -> impl Strategy<Value = (Trajectory, Trajectory, Trajectory)> {
        (1usize..12, 1usize..4, 0.1f64..10.0).prop_flat_map(|(m, d, t)| {
            let n = m * d;
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(move |(a, b, c)| {
                    let g = TimeGrid::new(t, m).unwrap();
                    (
                        Trajectory::from_values(g, d, a).unwrap(),
                        Trajectory::from_values(g, d, b).unwrap(),
                        Trajectory::from_values(g, d, c).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn bilinearity((phi, chi, psi) in traj_pair(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let lhs = phi.scaled(a).add(&chi.scaled(b)).unwrap().inner_product(&psi).unwrap();
            let rhs = a * phi.inner_product(&psi).unwrap() + b * chi.inner_product(&psi).unwrap();
            let scale = 1.0 + (a.abs() * phi.norm() + b.abs() * chi.norm()) * psi.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn cauchy_schwarz((phi, psi, _c) in traj_pair()) {
            let ip = phi.inner_product(&psi).unwrap();
            prop_assert!(ip.abs() <= phi.norm() * psi.norm() + 1e-12);
        }

        #[test]
        fn refinement_keeps_pairing((phi, psi, _c) in traj_pair()) {
            let g = phi.grid();
            let fine = TimeGrid::new(g.horizon(), 2 * g.intervals()).unwrap();
            let refine = |x: &Trajectory| {
                let vals = (0..fine.intervals())
                    .flat_map(|k| x.row(k / 2).to_vec())
                    .collect();
                Trajectory::from_values(fine, x.dim(), vals).unwrap()
            };
            let coarse = phi.inner_product(&psi).unwrap();
            let refined = refine(&phi).inner_product(&refine(&psi)).unwrap();
            prop_assert!((coarse - refined).abs() <= 1e-12 * (1.0 + coarse.abs()));
        }

        #[test]
        fn combine_with_self_is_identity((x, _y, _z) in traj_pair(), lambda in 0.0f64..=1.0) {
            prop_assert_eq!(combine(lambda, &x, &x).unwrap(), x);
        }
    }
}
