//! Bounded polyhedra `{lo ≤ y ≤ ub, a_q·y ≤ b_q, e_r·y = f_r}` in the raw
//! coordinates of a trajectory (`y[k·d + h]`).
//!
//! Coefficients are plain Euclidean dot products. Callers that describe
//! constraints as `⟨⟨c, y⟩⟩ ≤ b` fold the `Δt` factor into the coefficient.

use super::lp::{LinearProgram, LpOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub coef: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    intervals: usize,
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    inequalities: Vec<Constraint>,
    equalities: Vec<Constraint>,
}

const PROJECTION_SWEEPS: usize = 5_000;

impl Polytope {
    pub fn new(intervals: usize, dim: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = intervals * dim;
        if lower.len() != n || upper.len() != n {
            return Err(Error::Shape(format!(
                "box bounds need {n} entries, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) {
                return Err(Error::InvalidArgument(format!("box bound {i} is not finite")));
            }
            if l > u {
                return Err(Error::InvalidArgument(format!(
                    "box bound {i}: lower {l} exceeds upper {u}"
                )));
            }
        }
        Ok(Self {
            intervals,
            dim,
            lower,
            upper,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        })
    }

    pub fn with_inequality(mut self, label: impl Into<String>, coef: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(coef.len(), self.len());
        self.inequalities.push(Constraint {
            label: label.into(),
            coef,
            rhs,
        });
        self
    }

    pub fn with_equality(mut self, label: impl Into<String>, coef: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(coef.len(), self.len());
        self.equalities.push(Constraint {
            label: label.into(),
            coef,
            rhs,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    /// Shrinks the box to its intersection with `[lower, upper]`.
    pub fn intersect_box(mut self, lower: &[f64], upper: &[f64]) -> Self {
        for i in 0..self.len() {
            self.lower[i] = self.lower[i].max(lower[i]);
            self.upper[i] = self.upper[i].min(upper[i]);
            if self.lower[i] > self.upper[i] {
                // empty intersection is reported by the feasibility check
                self.upper[i] = self.lower[i];
            }
        }
        self
    }

    /// Largest constraint violation at `y`, with the violated constraint's label.
    pub fn worst_violation(&self, y: &[f64]) -> (String, f64) {
        let mut worst = (String::from("none"), 0.0f64);
        for (i, &v) in y.iter().enumerate() {
            let (k, h) = (i / self.dim, i % self.dim);
            let e = (self.lower[i] - v).max(v - self.upper[i]);
            if e > worst.1 {
                worst = (format!("box bound at interval {k}, coordinate {h}"), e);
            }
        }
        for c in &self.inequalities {
            let e = dot(&c.coef, y) - c.rhs;
            if e > worst.1 {
                worst = (c.label.clone(), e);
            }
        }
        for c in &self.equalities {
            let e = (dot(&c.coef, y) - c.rhs).abs();
            if e > worst.1 {
                worst = (c.label.clone(), e);
            }
        }
        worst
    }

    /// Membership with absolute tolerance `tol` scaled by each constraint's magnitude.
    pub fn check(&self, y: &[f64], tol: f64) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            let scale = 1.0 + self.lower[i].abs().max(self.upper[i].abs());
            if v < self.lower[i] - tol * scale || v > self.upper[i] + tol * scale {
                return Err(Error::Membership {
                    constraint: format!(
                        "box bound at interval {}, coordinate {}",
                        i / self.dim,
                        i % self.dim
                    ),
                    excess: (self.lower[i] - v).max(v - self.upper[i]),
                });
            }
        }
        for c in &self.inequalities {
            let e = dot(&c.coef, y) - c.rhs;
            if e > tol * (1.0 + c.rhs.abs()) {
                return Err(Error::Membership {
                    constraint: c.label.clone(),
                    excess: e,
                });
            }
        }
        for c in &self.equalities {
            let e = (dot(&c.coef, y) - c.rhs).abs();
            if e > tol * (1.0 + c.rhs.abs()) {
                return Err(Error::Membership {
                    constraint: c.label.clone(),
                    excess: e,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.check(y, tol).is_ok()
    }

    /// Euclidean projection of `z`.
    ///
    /// Dual coordinate ascent on the constraint multipliers; for a fixed
    /// multiplier vector the minimizer is `clip(z − Σ μ_j a_j)`, and each
    /// one-dimensional dual update is solved exactly over the breakpoints of
    /// the piecewise-linear constraint function.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let constraints: Vec<(&Constraint, bool)> = self
            .inequalities
            .iter()
            .map(|c| (c, false))
            .chain(self.equalities.iter().map(|c| (c, true)))
            .collect();
        if constraints.is_empty() {
            return self.clip(z.to_vec());
        }
        let mut mu = vec![0.0; constraints.len()];
        let mut w = z.to_vec();
        let sweeps = if constraints.len() == 1 { 1 } else { PROJECTION_SWEEPS };
        for _ in 0..sweeps {
            let mut change = 0.0f64;
            for (j, (c, eq)) in constraints.iter().enumerate() {
                axpy(mu[j], &c.coef, &mut w);
                let new = self.solve_multiplier(&w, &c.coef, c.rhs, *eq);
                axpy(-new, &c.coef, &mut w);
                change = change.max((new - mu[j]).abs() * norm_inf(&c.coef));
                mu[j] = new;
            }
            // fresh recomputation keeps drift out of w
            w.copy_from_slice(z);
            for (j, (c, _)) in constraints.iter().enumerate() {
                axpy(-mu[j], &c.coef, &mut w);
            }
            if change <= 1e-15 * (1.0 + norm_inf(z)) {
                break;
            }
        }
        self.clip(w)
    }

    fn clip(&self, mut w: Vec<f64>) -> Vec<f64> {
        for (i, v) in w.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
        w
    }

    /// Root of `g(μ) = a·clip(w − μa) = rhs`; `μ ≥ 0` for inequalities.
    fn solve_multiplier(&self, w: &[f64], a: &[f64], rhs: f64, equality: bool) -> f64 {
        let g = |mu: f64| -> f64 {
            a.iter()
                .zip(w)
                .enumerate()
                .map(|(i, (&ai, &wi))| {
                    if ai == 0.0 {
                        0.0
                    } else {
                        ai * (wi - mu * ai).clamp(self.lower[i], self.upper[i])
                    }
                })
                .sum()
        };
        if !equality && g(0.0) <= rhs {
            return 0.0;
        }
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * a.len() + 1);
        for (i, (&ai, &wi)) in a.iter().zip(w).enumerate() {
            if ai != 0.0 {
                breaks.push((wi - self.lower[i]) / ai);
                breaks.push((wi - self.upper[i]) / ai);
            }
        }
        if !equality {
            breaks.retain(|&b| b > 0.0);
            breaks.push(0.0);
        }
        if breaks.is_empty() {
            return 0.0;
        }
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup();
        let first = breaks[0];
        let last = *breaks.last().unwrap();
        // g is nonincreasing; outside the breakpoint range it is constant
        if g(first) <= rhs {
            return first;
        }
        if g(last) >= rhs {
            return last;
        }
        let (mut lo, mut hi) = (0usize, breaks.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if g(breaks[mid]) >= rhs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (ma, mb) = (breaks[lo], breaks[hi]);
        let (ga, gb) = (g(ma), g(mb));
        if ga == gb {
            return ma;
        }
        ma + (ga - rhs) / (ga - gb) * (mb - ma)
    }

    /// Maximizes `c·y`. Zero coefficients on a pure box pick the point
    /// closest to 0; on a single weighted simplex the mass goes to the
    /// largest coefficient, ties broken by smallest `(h, k)`.
    pub fn maximize_linear(&self, c: &[f64]) -> Option<(Vec<f64>, f64)> {
        if self.inequalities.is_empty() && self.equalities.is_empty() {
            let y: Vec<f64> = c
                .iter()
                .enumerate()
                .map(|(i, &ci)| {
                    if ci > 0.0 {
                        self.upper[i]
                    } else if ci < 0.0 {
                        self.lower[i]
                    } else {
                        0.0f64.clamp(self.lower[i], self.upper[i])
                    }
                })
                .collect();
            let v = dot(c, &y);
            return Some((y, v));
        }
        if let Some(vertex) = self.simplex_vertex(c) {
            let v = dot(c, &vertex);
            return Some((vertex, v));
        }
        let ineq: Vec<(&[f64], f64)> = self
            .inequalities
            .iter()
            .map(|q| (q.coef.as_slice(), q.rhs))
            .collect();
        let eq: Vec<(&[f64], f64)> = self
            .equalities
            .iter()
            .map(|q| (q.coef.as_slice(), q.rhs))
            .collect();
        let lp = LinearProgram {
            lower: &self.lower,
            upper: &self.upper,
            inequalities: ineq,
            equalities: eq,
        };
        match lp.maximize(c) {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            LpOutcome::Infeasible { .. } => None,
        }
    }

    /// Closed form for `{0 ≤ y ≤ ub, w·Σy = s}` with uniform positive `w`.
    fn simplex_vertex(&self, c: &[f64]) -> Option<Vec<f64>> {
        if !self.inequalities.is_empty() || self.equalities.len() != 1 {
            return None;
        }
        let e = &self.equalities[0];
        let w = e.coef[0];
        if w <= 0.0 || e.coef.iter().any(|&x| x != w) || self.lower.iter().any(|&l| l != 0.0) {
            return None;
        }
        let mass = e.rhs / w;
        if mass < 0.0 || self.upper.iter().any(|&u| u < mass) {
            return None;
        }
        let best = (0..c.len()).max_by(|&i, &j| {
            c[i].partial_cmp(&c[j])
                .unwrap()
                .then_with(|| self.tie_key(j).cmp(&self.tie_key(i)))
        })?;
        let mut y = vec![0.0; c.len()];
        y[best] = mass;
        Some(y)
    }

    fn tie_key(&self, i: usize) -> (usize, usize) {
        (i % self.dim, i / self.dim)
    }

    /// Some point of the polytope, or `None` when it is empty.
    pub fn find_point(&self) -> Option<Vec<f64>> {
        self.maximize_linear(&vec![0.0; self.len()]).map(|(y, _)| y)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if alpha != 0.0 {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
