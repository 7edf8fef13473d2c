//! Accelerated projected gradient ascent on a polytope, in the `L²` metric
//! of the time grid (`⟨⟨u,v⟩⟩ = Δt·u·v`).

use super::polytope::{dot, Polytope};

/// Iterations without a 10% tighter bound after which the Frank–Wolfe
/// mode gives up.
const STALL_WINDOW: usize = 500;

pub(crate) enum StopRule {
    /// Stop once the Frank–Wolfe bound `max_{x∈X} ⟨⟨∇θ(y), x − y⟩⟩`
    /// drops below the tolerance. For concave θ this bounds `sup θ − θ(y)`.
    FrankWolfe(f64),
    /// Stop once the gradient mapping `L·(P(y + ∇θ/L) − y)` is below the
    /// tolerance in norm.
    Stationary(f64),
}

pub(crate) struct Ascent<'a> {
    pub set: &'a Polytope,
    pub dt: f64,
    pub value: &'a dyn Fn(&[f64]) -> f64,
    pub gradient: &'a dyn Fn(&[f64]) -> Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// Certified gap (Frank–Wolfe) or gradient-mapping norm (stationary).
    pub measure: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Ascent<'_> {
    fn l2_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dt * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    }

    pub fn frank_wolfe_gap(&self, y: &[f64]) -> f64 {
        let g = (self.gradient)(y);
        match self.set.maximize_linear(&g) {
            Some((_, best)) => (self.dt * (best - dot(&g, y))).max(0.0),
            None => f64::INFINITY,
        }
    }

    fn step_from(&self, base: &[f64], lipschitz: f64) -> Vec<f64> {
        let g = (self.gradient)(base);
        let moved: Vec<f64> = base.iter().zip(&g).map(|(b, gi)| b + gi / lipschitz).collect();
        self.set.project(&moved)
    }

    fn clip_to_box(&self, v: &mut [f64]) {
        let (lo, hi) = (self.set.lower(), self.set.upper());
        for (i, x) in v.iter_mut().enumerate() {
            *x = x.clamp(lo[i], hi[i]);
        }
    }

    pub fn run(&self, start: &[f64], stop: StopRule, max_iterations: usize) -> AscentResult {
        let tol = match stop {
            StopRule::FrankWolfe(t) | StopRule::Stationary(t) => t,
        };
        let mut y = self.set.project(start);
        let mut fy = (self.value)(&y);
        let mut v = y.clone();
        let mut t = 1.0f64;
        let mut lipschitz = 1.0f64;

        // Frank–Wolfe mode keeps the best point and the tightest bound seen;
        // the stationary mode reports on the current point.
        let mut best = (y.clone(), fy);
        let mut upper = f64::INFINITY;
        let mut last_gain = 0usize;
        let mut assess = |y: &[f64], fy: f64, lipschitz: f64, best: &mut (Vec<f64>, f64)| -> f64 {
            match stop {
                StopRule::FrankWolfe(_) => {
                    if fy > best.1 {
                        *best = (y.to_vec(), fy);
                    }
                    upper = upper.min(fy + self.frank_wolfe_gap(y));
                    (upper - best.1).max(0.0)
                }
                StopRule::Stationary(_) => {
                    let s = self.step_from(y, lipschitz);
                    lipschitz * self.l2_sq(&s, y).sqrt()
                }
            }
        };
        let finish = |y: Vec<f64>, fy: f64, best: (Vec<f64>, f64), measure: f64, it: usize| {
            let (point, value) = match stop {
                StopRule::FrankWolfe(_) => best,
                StopRule::Stationary(_) => (y, fy),
            };
            AscentResult { point, value, measure, iterations: it, converged: measure <= tol }
        };

        let mut measure = assess(&y, fy, lipschitz, &mut best);
        if measure <= tol {
            return finish(y, fy, best, measure, 0);
        }
        let mut best_measure = measure;

        for it in 1..=max_iterations {
            let fv = (self.value)(&v);
            let gv = (self.gradient)(&v);
            let mut cand;
            let mut fc;
            loop {
                let moved: Vec<f64> = v.iter().zip(&gv).map(|(b, gi)| b + gi / lipschitz).collect();
                cand = self.set.project(&moved);
                fc = (self.value)(&cand);
                let d: Vec<f64> = cand.iter().zip(&v).map(|(a, b)| a - b).collect();
                let model = fv + self.dt * dot(&gv, &d) - 0.5 * lipschitz * self.dt * dot(&d, &d);
                if fc >= model - 1e-13 * (1.0 + fv.abs()) || lipschitz > 1e16 {
                    break;
                }
                lipschitz *= 2.0;
            }
            // gradient restart: the step from v points back against the momentum
            let against: f64 = cand
                .iter()
                .zip(&v)
                .zip(&y)
                .map(|((c, vi), yi)| (c - vi) * (c - yi))
                .sum();
            if against < 0.0 && v != y {
                v.clone_from(&y);
                t = 1.0;
                continue;
            }
            if cand == y {
                // a plain projected step from y no longer moves
                measure = assess(&y, fy, lipschitz, &mut best);
                return finish(y, fy, best, measure, it);
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let mut v_next: Vec<f64> = cand
                .iter()
                .zip(&y)
                .map(|(c, yp)| c + beta * (c - yp))
                .collect();
            self.clip_to_box(&mut v_next);
            let moved = self.l2_sq(&cand, &y).sqrt();
            y = cand;
            fy = fc;
            v = v_next;
            t = t_next;

            let due = match stop {
                StopRule::FrankWolfe(_) => it % 10 == 0 || lipschitz * moved <= tol,
                StopRule::Stationary(_) => lipschitz * moved <= 10.0 * tol || it % 25 == 0,
            };
            if due {
                measure = assess(&y, fy, lipschitz, &mut best);
                if measure <= tol {
                    return finish(y, fy, best, measure, it);
                }
                if measure < 0.9 * best_measure {
                    best_measure = measure;
                    last_gain = it;
                } else if matches!(stop, StopRule::FrankWolfe(_)) && it - last_gain >= STALL_WINDOW {
                    return finish(y, fy, best, measure, it);
                }
            }
            lipschitz = (lipschitz * 0.9).max(1e-8);
        }
        measure = assess(&y, fy, lipschitz, &mut best);
        finish(y, fy, best, measure, max_iterations)
    }
}
