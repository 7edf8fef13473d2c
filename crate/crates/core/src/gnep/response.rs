use super::ascent::{Ascent, StopRule};
use super::{GnepInstance, ObjectiveClass, RivalProfile};
use crate::error::{Error, Result};
use crate::fnspace::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub point: Trajectory,
    pub value: f64,
    /// Upper bound on `sup θ − value` (0 for closed-form linear responses).
    /// Exceeds the requested tolerance when the iteration budget ran out
    /// first; `value + certified_gap` is an upper bound on `sup θ` either way.
    pub certified_gap: f64,
    pub iterations: usize,
}

/// A maximizer of `θ_ν(·, rivals)` over `X_ν(rivals) ∩ K_ν`, i.e. an
/// element of `S_ν(x^{−ν})` up to `opts.tolerance`.
pub fn best_response(
    inst: &GnepInstance,
    nu: usize,
    rivals: &RivalProfile,
    opts: &InnerOptions,
) -> Result<Response> {
    best_response_from(inst, nu, rivals, None, opts)
}

/// [`best_response`] with a warm start for the iterative route.
pub fn best_response_from(
    inst: &GnepInstance,
    nu: usize,
    rivals: &RivalProfile,
    start: Option<&Trajectory>,
    opts: &InnerOptions,
) -> Result<Response> {
    let player = inst.player(nu);
    let grid = inst.grid();
    let set = inst.feasible_set(nu, rivals);
    let template = Trajectory::zeros(grid, player.dim);
    let objective = player.objective.as_ref();

    match objective.class() {
        ObjectiveClass::Linear => {
            let coef = objective.gradient(&template, rivals);
            let (y, _) = set.maximize_linear(coef.values()).ok_or_else(|| Error::Infeasible {
                player: nu,
                detail: "best-response feasible set is empty".into(),
            })?;
            let point = template.with_values(y);
            let value = objective.value(&point, rivals);
            Ok(Response { point, value, certified_gap: 0.0, iterations: 0 })
        }
        ObjectiveClass::Concave => {
            let init = match start {
                Some(s) => s.values().to_vec(),
                None => set.find_point().ok_or_else(|| Error::Infeasible {
                    player: nu,
                    detail: "best-response feasible set is empty".into(),
                })?,
            };
            let value = |y: &[f64]| objective.value(&template.with_values(y.to_vec()), rivals);
            let gradient =
                |y: &[f64]| objective.gradient(&template.with_values(y.to_vec()), rivals).into_values();
            let ascent = Ascent { set: &set, dt: grid.dt(), value: &value, gradient: &gradient };
            let out = ascent.run(&init, StopRule::FrankWolfe(opts.tolerance), opts.max_iterations);
            if !out.measure.is_finite() {
                return Err(Error::Convergence {
                    player: nu,
                    iterations: out.iterations,
                    gap: out.measure,
                    best: Box::new(template.with_values(out.point)),
                });
            }
            Ok(Response {
                point: template.with_values(out.point),
                value: out.value,
                certified_gap: out.measure,
                iterations: out.iterations,
            })
        }
    }
}

/// Regularized response
/// `argmax_{y ∈ X_ν} θ_ν(y, rivals) − ‖y − anchor‖² / (2·step)`.
///
/// Single-valued and continuous in the data. A block is a fixed point of
/// this map exactly when it maximizes `θ_ν` over `X_ν`, so the map has the
/// same fixed points as the best-response correspondence.
pub fn proximal_response(
    inst: &GnepInstance,
    nu: usize,
    rivals: &RivalProfile,
    anchor: &Trajectory,
    step: f64,
    opts: &InnerOptions,
) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("proximal step must be positive, got {step}")));
    }
    let player = inst.player(nu);
    let grid = inst.grid();
    let set = inst.feasible_set(nu, rivals);
    let objective = player.objective.as_ref();

    match objective.class() {
        ObjectiveClass::Linear => {
            let coef = objective.gradient(anchor, rivals);
            let moved: Vec<f64> = anchor
                .values()
                .iter()
                .zip(coef.values())
                .map(|(a, c)| a + step * c)
                .collect();
            Ok(anchor.with_values(set.project(&moved)))
        }
        ObjectiveClass::Concave => {
            let dt = grid.dt();
            let a = anchor.values();
            let value = |y: &[f64]| {
                let dist: f64 = y.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum();
                objective.value(&anchor.with_values(y.to_vec()), rivals) - dt * dist / (2.0 * step)
            };
            let gradient = |y: &[f64]| {
                let mut g = objective.gradient(&anchor.with_values(y.to_vec()), rivals).into_values();
                for (gi, (p, q)) in g.iter_mut().zip(y.iter().zip(a)) {
                    *gi -= (p - q) / step;
                }
                g
            };
            let ascent = Ascent { set: &set, dt, value: &value, gradient: &gradient };
            // strong concavity 1/step turns a gradient-mapping bound into a distance bound
            let out = ascent.run(a, StopRule::Stationary(opts.tolerance / step), opts.max_iterations);
            if !out.converged {
                return Err(Error::Convergence {
                    player: nu,
                    iterations: out.iterations,
                    gap: out.measure,
                    best: Box::new(anchor.with_values(out.point)),
                });
            }
            Ok(anchor.with_values(out.point))
        }
    }
}
