use super::response::{best_response_from, proximal_response, InnerOptions, Response};
use super::{GnepInstance, StrategyProfile};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fnspace::{combine, Trajectory};

/// Tolerance for `x^ν ∈ X_ν(x^{−ν})` at the solver and gap level.
pub(crate) const MEMBERSHIP_TOL: f64 = 1e-9;
/// Relative improvement below which a response counts as a tie with the
/// current block.
const RESPONSE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    Fixed(f64),
    /// `λ_k = initial / (1 + k·decay)`
    Diminishing { initial: f64, decay: f64 },
}

impl Damping {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            Damping::Fixed(l) => l,
            Damping::Diminishing { initial, decay } => initial / (1.0 + k as f64 * decay),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    /// Every player responds to the same iterate.
    Jacobi,
    /// Players respond in index order to the partially updated iterate.
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseRule {
    /// Move toward an element of `S_ν(x^{−ν})`.
    Exact,
    /// Move toward the regularized response with the given step.
    Proximal { step: f64 },
    /// Regularized response evaluated against the rivals' look-ahead
    /// regularized responses (extragradient). Jacobi order only.
    ExtraProximal { step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSchedule {
    pub damping: Damping,
    pub max_iters: usize,
    pub gap_tolerance: f64,
    pub inner: InnerOptions,
    pub order: UpdateOrder,
    pub rule: ResponseRule,
    pub execution: Execution,
}

impl Default for SolverSchedule {
    fn default() -> Self {
        Self {
            damping: Damping::Fixed(1.0),
            max_iters: 5000,
            gap_tolerance: 1e-6,
            inner: InnerOptions::default(),
            order: UpdateOrder::Jacobi,
            rule: ResponseRule::ExtraProximal { step: 0.5 },
            execution: Execution::default(),
        }
    }
}

impl SolverSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self.damping {
            Damping::Fixed(l) if !(l > 0.0 && l <= 1.0) => {
                return bad(format!("damping must lie in (0,1], got {l}"))
            }
            Damping::Diminishing { initial, decay }
                if !(initial > 0.0 && initial <= 1.0 && decay >= 0.0 && decay.is_finite()) =>
            {
                return bad(format!("diminishing damping needs 0 < λ₀ ≤ 1 and decay ≥ 0, got {initial}, {decay}"))
            }
            _ => {}
        }
        if !(self.gap_tolerance > 0.0) || !(self.inner.tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let ResponseRule::Proximal { step } | ResponseRule::ExtraProximal { step } = self.rule {
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("proximal step must be positive, got {step}"));
            }
        }
        if matches!(self.rule, ResponseRule::ExtraProximal { .. }) && self.order != UpdateOrder::Jacobi {
            return bad("the extragradient rule needs Jacobi order".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub gap: f64,
    /// `‖x_{k+1} − x_k‖`; NaN on the last evaluated iterate.
    pub residual: f64,
    /// Distance moved when re-projecting rival-dependent blocks.
    pub projection_distance: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub profile: StrategyProfile,
    pub converged: bool,
    pub iterations: usize,
    pub gap: f64,
    pub per_player_gap: Vec<f64>,
    /// Distance from `x0` to its projection into the feasible sets.
    pub initial_projection: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub total: f64,
    pub per_player: Vec<f64>,
    pub responses: Vec<Response>,
}

/// `Σ_ν [max_{X_ν(x^{−ν})} θ_ν(·, x^{−ν}) − θ_ν(x)]`, each term clamped at 0.
///
/// The maximum is replaced by the certified upper bound of the inner solver,
/// so the result never understates the true gap by more than roundoff.
pub fn ni_gap(inst: &GnepInstance, x: &StrategyProfile, inner: &InnerOptions) -> Result<f64> {
    ni_gap_detailed(inst, x, None, inner, Execution::default()).map(|r| r.total)
}

pub fn ni_gap_detailed(
    inst: &GnepInstance,
    x: &StrategyProfile,
    warm: Option<&[Trajectory]>,
    inner: &InnerOptions,
    exec: Execution,
) -> Result<GapReport> {
    inst.check_feasible(x, MEMBERSHIP_TOL)?;
    let results = exec.map(inst.players(), |nu| -> Result<(f64, Response)> {
        let rivals = x.rivals_of(nu);
        let start = warm.map(|w| &w[nu]).unwrap_or(x.block(nu));
        let mut br = best_response_from(inst, nu, &rivals, Some(start), inner)?;
        let current = inst.player(nu).objective.value(x.block(nu), &rivals);
        let upper = br.value + br.certified_gap;
        if current >= br.value - RESPONSE_TIE * (1.0 + current.abs()) {
            // x^ν is feasible and as good up to roundoff; ties keep the
            // current block so that fixed points of S are reported as such
            br.point = x.block(nu).clone();
            br.value = current;
            br.certified_gap = (upper - current).max(0.0);
        }
        Ok((upper - current, br))
    });
    let mut per_player = Vec::with_capacity(results.len());
    let mut responses = Vec::with_capacity(results.len());
    for r in results {
        let (gap, br) = r?;
        per_player.push(gap.max(0.0));
        responses.push(br);
    }
    Ok(GapReport { total: per_player.iter().sum(), per_player, responses })
}

fn project_block(inst: &GnepInstance, x: &mut StrategyProfile, nu: usize) -> Result<f64> {
    let set = inst.feasible_set(nu, &x.rivals_of(nu));
    let block = x.block(nu);
    if set.contains(block.values(), 0.0) {
        return Ok(0.0);
    }
    let projected = set.project(block.values());
    if let Err(Error::Membership { constraint, excess }) = set.check(&projected, MEMBERSHIP_TOL) {
        return Err(Error::Infeasible {
            player: nu,
            detail: format!("cannot restore feasibility ({constraint} off by {excess:.3e})"),
        });
    }
    let projected = block.with_values(projected);
    let moved = projected.distance(block)?;
    x.set_block(nu, projected);
    Ok(moved)
}

fn respond(
    inst: &GnepInstance,
    x: &StrategyProfile,
    nu: usize,
    rule: ResponseRule,
    exact: Option<&Response>,
    inner: &InnerOptions,
) -> Result<Trajectory> {
    match rule {
        ResponseRule::Exact => match exact {
            Some(r) => Ok(r.point.clone()),
            None => best_response_from(inst, nu, &x.rivals_of(nu), Some(x.block(nu)), inner).map(|r| r.point),
        },
        ResponseRule::Proximal { step } | ResponseRule::ExtraProximal { step } => {
            proximal_response(inst, nu, &x.rivals_of(nu), x.block(nu), step, inner)
        }
    }
}

/// Damped best-response iteration
/// `x_{k+1} = λ_k·R(x_k) + (1 − λ_k)·x_k`, stopping at the first iterate
/// whose Nikaido–Isoda gap is at most `sched.gap_tolerance`.
///
/// Running out of iterations is not an error: the best-gap iterate is
/// returned with `converged = false`.
pub fn solve(inst: &GnepInstance, x0: &StrategyProfile, sched: &SolverSchedule) -> Result<SolveOutcome> {
    sched.validate()?;
    if x0.players() != inst.players() {
        return Err(Error::Shape(format!(
            "initial profile has {} blocks, game has {} players",
            x0.players(),
            inst.players()
        )));
    }
    let mut x = x0.clone();
    let mut initial_sq = 0.0;
    for nu in 0..inst.players() {
        initial_sq += project_block(inst, &mut x, nu)?.powi(2);
    }
    let initial_projection = initial_sq.sqrt();

    let mut trace = Vec::new();
    let mut warm: Vec<Trajectory> = x.blocks().to_vec();
    let mut best: Option<(f64, StrategyProfile, Vec<f64>)> = None;

    for k in 0..=sched.max_iters {
        let report = ni_gap_detailed(inst, &x, Some(&warm), &sched.inner, sched.execution)?;
        warm = report.responses.iter().map(|r| r.point.clone()).collect();
        let lambda = sched.damping.at(k);
        if best.as_ref().is_none_or(|b| report.total < b.0) {
            best = Some((report.total, x.clone(), report.per_player.clone()));
        }
        if report.total <= sched.gap_tolerance || k == sched.max_iters {
            trace.push(TraceEntry {
                iteration: k,
                gap: report.total,
                residual: f64::NAN,
                projection_distance: 0.0,
                damping: lambda,
            });
            if report.total <= sched.gap_tolerance {
                return Ok(SolveOutcome {
                    profile: x,
                    converged: true,
                    iterations: k,
                    gap: report.total,
                    per_player_gap: report.per_player,
                    initial_projection,
                    trace,
                });
            }
            break;
        }

        let mut next = x.clone();
        match sched.order {
            UpdateOrder::Jacobi => {
                let moves = match sched.rule {
                    ResponseRule::ExtraProximal { step } => {
                        let ahead = sched.execution.map(inst.players(), |nu| {
                            respond(inst, &x, nu, sched.rule, None, &sched.inner)
                        });
                        let mid = StrategyProfile::new(ahead.into_iter().collect::<Result<Vec<_>>>()?)?;
                        sched.execution.map(inst.players(), |nu| {
                            proximal_response(inst, nu, &mid.rivals_of(nu), x.block(nu), step, &sched.inner)
                        })
                    }
                    _ => sched.execution.map(inst.players(), |nu| {
                        respond(inst, &x, nu, sched.rule, Some(&report.responses[nu]), &sched.inner)
                    }),
                };
                for (nu, r) in moves.into_iter().enumerate() {
                    next.set_block(nu, combine(lambda, &r?, x.block(nu))?);
                }
            }
            UpdateOrder::GaussSeidel => {
                for nu in 0..inst.players() {
                    let exact = if next == x { Some(&report.responses[nu]) } else { None };
                    let r = respond(inst, &next, nu, sched.rule, exact, &sched.inner)?;
                    let moved = combine(lambda, &r, next.block(nu))?;
                    next.set_block(nu, moved);
                    project_block(inst, &mut next, nu)?;
                }
            }
        }
        let mut proj_sq = 0.0;
        for nu in 0..inst.players() {
            if inst.player(nu).feasible.depends_on_rivals() {
                proj_sq += project_block(inst, &mut next, nu)?.powi(2);
            }
        }
        let residual = next.distance(&x)?;
        trace.push(TraceEntry {
            iteration: k,
            gap: report.total,
            residual,
            projection_distance: proj_sq.sqrt(),
            damping: lambda,
        });
        x = next;
    }

    let (gap, profile, per_player_gap) = best.expect("at least one iterate is evaluated");
    Ok(SolveOutcome {
        profile,
        converged: false,
        iterations: sched.max_iters,
        gap,
        per_player_gap,
        initial_projection,
        trace,
    })
}
