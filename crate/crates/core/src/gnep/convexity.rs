//! Sampling checks for quasiconcavity and semistrict quasiconcavity.
//!
//! A pass only means that no counterexample showed up among the sampled
//! segments. Each trial draws from its own generator seeded by
//! `(seed, trial)`, so the outcome is the same under any execution mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::Execution;
use crate::fnspace::{combine, TimeGrid, Trajectory};

const QUASI_SLACK: f64 = 1e-10;
const DISTINCT_VALUES: f64 = 1e-8;

/// Draws pairs of points from a convex set.
pub trait PairSampler: Sync {
    fn pair(&self, rng: &mut ChaCha8Rng) -> (Trajectory, Trajectory);
}

/// Independent uniform points of a box.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    pub grid: TimeGrid,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Trajectory {
        let vals = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| if u > l { rng.gen_range(l..=u) } else { l })
            .collect();
        Trajectory::from_values(self.grid, self.dim, vals).expect("sampler bounds match grid")
    }
}

impl PairSampler for BoxSampler {
    fn pair(&self, rng: &mut ChaCha8Rng) -> (Trajectory, Trajectory) {
        (self.draw(rng), self.draw(rng))
    }
}

/// `(x, −x)` with `x` uniform in a box symmetric about 0.
#[derive(Debug, Clone)]
pub struct AntipodalSampler(pub BoxSampler);

impl PairSampler for AntipodalSampler {
    fn pair(&self, rng: &mut ChaCha8Rng) -> (Trajectory, Trajectory) {
        let x = self.0.draw(rng);
        let y = x.scaled(-1.0);
        (x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaDraw {
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    pub trials: usize,
    pub seed: u64,
    pub lambda: LambdaDraw,
    pub execution: Execution,
}

impl ConvexityCheck {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, lambda: LambdaDraw::Uniform, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexityVerdict {
    Pass { trials: usize },
    Counterexample { trial: usize, x: Trajectory, y: Trajectory, lambda: f64 },
}

impl ConvexityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ConvexityVerdict::Pass { .. })
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run<F, S, P>(f: &F, sampler: &S, cfg: &ConvexityCheck, lambda_range: (f64, f64), violated: P) -> ConvexityVerdict
where
    F: Fn(&Trajectory) -> f64 + Sync,
    S: PairSampler + ?Sized,
    P: Fn(f64, f64, f64) -> bool + Sync,
{
    let found = cfg.execution.find_first(cfg.trials, |trial| {
        let mut rng = trial_rng(cfg.seed, trial);
        let (x, y) = sampler.pair(&mut rng);
        let lambda = match cfg.lambda {
            LambdaDraw::Fixed(l) => l,
            LambdaDraw::Uniform => rng.gen_range(lambda_range.0..=lambda_range.1),
        };
        let z = combine(lambda, &x, &y).expect("sampler pairs share a shape");
        violated(f(&x), f(&y), f(&z)).then_some((x, y, lambda))
    });
    match found {
        Some((trial, (x, y, lambda))) => ConvexityVerdict::Counterexample { trial, x, y, lambda },
        None => ConvexityVerdict::Pass { trials: cfg.trials },
    }
}

/// Looks for `f(λx + (1−λ)y) < min{f(x), f(y)}`.
pub fn check_quasiconcave<F, S>(f: &F, sampler: &S, cfg: &ConvexityCheck) -> ConvexityVerdict
where
    F: Fn(&Trajectory) -> f64 + Sync,
    S: PairSampler + ?Sized,
{
    run(f, sampler, cfg, (0.0, 1.0), |fx, fy, fz| fz < fx.min(fy) - QUASI_SLACK)
}

/// Quasiconcavity plus `f(λx + (1−λ)y) > min{f(x), f(y)}` whenever
/// `|f(x) − f(y)| > 1e-8`, with `λ` drawn from `[0.01, 0.99]`.
pub fn check_semistrict<F, S>(f: &F, sampler: &S, cfg: &ConvexityCheck) -> ConvexityVerdict
where
    F: Fn(&Trajectory) -> f64 + Sync,
    S: PairSampler + ?Sized,
{
    let quasi = check_quasiconcave(f, sampler, cfg);
    if !quasi.passed() {
        return quasi;
    }
    let strict_cfg = ConvexityCheck { seed: cfg.seed ^ 0x5eed_5eed, ..*cfg };
    run(f, sampler, &strict_cfg, (0.01, 0.99), |fx, fy, fz| {
        (fx - fy).abs() > DISTINCT_VALUES && fz <= fx.min(fy)
    })
}
