//! One-sided desirability transforms and their weighted geometric mean,
//! maximized by restarted Nelder–Mead over the box.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::Direction;
use crate::problem::Problem;
use crate::sampling::latin_hypercube;
use crate::space::{Coded, ParameterVector, N_PARAMS};

fn check_bounds(lower: f64, upper: f64, shape: f64) -> Result<()> {
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::InvalidConfig(format!(
            "desirability bounds need L < U, got L={lower}, U={upper}"
        )));
    }
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::InvalidConfig(format!("desirability shape must be > 0, got {shape}")));
    }
    Ok(())
}

/// `1` at or below `lower`, `0` at or above `upper`, `((U-f)/(U-L))^r` between.
pub fn desirability_min(f: f64, lower: f64, upper: f64, shape: f64) -> Result<f64> {
    check_bounds(lower, upper, shape)?;
    Ok(if f >= upper {
        0.0
    } else if f <= lower {
        1.0
    } else {
        ((upper - f) / (upper - lower)).powf(shape)
    })
}

/// `0` at or below `lower`, `1` at or above `upper`, `((f-L)/(U-L))^r` between.
pub fn desirability_max(f: f64, lower: f64, upper: f64, shape: f64) -> Result<f64> {
    check_bounds(lower, upper, shape)?;
    Ok(if f <= lower {
        0.0
    } else if f >= upper {
        1.0
    } else {
        ((f - lower) / (upper - lower)).powf(shape)
    })
}

/// `(Π d_j^{w_j})^{1/Σw_j}`; zero as soon as a positively weighted `d_j` is zero.
pub fn overall_desirability(d: &[f64], weights: &[f64]) -> Result<f64> {
    if d.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights("desirability weights must be finite and >= 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidWeights("desirability weights sum to zero".into()));
    }
    let mut log_sum = 0.0;
    for (dj, wj) in d.iter().zip(weights) {
        if *wj == 0.0 {
            continue;
        }
        if *dj <= 0.0 {
            return Ok(0.0);
        }
        log_sum += (wj / total) * dj.ln();
    }
    Ok(log_sum.exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesirabilityTarget {
    pub direction: Direction,
    pub lower: f64,
    pub upper: f64,
    pub shape: f64,
    pub weight: f64,
}

impl DesirabilityTarget {
    pub fn desirability(&self, f: f64) -> Result<f64> {
        match self.direction {
            Direction::Minimize => desirability_min(f, self.lower, self.upper, self.shape),
            Direction::Maximize => desirability_max(f, self.lower, self.upper, self.shape),
        }
    }

    /// Linear position of `f` between the bounds (1 at the desirable end),
    /// clamped to `[-10, 1]` so it stays informative beyond the zero plateau.
    fn progress(&self, f: f64) -> f64 {
        let t = match self.direction {
            Direction::Minimize => (self.upper - f) / (self.upper - self.lower),
            Direction::Maximize => (f - self.lower) / (self.upper - self.lower),
        };
        t.clamp(-10.0, 1.0)
    }
}

/// Per-objective desirability targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DesirabilityTarget>", into = "Vec<DesirabilityTarget>")]
pub struct DesirabilitySpec {
    targets: Vec<DesirabilityTarget>,
}

impl DesirabilitySpec {
    pub fn new(targets: Vec<DesirabilityTarget>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("desirability spec".into()));
        }
        for t in &targets {
            check_bounds(t.lower, t.upper, t.shape)?;
            if !(t.weight >= 0.0 && t.weight.is_finite()) {
                return Err(Error::InvalidWeights(format!("weight {} must be >= 0", t.weight)));
            }
        }
        if !(targets.iter().map(|t| t.weight).sum::<f64>() > 0.0) {
            return Err(Error::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(Self { targets })
    }

    pub fn targets(&self) -> &[DesirabilityTarget] {
        &self.targets
    }

    /// Individual desirabilities for raw objective values.
    pub fn individual(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.targets.len() {
            return Err(Error::LengthMismatch {
                left: raw.len(),
                right: self.targets.len(),
            });
        }
        raw.iter().zip(&self.targets).map(|(f, t)| t.desirability(*f)).collect()
    }

    /// Weights scaled to sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.targets.iter().map(|t| t.weight).sum();
        self.targets.iter().map(|t| t.weight / total).collect()
    }

    pub fn overall(&self, raw: &[f64]) -> Result<f64> {
        overall_desirability(&self.individual(raw)?, &self.normalized_weights())
    }

    /// Search merit: `D` when positive, otherwise a weighted mean of linear
    /// progress towards each target, shifted below zero.
    fn merit(&self, raw: &[f64]) -> Result<f64> {
        let d = self.overall(raw)?;
        if d > 0.0 {
            return Ok(d);
        }
        let w = self.normalized_weights();
        let s: f64 = raw
            .iter()
            .zip(&self.targets)
            .zip(&w)
            .map(|((f, t), wj)| wj * t.progress(*f))
            .sum();
        Ok(s - 2.0)
    }
}

impl TryFrom<Vec<DesirabilityTarget>> for DesirabilitySpec {
    type Error = Error;

    fn try_from(t: Vec<DesirabilityTarget>) -> Result<Self> {
        Self::new(t)
    }
}

impl From<DesirabilitySpec> for Vec<DesirabilityTarget> {
    fn from(s: DesirabilitySpec) -> Self {
        s.targets
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectSearchConfig {
    pub restarts: usize,
    /// Simplex size and value-spread tolerance.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for DirectSearchConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            tolerance: 1e-8,
            max_evaluations: 5000,
        }
    }
}

impl DirectSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_evaluations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "direct search needs restarts, max_evaluations and tolerance > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Coded,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` with Nelder–Mead, clamping every trial point into the box.
pub fn nelder_mead<F>(
    mut f: F,
    lower: &Coded,
    upper: &Coded,
    start: &Coded,
    initial_step: f64,
    tolerance: f64,
    max_evaluations: usize,
) -> NelderMeadOutcome
where
    F: FnMut(&Coded) -> f64,
{
    const N: usize = N_PARAMS;
    let clamp = |z: Coded| -> Coded { std::array::from_fn(|i| z[i].clamp(lower[i], upper[i])) };
    let mut evals = 0usize;
    let mut eval = |z: &Coded, evals: &mut usize| {
        *evals += 1;
        let v = f(z);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = clamp(*start);
    let mut simplex: Vec<(Coded, f64)> = Vec::with_capacity(N + 1);
    let v0 = eval(&x0, &mut evals);
    simplex.push((x0, v0));
    for i in 0..N {
        let mut x = x0;
        let width = upper[i] - lower[i];
        let step = initial_step * width;
        // Step away from the nearer wall so the vertex is distinct after clamping.
        x[i] = if x0[i] + step <= upper[i] { x0[i] + step } else { x0[i] - step };
        let x = clamp(x);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| (0..N).map(|i| (x[i] - simplex[0].0[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= tolerance && (worst - best).abs() <= tolerance * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        let centroid: Coded =
            std::array::from_fn(|i| simplex[..N].iter().map(|(x, _)| x[i]).sum::<f64>() / N as f64);
        let along = |t: f64| -> Coded { clamp(std::array::from_fn(|i| centroid[i] + t * (simplex[N].0[i] - centroid[i]))) };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[N].1 {
                let xc = along(-0.5);
                (xc, eval(&xc, &mut evals))
            } else {
                let xc = along(0.5);
                (xc, eval(&xc, &mut evals))
            };
            if fc < simplex[N].1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = clamp(std::array::from_fn(|i| x_best[i] + 0.5 * (v.0[i] - x_best[i])));
                    *v = (x, eval(&x, &mut evals));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NelderMeadOutcome {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

/// Result of a desirability maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesirabilityOutcome {
    pub decision: ParameterVector,
    pub overall: f64,
    pub individual: Vec<f64>,
    pub raw: Vec<f64>,
    pub labels: Vec<String>,
    /// Set when no restart found a point with `D > 0`; `decision` is then the
    /// best compromise under the plateau surrogate.
    pub all_zero: bool,
    pub restart: usize,
    pub evaluations: usize,
}

/// Number of starts drawn per Latin-hypercube block.
const START_BLOCK: usize = 10;

/// Start points for restarts `0..n`. Starts come in fixed-size blocks, each an
/// independent design seeded from `(seed, block)`, so a larger budget always
/// extends a smaller one.
pub fn restart_points(n: usize, lower: &Coded, upper: &Coded, seed: u64) -> Vec<Coded> {
    let mut out = Vec::with_capacity(n);
    let mut block = 0u64;
    while out.len() < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        for p in latin_hypercube(START_BLOCK, lower, upper, &mut rng) {
            if out.len() == n {
                break;
            }
            out.push(std::array::from_fn(|i| p[i]));
        }
        block += 1;
    }
    out
}

/// Maximizes the overall desirability of `problem` under `spec`.
pub fn maximize_desirability(
    problem: &Problem,
    spec: &DesirabilitySpec,
    config: &DirectSearchConfig,
    seed: u64,
) -> Result<DesirabilityOutcome> {
    config.validate()?;
    if spec.targets().len() != problem.k() {
        return Err(Error::LengthMismatch {
            left: spec.targets().len(),
            right: problem.k(),
        });
    }
    let (lower, upper) = problem.space().coded_limits();
    let starts = restart_points(config.restarts, &lower, &upper, seed);
    let merit = |z: &Coded| -> f64 {
        match problem.raw_coded(z).and_then(|raw| spec.merit(&raw)) {
            Ok(m) => -m,
            Err(_) => f64::INFINITY,
        }
    };
    let runs: Vec<NelderMeadOutcome> = starts
        .par_iter()
        .map(|s| nelder_mead(merit, &lower, &upper, s, 0.1, config.tolerance, config.max_evaluations))
        .collect();
    let (restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let raw = problem.raw_coded(&best.x)?;
    let individual = spec.individual(&raw)?;
    let overall = spec.overall(&raw)?;
    Ok(DesirabilityOutcome {
        decision: problem.space().clamp(&problem.space().denormalize(&best.x)?),
        overall,
        individual,
        raw,
        labels: problem.labels().to_vec(),
        all_zero: overall == 0.0,
        restart,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
    })
}
