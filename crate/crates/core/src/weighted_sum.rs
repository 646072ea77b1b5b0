//! Weighted-sum scalarization solved by box-constrained SQP with a damped
//! BFGS model of the Hessian.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Mat5, Vec5};
use crate::pareto::{pareto_filter, Provenance, SolutionSet};
use crate::problem::Problem;
use crate::sampling::latin_hypercube;
use crate::space::{Coded, N_PARAMS};

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!("negative or non-finite weight in {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Regular lattice on the weight simplex for two or three objectives.
///
/// For `k = 3` the first two weights run over the grid and the third takes
/// the remainder; pairs with `w1 + w2 > 1` are skipped.
pub fn weight_lattice(k: usize, step: f64) -> Result<Vec<WeightVector>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidWeights(format!("lattice step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("lattice step {step} does not divide 1")));
    }
    let n = n as usize;
    let nf = n as f64;
    let mut out = Vec::new();
    match k {
        2 => {
            for i in 0..=n {
                out.push(WeightVector::new(vec![i as f64 / nf, (n - i) as f64 / nf])?);
            }
        }
        3 => {
            for i in 0..=n {
                for j in 0..=(n - i) {
                    out.push(WeightVector::new(vec![
                        i as f64 / nf,
                        j as f64 / nf,
                        (n - i - j) as f64 / nf,
                    ])?);
                }
            }
        }
        _ => {
            return Err(Error::InvalidWeights(format!(
                "weight lattice supports 2 or 3 objectives, got {k}"
            )))
        }
    }
    Ok(out)
}

/// `Σ w_l f̃_l(x)` and its gradient over the canonical objectives.
pub fn scalarize(problem: &Problem, w: &WeightVector, z: &Coded) -> Result<(f64, Vec5)> {
    if w.len() != problem.k() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: problem.k(),
        });
    }
    let mut value = 0.0;
    let mut grad = Vec5::zeros();
    for (l, wl) in w.as_slice().iter().enumerate() {
        if *wl == 0.0 {
            continue;
        }
        let (v, g) = problem.canonical_value_and_gradient(l, z)?;
        value += wl * v;
        grad += *wl * g;
    }
    Ok((value, grad))
}

/// Direct BFGS update of a Hessian approximation.
///
/// When curvature is too weak (`sᵀy ≤ 1e-8‖s‖‖y‖` or `sᵀy < 0.2 sᵀHs`),
/// `y` is replaced by Powell's damped combination `θy + (1-θ)Hs`, which keeps
/// the result positive definite.
pub fn bfgs_update(h: &Mat5, s: &Vec5, y: &Vec5) -> Mat5 {
    let hs = h * s;
    let shs = s.dot(&hs);
    if !(shs > 0.0) || !shs.is_finite() {
        return *h;
    }
    let sy = s.dot(y);
    let r = if sy <= 1e-8 * s.norm() * y.norm() || sy < 0.2 * shs {
        let theta = 0.8 * shs / (shs - sy);
        theta * y + (1.0 - theta) * hs
    } else {
        *y
    };
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return *h;
    }
    let next = h - hs * hs.transpose() / shs + r * r.transpose() / sr;
    let next = 0.5 * (next + next.transpose());
    // Repeated damping can shrink curvature to roundoff level; keep the
    // previous matrix rather than accept one that fails factorization.
    if next.cholesky().is_some() {
        next
    } else {
        *h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoundState {
    Free,
    Lower,
    Upper,
}

/// Minimizes `gᵀd + ½dᵀHd` subject to `lower ≤ d ≤ upper` (primal active set).
///
/// `H` must be symmetric positive definite and `lower ≤ 0 ≤ upper`.
pub fn solve_box_qp(h: &Mat5, g: &Vec5, lower: &Coded, upper: &Coded) -> Result<Vec5> {
    if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "box QP data".into(),
            value: f64::NAN,
        });
    }
    if h.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    for i in 0..N_PARAMS {
        if !(lower[i] <= 0.0 && 0.0 <= upper[i]) {
            return Err(Error::InvalidConfig(format!(
                "box QP bounds [{}, {}] exclude zero at index {i}",
                lower[i], upper[i]
            )));
        }
    }
    let mut state = [BoundState::Free; N_PARAMS];
    for i in 0..N_PARAMS {
        if lower[i] == upper[i] {
            state[i] = BoundState::Lower;
        }
    }
    let mut d = Vec5::zeros();
    for _ in 0..(20 * N_PARAMS + 20) {
        let target = free_subproblem(h, g, &state, &d)?;
        // Largest feasible step toward the subspace minimizer.
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..N_PARAMS {
            if state[i] != BoundState::Free {
                continue;
            }
            let delta = target[i] - d[i];
            if delta < 0.0 && target[i] < lower[i] {
                let a = (lower[i] - d[i]) / delta;
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, BoundState::Lower));
                }
            } else if delta > 0.0 && target[i] > upper[i] {
                let a = (upper[i] - d[i]) / delta;
                if a < alpha {
                    alpha = a;
                    blocking = Some((i, BoundState::Upper));
                }
            }
        }
        match blocking {
            Some((i, st)) => {
                for j in 0..N_PARAMS {
                    if state[j] == BoundState::Free {
                        d[j] += alpha.max(0.0) * (target[j] - d[j]);
                    }
                }
                state[i] = st;
                d[i] = if st == BoundState::Lower { lower[i] } else { upper[i] };
            }
            None => {
                d = target;
                let grad = h * d + g;
                let mut worst = 0.0;
                let mut release = None;
                for i in 0..N_PARAMS {
                    if lower[i] == upper[i] {
                        continue;
                    }
                    let violation = match state[i] {
                        BoundState::Lower => -grad[i],
                        BoundState::Upper => grad[i],
                        BoundState::Free => 0.0,
                    };
                    if violation > worst {
                        worst = violation;
                        release = Some(i);
                    }
                }
                let scale = 1e-14 * (1.0 + g.amax() + h.amax() * d.amax());
                match release {
                    Some(i) if worst > scale => state[i] = BoundState::Free,
                    _ => return Ok(d),
                }
            }
        }
    }
    Ok(d)
}

/// Minimizer over the free coordinates with the others held at their bounds.
fn free_subproblem(h: &Mat5, g: &Vec5, state: &[BoundState; N_PARAMS], d: &Vec5) -> Result<Vec5> {
    let free: Vec<usize> = (0..N_PARAMS).filter(|&i| state[i] == BoundState::Free).collect();
    let mut out = *d;
    if free.is_empty() {
        return Ok(out);
    }
    let m = free.len();
    let mut hff = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (a, &i) in free.iter().enumerate() {
        let mut r = -g[i];
        for j in 0..N_PARAMS {
            if state[j] != BoundState::Free {
                r -= h[(i, j)] * d[j];
            }
        }
        rhs[a] = r;
        for (b, &j) in free.iter().enumerate() {
            hff[(a, b)] = h[(i, j)];
        }
    }
    let chol = hff.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let x = chol.solve(&rhs);
    for (a, &i) in free.iter().enumerate() {
        out[i] = x[a];
    }
    Ok(out)
}

/// Largest violation of the box-QP optimality conditions at `d`.
pub fn box_qp_kkt_residual(h: &Mat5, g: &Vec5, lower: &Coded, upper: &Coded, d: &Vec5) -> f64 {
    let grad = h * d + g;
    let mut res: f64 = 0.0;
    for i in 0..N_PARAMS {
        res = res.max(lower[i] - d[i]).max(d[i] - upper[i]);
        let at_lower = d[i] <= lower[i];
        let at_upper = d[i] >= upper[i];
        let r = match (at_lower, at_upper) {
            (true, true) => 0.0,
            (true, false) => (-grad[i]).max(0.0),
            (false, true) => grad[i].max(0.0),
            (false, false) => grad[i].abs(),
        };
        res = res.max(r);
    }
    res
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SqpConfig {
    /// Stop when `max_i |Δx_i| / max(|x_i|, 1)` falls below this.
    pub xtol: f64,
    pub max_iterations: usize,
    /// Latin-hypercube starts per weight vector.
    pub multistart: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
}

impl Default for SqpConfig {
    fn default() -> Self {
        Self {
            xtol: 1e-8,
            max_iterations: 200,
            multistart: 32,
            armijo_c1: 1e-4,
            backtrack: 0.5,
        }
    }
}

impl SqpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xtol > 0.0) || self.max_iterations == 0 || self.multistart == 0 {
            return Err(Error::InvalidConfig(
                "SQP needs xtol > 0, max_iterations >= 1 and multistart >= 1".into(),
            ));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidConfig("Armijo parameters must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Working state of one SQP run.
#[derive(Debug, Clone, PartialEq)]
pub struct SqpState {
    pub x: Coded,
    pub hessian: Mat5,
    pub gradient: Vec5,
    pub value: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpOutcome {
    pub x: Coded,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted iterates, starting with the start point.
    pub path: Vec<Coded>,
}

fn relative_step(s: &Vec5, x: &Coded) -> f64 {
    (0..N_PARAMS)
        .map(|i| s[i].abs() / x[i].abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lower, upper]` starting from `start`.
///
/// `f` returns the value and gradient. Iterates never leave the box.
pub fn sqp_minimize<F>(mut f: F, lower: &Coded, upper: &Coded, config: &SqpConfig, start: &Coded) -> Result<SqpOutcome>
where
    F: FnMut(&Coded) -> Result<(f64, Vec5)>,
{
    config.validate()?;
    let clamp = |z: &Coded| -> Coded { std::array::from_fn(|i| z[i].clamp(lower[i], upper[i])) };
    let x0 = clamp(start);
    let (value, gradient) = f(&x0)?;
    let mut st = SqpState {
        x: x0,
        hessian: Mat5::identity(),
        gradient,
        value,
        iteration: 0,
    };
    let mut path = vec![x0];
    let mut converged = false;
    while st.iteration < config.max_iterations {
        st.iteration += 1;
        let lo: Coded = std::array::from_fn(|i| lower[i] - st.x[i]);
        let hi: Coded = std::array::from_fn(|i| upper[i] - st.x[i]);
        let d = solve_box_qp(&st.hessian, &st.gradient, &lo.map(|v| v.min(0.0)), &hi.map(|v| v.max(0.0)))?;
        if relative_step(&d, &st.x) < config.xtol {
            converged = true;
            break;
        }
        let slope = st.gradient.dot(&d);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-16 {
            let trial = clamp(&std::array::from_fn(|i| st.x[i] + alpha * d[i]));
            if let Ok((v, g)) = f(&trial) {
                if v <= st.value + config.armijo_c1 * alpha * slope {
                    accepted = Some((trial, v, g));
                    break;
                }
            }
            alpha *= config.backtrack;
        }
        let Some((x_new, v_new, g_new)) = accepted else {
            if st.hessian != Mat5::identity() {
                st.hessian = Mat5::identity();
                continue;
            }
            break;
        };
        let s = Vec5::from_fn(|i, _| x_new[i] - st.x[i]);
        let y = g_new - st.gradient;
        st.hessian = bfgs_update(&st.hessian, &s, &y);
        let step = relative_step(&s, &x_new);
        st.x = x_new;
        st.value = v_new;
        st.gradient = g_new;
        path.push(x_new);
        if step < config.xtol {
            converged = true;
            break;
        }
    }
    Ok(SqpOutcome {
        x: st.x,
        value: st.value,
        iterations: st.iteration,
        converged,
        path,
    })
}

/// Per-weight record of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRun {
    pub weights: WeightVector,
    pub converged_starts: usize,
    pub skipped: bool,
    pub best_start: Option<usize>,
    pub best_value: Option<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Best coded point for this weight, before deduplication.
    #[serde(skip)]
    pub best_x: Option<Coded>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Deduplicated, non-dominated solutions.
    pub set: SolutionSet,
    pub runs: Vec<WeightRun>,
    /// Number of distinct solutions before the Pareto filter.
    pub deduplicated: usize,
}

/// Coded tolerance below which two sweep solutions count as the same point.
pub const DEDUP_TOLERANCE: f64 = 1e-4;

/// Runs multistart SQP for every weight vector.
pub fn weighted_sum_sweep(
    problem: &Problem,
    weights: &[WeightVector],
    config: &SqpConfig,
    seed: u64,
) -> Result<SweepResult> {
    config.validate()?;
    if weights.is_empty() {
        return Err(Error::Empty("weight lattice".into()));
    }
    let (lower, upper) = problem.space().coded_limits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Coded> = latin_hypercube(config.multistart, &lower, &upper, &mut rng)
        .into_iter()
        .map(|p| std::array::from_fn(|i| p[i]))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..weights.len())
        .flat_map(|w| (0..starts.len()).map(move |s| (w, s)))
        .collect();
    let outcomes: Vec<Result<SqpOutcome>> = jobs
        .par_iter()
        .map(|&(w, s)| {
            sqp_minimize(|z| scalarize(problem, &weights[w], z), &lower, &upper, config, &starts[s])
        })
        .collect();

    let mut runs = Vec::with_capacity(weights.len());
    let mut outcomes = outcomes.into_iter();
    for w in weights {
        let mine: Vec<SqpOutcome> = outcomes.by_ref().take(starts.len()).collect::<Result<_>>()?;
        let mut best: Option<(usize, &SqpOutcome)> = None;
        for (i, o) in mine.iter().enumerate() {
            if o.converged && best.is_none_or(|(_, b)| o.value < b.value) {
                best = Some((i, o));
            }
        }
        let run = WeightRun {
            weights: w.clone(),
            converged_starts: mine.iter().filter(|o| o.converged).count(),
            skipped: best.is_none(),
            best_start: best.map(|(i, _)| i),
            best_value: best.map(|(_, o)| o.value),
            iterations: mine.iter().map(|o| o.iterations).collect(),
            converged: mine.iter().map(|o| o.converged).collect(),
            best_x: best.map(|(_, o)| o.x),
        };
        if run.skipped {
            log::warn!("no start converged for weights {:?}; weight skipped", w.as_slice());
        }
        runs.push(run);
    }

    let mut kept: Vec<Coded> = Vec::new();
    for x in runs.iter().filter_map(|r| r.best_x) {
        let duplicate = kept
            .iter()
            .any(|k| (0..N_PARAMS).all(|i| (k[i] - x[i]).abs() <= DEDUP_TOLERANCE));
        if !duplicate {
            kept.push(x);
        }
    }
    let mut set = SolutionSet::new(problem.labels().to_vec(), problem.directions().to_vec())?.with_provenance(
        Provenance {
            method: "weighted-sum".into(),
            seed: Some(seed),
            timestamp: None,
        },
    );
    if kept.is_empty() {
        return Ok(SweepResult {
            set,
            runs,
            deduplicated: 0,
        });
    }
    for x in &kept {
        set.push(problem.candidate_coded(x)?)?;
    }
    let mut set = pareto_filter(&set)?;
    set.assign_ranks_and_crowding()?;
    Ok(SweepResult {
        set,
        runs,
        deduplicated: kept.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use rand::Rng;

    fn random_pd(rng: &mut ChaCha8Rng) -> Mat5 {
        let a = Mat5::from_fn(|_, _| rng.random_range(-1.0..1.0));
        a * a.transpose() + Mat5::identity() * rng.random_range(0.05..1.0)
    }

    #[test]
    fn lattice_sizes_and_sums() {
        let two = weight_lattice(2, 0.01).unwrap();
        assert_eq!(two.len(), 101);
        let three = weight_lattice(3, 0.5).unwrap();
        let got: Vec<Vec<f64>> = three.iter().map(|w| w.as_slice().to_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![0.0, 0.0, 1.0],
                vec![0.0, 0.5, 0.5],
                vec![0.0, 1.0, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.5, 0.5, 0.0],
                vec![1.0, 0.0, 0.0],
            ]
        );
        assert_eq!(weight_lattice(3, 0.01).unwrap().len(), 5151);
        for w in two.iter().chain(&three) {
            assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert!(weight_lattice(4, 0.5).is_err());
        assert!(weight_lattice(2, 0.3).is_err());
    }

    #[test]
    fn weight_vector_rejects_bad_input() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![1.5, -0.5]).is_err());
        assert!(serde_json::from_str::<WeightVector>("[0.2, 0.2]").is_err());
    }

    #[test]
    fn scalarize_unit_weight_and_average() {
        let p = Problem::builtin("I").unwrap();
        let z = [0.3, -0.2, 0.5, 0.1, -0.7];
        let (v, _) = scalarize(&p, &WeightVector::new(vec![1.0, 0.0]).unwrap(), &z).unwrap();
        assert_eq!(v, p.canonical_coded(&z).unwrap()[0]);
        let (v, _) = scalarize(&p, &WeightVector::new(vec![0.5, 0.5]).unwrap(), &z).unwrap();
        let c = p.canonical_coded(&z).unwrap();
        assert_relative_eq!(v, 0.5 * (c[0] + c[1]), max_relative = 1e-15);
    }

    #[test]
    fn scalarize_gradient_matches_finite_differences() {
        let p = Problem::builtin("II").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w1: f64 = rng.random_range(0.0..1.0);
            let w2: f64 = rng.random_range(0.0..(1.0 - w1));
            let w = WeightVector::new(vec![w1, w2, 1.0 - w1 - w2]).unwrap_or_else(|_| {
                WeightVector::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0]).unwrap()
            });
            let z: Coded = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let (_, g) = scalarize(&p, &w, &z).unwrap();
            let h = 1e-6;
            for i in 0..N_PARAMS {
                let mut a = z;
                let mut b = z;
                a[i] += h;
                b[i] -= h;
                let fd = (scalarize(&p, &w, &a).unwrap().0 - scalarize(&p, &w, &b).unwrap().0) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * g.amax().max(1e-3), "{fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn bfgs_identity_fixed_point() {
        let s = Vec5::new(0.3, -0.1, 0.2, 0.5, -0.4);
        let h = bfgs_update(&Mat5::identity(), &s, &s);
        assert!((h - Mat5::identity()).amax() < 1e-15);
    }

    #[test]
    fn bfgs_secant_condition_when_undamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_pd(&mut rng);
        let s = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let y = a * s;
        let h = bfgs_update(&Mat5::identity(), &s, &y);
        assert!((h * s - y).amax() < 1e-12);
    }

    #[test]
    fn bfgs_stays_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut damped = 0;
        for _ in 0..1000 {
            let h = random_pd(&mut rng);
            let s = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let y = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if s.dot(&y) < 0.2 * s.dot(&(h * s)) {
                damped += 1;
            }
            let next = bfgs_update(&h, &s, &y);
            assert_eq!(next, next.transpose());
            let min = SymmetricEigen::new(next).eigenvalues.min();
            assert!(min > 0.0, "min eigenvalue {min}");
        }
        assert!(damped > 400, "{damped}");
    }

    #[test]
    fn bfgs_chained_updates_stay_factorizable() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut h = Mat5::identity();
        for _ in 0..1000 {
            let s = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let y = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
            h = bfgs_update(&h, &s, &y);
            assert_eq!(h, h.transpose());
            assert!(h.cholesky().is_some());
        }
    }

    #[test]
    fn bfgs_recovers_newton_steps_on_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_pd(&mut rng);
        let b = Vec5::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let xstar = a.cholesky().unwrap().solve(&b);
        let mut x = Vec5::zeros();
        let mut h = Mat5::identity();
        let mut g = a * x - b;
        let mut converged_at = None;
        for it in 0..10 {
            let d = -h.cholesky().unwrap().solve(&g);
            // Exact line search along d.
            let alpha = -g.dot(&d) / d.dot(&(a * d));
            let s = alpha * d;
            let x_new = x + s;
            let g_new = a * x_new - b;
            h = bfgs_update(&h, &s, &(g_new - g));
            x = x_new;
            g = g_new;
            if (x - xstar).amax() < 1e-8 {
                converged_at = Some(it + 1);
                break;
            }
        }
        assert!(converged_at.is_some());
        let newton = -a.cholesky().unwrap().solve(&g);
        let quasi = -h.cholesky().unwrap().solve(&g);
        assert!((newton - quasi).amax() < 1e-8);
    }

    #[test]
    fn qp_interior_is_newton_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_pd(&mut rng);
        let g = Vec5::from_fn(|_, _| rng.random_range(-0.01..0.01));
        let d = solve_box_qp(&h, &g, &[-100.0; 5], &[100.0; 5]).unwrap();
        let newton = -h.cholesky().unwrap().solve(&g);
        assert!((d - newton).amax() < 1e-14);
    }

    #[test]
    fn qp_projection_example() {
        let g = Vec5::new(2.0, 0.0, 0.0, 0.0, 0.0);
        let d = solve_box_qp(&Mat5::identity(), &g, &[-1.0; 5], &[1.0; 5]).unwrap();
        assert_eq!(d, Vec5::new(-1.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn qp_rejects_indefinite() {
        let mut h = Mat5::identity();
        h[(2, 2)] = -1.0;
        assert_eq!(
            solve_box_qp(&h, &Vec5::zeros(), &[-1.0; 5], &[1.0; 5]),
            Err(Error::NotPositiveDefinite)
        );
    }

    /// Tries every assignment of {lower, free, upper} and keeps the one that
    /// satisfies the optimality conditions.
    fn enumerate_active_sets(h: &Mat5, g: &Vec5, lo: &Coded, hi: &Coded) -> Vec5 {
        let mut best: Option<(f64, Vec5)> = None;
        for code in 0..3usize.pow(5) {
            let mut pattern = [0usize; 5];
            let mut c = code;
            for p in &mut pattern {
                *p = c % 3;
                c /= 3;
            }
            let mut d = Vec5::zeros();
            let free: Vec<usize> = (0..5).filter(|&i| pattern[i] == 1).collect();
            for i in 0..5 {
                match pattern[i] {
                    0 => d[i] = lo[i],
                    2 => d[i] = hi[i],
                    _ => {}
                }
            }
            if !free.is_empty() {
                let m = free.len();
                let hff = DMatrix::from_fn(m, m, |a, b| h[(free[a], free[b])]);
                let rhs = DVector::from_fn(m, |a, _| {
                    -g[free[a]] - (0..5).filter(|j| pattern[*j] != 1).map(|j| h[(free[a], j)] * d[j]).sum::<f64>()
                });
                let x = hff.lu().solve(&rhs).unwrap();
                for (a, &i) in free.iter().enumerate() {
                    d[i] = x[a];
                }
            }
            let feasible = (0..5).all(|i| d[i] >= lo[i] - 1e-12 && d[i] <= hi[i] + 1e-12);
            if !feasible {
                continue;
            }
            let obj = g.dot(&d) + 0.5 * d.dot(&(h * d));
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, d));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn qp_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let h = random_pd(&mut rng);
            let g = Vec5::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let lo: Coded = std::array::from_fn(|_| rng.random_range(-1.0..0.0));
            let hi: Coded = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            let d = solve_box_qp(&h, &g, &lo, &hi).unwrap();
            let oracle = enumerate_active_sets(&h, &g, &lo, &hi);
            assert!((d - oracle).amax() < 1e-9, "{d} vs {oracle}");
            let kkt = box_qp_kkt_residual(&h, &g, &lo, &hi, &d);
            assert!(kkt < 1e-10, "kkt residual {kkt}");
        }
    }

    #[test]
    fn sqp_sphere() {
        let cfg = SqpConfig::default();
        let out = sqp_minimize(
            |z| Ok((z.iter().map(|v| v * v).sum(), Vec5::from_fn(|i, _| 2.0 * z[i]))),
            &[-2.0; 5],
            &[2.0; 5],
            &cfg,
            &[1.0; 5],
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.x.iter().all(|v| v.abs() < 1e-7), "{:?}", out.x);
    }

    #[test]
    fn sqp_iterates_feasible_and_monotone() {
        let p = Problem::builtin("I").unwrap();
        let w = WeightVector::new(vec![0.3, 0.7]).unwrap();
        let f = |z: &Coded| scalarize(&p, &w, z);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let start: Coded = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let out = sqp_minimize(f, &[-1.0; 5], &[1.0; 5], &SqpConfig::default(), &start).unwrap();
            let mut prev = f64::INFINITY;
            for x in &out.path {
                assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
                let v = f(x).unwrap().0;
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn single_unit_weight_reduces_to_single_objective() {
        let p = Problem::builtin("I").unwrap();
        let cfg = SqpConfig {
            multistart: 8,
            ..SqpConfig::default()
        };
        let res = weighted_sum_sweep(&p, &[WeightVector::new(vec![1.0, 0.0]).unwrap()], &cfg, 1).unwrap();
        assert_eq!(res.set.len(), 1);
        let h = res.set.candidates()[0].objectives.raw_values()[0];
        // Upper bound on hardness over the box: every coded grid point is below it.
        assert!(h > 736.0, "{h}");
    }
}
