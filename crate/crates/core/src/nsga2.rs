//! Real-coded elitist NSGA-II with SBX crossover and polynomial mutation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{crowding_distance, hypervolume_2d, non_dominated_sort, Candidate, Provenance, SolutionSet};
use crate::problem::Problem;
use crate::space::Coded;

/// A box-constrained multi-objective problem in canonical (minimization) form.
pub trait MultiObjective: Sync {
    fn n_vars(&self) -> usize;
    fn n_objectives(&self) -> usize;
    /// Lower and upper limits of every decision variable.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl MultiObjective for Problem {
    fn n_vars(&self) -> usize {
        crate::space::N_PARAMS
    }

    fn n_objectives(&self) -> usize {
        self.k()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.space().coded_limits();
        (lo.to_vec(), hi.to_vec())
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z: Coded = x.try_into().map_err(|_| Error::LengthMismatch {
            left: x.len(),
            right: crate::space::N_PARAMS,
        })?;
        self.canonical_coded(&z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsgaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1 / n_vars`.
    pub mutation_probability: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
}

impl Default for NsgaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 200,
            crossover_probability: 0.9,
            crossover_eta: 15.0,
            mutation_probability: None,
            mutation_eta: 20.0,
            seed: 0,
        }
    }
}

impl NsgaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "population must be even and >= 4, got {}",
                self.population
            )));
        }
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.crossover_probability) || !self.mutation_probability.is_none_or(prob_ok) {
            return Err(Error::InvalidConfig("probabilities must lie in [0, 1]".into()));
        }
        if !(self.crossover_eta > 0.0) || !(self.mutation_eta > 0.0) {
            return Err(Error::InvalidConfig("distribution indices must be > 0".into()));
        }
        Ok(())
    }

    pub fn mutation_probability_for(&self, n_vars: usize) -> f64 {
        self.mutation_probability.unwrap_or(1.0 / n_vars as f64)
    }
}

/// Anything carrying front rank and crowding distance.
pub trait Ranked {
    fn rank(&self) -> Option<usize>;
    fn crowding(&self) -> Option<f64>;
}

impl Ranked for Candidate {
    fn rank(&self) -> Option<usize> {
        self.rank
    }

    fn crowding(&self) -> Option<f64> {
        self.crowding
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    /// Canonical objective values.
    pub f: Vec<f64>,
    pub rank: Option<usize>,
    pub crowding: Option<f64>,
    /// Evaluation failed and worst-case objectives were substituted.
    pub failed: bool,
}

impl Ranked for Individual {
    fn rank(&self) -> Option<usize> {
        self.rank
    }

    fn crowding(&self) -> Option<f64> {
        self.crowding
    }
}

/// `n` points drawn uniformly in the box.
pub fn initialize<R: Rng + ?Sized>(lower: &[f64], upper: &[f64], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if l < u { rng.random_range(*l..*u) } else { *l })
                .collect()
        })
        .collect()
}

/// Binary tournament: lower rank wins, then larger crowding, then a coin flip.
pub fn crowded_tournament<'a, T: Ranked, R: Rng + ?Sized>(a: &'a T, b: &'a T, rng: &mut R) -> Result<&'a T> {
    let (ra, ca, rb, cb) = match (a.rank(), a.crowding(), b.rank(), b.crowding()) {
        (Some(ra), Some(ca), Some(rb), Some(cb)) => (ra, ca, rb, cb),
        _ => return Err(Error::MissingMetadata),
    };
    Ok(if ra != rb {
        if ra < rb {
            a
        } else {
            b
        }
    } else if ca != cb {
        if ca > cb {
            a
        } else {
            b
        }
    } else if rng.random_bool(0.5) {
        a
    } else {
        b
    })
}

/// Simulated binary crossover without clamping. Each child pair keeps the
/// parents' per-coordinate mean exactly.
pub fn sbx_crossover_unclamped<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    probability: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if !rng.random_bool(probability) {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        if !rng.random_bool(0.5) || (p1[i] - p2[i]).abs() <= 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let mean = 0.5 * (p1[i] + p2[i]);
        let half = 0.5 * beta * (p2[i] - p1[i]).abs();
        let (lo, hi) = (mean - half, mean + half);
        if rng.random_bool(0.5) {
            c1[i] = lo;
            c2[i] = hi;
        } else {
            c1[i] = hi;
            c2[i] = lo;
        }
    }
    (c1, c2)
}

/// SBX followed by clamping into the box.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    probability: f64,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let (mut c1, mut c2) = sbx_crossover_unclamped(p1, p2, eta, probability, rng);
    clamp_into(&mut c1, lower, upper);
    clamp_into(&mut c2, lower, upper);
    (c1, c2)
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

/// Bounded polynomial mutation; each coordinate mutates with `probability`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &[f64],
    eta: f64,
    probability: f64,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let mut y = x.to_vec();
    for i in 0..y.len() {
        if !rng.random_bool(probability) {
            continue;
        }
        let (yl, yu) = (lower[i], upper[i]);
        if yu <= yl {
            continue;
        }
        let width = yu - yl;
        let d1 = (y[i] - yl) / width;
        let d2 = (yu - y[i]) / width;
        let r: f64 = rng.random();
        let pow = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        y[i] = (y[i] + dq * width).clamp(yl, yu);
    }
    y
}

/// Sorts `pool` into fronts and writes rank and crowding on every member.
pub fn rank_population(pool: &mut [Individual]) -> Result<Vec<Vec<usize>>> {
    let fronts = non_dominated_sort(&pool.iter().map(|i| i.f.as_slice()).collect::<Vec<_>>())?;
    for front in &fronts.fronts {
        let pts: Vec<&[f64]> = front.iter().map(|&i| pool[i].f.as_slice()).collect();
        let cd = crowding_distance(&pts)?;
        for (&i, d) in front.iter().zip(cd) {
            pool[i].rank = Some(fronts.ranks[i]);
            pool[i].crowding = Some(d);
        }
    }
    Ok(fronts.fronts)
}

/// Keeps whole fronts while they fit, then the most crowded-apart members of
/// the front that does not. Rank and crowding refer to the merged pool.
pub fn environmental_selection(mut merged: Vec<Individual>, n: usize) -> Result<Vec<Individual>> {
    let fronts = rank_population(&mut merged)?;
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
        } else {
            let mut split = front;
            split.sort_by(|&a, &b| {
                let (ca, cb) = (merged[a].crowding.unwrap_or(0.0), merged[b].crowding.unwrap_or(0.0));
                cb.total_cmp(&ca).then(a.cmp(&b))
            });
            chosen.extend(split.into_iter().take(n - chosen.len()));
        }
        if chosen.len() == n {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    Ok(chosen.into_iter().map(|i| slots[i].take().expect("selected once")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub front_size: usize,
    /// Two-objective hypervolume of the parent first front.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypervolume: Option<f64>,
    pub evaluations: usize,
}

/// The generation loop, advanced one step at a time.
pub struct Nsga2<'p, P: MultiObjective> {
    problem: &'p P,
    config: NsgaConfig,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rng: ChaCha8Rng,
    population: Vec<Individual>,
    generation: usize,
    evaluations: usize,
    failures: usize,
    reference: Option<[f64; 2]>,
    history: Vec<GenerationRecord>,
}

impl<'p, P: MultiObjective> Nsga2<'p, P> {
    pub fn new(problem: &'p P, config: NsgaConfig) -> Result<Self> {
        config.validate()?;
        let (lower, upper) = problem.bounds();
        if lower.len() != problem.n_vars() || upper.len() != problem.n_vars() {
            return Err(Error::InvalidConfig("bounds do not match the variable count".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let xs = initialize(&lower, &upper, config.population, &mut rng);
        let mut s = Self {
            problem,
            config,
            lower,
            upper,
            rng,
            population: Vec::new(),
            generation: 0,
            evaluations: 0,
            failures: 0,
            reference: None,
            history: Vec::new(),
        };
        let mut pop = s.evaluate_all(xs);
        rank_population(&mut pop)?;
        if problem.n_objectives() == 2 {
            s.reference = reference_point(&pop);
        }
        s.population = pop;
        let rec = s.record();
        s.history.push(rec);
        Ok(s)
    }

    fn evaluate_all(&mut self, xs: Vec<Vec<f64>>) -> Vec<Individual> {
        let k = self.problem.n_objectives();
        let problem = self.problem;
        let out: Vec<Individual> = xs
            .into_par_iter()
            .map(|x| match problem.evaluate(&x) {
                Ok(f) if f.len() == k && f.iter().all(|v| v.is_finite()) => Individual {
                    x,
                    f,
                    rank: None,
                    crowding: None,
                    failed: false,
                },
                _ => Individual {
                    x,
                    f: vec![f64::MAX; k],
                    rank: None,
                    crowding: None,
                    failed: true,
                },
            })
            .collect();
        self.evaluations += out.len();
        let failed = out.iter().filter(|i| i.failed).count();
        if failed > 0 {
            log::warn!("{failed} evaluations failed; worst-case objectives assigned");
            self.failures += failed;
        }
        out
    }

    fn record(&self) -> GenerationRecord {
        let front: Vec<&[f64]> = self
            .population
            .iter()
            .filter(|i| i.rank == Some(1))
            .map(|i| i.f.as_slice())
            .collect();
        let hypervolume = self.reference.map(|r| {
            let inside: Vec<&[f64]> = front.iter().copied().filter(|p| p[0] < r[0] && p[1] < r[1]).collect();
            hypervolume_2d(&inside, r).unwrap_or(0.0)
        });
        GenerationRecord {
            generation: self.generation,
            front_size: front.len(),
            hypervolume,
            evaluations: self.evaluations,
        }
    }

    /// Produces `N` offspring, merges and selects the next parents.
    pub fn step(&mut self) -> Result<GenerationRecord> {
        let n = self.config.population;
        let pm = self.config.mutation_probability_for(self.problem.n_vars());
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(n);
        while children.len() < n {
            let a = self.pick()?;
            let b = self.pick()?;
            let (c1, c2) = sbx_crossover(
                &self.population[a].x,
                &self.population[b].x,
                self.config.crossover_eta,
                self.config.crossover_probability,
                &self.lower,
                &self.upper,
                &mut self.rng,
            );
            for c in [c1, c2] {
                if children.len() < n {
                    children.push(polynomial_mutation(
                        &c,
                        self.config.mutation_eta,
                        pm,
                        &self.lower,
                        &self.upper,
                        &mut self.rng,
                    ));
                }
            }
        }
        let offspring = self.evaluate_all(children);
        let mut merged = std::mem::take(&mut self.population);
        merged.extend(offspring);
        self.population = environmental_selection(merged, n)?;
        rank_population(&mut self.population)?;
        self.generation += 1;
        let rec = self.record();
        self.history.push(rec.clone());
        Ok(rec)
    }

    fn pick(&mut self) -> Result<usize> {
        let n = self.population.len();
        let i = self.rng.random_range(0..n);
        let j = self.rng.random_range(0..n);
        let w = crowded_tournament(&self.population[i], &self.population[j], &mut self.rng)?;
        Ok(if std::ptr::eq(w, &self.population[i]) { i } else { j })
    }

    /// Runs the remaining generations, calling `on_generation` after each.
    pub fn run_with(&mut self, mut on_generation: impl FnMut(&GenerationRecord)) -> Result<()> {
        while self.generation < self.config.generations {
            let rec = self.step()?;
            on_generation(&rec);
        }
        Ok(())
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn history(&self) -> &[GenerationRecord] {
        &self.history
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn reference(&self) -> Option<[f64; 2]> {
        self.reference
    }

    /// Current first front, in population order.
    pub fn first_front(&self) -> Vec<&Individual> {
        self.population.iter().filter(|i| i.rank == Some(1)).collect()
    }
}

/// Worst initial value per objective pushed out by a tenth of the range.
fn reference_point(pop: &[Individual]) -> Option<[f64; 2]> {
    let ok: Vec<&Individual> = pop.iter().filter(|i| !i.failed).collect();
    if ok.is_empty() {
        return None;
    }
    let mut r = [0.0; 2];
    for (l, slot) in r.iter_mut().enumerate() {
        let max = ok.iter().map(|i| i.f[l]).fold(f64::NEG_INFINITY, f64::max);
        let min = ok.iter().map(|i| i.f[l]).fold(f64::INFINITY, f64::min);
        let range = max - min;
        *slot = max + if range > 0.0 { 0.1 * range } else { 0.1 * max.abs().max(1.0) };
    }
    Some(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsgaResult {
    /// Final first front in physical units.
    pub set: SolutionSet,
    pub history: Vec<GenerationRecord>,
    pub failures: usize,
    pub reference: Option<[f64; 2]>,
}

/// Runs NSGA-II on a bound problem and returns the final first front.
pub fn run(problem: &Problem, config: &NsgaConfig) -> Result<NsgaResult> {
    run_with_progress(problem, config, |_| {})
}

pub fn run_with_progress(
    problem: &Problem,
    config: &NsgaConfig,
    on_generation: impl FnMut(&GenerationRecord),
) -> Result<NsgaResult> {
    let mut engine = Nsga2::new(problem, config.clone())?;
    engine.run_with(on_generation)?;
    let mut set = SolutionSet::new(problem.labels().to_vec(), problem.directions().to_vec())?.with_provenance(
        Provenance {
            method: "nsga2".into(),
            seed: Some(config.seed),
            timestamp: None,
        },
    );
    for ind in engine.first_front() {
        let z: Coded = ind.x.as_slice().try_into().expect("five coded variables");
        let mut c = if ind.failed {
            let mut c = problem.candidate_coded(&z).unwrap_or_else(|_| {
                let raw: Vec<f64> = vec![f64::MAX; problem.k()];
                Candidate::new(
                    problem.space().clamp(&problem.space().denormalize(&z).expect("finite")),
                    crate::pareto::ObjectiveVector::from_raw(&raw, problem.directions()).expect("k objectives"),
                )
            });
            c.evaluation_failed = true;
            c
        } else {
            problem.candidate_coded(&z)?
        };
        c.rank = ind.rank;
        c.crowding = ind.crowding;
        set.push(c)?;
    }
    Ok(NsgaResult {
        set,
        history: engine.history().to_vec(),
        failures: engine.failures(),
        reference: engine.reference(),
    })
}
