//! Dominance relations and front bookkeeping.
//!
//! Everything here works in minimization canonical form: maximized
//! objectives are negated before comparison.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ParameterVector;

/// Optimization sense of one objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a raw value into canonical (minimization) form and back.
    pub fn canonical(self, raw: f64) -> f64 {
        match self {
            Direction::Minimize => raw,
            Direction::Maximize => -raw,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimize" => Some(Direction::Minimize),
            "max" | "maximize" => Some(Direction::Maximize),
            _ => None,
        }
    }
}

/// Objective values in canonical form alongside their natural-unit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    values: Vec<f64>,
    raw_values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn from_raw(raw: &[f64], directions: &[Direction]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("objective vector".into()));
        }
        if raw.len() != directions.len() {
            return Err(Error::LengthMismatch {
                left: raw.len(),
                right: directions.len(),
            });
        }
        Ok(Self {
            values: raw
                .iter()
                .zip(directions)
                .map(|(v, d)| d.canonical(*v))
                .collect(),
            raw_values: raw.to_vec(),
        })
    }

    /// Canonical (minimization) values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.raw_values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `a ⪯ b`: no worse in every objective and strictly better in one.
pub fn weakly_dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_len(a, b)?;
    Ok(dominates_unchecked(a, b))
}

/// `a ≺ b`: strictly better in every objective.
pub fn strongly_dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).all(|(x, y)| x < y))
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Result of non-dominated sorting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fronts {
    /// `fronts[0]` is F₁. Indices within a front are ascending.
    pub fronts: Vec<Vec<usize>>,
    /// 1-based rank of every input point.
    pub ranks: Vec<usize>,
}

/// Fast non-dominated sort (dominance counts plus dominated lists).
pub fn non_dominated_sort<P: AsRef<[f64]>>(points: &[P]) -> Result<Fronts> {
    let n = points.len();
    if n == 0 {
        return Ok(Fronts {
            fronts: vec![],
            ranks: vec![],
        });
    }
    let k = points[0].as_ref().len();
    for p in points {
        check_len(p.as_ref(), &points[0].as_ref()[..k])?;
    }
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b) {
                dominates[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominates[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut ranks = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut fronts = Vec::new();
    let mut rank = 1;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            ranks[i] = rank;
            for &j in &dominates[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
        rank += 1;
    }
    Ok(Fronts { fronts, ranks })
}

/// Indices of the non-dominated points, in input order.
pub fn non_dominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<usize>> {
    Ok(non_dominated_sort(points)?
        .fronts
        .into_iter()
        .next()
        .unwrap_or_default())
}

/// Crowding distance of each point in one front.
///
/// Boundary points of every objective get `+inf`. Ties are broken by input
/// index, and an objective with zero range adds nothing.
pub fn crowding_distance<P: AsRef<[f64]>>(front: &[P]) -> Result<Vec<f64>> {
    let n = front.len();
    if n == 0 {
        return Err(Error::Empty("crowding distance of an empty front".into()));
    }
    let k = front[0].as_ref().len();
    for p in front {
        check_len(p.as_ref(), &front[0].as_ref()[..k])?;
    }
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for l in 0..k {
        let val = |i: usize| front[i].as_ref()[l];
        order.sort_by(|&a, &b| val(a).total_cmp(&val(b)).then(a.cmp(&b)));
        let (first, last) = (order[0], order[n - 1]);
        dist[first] = f64::INFINITY;
        dist[last] = f64::INFINITY;
        let range = val(last) - val(first);
        if range <= 0.0 || !range.is_finite() {
            continue;
        }
        for w in order.windows(3) {
            let gap = val(w[2]) - val(w[0]);
            dist[w[1]] += gap / range;
        }
    }
    Ok(dist)
}

/// Componentwise minimum of canonical values.
pub fn ideal_vector<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let first = points
        .first()
        .ok_or_else(|| Error::Empty("ideal vector of an empty set".into()))?
        .as_ref();
    let mut ideal = first.to_vec();
    for p in &points[1..] {
        let p = p.as_ref();
        check_len(p, first)?;
        for (m, v) in ideal.iter_mut().zip(p) {
            *m = m.min(*v);
        }
    }
    Ok(ideal)
}

/// Area dominated by a two-objective front up to `reference`.
pub fn hypervolume_2d<P: AsRef<[f64]>>(front: &[P], reference: [f64; 2]) -> Result<f64> {
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(front.len());
    for p in front {
        let p = p.as_ref();
        check_len(p, &reference)?;
        if !(p[0] < reference[0] && p[1] < reference[1]) {
            return Err(Error::ReferenceNotDominated {
                point: p.to_vec(),
                reference: reference.to_vec(),
            });
        }
        pts.push([p[0], p[1]]);
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    Ok(area)
}

/// Where a solution set came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// A decision vector with its objectives and optional front metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub decision: ParameterVector,
    pub objectives: ObjectiveVector,
    pub rank: Option<usize>,
    pub crowding: Option<f64>,
    /// Set when the decision lies outside the parameter box.
    #[serde(default)]
    pub infeasible: bool,
    /// Set when objective evaluation failed and worst values were substituted.
    #[serde(default)]
    pub evaluation_failed: bool,
}

impl Candidate {
    pub fn new(decision: ParameterVector, objectives: ObjectiveVector) -> Self {
        Self {
            decision,
            objectives,
            rank: None,
            crowding: None,
            infeasible: false,
            evaluation_failed: false,
        }
    }
}

/// An ordered collection of candidates sharing objective labels and senses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    labels: Vec<String>,
    directions: Vec<Direction>,
    candidates: Vec<Candidate>,
    pub provenance: Provenance,
}

impl SolutionSet {
    pub fn new(labels: Vec<String>, directions: Vec<Direction>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("objective labels".into()));
        }
        if labels.len() != directions.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: directions.len(),
            });
        }
        Ok(Self {
            labels,
            directions,
            candidates: Vec::new(),
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn push(&mut self, candidate: Candidate) -> Result<()> {
        if candidate.objectives.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                left: candidate.objectives.len(),
                right: self.labels.len(),
            });
        }
        self.candidates.push(candidate);
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidates_mut(&mut self) -> &mut [Candidate] {
        &mut self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Canonical objective values, one slice per candidate.
    pub fn canonical_points(&self) -> Vec<&[f64]> {
        self.candidates.iter().map(|c| c.objectives.values()).collect()
    }

    /// Sorts into fronts and writes ranks onto the candidates.
    pub fn assign_ranks(&mut self) -> Result<Fronts> {
        let fronts = non_dominated_sort(&self.canonical_points())?;
        for (c, r) in self.candidates.iter_mut().zip(&fronts.ranks) {
            c.rank = Some(*r);
        }
        Ok(fronts)
    }

    /// Ranks every candidate and computes crowding within each front.
    pub fn assign_ranks_and_crowding(&mut self) -> Result<Fronts> {
        let fronts = self.assign_ranks()?;
        for front in &fronts.fronts {
            let pts: Vec<&[f64]> = front
                .iter()
                .map(|&i| self.candidates[i].objectives.values())
                .collect();
            let cd = crowding_distance(&pts)?;
            for (&i, d) in front.iter().zip(cd) {
                self.candidates[i].crowding = Some(d);
            }
        }
        Ok(fronts)
    }

    pub fn ideal_vector(&self) -> Result<Vec<f64>> {
        ideal_vector(&self.canonical_points())
    }

    /// Keeps a subset of candidates by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            labels: self.labels.clone(),
            directions: self.directions.clone(),
            candidates: indices.iter().map(|&i| self.candidates[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn sort_by(&mut self, cmp: impl FnMut(&Candidate, &Candidate) -> Ordering) {
        self.candidates.sort_by(cmp);
    }
}

/// The first front of `set`, in input order.
pub fn pareto_filter(set: &SolutionSet) -> Result<SolutionSet> {
    if set.is_empty() {
        return Err(Error::Empty("pareto filter of an empty set".into()));
    }
    let keep = non_dominated_indices(&set.canonical_points())?;
    Ok(set.select(&keep))
}
