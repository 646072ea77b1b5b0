//! Gamma regression models with a log link: `μ = exp(h(x))`, where `h` is a
//! polynomial of coded inputs with linear, quadratic and interaction terms.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::halton;
use crate::space::{Coded, ParameterSpace, N_PARAMS, PARAM_NAMES};

pub type Vec5 = SVector<f64, N_PARAMS>;
pub type Mat5 = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// Linear predictors beyond this magnitude are rejected instead of
/// overflowing (`exp(709.8)` is the largest finite `f64`).
pub const PREDICTOR_LIMIT: f64 = 700.0;

/// Shape of a single polynomial term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermKind {
    Intercept,
    Linear(usize),
    Quadratic(usize),
    /// Stored with the smaller index first.
    Interaction(usize, usize),
}

impl TermKind {
    fn normalized(self) -> Self {
        match self {
            TermKind::Interaction(i, j) if i > j => TermKind::Interaction(j, i),
            k => k,
        }
    }

    fn indices(&self) -> Vec<usize> {
        match *self {
            TermKind::Intercept => vec![],
            TermKind::Linear(i) | TermKind::Quadratic(i) => vec![i],
            TermKind::Interaction(i, j) => vec![i, j],
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            TermKind::Intercept => "intercept",
            TermKind::Linear(_) => "linear",
            TermKind::Quadratic(_) => "quadratic",
            TermKind::Interaction(..) => "interaction",
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TermKind::Intercept => write!(f, "1"),
            TermKind::Linear(i) => write!(f, "{}", PARAM_NAMES[i]),
            TermKind::Quadratic(i) => write!(f, "{}^2", PARAM_NAMES[i]),
            TermKind::Interaction(i, j) => write!(f, "{}*{}", PARAM_NAMES[i], PARAM_NAMES[j]),
        }
    }
}

/// A coefficient attached to a polynomial term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermDoc", into = "TermDoc")]
pub struct ModelTerm {
    pub kind: TermKind,
    pub coefficient: f64,
}

impl ModelTerm {
    pub fn intercept(coefficient: f64) -> Self {
        Self {
            kind: TermKind::Intercept,
            coefficient,
        }
    }

    pub fn linear(i: usize, coefficient: f64) -> Self {
        Self {
            kind: TermKind::Linear(i),
            coefficient,
        }
    }

    pub fn quadratic(i: usize, coefficient: f64) -> Self {
        Self {
            kind: TermKind::Quadratic(i),
            coefficient,
        }
    }

    pub fn interaction(i: usize, j: usize, coefficient: f64) -> Self {
        Self {
            kind: TermKind::Interaction(i, j).normalized(),
            coefficient,
        }
    }

    fn value(&self, z: &Coded) -> f64 {
        let c = self.coefficient;
        match self.kind {
            TermKind::Intercept => c,
            TermKind::Linear(i) => c * z[i],
            TermKind::Quadratic(i) => c * z[i] * z[i],
            TermKind::Interaction(i, j) => c * z[i] * z[j],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    kind: String,
    #[serde(default)]
    indices: Vec<usize>,
    coefficient: f64,
}

impl TryFrom<TermDoc> for ModelTerm {
    type Error = Error;

    fn try_from(doc: TermDoc) -> Result<Self> {
        let bad = |reason: String| Error::InvalidTerm {
            model: "<document>".into(),
            reason,
        };
        let kind = match (doc.kind.as_str(), doc.indices.as_slice()) {
            ("intercept", []) => TermKind::Intercept,
            ("linear", [i]) => TermKind::Linear(*i),
            ("quadratic", [i]) => TermKind::Quadratic(*i),
            ("interaction", [i, j]) => TermKind::Interaction(*i, *j).normalized(),
            (k, idx) => return Err(bad(format!("term kind `{k}` with indices {idx:?}"))),
        };
        Ok(Self {
            kind,
            coefficient: doc.coefficient,
        })
    }
}

impl From<ModelTerm> for TermDoc {
    fn from(t: ModelTerm) -> Self {
        Self {
            kind: t.kind.kind_name().to_string(),
            indices: t.kind.indices(),
            coefficient: t.coefficient,
        }
    }
}

/// `μ(x) = exp(Σ terms)` over coded inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub struct GammaLogLinearModel {
    name: String,
    unit: String,
    terms: Vec<ModelTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    unit: String,
    terms: Vec<ModelTerm>,
}

impl TryFrom<ModelDoc> for GammaLogLinearModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        Self::new(doc.name, doc.unit, doc.terms)
    }
}

impl From<GammaLogLinearModel> for ModelDoc {
    fn from(m: GammaLogLinearModel) -> Self {
        Self {
            name: m.name,
            unit: m.unit,
            terms: m.terms,
        }
    }
}

impl GammaLogLinearModel {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        terms: Vec<ModelTerm>,
    ) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(terms.len());
        for t in terms {
            let kind = t.kind.normalized();
            let err = |reason: String| Error::InvalidTerm {
                model: name.clone(),
                reason,
            };
            if kind.indices().iter().any(|&i| i >= N_PARAMS) {
                return Err(err(format!("index out of range in {kind:?}")));
            }
            if let TermKind::Interaction(i, j) = kind {
                if i == j {
                    return Err(err(format!(
                        "interaction of `{}` with itself; use a quadratic term",
                        PARAM_NAMES[i]
                    )));
                }
            }
            if !t.coefficient.is_finite() {
                return Err(err(format!("non-finite coefficient on {kind}")));
            }
            if !seen.insert(kind) {
                return Err(err(format!("duplicate term {kind}")));
            }
            normalized.push(ModelTerm {
                kind,
                coefficient: t.coefficient,
            });
        }
        Ok(Self {
            name,
            unit: unit.into(),
            terms: normalized,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn terms(&self) -> &[ModelTerm] {
        &self.terms
    }

    /// `h(x)`, the linear predictor on the log scale.
    pub fn linear_predictor(&self, z: &Coded) -> f64 {
        self.terms.iter().map(|t| t.value(z)).sum()
    }

    fn checked_exp(&self, h: f64) -> Result<f64> {
        if !h.is_finite() || h.abs() > PREDICTOR_LIMIT {
            return Err(Error::Overflow {
                model: self.name.clone(),
                predictor: h,
            });
        }
        Ok(h.exp())
    }

    /// Conditional mean in model units; always strictly positive.
    pub fn predict(&self, z: &Coded) -> Result<f64> {
        for (i, v) in z.iter().enumerate() {
            crate::error::ensure_finite(PARAM_NAMES[i], *v)?;
        }
        self.checked_exp(self.linear_predictor(z))
    }

    /// `∇h(x)`.
    pub fn predictor_gradient(&self, z: &Coded) -> Vec5 {
        let mut g = Vec5::zeros();
        for t in &self.terms {
            let c = t.coefficient;
            match t.kind {
                TermKind::Intercept => {}
                TermKind::Linear(i) => g[i] += c,
                TermKind::Quadratic(i) => g[i] += 2.0 * c * z[i],
                TermKind::Interaction(i, j) => {
                    g[i] += c * z[j];
                    g[j] += c * z[i];
                }
            }
        }
        g
    }

    /// `B = ∇²h`, constant in `x`: `2β_jj` on the diagonal, `β_jm` off it.
    pub fn predictor_hessian(&self) -> Mat5 {
        let mut b = Mat5::zeros();
        for t in &self.terms {
            match t.kind {
                TermKind::Quadratic(i) => b[(i, i)] += 2.0 * t.coefficient,
                TermKind::Interaction(i, j) => {
                    b[(i, j)] += t.coefficient;
                    b[(j, i)] += t.coefficient;
                }
                _ => {}
            }
        }
        b
    }

    /// `∇μ = exp(h) ∇h`.
    pub fn gradient(&self, z: &Coded) -> Vec5 {
        self.linear_predictor(z).exp() * self.predictor_gradient(z)
    }

    /// Value and gradient in one pass, with the overflow guard.
    pub fn value_and_gradient(&self, z: &Coded) -> Result<(f64, Vec5)> {
        let mu = self.predict(z)?;
        Ok((mu, mu * self.predictor_gradient(z)))
    }

    /// `∇²μ = exp(h) (∇h ∇hᵀ + B)`, filled symmetrically.
    pub fn hessian(&self, z: &Coded) -> Mat5 {
        let mu = self.linear_predictor(z).exp();
        let g = self.predictor_gradient(z);
        let b = self.predictor_hessian();
        let mut h = Mat5::zeros();
        for i in 0..N_PARAMS {
            for j in i..N_PARAMS {
                let v = mu * (g[i] * g[j] + b[(i, j)]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }
}

/// Outcome of a sampled convexity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Definiteness {
    /// The Hessian was positive definite at every sample.
    PositiveDefinite,
    /// Some sample had a Hessian eigenvalue `<= 0`.
    NotPositiveDefinite { witness: Coded, min_eigenvalue: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub model: String,
    pub samples: usize,
    /// Smallest Hessian eigenvalue seen over all samples.
    pub min_eigenvalue: f64,
    /// Sample where the smallest eigenvalue occurred.
    pub argmin: Coded,
    pub definiteness: Definiteness,
}

impl ConvexityReport {
    pub fn is_positive_definite(&self) -> bool {
        matches!(self.definiteness, Definiteness::PositiveDefinite)
    }
}

pub const DEFAULT_CONVEXITY_SAMPLES: usize = 1000;

/// Checks the Hessian of `model` on a Halton sample of the coded box.
pub fn convexity_report(
    model: &GammaLogLinearModel,
    space: &ParameterSpace,
    samples: usize,
) -> ConvexityReport {
    let (lo, hi) = space.coded_limits();
    let mut min_eig = f64::INFINITY;
    let mut argmin = [0.0; N_PARAMS];
    for k in 0..samples.max(1) {
        let u = halton::<N_PARAMS>(k + 1);
        let z: Coded = std::array::from_fn(|i| lo[i] + u[i] * (hi[i] - lo[i]));
        let eig = SymmetricEigen::new(model.hessian(&z)).eigenvalues.min();
        if eig < min_eig {
            min_eig = eig;
            argmin = z;
        }
    }
    let definiteness = if min_eig > 0.0 {
        Definiteness::PositiveDefinite
    } else {
        Definiteness::NotPositiveDefinite {
            witness: argmin,
            min_eigenvalue: min_eig,
        }
    };
    ConvexityReport {
        model: model.name.clone(),
        samples: samples.max(1),
        min_eigenvalue: min_eig,
        argmin,
        definiteness,
    }
}
