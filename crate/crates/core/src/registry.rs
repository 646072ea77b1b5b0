//! The eight built-in coating-property models.
//!
//! Coefficients act on coded inputs (see [`crate::space`]). The registry can
//! be exported to and loaded from a JSON document of the form
//! `[{name, unit, terms: [{kind, indices, coefficient}]}]`.
//!
//! Roughness: the published coefficient list carries eleven values, but the
//! printed formula only places ten of them (it ends with an `SOD·TGF` term
//! followed by `λ·TGF` using the eleventh value). The default model follows
//! the printed formula; the unplaced value `-0.0242` is kept in
//! [`ROUGHNESS_UNPLACED_COEFFICIENT`] and not used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{GammaLogLinearModel, ModelTerm};

const PFR: usize = 0;
const SOD: usize = 1;
const LAMBDA: usize = 2;
const CV: usize = 3;
const TGF: usize = 4;

/// Roughness coefficient with no matching term in the printed formula.
pub const ROUGHNESS_UNPLACED_COEFFICIENT: f64 = -0.0242;

/// Names of the built-in models, in registry order.
pub const BUILTIN_MODELS: [&str; 8] = [
    "velocity",
    "temperature",
    "rate",
    "efficiency",
    "thickness",
    "roughness",
    "hardness",
    "porosity",
];

use ModelTerm as T;

fn velocity() -> Vec<ModelTerm> {
    vec![
        T::intercept(6.1297),
        T::linear(PFR, -0.0056),
        T::linear(SOD, 0.0494),
        T::linear(LAMBDA, -0.0182),
        T::linear(TGF, 0.0483),
        T::quadratic(SOD, -0.0304),
        T::quadratic(TGF, -0.0219),
        T::interaction(PFR, SOD, -0.0087),
        T::interaction(PFR, LAMBDA, 0.0068),
        T::interaction(SOD, TGF, 0.0142),
    ]
}

fn temperature() -> Vec<ModelTerm> {
    vec![
        T::intercept(7.4491),
        T::linear(PFR, -0.0072),
        T::linear(SOD, -0.0195),
        T::linear(LAMBDA, 0.0254),
        T::linear(TGF, 0.0513),
        T::quadratic(LAMBDA, -0.0056),
        T::quadratic(TGF, -0.0123),
        T::interaction(PFR, TGF, -0.0042),
        T::interaction(SOD, LAMBDA, 0.0040),
        T::interaction(SOD, TGF, 0.0034),
    ]
}

fn rate() -> Vec<ModelTerm> {
    vec![
        T::intercept(3.6337),
        T::linear(PFR, 0.2668),
        T::linear(SOD, -0.0207),
        T::linear(LAMBDA, 0.0636),
        T::linear(TGF, 0.1259),
        T::quadratic(PFR, -0.0303),
        T::quadratic(LAMBDA, -0.0259),
        T::quadratic(CV, -0.0540),
        T::quadratic(TGF, -0.0524),
        T::interaction(PFR, TGF, 0.0184),
    ]
}

fn efficiency() -> Vec<ModelTerm> {
    vec![
        T::intercept(-0.4546),
        T::linear(PFR, 0.0051),
        T::linear(SOD, -0.0207),
        T::linear(LAMBDA, 0.0636),
        T::linear(TGF, 0.1259),
        T::quadratic(LAMBDA, -0.0273),
        T::quadratic(CV, -0.0553),
        T::quadratic(TGF, -0.0538),
        T::interaction(PFR, TGF, 0.0184),
    ]
}

fn thickness() -> Vec<ModelTerm> {
    vec![
        T::intercept(4.8928),
        T::linear(PFR, 0.2275),
        T::linear(LAMBDA, 0.0664),
        T::linear(CV, -0.2658),
        T::linear(TGF, 0.0376),
        T::quadratic(LAMBDA, -0.0338),
        T::quadratic(CV, 0.0428),
        T::quadratic(TGF, -0.0492),
        T::interaction(PFR, LAMBDA, -0.0254),
        T::interaction(CV, TGF, -0.0331),
    ]
}

fn roughness() -> Vec<ModelTerm> {
    vec![
        T::intercept(3.5241),
        T::linear(PFR, 0.0229),
        T::linear(SOD, -0.0065),
        T::linear(LAMBDA, -0.0342),
        T::linear(CV, -0.0419),
        T::linear(TGF, -0.0979),
        T::quadratic(CV, 0.0325),
        T::quadratic(TGF, 0.0164),
        T::interaction(SOD, TGF, -0.0219),
        T::interaction(LAMBDA, TGF, -0.0665),
    ]
}

fn hardness() -> Vec<ModelTerm> {
    vec![
        T::intercept(6.3520),
        T::linear(PFR, -0.0372),
        T::linear(SOD, -0.0345),
        T::linear(LAMBDA, 0.0025),
        T::linear(CV, -0.0192),
        T::linear(TGF, 0.1189),
        T::interaction(LAMBDA, CV, -0.0216),
        T::interaction(LAMBDA, TGF, 0.0248),
    ]
}

fn porosity() -> Vec<ModelTerm> {
    vec![
        T::intercept(2.7056),
        T::linear(PFR, 0.0046),
        T::linear(SOD, 0.0146),
        T::linear(LAMBDA, -0.0293),
        T::linear(CV, 0.0074),
        T::linear(TGF, -0.0462),
        T::quadratic(CV, 0.0363),
        T::quadratic(TGF, 0.0134),
        T::interaction(PFR, LAMBDA, 0.0242),
        T::interaction(PFR, CV, 0.0294),
        T::interaction(PFR, TGF, -0.0150),
        T::interaction(LAMBDA, CV, -0.0366),
        T::interaction(LAMBDA, TGF, -0.0233),
    ]
}

/// Named collection of models, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GammaLogLinearModel>", into = "Vec<GammaLogLinearModel>")]
pub struct ModelRegistry {
    models: Vec<GammaLogLinearModel>,
}

impl ModelRegistry {
    pub fn builtin() -> Self {
        let specs: [(&str, &str, Vec<ModelTerm>); 8] = [
            ("velocity", "m/s", velocity()),
            ("temperature", "°C", temperature()),
            ("rate", "g/min", rate()),
            ("efficiency", "fraction", efficiency()),
            ("thickness", "µm", thickness()),
            ("roughness", "µm", roughness()),
            ("hardness", "HV5", hardness()),
            ("porosity", "%", porosity()),
        ];
        let models = specs
            .into_iter()
            .map(|(n, u, t)| GammaLogLinearModel::new(n, u, t).expect("built-in model is valid"))
            .collect();
        Self { models }
    }

    pub fn new(models: Vec<GammaLogLinearModel>) -> Result<Self> {
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.name() == m.name()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate model name `{}`",
                    m.name()
                )));
            }
        }
        Ok(Self { models })
    }

    pub fn get(&self, name: &str) -> Result<&GammaLogLinearModel> {
        self.models
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    /// Adds or replaces a model by name.
    pub fn insert(&mut self, model: GammaLogLinearModel) {
        match self.models.iter_mut().find(|m| m.name() == model.name()) {
            Some(slot) => *slot = model,
            None => self.models.push(model),
        }
    }

    pub fn models(&self) -> &[GammaLogLinearModel] {
        &self.models
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.iter().map(|m| m.name())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TryFrom<Vec<GammaLogLinearModel>> for ModelRegistry {
    type Error = Error;

    fn try_from(models: Vec<GammaLogLinearModel>) -> Result<Self> {
        Self::new(models)
    }
}

impl From<ModelRegistry> for Vec<GammaLogLinearModel> {
    fn from(r: ModelRegistry) -> Self {
        r.models
    }
}
