//! Process parameters and the coded (CCD-normalized) design space.
//!
//! All model formulas take coded inputs. A physical value `x` maps to
//! `(x - center) / half_range`, which sends the material bounds to `±1`
//! under the default coding.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Number of HVOF process inputs.
pub const N_PARAMS: usize = 5;

/// Column/field names of the process inputs, in model index order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["pfr", "sod", "lambda", "cv", "tgf"];

/// Physical units of the process inputs, in model index order.
pub const PARAM_UNITS: [&str; N_PARAMS] = ["g/min", "mm", "-", "m/min", "nl/m"];

/// A point in coded space.
pub type Coded = [f64; N_PARAMS];

/// HVOF process inputs in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    /// Powder feed rate (g/min).
    pub pfr: f64,
    /// Stand-off distance (mm).
    pub sod: f64,
    /// Fuel-to-oxygen ratio.
    pub lambda: f64,
    /// Coating velocity (m/min).
    pub cv: f64,
    /// Total gas flow (nl/m).
    pub tgf: f64,
}

impl ParameterVector {
    pub const fn new(pfr: f64, sod: f64, lambda: f64, cv: f64, tgf: f64) -> Self {
        Self {
            pfr,
            sod,
            lambda,
            cv,
            tgf,
        }
    }

    pub const fn from_array(a: [f64; N_PARAMS]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub const fn to_array(&self) -> [f64; N_PARAMS] {
        [self.pfr, self.sod, self.lambda, self.cv, self.tgf]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Bounds and coding factors for one process input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub half_range: f64,
}

impl ParameterBounds {
    /// Bounds with the default coding (midpoint center, half-width scale).
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Self::with_coding(lower, upper, 0.5 * (lower + upper), 0.5 * (upper - lower))
    }

    pub fn with_coding(lower: f64, upper: f64, center: f64, half_range: f64) -> Result<Self> {
        let b = Self {
            lower,
            upper,
            center,
            half_range,
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        for v in [self.lower, self.upper, self.center, self.half_range] {
            ensure_finite("parameter bound", v)?;
        }
        if self.lower >= self.upper {
            return Err(Error::InvalidSpace(format!(
                "lower bound {} must be below upper bound {}",
                self.lower, self.upper
            )));
        }
        if self.half_range <= 0.0 {
            return Err(Error::InvalidSpace(format!(
                "half range {} must be positive",
                self.half_range
            )));
        }
        Ok(())
    }
}

/// The five-dimensional box of admissible process settings, with coding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct ParameterSpace {
    bounds: [ParameterBounds; N_PARAMS],
}

impl ParameterSpace {
    /// Material-specific limits for WC-10Co-4Cr powder.
    pub fn wc_10co_4cr() -> Self {
        Self::from_limits([45.0, 200.0, 0.84, 75.0, 615.0], [75.0, 260.0, 1.04, 125.0, 751.0])
            .expect("built-in limits are valid")
    }

    pub fn from_limits(lower: [f64; N_PARAMS], upper: [f64; N_PARAMS]) -> Result<Self> {
        let mut bounds = [ParameterBounds::new(0.0, 1.0)?; N_PARAMS];
        for i in 0..N_PARAMS {
            bounds[i] = ParameterBounds::new(lower[i], upper[i])
                .map_err(|e| Error::InvalidSpace(format!("{}: {e}", PARAM_NAMES[i])))?;
        }
        Ok(Self { bounds })
    }

    pub fn from_bounds(bounds: [ParameterBounds; N_PARAMS]) -> Result<Self> {
        for (i, b) in bounds.iter().enumerate() {
            b.validate()
                .map_err(|e| Error::InvalidSpace(format!("{}: {e}", PARAM_NAMES[i])))?;
        }
        Ok(Self { bounds })
    }

    /// Replace the coding factors of parameter `index`.
    pub fn with_coding(mut self, index: usize, center: f64, half_range: f64) -> Result<Self> {
        let b = self.bounds[index];
        self.bounds[index] = ParameterBounds::with_coding(b.lower, b.upper, center, half_range)?;
        Ok(self)
    }

    pub fn bounds(&self) -> &[ParameterBounds; N_PARAMS] {
        &self.bounds
    }

    pub fn lower(&self) -> ParameterVector {
        ParameterVector::from_array(self.bounds.map(|b| b.lower))
    }

    pub fn upper(&self) -> ParameterVector {
        ParameterVector::from_array(self.bounds.map(|b| b.upper))
    }

    pub fn center(&self) -> ParameterVector {
        ParameterVector::from_array(self.bounds.map(|b| b.center))
    }

    /// Physical → coded.
    pub fn normalize(&self, x: &ParameterVector) -> Result<Coded> {
        let a = x.to_array();
        let mut z = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            let v = ensure_finite(PARAM_NAMES[i], a[i])?;
            let b = &self.bounds[i];
            z[i] = (v - b.center) / b.half_range;
        }
        Ok(z)
    }

    /// Coded → physical.
    pub fn denormalize(&self, z: &Coded) -> Result<ParameterVector> {
        let mut a = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            let v = ensure_finite(PARAM_NAMES[i], z[i])?;
            let b = &self.bounds[i];
            a[i] = b.center + v * b.half_range;
        }
        Ok(ParameterVector::from_array(a))
    }

    /// Box limits expressed in coded units.
    pub fn coded_limits(&self) -> (Coded, Coded) {
        let lo = self.bounds.map(|b| (b.lower - b.center) / b.half_range);
        let hi = self.bounds.map(|b| (b.upper - b.center) / b.half_range);
        (lo, hi)
    }

    pub fn contains(&self, x: &ParameterVector) -> bool {
        x.to_array()
            .iter()
            .zip(&self.bounds)
            .all(|(v, b)| *v >= b.lower && *v <= b.upper)
    }

    pub fn contains_coded(&self, z: &Coded) -> bool {
        let (lo, hi) = self.coded_limits();
        (0..N_PARAMS).all(|i| z[i] >= lo[i] && z[i] <= hi[i])
    }

    /// Clamps a physical vector into the box.
    pub fn clamp(&self, x: &ParameterVector) -> ParameterVector {
        let mut a = x.to_array();
        for (v, b) in a.iter_mut().zip(&self.bounds) {
            *v = v.clamp(b.lower, b.upper);
        }
        ParameterVector::from_array(a)
    }

    pub fn clamp_coded(&self, z: &Coded) -> Coded {
        let (lo, hi) = self.coded_limits();
        let mut out = *z;
        for i in 0..N_PARAMS {
            out[i] = out[i].clamp(lo[i], hi[i]);
        }
        out
    }
}

impl Default for ParameterSpace {
    fn default() -> Self {
        Self::wc_10co_4cr()
    }
}

/// Named-field document form: `{pfr: {lower, upper, center, half_range}, ...}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    pfr: BoundsDoc,
    sod: BoundsDoc,
    lambda: BoundsDoc,
    cv: BoundsDoc,
    tgf: BoundsDoc,
}

#[derive(Serialize, Deserialize)]
struct BoundsDoc {
    lower: f64,
    upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_range: Option<f64>,
}

impl BoundsDoc {
    fn resolve(&self) -> Result<ParameterBounds> {
        ParameterBounds::with_coding(
            self.lower,
            self.upper,
            self.center.unwrap_or(0.5 * (self.lower + self.upper)),
            self.half_range.unwrap_or(0.5 * (self.upper - self.lower)),
        )
    }
}

impl From<ParameterBounds> for BoundsDoc {
    fn from(b: ParameterBounds) -> Self {
        Self {
            lower: b.lower,
            upper: b.upper,
            center: Some(b.center),
            half_range: Some(b.half_range),
        }
    }
}

impl TryFrom<SpaceDoc> for ParameterSpace {
    type Error = Error;

    fn try_from(doc: SpaceDoc) -> Result<Self> {
        let parts = [doc.pfr, doc.sod, doc.lambda, doc.cv, doc.tgf];
        let mut bounds = [ParameterBounds::new(0.0, 1.0)?; N_PARAMS];
        for (i, p) in parts.iter().enumerate() {
            bounds[i] = p
                .resolve()
                .map_err(|e| Error::InvalidSpace(format!("{}: {e}", PARAM_NAMES[i])))?;
        }
        Ok(Self { bounds })
    }
}

impl From<ParameterSpace> for SpaceDoc {
    fn from(s: ParameterSpace) -> Self {
        let [pfr, sod, lambda, cv, tgf] = s.bounds.map(BoundsDoc::from);
        Self {
            pfr,
            sod,
            lambda,
            cv,
            tgf,
        }
    }
}
