use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Range and quality of the fit a model came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub residual_norm: f64,
}

/// Power-law fluctuation model `sigma(r) = a * r^chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    pub a: f64,
    pub chi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitInfo>,
}

fn positive(x: f64) -> Result<f64, GeometryError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(GeometryError::NonpositiveArg(x))
    }
}

impl ScalingModel {
    pub fn new(a: f64, chi: f64) -> Result<Self, GeometryError> {
        if !(a > 0.0 && a.is_finite()) || !(chi > 0.0 && chi < 1.0) {
            return Err(GeometryError::BadModel { a, chi });
        }
        Ok(ScalingModel { a, chi, fit: None })
    }

    pub fn with_fit(mut self, fit: FitInfo) -> Self {
        self.fit = Some(fit);
        self
    }

    pub fn sigma(&self, r: f64) -> f64 {
        self.a * r.powf(self.chi)
    }

    /// `xi = (1 + chi) / 2`.
    pub fn xi_exponent(&self) -> f64 {
        (1.0 + self.chi) / 2.0
    }

    /// `Delta(r) = (r sigma(r))^(1/2)`.
    pub fn delta(&self, r: f64) -> Result<f64, GeometryError> {
        let r = positive(r)?;
        Ok((r * self.sigma(r)).sqrt())
    }

    pub fn delta_inverse(&self, a: f64) -> Result<f64, GeometryError> {
        let a = positive(a)?;
        Ok((a * a / self.a).powf(1.0 / (1.0 + self.chi)))
    }

    /// `Xi(s) = (s sigma(s) ln(2+s))^(1/2)`.
    pub fn xi_fn(&self, s: f64) -> Result<f64, GeometryError> {
        let s = positive(s)?;
        Ok((s * self.sigma(s) * (2.0 + s).ln()).sqrt())
    }

    /// `Phi(s) = s / (sigma(s) ln(2+s))`.
    pub fn phi(&self, s: f64) -> Result<f64, GeometryError> {
        let s = positive(s)?;
        Ok(s / (self.sigma(s) * (2.0 + s).ln()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn from_text(s: &str) -> Result<Self, GeometryError> {
        let m: ScalingModel = toml::from_str(s).map_err(|e| GeometryError::Parse(e.to_string()))?;
        ScalingModel::new(m.a, m.chi).map(|base| ScalingModel { fit: m.fit, ..base })
    }
}
