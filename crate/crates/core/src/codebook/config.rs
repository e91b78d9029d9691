//! TOML description of a codebook design run.

use serde::{Deserialize, Serialize};

use super::{eps_for_loss_db, CodebookError, CodebookSpec, SamplingGrid, SteeringGrid, DEFAULT_NULL_BOUND_REL};
use crate::antenna::UraGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "half")]
    pub spacing_wavelengths: f64,
}

fn half() -> f64 {
    0.5
}

fn default_null_bound() -> f64 {
    DEFAULT_NULL_BOUND_REL
}

/// `eps` may be given directly or through `gain_loss_db`; exactly one of the
/// two must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub array: ArraySpec,
    pub n_regions: usize,
    #[serde(default)]
    pub aux_regions: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub gain_loss_db: Option<f64>,
    #[serde(default = "default_null_bound")]
    pub null_bound_rel: f64,
    #[serde(default)]
    pub downtilt_deg: f64,
    #[serde(default)]
    pub sampling: SamplingGrid,
    #[serde(default)]
    pub steering: SteeringGrid,
    /// Keep codewords that miss the null bound instead of failing.
    #[serde(default)]
    pub allow_infeasible: bool,
}

impl DesignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CodebookError> {
        let c: DesignConfig = toml::from_str(text).map_err(|e| CodebookError::InvalidParameter(e.to_string()))?;
        c.spec()?;
        Ok(c)
    }

    pub fn spec(&self) -> Result<CodebookSpec, CodebookError> {
        let geom = UraGeometry::new(self.array.rows, self.array.cols, self.array.spacing_wavelengths)
            .map_err(|e| CodebookError::InvalidParameter(e.to_string()))?;
        let eps = match (self.eps, self.gain_loss_db) {
            (Some(e), None) => e,
            (None, Some(db)) if db > 0.0 => eps_for_loss_db(geom.n_elements(), db),
            (None, Some(db)) => {
                return Err(CodebookError::InvalidParameter(format!("gain_loss_db must be positive, got {db}")))
            }
            _ => {
                return Err(CodebookError::InvalidParameter(
                    "give exactly one of eps and gain_loss_db".into(),
                ))
            }
        };
        if self.n_regions == 0 {
            return Err(CodebookError::InvalidParameter("n_regions must be >= 1".into()));
        }
        if let Some(m) = self.aux_regions {
            if m <= self.n_regions {
                return Err(CodebookError::InvalidParameter(format!(
                    "aux_regions ({m}) must exceed n_regions ({})",
                    self.n_regions
                )));
            }
        }
        let spec = CodebookSpec {
            geom,
            eps,
            null_bound_rel: self.null_bound_rel,
            downtilt_deg: self.downtilt_deg,
            sampling: self.sampling,
            steering: self.steering,
        };
        spec.validate()?;
        Ok(spec)
    }
}
