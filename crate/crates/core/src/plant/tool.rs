use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::scalar::Real;

/// Stiffening effect of a tool passed through the working channel.
///
/// An inserted tool straightens the balloon by an amount proportional to the
/// free bend angle, reaching `max_offset_deg` at `reference_angle_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ToolModel<T> {
    #[serde(default)]
    pub inserted: bool,
    pub max_offset_deg: T,
    pub reference_angle_deg: T,
}

impl<T: Real> Default for ToolModel<T> {
    fn default() -> Self {
        Self {
            inserted: false,
            max_offset_deg: T::lit(13.0),
            reference_angle_deg: T::lit(100.0),
        }
    }
}

impl<T: Real> ToolModel<T> {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.max_offset_deg >= T::zero()) {
            return Err(PlantError::InvalidTool("max_offset_deg must be >= 0".into()));
        }
        if !(self.reference_angle_deg > T::zero()) {
            return Err(PlantError::InvalidTool("reference_angle_deg must be > 0".into()));
        }
        Ok(())
    }

    /// Angle lost to the tool at a given free angle; zero when withdrawn.
    pub fn offset(&self, free_angle_deg: T) -> T {
        if !self.inserted {
            return T::zero();
        }
        let fraction = (free_angle_deg / self.reference_angle_deg).max(T::zero()).min(T::one());
        self.max_offset_deg * fraction
    }

    pub fn with_inserted(mut self, inserted: bool) -> Self {
        self.inserted = inserted;
        self
    }
}

/// Tool-loaded bend angle for a given free angle.
pub fn apply_tool<T: Real>(free_angle_deg: T, tool: &ToolModel<T>) -> T {
    (free_angle_deg - tool.offset(free_angle_deg)).max(T::zero())
}
