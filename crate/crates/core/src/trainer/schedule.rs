use serde::Serialize;

use crate::error::{Error, Result};

/// Linear ramp of the pseudo-label weight from `alpha_i` at epoch `e_i` to
/// `alpha_f` at epoch `e_f`, constant outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaSchedule {
    pub alpha_i: f64,
    pub alpha_f: f64,
    pub e_i: usize,
    pub e_f: usize,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule {
            alpha_i: 0.0,
            alpha_f: 1.0,
            e_i: 10,
            e_f: 135,
        }
    }
}

impl AlphaSchedule {
    pub fn new(alpha_i: f64, alpha_f: f64, e_i: usize, e_f: usize) -> Result<Self> {
        let s = AlphaSchedule {
            alpha_i,
            alpha_f,
            e_i,
            e_f,
        };
        s.validate()?;
        Ok(s)
    }

    /// A schedule that is zero everywhere.
    pub fn disabled() -> Self {
        AlphaSchedule {
            alpha_i: 0.0,
            alpha_f: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_i >= 0.0 && self.alpha_i <= self.alpha_f && self.alpha_f.is_finite()) {
            return Err(Error::config(
                "alpha_f",
                format!("0 <= alpha_i <= alpha_f violated ({} > {})", self.alpha_i, self.alpha_f),
            ));
        }
        if self.e_i >= self.e_f {
            return Err(Error::config(
                "e_i",
                format!("e_i < e_f violated ({} >= {})", self.e_i, self.e_f),
            ));
        }
        Ok(())
    }

    pub fn alpha_at(&self, epoch: usize) -> f64 {
        if epoch < self.e_i {
            self.alpha_i
        } else if epoch < self.e_f {
            let slope = (self.alpha_f - self.alpha_i) / (self.e_f - self.e_i) as f64;
            slope * (epoch - self.e_i) as f64 + self.alpha_i
        } else {
            self.alpha_f
        }
    }

    /// First epoch with a positive weight, if any.
    pub fn first_active_epoch(&self) -> Option<usize> {
        if self.alpha_i > 0.0 {
            Some(0)
        } else if self.alpha_f > 0.0 {
            Some(self.e_i + 1)
        } else {
            None
        }
    }
}
