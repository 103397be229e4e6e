//! Smooth stand-ins for the spike step function.
//!
//! The forward pass always uses the exact step; these functions supply the
//! derivative used during backpropagation (and a differentiable forward for
//! gradient checking).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateFamily {
    Arctan,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    pub family: SurrogateFamily,
    /// Smoothness factor; larger is closer to the step.
    pub alpha: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            family: SurrogateFamily::Arctan,
            alpha: 2.0,
        }
    }
}

impl SurrogateConfig {
    pub fn arctan(alpha: f64) -> Self {
        Self {
            family: SurrogateFamily::Arctan,
            alpha,
        }
    }

    pub fn sigmoid(alpha: f64) -> Self {
        Self {
            family: SurrogateFamily::Sigmoid,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::contract(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Unchecked value; callers guarantee finite `x` and a valid config.
    #[inline]
    pub(crate) fn value_unchecked(&self, x: f64) -> f64 {
        match self.family {
            SurrogateFamily::Arctan => (0.5 * PI * self.alpha * x).atan() / PI + 0.5,
            SurrogateFamily::Sigmoid => sigmoid(self.alpha * x),
        }
    }

    /// Unchecked derivative; callers guarantee finite `x` and a valid config.
    #[inline]
    pub(crate) fn grad_unchecked(&self, x: f64) -> f64 {
        match self.family {
            SurrogateFamily::Arctan => {
                let k = 0.5 * PI * self.alpha * x;
                self.alpha / (2.0 * (1.0 + k * k))
            }
            // sigma(ax) (1 - sigma(ax)) with the second factor taken as
            // sigma(-ax), which does not cancel to zero for large ax
            SurrogateFamily::Sigmoid => self.alpha * sigmoid(self.alpha * x) * sigmoid(-self.alpha * x),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    // split keeps exp from overflowing for large |x|
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check(x: f64, cfg: &SurrogateConfig) -> Result<()> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::NumericInput(format!("surrogate argument {x}")));
    }
    Ok(())
}

/// Smooth approximation of the step at `x`, in (0, 1).
pub fn surrogate_value(x: f64, cfg: &SurrogateConfig) -> Result<f64> {
    check(x, cfg)?;
    Ok(cfg.value_unchecked(x))
}

/// Derivative of [`surrogate_value`], strictly positive and maximal at 0.
pub fn surrogate_grad(x: f64, cfg: &SurrogateConfig) -> Result<f64> {
    check(x, cfg)?;
    Ok(cfg.grad_unchecked(x))
}
