use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Coefficients of the momentum equation and the OU shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Brinkman viscosity.
    pub mu: f64,
    /// Darcy coefficient.
    pub alpha: f64,
    /// Forchheimer coefficient.
    pub beta: f64,
    /// Absorption exponent.
    pub r: f64,
    /// OU shift parameter.
    #[serde(default)]
    pub chi: f64,
}

/// Which well-posedness regime a `(dim, r, βμ)` triple falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `d = 2`, `1 ≤ r ≤ 3`.
    TwoDimSubcritical,
    /// `d ∈ {2, 3}`, `r > 3`.
    Supercritical,
    /// `d = 3`, `r = 3`, `2βμ ≥ 1`.
    Critical3d,
}

pub const REGIME_RULE: &str =
    "admissible regimes: d=2 with any r >= 1; d=3 with r > 3, or r = 3 with 2*beta*mu >= 1";

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {x}")))
            }
        };
        pos("mu", self.mu)?;
        pos("alpha", self.alpha)?;
        pos("beta", self.beta)?;
        if !(self.r.is_finite() && self.r >= 1.0) {
            return Err(invalid("r", format!("must be >= 1, got {}", self.r)));
        }
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            return Err(invalid("chi", format!("must be >= 0, got {}", self.chi)));
        }
        Ok(())
    }

    /// Classifies `(dim, r, 2βμ)`; inadmissible combinations are errors citing the rule.
    pub fn regime(&self, dim: usize) -> Result<Regime> {
        self.validate()?;
        let r = self.r;
        let two_beta_mu = 2.0 * self.beta * self.mu;
        match dim {
            2 if r <= 3.0 => Ok(Regime::TwoDimSubcritical),
            2 | 3 if r > 3.0 => Ok(Regime::Supercritical),
            3 if r == 3.0 && two_beta_mu >= 1.0 => Ok(Regime::Critical3d),
            3 if r == 3.0 => Err(Error::Inadmissible(format!(
                "d=3 with r = 3 needs 2*beta*mu >= 1, got {two_beta_mu}; {REGIME_RULE}"
            ))),
            3 => Err(Error::Inadmissible(format!(
                "d=3 with r ∈ [1,3) (got r = {r}) is an open problem for uniqueness and is not simulated; {REGIME_RULE}"
            ))),
            _ => Err(invalid("dim", format!("must be 2 or 3, got {dim}"))),
        }
    }

    /// `R = 729 / (8μ³)`, the growth rate multiplying `∫‖Υ‖⁴_{L⁴}` for `r < 3`.
    pub fn growth_constant(&self) -> f64 {
        729.0 / (8.0 * self.mu.powi(3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64, beta: f64, r: f64) -> PhysicalParams {
        PhysicalParams { mu, alpha: 1.0, beta, r, chi: 0.0 }
    }

    #[test]
    fn regimes_follow_the_admissibility_rule() {
        assert_eq!(p(1.0, 1.0, 1.0).regime(2).unwrap(), Regime::TwoDimSubcritical);
        assert_eq!(p(1.0, 1.0, 3.0).regime(2).unwrap(), Regime::TwoDimSubcritical);
        assert_eq!(p(1.0, 1.0, 3.5).regime(2).unwrap(), Regime::Supercritical);
        assert_eq!(p(1.0, 1.0, 4.0).regime(3).unwrap(), Regime::Supercritical);
        assert_eq!(p(1.0, 0.5, 3.0).regime(3).unwrap(), Regime::Critical3d);
        assert!(matches!(p(1.0, 0.49, 3.0).regime(3), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn three_d_low_r_message_names_the_open_problem() {
        let msg = p(1.0, 1.0, 2.0).regime(3).unwrap_err().to_string();
        assert!(msg.contains("d=3 with r ∈ [1,3)"), "{msg}");
        assert!(msg.contains("open problem"), "{msg}");
        assert!(msg.contains("2*beta*mu >= 1"), "{msg}");
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        assert!(p(0.0, 1.0, 2.0).validate().is_err());
        assert!(p(1.0, -1.0, 2.0).validate().is_err());
        assert!(p(1.0, 1.0, 0.9).validate().is_err());
        let mut q = p(1.0, 1.0, 2.0);
        q.chi = -0.1;
        assert!(q.validate().is_err());
    }
}
