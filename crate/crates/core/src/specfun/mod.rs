//! Special functions consumed by the kernels and densities: modified Bessel
//! functions of the first kind for real order, the second-kind function `K_1`,
//! and `ln Γ`.
//!
//! Everything here is a pure function of its arguments.

mod bessel_i;
mod bessel_k;
mod gamma;

pub use bessel_i::{bessel_i, bessel_i_scaled, bessel_i_small_z, ln_bessel_i};
pub use bessel_k::{bessel_k1, bessel_k1_scaled};
pub use gamma::log_gamma;

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Euler–Mascheroni constant.
pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Truncation policy for the power series and mode sums.
///
/// A sum stops once two consecutive terms fall below `rel_tol` times the
/// running magnitude, or fails once `max_terms` terms have been added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(domain(
                "SeriesControl::new",
                format!("rel_tol must lie in (0, 1), got {rel_tol}"),
            ));
        }
        if max_terms < 1 {
            return Err(domain("SeriesControl::new", "max_terms must be at least 1"));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-16,
            max_terms: 4000,
        }
    }
}

/// Tracks the "two consecutive small terms" stopping rule.
#[derive(Debug, Default)]
pub(crate) struct Truncation {
    small_in_a_row: u8,
}

impl Truncation {
    /// Returns true once the sum may stop.
    pub(crate) fn observe(&mut self, term: f64, magnitude: f64, rel_tol: f64) -> bool {
        if term.abs() <= rel_tol * magnitude.abs() {
            self.small_in_a_row += 1;
        } else {
            self.small_in_a_row = 0;
        }
        self.small_in_a_row >= 2
    }
}
