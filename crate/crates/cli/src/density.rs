use anyhow::{bail, Result};
use rayon::prelude::*;
use serde_json::json;
use winding_core::winding_laws::*;
use winding_core::ConeGeometry;

use crate::config::{Axis, DensityConfig, Law};

pub struct DensityTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub diagnostics: serde_json::Value,
}

/// Evaluates the selected law on the grid. Densities are per unit of the
/// chosen axis; dx/dΔθ = 2/ln t converts between the two.
pub fn run(cfg: &DensityConfig) -> Result<DensityTable> {
    let Some(law) = cfg.law else {
        bail!("no law given; choose one of spitzer, numeric, cone-numeric, cone-closed, regime-gaussian, regime-exponential");
    };
    let axis = cfg.axis.unwrap_or(law.native_axis());
    let g = ConeGeometry::new(cfg.beta, cfg.delta)?;
    let grid = cfg.grid.points()?;
    let needs_t = law != Law::Numeric || axis != law.native_axis();
    if needs_t && !(cfg.t > 1.0 && cfg.t.is_finite()) {
        bail!(
            "law {} on axis {} needs finite t > 1, got {}",
            law.name(),
            axis.column(),
            cfg.t
        );
    }
    let half_log = 0.5 * cfg.t.ln();
    // Native variable at a grid point, and the density factor to the axis.
    let (to_native, jacobian) = match (law.native_axis(), axis) {
        (a, b) if a == b => (1.0, 1.0),
        (Axis::X, _) => (1.0 / half_log, 1.0 / half_log),
        (Axis::Dtheta, _) => (half_log, half_log),
    };
    let normalization = match law {
        Law::RegimeGaussian => 1.0 / regime_gaussian_mass(cfg.t, &g)?,
        Law::RegimeExponential => 1.0 / regime_exponential_mass(cfg.t, &g, cfg.x_min)?,
        _ => 1.0,
    };
    let with_error = matches!(law, Law::Numeric | Law::ConeNumeric);
    let eval = |u: f64| -> winding_core::Result<(f64, f64)> {
        let v = u * to_native;
        Ok(match law {
            Law::Spitzer => (spitzer_density(&ScaledWinding::new(v, cfg.t)?), 0.0),
            Law::Numeric => {
                let d = winding_density_numeric(cfg.z, v, &g, &cfg.quad)?;
                (d.value, d.abs_error)
            }
            Law::ConeNumeric => {
                let d = winding_density_cone_asymptotic_numeric(&ConeWindingParams::new(g, cfg.t, v)?, &cfg.quad)?;
                (d.value, d.abs_error)
            }
            Law::ConeClosed => (
                winding_density_cone_closedform(&ConeWindingParams::new(g, cfg.t, v)?)?,
                0.0,
            ),
            Law::RegimeGaussian => (regime_gaussian_density(&ScaledWinding::new(v, cfg.t)?, &g)?, 0.0),
            Law::RegimeExponential => (
                regime_exponential_density_on(&ScaledWinding::new(v, cfg.t)?, &g, cfg.x_min)?,
                0.0,
            ),
        })
    };
    let values: Vec<(f64, f64)> = grid.par_iter().map(|&u| eval(u)).collect::<winding_core::Result<_>>()?;
    let rows = grid
        .iter()
        .zip(&values)
        .map(|(&u, &(d, e))| {
            let mut row = vec![u, d * jacobian];
            if with_error {
                row.push(e * jacobian);
            }
            row
        })
        .collect();
    let mut columns = vec![axis.column(), "density"];
    if with_error {
        columns.push("abs_error");
    }
    let worst_error = values.iter().map(|v| v.1 * jacobian).fold(0.0, f64::max);
    let diagnostics = json!({
        "law": law.name(),
        "parameters": { "beta": cfg.beta, "delta": cfg.delta, "t": cfg.t, "z": cfg.z, "x_min": cfg.x_min },
        "axis": axis.column(),
        "normalization": normalization,
        "jacobian": jacobian,
        "max_abs_error": worst_error,
        "points": grid.len(),
    });
    Ok(DensityTable {
        columns,
        rows,
        diagnostics,
    })
}
