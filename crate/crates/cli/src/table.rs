use anyhow::{bail, Result};
use rayon::prelude::*;
use winding_core::winding_laws::*;
use winding_core::ConeGeometry;

use crate::config::TableConfig;

pub const COLUMNS: [&str; 7] = ["beta", "delta", "t", "dtheta", "closed", "numeric", "rel_error"];

/// Closed form against contour quadrature on the full product grid, in
/// grid order.
pub fn run(cfg: &TableConfig) -> Result<Vec<Vec<f64>>> {
    for (name, v) in [
        ("betas", &cfg.betas),
        ("deltas", &cfg.deltas),
        ("ts", &cfg.ts),
        ("dthetas", &cfg.dthetas),
    ] {
        if v.is_empty() {
            bail!("table grid `{name}` is empty");
        }
    }
    let mut points = Vec::new();
    for &beta in &cfg.betas {
        for &delta in &cfg.deltas {
            let g = ConeGeometry::new(beta, delta)?;
            for &t in &cfg.ts {
                for &d in &cfg.dthetas {
                    points.push(ConeWindingParams::new(g, t, d)?);
                }
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|p| -> winding_core::Result<Vec<f64>> {
            let closed = winding_density_cone_closedform(p)?;
            let numeric = winding_density_cone_asymptotic_numeric(p, &cfg.quad)?.value;
            let rel = (numeric - closed).abs() / closed.abs();
            let g = p.geometry();
            Ok(vec![g.beta(), g.delta(), p.t(), p.dtheta(), closed, numeric, rel])
        })
        .collect::<winding_core::Result<Vec<_>>>()?;
    Ok(rows)
}
