//! Heat kernels on the plane and on the cone with flux parameter δ, and the
//! characteristic functions of the winding angle they imply.

mod extended;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{bessel_i_scaled, ln_bessel_i, SeriesControl, Truncation};
use extended::ModeRun;

/// Above this ratio of Σ|terms| to |Σ terms| the f64 mode sum is redone in
/// extended precision.
pub const CANCELLATION_LIMIT: f64 = 1e3;

/// Cone of total angle β with flux parameter δ. β = 2π, δ = 0 is the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry")]
pub struct ConeGeometry {
    beta: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawGeometry {
    beta: f64,
    delta: f64,
}

impl TryFrom<RawGeometry> for ConeGeometry {
    type Error = Error;
    fn try_from(r: RawGeometry) -> Result<Self> {
        Self::new(r.beta, r.delta)
    }
}

impl ConeGeometry {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        // Accept 2π computed with a rounding error or two.
        if !(beta > 0.0 && beta <= 2.0 * PI * (1.0 + 4.0 * f64::EPSILON)) {
            return Err(domain("ConeGeometry", format!("beta must lie in (0, 2π], got {beta}")));
        }
        if !delta.is_finite() {
            return Err(domain("ConeGeometry", format!("delta must be finite, got {delta}")));
        }
        Ok(Self { beta, delta })
    }

    pub fn planar() -> Self {
        Self {
            beta: 2.0 * PI,
            delta: 0.0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// 2π/β, the spacing of the angular orders.
    pub fn order_scale(&self) -> f64 {
        2.0 * PI / self.beta
    }

    /// c = 2πδ/β; the orders are |mode·(2π/β) + c|.
    pub fn flux(&self) -> f64 {
        self.order_scale() * self.delta
    }
}

/// Evaluation point (r₁, r₂, Δθ, t). The Bessel argument is derived, never
/// stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    r1: f64,
    r2: f64,
    dtheta: f64,
    t: f64,
}

impl KernelPoint {
    pub fn new(r1: f64, r2: f64, dtheta: f64, t: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r1.is_finite() && r2 >= 0.0 && r2.is_finite()) {
            return Err(domain(
                "KernelPoint",
                format!("radii must be finite and >= 0, got {r1}, {r2}"),
            ));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("KernelPoint", format!("time must be finite and > 0, got {t}")));
        }
        if !dtheta.is_finite() {
            return Err(domain("KernelPoint", "angle must be finite"));
        }
        Ok(Self { r1, r2, dtheta, t })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    /// `z = r₁r₂/t`: with the exp{−|r⃗₁ − r⃗₂|²/2t} normalization this is the
    /// argument for which Σ_m e^{imΔθ} I_m(z) = e^{z cos Δθ} reproduces the
    /// free kernel.
    pub fn z(&self) -> f64 {
        self.r1 * self.r2 / self.t
    }
}

/// Free planar heat kernel `(1/2πt) exp(−|r⃗₁ − r⃗₂|²/2t)`.
pub fn heat_kernel_free(p: &KernelPoint) -> f64 {
    let d2 = p.r1 * p.r1 + p.r2 * p.r2 - 2.0 * p.r1 * p.r2 * p.dtheta.cos();
    (-d2.max(0.0) / (2.0 * p.t)).exp() / (2.0 * PI * p.t)
}

/// Planar kernel from its angular Bessel expansion.
pub fn heat_kernel_polar(p: &KernelPoint, ctl: &SeriesControl) -> Result<f64> {
    let runs = [ModeRun {
        start: 0.0,
        step: 1.0,
        order_scale: 1.0,
        angle_scale: 1.0,
        paired: true,
    }];
    Ok(mode_sum(&runs, p, 1.0 / (2.0 * PI * p.t), ctl)?.re)
}

/// Cone kernel `(1/βt) e^{−(r₁²+r₂²)/2t} Σ_m e^{i2π(m+δ)Δθ/β} I_{2π|m+δ|/β}(z)`.
pub fn heat_kernel_cone(p: &KernelPoint, g: &ConeGeometry, ctl: &SeriesControl) -> Result<Complex64> {
    let s = g.order_scale();
    // Start both runs at the smallest order so each run is monotone.
    let m0 = (-g.delta).round();
    let up = ModeRun {
        start: m0 + g.delta,
        step: 1.0,
        order_scale: s,
        angle_scale: s,
        paired: false,
    };
    let down = ModeRun {
        start: m0 - 1.0 + g.delta,
        step: -1.0,
        ..up
    };
    mode_sum(&[up, down], p, 1.0 / (g.beta * p.t), ctl)
}

fn mode_sum(runs: &[ModeRun], p: &KernelPoint, prefactor: f64, ctl: &SeriesControl) -> Result<Complex64> {
    let z = p.z();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for run in runs {
        let mut trunc = Truncation::default();
        let mut done = false;
        for k in 0..ctl.max_terms {
            let j = run.start + run.step * k as f64;
            let iv = bessel_i_scaled((run.order_scale * j).abs(), z, ctl)?;
            let angle = j * run.angle_scale * p.dtheta;
            if run.paired {
                let w = if j == 0.0 { 1.0 } else { 2.0 };
                sum.re += w * iv * angle.cos();
                total += w * iv;
            } else {
                sum += iv * Complex64::from_polar(1.0, angle);
                total += iv;
            }
            if trunc.observe(iv, total, ctl.rel_tol) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::NonConvergence {
                func: "heat kernel mode sum",
                terms: ctl.max_terms,
                last_rel: f64::NAN,
            });
        }
    }
    let damp = -(p.r1 - p.r2).powi(2) / (2.0 * p.t);
    let kappa = total / sum.norm();
    if kappa <= CANCELLATION_LIMIT {
        return Ok(sum * (prefactor * damp.exp()));
    }
    // Cancellation a priori ≈ z(1 − cos Δθ) nats for the planar sum; the
    // measured ratio is only a lower bound once the f64 sum is noise.
    let planar_loss = z * (1.0 - p.dtheta.cos()) / std::f64::consts::LN_2;
    let guess = kappa.log2().min(1e4).max(planar_loss);
    let out = extended::mode_sum(runs, p.r1, p.r2, p.t, p.dtheta, prefactor, guess, ctl.max_terms)?;
    Ok(Complex64::new(out.re, out.im))
}

fn check_alpha(func: &'static str, alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(domain(func, format!("alpha must be finite, got {alpha}")));
    }
    Ok(())
}

fn check_z(func: &'static str, z: f64) -> Result<()> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(domain(func, format!("z must be finite and >= 0, got {z}")));
    }
    Ok(())
}

/// Ratio I_{nu1}(z)/I_{nu0}(z), finite limits at z = 0.
fn bessel_ratio(func: &'static str, nu1: f64, nu0: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    if z == 0.0 {
        return if nu1 == nu0 {
            Ok(1.0)
        } else if nu1 > nu0 {
            Ok(0.0)
        } else {
            Err(domain(
                func,
                "ratio diverges at z = 0 when the numerator order is smaller",
            ))
        };
    }
    if nu1 == nu0 {
        return Ok(1.0);
    }
    Ok((ln_bessel_i(nu1, z, ctl)? - ln_bessel_i(nu0, z, ctl)?).exp())
}

/// Characteristic function of the planar winding angle, `I_{|α|}(z)/I₀(z)`.
pub fn char_fn_plane(z: f64, alpha: f64, ctl: &SeriesControl) -> Result<f64> {
    check_z("char_fn_plane", z)?;
    check_alpha("char_fn_plane", alpha)?;
    bessel_ratio("char_fn_plane", alpha.abs(), 0.0, z, ctl)
}

/// Cone version, `I_{|α + c|}(z)/I_{|c|}(z)` with c = 2πδ/β.
pub fn char_fn_cone(z: f64, alpha: f64, g: &ConeGeometry, ctl: &SeriesControl) -> Result<f64> {
    check_z("char_fn_cone", z)?;
    check_alpha("char_fn_cone", alpha)?;
    let c = g.flux();
    bessel_ratio("char_fn_cone", (alpha + c).abs(), c.abs(), z, ctl)
}

/// Small-z form `exp{−½(|α + c| − |c|) ln t}`.
pub fn char_fn_asymptotic(alpha: f64, t: f64, g: &ConeGeometry) -> Result<f64> {
    check_alpha("char_fn_asymptotic", alpha)?;
    if !(t > 1.0 && t.is_finite()) {
        return Err(domain("char_fn_asymptotic", format!("requires finite t > 1, got {t}")));
    }
    let c = g.flux();
    Ok((-0.5 * ((alpha + c).abs() - c.abs()) * t.ln()).exp())
}
