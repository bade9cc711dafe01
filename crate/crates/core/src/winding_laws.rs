//! Winding-angle densities: Spitzer's Cauchy law, Fourier inversion of the
//! Bessel-ratio characteristic functions, the K₁ closed form on the cone and
//! its Gaussian-core and exponential-tail regimes.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{char_fn_cone, ConeGeometry};
use crate::quad::{integrate_to_infinity, QuadControl};
use crate::specfun::{bessel_k1_scaled, SeriesControl};

/// Lower edge of the support used to normalize the exponential-tail regime.
pub const EXP_REGIME_X_MIN: f64 = 1.0;

fn check_time(func: &'static str, t: f64) -> Result<()> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(domain(func, format!("requires finite t > 1, got {t}")));
    }
    Ok(())
}

/// Scaled winding x = 2Δθ/ln t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledWinding {
    x: f64,
    t: f64,
}

impl ScaledWinding {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        check_time("ScaledWinding", t)?;
        if !x.is_finite() {
            return Err(domain("ScaledWinding", "x must be finite"));
        }
        Ok(Self { x, t })
    }

    pub fn from_dtheta(dtheta: f64, t: f64) -> Result<Self> {
        check_time("ScaledWinding", t)?;
        Self::new(2.0 * dtheta / t.ln(), t)
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn dtheta(&self) -> f64 {
        0.5 * self.x * self.t.ln()
    }
}

/// Derived quantities of the cone winding law at (β, δ, t, Δθ):
/// a = (π/β)|δ| ln t and ω = Δθ·(2π/β)|δ|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeWindingParams {
    geometry: ConeGeometry,
    t: f64,
    dtheta: f64,
}

impl ConeWindingParams {
    pub fn new(geometry: ConeGeometry, t: f64, dtheta: f64) -> Result<Self> {
        check_time("ConeWindingParams", t)?;
        if !dtheta.is_finite() {
            return Err(domain("ConeWindingParams", "dtheta must be finite"));
        }
        Ok(Self { geometry, t, dtheta })
    }

    pub fn geometry(&self) -> &ConeGeometry {
        &self.geometry
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn a(&self) -> f64 {
        PI / self.geometry.beta() * self.geometry.delta().abs() * self.t.ln()
    }
    pub fn omega(&self) -> f64 {
        self.dtheta * self.geometry.flux().abs()
    }
    /// √(a² + ω²), the argument of K₁.
    pub fn radius(&self) -> f64 {
        self.a().hypot(self.omega())
    }
    pub fn cosh_phi0(&self) -> f64 {
        self.a() / self.radius()
    }
    pub fn sinh_phi0(&self) -> Complex64 {
        Complex64::new(0.0, -self.omega() / self.radius())
    }
    /// The substitution α = |2πδ/β| sinh φ.
    pub fn alpha_of_phi(&self, phi: Complex64) -> Complex64 {
        phi.sinh() * self.geometry.flux().abs()
    }
}

/// A density value from a numerical inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    pub abs_error: f64,
    /// A small negative quadrature result was set to zero.
    pub clamped: bool,
}

/// Spitzer's limit law (1/π)/(1 + x²).
pub fn spitzer_density(x: &ScaledWinding) -> f64 {
    1.0 / (PI * (1.0 + x.x * x.x))
}

/// Cauchy distribution function of the scaled winding.
pub fn spitzer_cdf(x: f64) -> f64 {
    0.5 + x.atan() / PI
}

/// Applies the clamping rule to a density that must be nonnegative.
fn clamp_nonnegative(value: f64, abs_error: f64, quad: &QuadControl) -> Result<DensityValue> {
    if value >= 0.0 {
        return Ok(DensityValue {
            value,
            abs_error,
            clamped: false,
        });
    }
    let band = 10.0 * quad.abs_tol;
    if -value <= band {
        Ok(DensityValue {
            value: 0.0,
            abs_error,
            clamped: true,
        })
    } else {
        Err(Error::NegativeDensity { value, band })
    }
}

/// Runs `f` inside the quadrature, carrying the first error out.
fn fallible<F: Fn(f64) -> Result<f64>>(f: F) -> (impl Fn(f64) -> f64, std::rc::Rc<Cell<Option<Error>>>) {
    let slot = std::rc::Rc::new(Cell::new(None));
    let inner = slot.clone();
    let g = move |u: f64| match f(u) {
        Ok(v) => v,
        Err(e) => {
            inner.set(Some(e));
            f64::NAN
        }
    };
    (g, slot)
}

/// (1/2π)∫ dα e^{iαΔθ} char_fn_cone(z, α).
///
/// The integrand is symmetric about α = −c (c = 2πδ/β), so the integral is
/// taken over u = α + c ≥ 0. For δ = 0 the result is a probability density;
/// for δ ≠ 0 it carries the phase cos(cΔθ) of the flux-weighted kernel and is
/// returned signed.
pub fn winding_density_numeric(z: f64, dtheta: f64, g: &ConeGeometry, quad: &QuadControl) -> Result<DensityValue> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain(
            "winding_density_numeric",
            format!("requires finite z > 0, got {z}"),
        ));
    }
    if !dtheta.is_finite() {
        return Err(domain("winding_density_numeric", "dtheta must be finite"));
    }
    let c = g.flux();
    let ctl = SeriesControl::default();
    let (f, err) = fallible(|u: f64| Ok((u * dtheta).cos() * char_fn_cone(z, u - c, g, &ctl)?));
    let width = 2.0 + z.sqrt();
    let r = integrate_to_infinity(&f, 0.0, width, 1.5, quad);
    if let Some(e) = err.take() {
        return Err(e);
    }
    let r = r?;
    let phase = (c * dtheta).cos();
    let value = phase * r.value / PI;
    let abs_error = r.abs_error / PI;
    if c == 0.0 {
        clamp_nonnegative(value, abs_error, quad)
    } else {
        Ok(DensityValue {
            value,
            abs_error,
            clamped: false,
        })
    }
}

/// (1/2π)∫ dα exp{iαΔθ − ½(√(α² + c²) − |c|) ln t} by quadrature.
///
/// For c ≠ 0 the contour is moved to Im α = |c|x/√(1+x²), x = 2|Δθ|/ln t,
/// which passes through the saddle; there the integrand has modulus e^{a−R}
/// and no oscillatory cancellation is left, so exponentially small tails
/// keep their relative accuracy.
pub fn winding_density_cone_asymptotic_numeric(p: &ConeWindingParams, quad: &QuadControl) -> Result<DensityValue> {
    let l = p.t.ln();
    let c = p.geometry.flux().abs();
    let dth = p.dtheta.abs();
    let width = (4.0 / l).max(1.0);
    if c == 0.0 {
        let f = |u: f64| (u * dth).cos() * (-0.5 * u * l).exp();
        let r = integrate_to_infinity(f, 0.0, width, 1.5, quad)?;
        return clamp_nonnegative(r.value / PI, r.abs_error / PI, quad);
    }
    let x = 2.0 * dth / l;
    let y = c * x / (1.0 + x * x).sqrt();
    let gexp = p.a() - p.radius();
    let f = |u: f64| {
        let alpha = Complex64::new(u, y);
        let root = (alpha * alpha + c * c).sqrt();
        let expo = Complex64::i() * alpha * dth - (root - c) * (0.5 * l) - gexp;
        expo.exp().re
    };
    let r = integrate_to_infinity(f, 0.0, width, 1.5, quad)?;
    let scale = gexp.exp() / PI;
    clamp_nonnegative(r.value * scale, r.abs_error * scale, quad)
}

/// e^{a} · (2πδ² ln t / (β² R)) · K₁(R), R = √(a² + ω²).
///
/// This is the exact Fourier inverse of the asymptotic characteristic
/// function, so it integrates to one over Δθ without a numerical constant.
pub fn winding_density_cone_closedform(p: &ConeWindingParams) -> Result<f64> {
    let delta = p.geometry.delta();
    if delta == 0.0 {
        return Err(domain(
            "winding_density_cone_closedform",
            "undefined at delta = 0 (the sinh substitution degenerates); use the planar law",
        ));
    }
    let beta = p.geometry.beta();
    let r = p.radius();
    let pre = 2.0 * PI * delta * delta * p.t.ln() / (beta * beta * r);
    Ok(pre * (p.a() - r).exp() * bessel_k1_scaled(r)?)
}

fn regime_delta(func: &'static str, g: &ConeGeometry) -> Result<f64> {
    let d = g.delta().abs();
    if d == 0.0 {
        return Err(domain(func, "regime is defined for delta != 0 only"));
    }
    Ok(d)
}

fn gaussian_raw(x: f64, l: f64, beta: f64, d: f64) -> f64 {
    0.5 * (d * l / (2.0 * beta)).sqrt() * (1.0 + x * x).powf(-0.75) * (-(beta * l / (8.0 * PI * d)) * x * x).exp()
}

fn exponential_raw(x: f64, l: f64, beta: f64, d: f64) -> f64 {
    let k = PI * d / beta * l;
    0.5 * (d * l / (2.0 * beta)).sqrt() * (k * (1.0 - x.abs())).exp() * x.abs().powf(-1.5)
}

/// ∫_{−∞}^{∞} of the Gaussian-regime form over x.
pub fn regime_gaussian_mass(t: f64, g: &ConeGeometry) -> Result<f64> {
    check_time("regime_gaussian_density", t)?;
    let d = regime_delta("regime_gaussian_density", g)?;
    let (l, beta) = (t.ln(), g.beta());
    let fine = QuadControl::new(1e-14, 1e-12)?;
    let width = (8.0 * PI * d / (beta * l)).sqrt().max(0.5);
    Ok(2.0 * integrate_to_infinity(|x| gaussian_raw(x, l, beta, d), 0.0, width, 1.5, &fine)?.value)
}

/// Gaussian-core regime, normalized numerically over x.
pub fn regime_gaussian_density(x: &ScaledWinding, g: &ConeGeometry) -> Result<f64> {
    let d = regime_delta("regime_gaussian_density", g)?;
    let mass = regime_gaussian_mass(x.t, g)?;
    Ok(gaussian_raw(x.x, x.t.ln(), g.beta(), d) / mass)
}

/// −∂²/∂x² ln of the Gaussian-regime form at x = 0: βln t/(4πδ) + 3/2.
pub fn regime_gaussian_curvature(t: f64, g: &ConeGeometry) -> Result<f64> {
    check_time("regime_gaussian_curvature", t)?;
    let d = regime_delta("regime_gaussian_curvature", g)?;
    Ok(g.beta() * t.ln() / (4.0 * PI * d) + 1.5)
}

/// ∫ of the exponential-regime form over |x| ≥ x_min.
pub fn regime_exponential_mass(t: f64, g: &ConeGeometry, x_min: f64) -> Result<f64> {
    check_time("regime_exponential_density", t)?;
    let d = regime_delta("regime_exponential_density", g)?;
    if !(x_min > 0.0) {
        return Err(domain("regime_exponential_density", "support must start at x_min > 0"));
    }
    let (l, beta) = (t.ln(), g.beta());
    let fine = QuadControl::new(1e-300, 1e-12)?;
    let width = (beta / (PI * d * l)).max(0.05);
    Ok(2.0 * integrate_to_infinity(|x| exponential_raw(x, l, beta, d), x_min, width, 1.5, &fine)?.value)
}

/// Exponential-tail regime, normalized over |x| ≥ [`EXP_REGIME_X_MIN`].
pub fn regime_exponential_density(x: &ScaledWinding, g: &ConeGeometry) -> Result<f64> {
    regime_exponential_density_on(x, g, EXP_REGIME_X_MIN)
}

/// As [`regime_exponential_density`] with an explicit support edge.
pub fn regime_exponential_density_on(x: &ScaledWinding, g: &ConeGeometry, x_min: f64) -> Result<f64> {
    let d = regime_delta("regime_exponential_density", g)?;
    if x.x == 0.0 {
        return Err(domain(
            "regime_exponential_density",
            "singular at x = 0, outside the regime",
        ));
    }
    let mass = regime_exponential_mass(x.t, g, x_min)?;
    Ok(exponential_raw(x.x, x.t.ln(), g.beta(), d) / mass)
}

#[cfg(test)]
mod tests;
