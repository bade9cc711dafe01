use std::f64::consts::PI;

use super::EULER_GAMMA;
use crate::error::{domain, Error, Result};

/// Below this the ascending series is used, above it Steed's continued fraction.
const SERIES_MAX_X: f64 = 2.0;
const MAX_ITER: usize = 10_000;

fn check(func: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(func, format!("argument must be finite and > 0, got {x}")));
    }
    Ok(())
}

/// K₁(x) = 1/x + (x/2) Σ_k t_k [ln(x/2) − ½(ψ(k+1) + ψ(k+2))],
/// t_k = (x²/4)^k / (k!(k+1)!).
fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let lx = (0.5 * x).ln();
    let mut t = 1.0;
    let mut psi1 = -EULER_GAMMA; // ψ(k+1)
    let mut psi2 = 1.0 - EULER_GAMMA; // ψ(k+2)
    let mut sum = t * (lx - 0.5 * (psi1 + psi2));
    for k in 1..200 {
        let kf = k as f64;
        t *= q / (kf * (kf + 1.0));
        psi1 += 1.0 / kf;
        psi2 += 1.0 / (kf + 1.0);
        let term = t * (lx - 0.5 * (psi1 + psi2));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    1.0 / x + 0.5 * x * sum
}

/// Steed's method (continued fraction CF2 for order 0) giving e^x K₁(x).
fn steed_scaled(x: f64) -> Result<f64> {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON * 0.25 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            func: "bessel_k1",
            terms: MAX_ITER,
            last_rel: (delh / h).abs(),
        });
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    Ok(k0 * (x + 0.5 - h) / x)
}

/// Modified Bessel function of the second kind of order one, `K₁(x)`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check("bessel_k1", x)?;
    if x <= SERIES_MAX_X {
        Ok(series(x))
    } else {
        Ok(steed_scaled(x)? * (-x).exp())
    }
}

/// `e^x K₁(x)`.
pub fn bessel_k1_scaled(x: f64) -> Result<f64> {
    check("bessel_k1_scaled", x)?;
    if x <= SERIES_MAX_X {
        Ok(series(x) * x.exp())
    } else {
        steed_scaled(x)
    }
}
