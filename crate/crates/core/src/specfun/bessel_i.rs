use std::f64::consts::PI;

use super::{log_gamma, SeriesControl, Truncation};
use crate::error::{domain, Error, Result};

/// The large-argument expansion is tried once `z` exceeds this and `2ν`.
pub(crate) const HANKEL_MIN_Z: f64 = 30.0;

fn check(func: &'static str, nu: f64, z: f64) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(domain(func, format!("order must be finite and >= 0, got {nu}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain(func, format!("argument must be finite and >= 0, got {z}")));
    }
    Ok(())
}

/// ln I_ν(z) split as (log of a prefactor, positive sum), so that callers can
/// form `I`, `e^{-z} I` or `ln I` without intermediate overflow.
fn log_parts(nu: f64, z: f64, ctl: &SeriesControl) -> Result<(f64, f64)> {
    if z > HANKEL_MIN_Z && z > 2.0 * nu {
        if let Some(sum) = hankel_sum(nu, z, ctl) {
            return Ok((z - 0.5 * (2.0 * PI * z).ln(), sum));
        }
    }
    let sum = series_sum(nu, z, ctl)?;
    let lead = nu * (0.5 * z).ln() - log_gamma(nu + 1.0)?;
    Ok((lead, sum))
}

/// Σ_k (z²/4)^k Γ(ν+1) / (k! Γ(ν+k+1)); every term is positive.
fn series_sum(nu: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut trunc = Truncation::default();
    for k in 1..ctl.max_terms {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if trunc.observe(term, sum, ctl.rel_tol) {
            return Ok(sum);
        }
    }
    if q == 0.0 {
        return Ok(sum);
    }
    Err(Error::NonConvergence {
        func: "bessel_i",
        terms: ctl.max_terms,
        last_rel: term / sum,
    })
}

/// Hankel's expansion Σ_k (−1)^k a_k(ν) / z^k. It is divergent, so it is
/// abandoned (`None`) if the terms start growing before reaching tolerance.
fn hankel_sum(nu: f64, z: f64, ctl: &SeriesControl) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let tol = ctl.rel_tol.max(f64::EPSILON);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..ctl.max_terms {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * z);
        if term == 0.0 {
            return Some(sum);
        }
        if term.abs() > prev {
            return None;
        }
        prev = term.abs();
        sum += term;
        if term.abs() <= tol * sum.abs() {
            return Some(sum);
        }
    }
    None
}

/// Modified Bessel function of the first kind, `I_ν(z)`, for real `ν ≥ 0`.
pub fn bessel_i(nu: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check("bessel_i", nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let (lead, sum) = log_parts(nu, z, ctl)?;
    Ok(lead.exp() * sum)
}

/// `e^{-z} I_ν(z)`.
pub fn bessel_i_scaled(nu: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check("bessel_i_scaled", nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let (lead, sum) = log_parts(nu, z, ctl)?;
    Ok((lead - z).exp() * sum)
}

/// `ln I_ν(z)`; `-∞` when `z = 0 < ν`.
pub fn ln_bessel_i(nu: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check("ln_bessel_i", nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    let (lead, sum) = log_parts(nu, z, ctl)?;
    Ok(lead + sum.ln())
}

/// Leading small-argument term `(z/2)^ν / Γ(ν+1)`.
pub fn bessel_i_small_z(nu: f64, z: f64) -> Result<f64> {
    check("bessel_i_small_z", nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    Ok((nu * (0.5 * z).ln() - log_gamma(nu + 1.0)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_i(0.0, 0.0, &ctl()).unwrap(), 1.0);
        assert_eq!(bessel_i(1.3, 0.0, &ctl()).unwrap(), 0.0);
        assert_eq!(bessel_i_small_z(0.0, 0.0).unwrap(), 1.0);
        assert!((bessel_i_small_z(1.0, 0.01).unwrap() / 0.005 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(bessel_i(-0.5, 1.0, &ctl()).is_err());
        assert!(bessel_i(0.5, -1.0, &ctl()).is_err());
        assert!(bessel_i_small_z(-1.0, 1.0).is_err());
        assert!(ln_bessel_i(1.0, f64::INFINITY, &ctl()).is_err());
    }

    #[test]
    fn exhausted_budget_is_an_error() {
        let tight = SeriesControl::new(1e-16, 3).unwrap();
        assert!(matches!(bessel_i(0.0, 10.0, &tight), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn half_integer_closed_forms() {
        for &z in &[0.5, 1.0, 2.0, 7.5, 29.0, 31.0, 45.0] {
            let pre = (2.0 / (PI * z)).sqrt();
            let i_half = pre * z.sinh();
            let i_m_half = pre * z.cosh();
            let i_3half = i_m_half - i_half / z;
            let i_5half = i_half - 3.0 * i_3half / z;
            assert!(rel(bessel_i(0.5, z, &ctl()).unwrap(), i_half) < 1e-14, "z={z}");
            assert!(rel(bessel_i(1.5, z, &ctl()).unwrap(), i_3half) < 1e-13, "z={z}");
            assert!(rel(bessel_i(2.5, z, &ctl()).unwrap(), i_5half) < 1e-12, "z={z}");
        }
    }

    #[test]
    fn recurrence_holds() {
        for &z in &[0.3, 2.0, 10.0, 35.0, 50.0] {
            for &nu in &[1.0, 1.7, 5.25, 20.0, 40.5] {
                let lhs = bessel_i(nu - 1.0, z, &ctl()).unwrap() - bessel_i(nu + 1.0, z, &ctl()).unwrap();
                let rhs = 2.0 * nu / z * bessel_i(nu, z, &ctl()).unwrap();
                assert!(rel(lhs, rhs) < 1e-11, "nu={nu} z={z}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn positive_and_decreasing_in_order() {
        for iz in 0..40 {
            let z = 0.1 + iz as f64 * 0.5;
            let mut prev = f64::INFINITY;
            for inu in 0..=100 {
                let v = bessel_i(inu as f64 * 0.1, z, &ctl()).unwrap();
                assert!(v > 0.0 && v < prev, "z={z} nu={}", inu as f64 * 0.1);
                prev = v;
            }
        }
    }

    #[test]
    fn branches_overlap_across_switchover() {
        let c = ctl();
        for &nu in &[0.0, 0.5, 1.0, 3.3, 8.0, 14.0] {
            for &z in &[30.5, 35.0, 45.0, 60.0] {
                let series =
                    series_sum(nu, z, &c).unwrap() * (nu * (0.5 * z).ln() - log_gamma(nu + 1.0).unwrap() - z).exp();
                let Some(h) = hankel_sum(nu, z, &c) else {
                    assert!(nu >= 8.0, "expansion should converge at nu={nu} z={z}");
                    continue;
                };
                let hankel = h / (2.0 * PI * z).sqrt();
                assert!(rel(hankel, series) < 1e-9, "nu={nu} z={z}");
            }
        }
    }

    #[test]
    fn scaled_and_log_forms_agree() {
        for &(nu, z) in &[(0.0, 1.0), (2.4, 12.0), (7.0, 40.0), (3.0, 600.0), (60.0, 900.0)] {
            let c = ctl();
            let s = bessel_i_scaled(nu, z, &c).unwrap();
            let l = ln_bessel_i(nu, z, &c).unwrap();
            assert!(rel(s.ln() + z, l) < 1e-13, "nu={nu} z={z}");
        }
        // Beyond f64 range only the log form is finite.
        assert!(bessel_i(0.0, 800.0, &ctl()).unwrap().is_infinite());
        assert!(ln_bessel_i(0.0, 800.0, &ctl()).unwrap().is_finite());
    }

    #[test]
    fn small_z_leading_term_limit() {
        for &nu in &[0.0, 0.3, 1.0, 2.5] {
            let mut last = f64::INFINITY;
            for &z in &[1e-1, 1e-2, 1e-3, 1e-4] {
                let r = bessel_i(nu, z, &ctl()).unwrap() / bessel_i_small_z(nu, z).unwrap();
                let gap = (r - 1.0).abs();
                assert!(gap < last || gap < 1e-15);
                last = gap;
            }
            assert!(last < 1e-8, "nu={nu}: {last}");
        }
    }

    #[test]
    fn addition_theorem() {
        // The m-sum cancels by a factor e^{z(1 - cos Δθ)}; in f64 this is
        // checked where that factor stays below 1e5. The kernels module covers
        // the rest with its extended-precision path.
        let c = ctl();
        for &z in &[0.1, 1.0, 5.0, 12.0, 20.0] {
            for &dth in &[0.0, 0.2, 0.4, 1.0, 2.0, 3.0] {
                if z * (1.0 - f64::cos(dth)) > 5.0 * std::f64::consts::LN_10 {
                    continue;
                }
                let exact = (z * f64::cos(dth)).exp();
                let mut sum = bessel_i(0.0, z, &c).unwrap();
                let mut trunc = Truncation::default();
                let mut m = 1;
                loop {
                    let term = 2.0 * (m as f64 * dth).cos() * bessel_i(m as f64, z, &c).unwrap();
                    sum += term;
                    let mag = bessel_i(m as f64, z, &c).unwrap();
                    if trunc.observe(mag, sum.abs(), c.rel_tol) {
                        break;
                    }
                    m += 1;
                }
                assert!(rel(sum, exact) < 1e-10, "z={z} dth={dth}: {sum} vs {exact}");
            }
        }
    }
}
