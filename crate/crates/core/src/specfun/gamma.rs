use std::f64::consts::PI;
use std::sync::OnceLock;

use super::EULER_GAMMA;
use crate::error::{domain, Result};

/// Even Bernoulli numbers B_2 .. B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Below this the argument is shifted upward before the Stirling series.
const STIRLING_MIN: f64 = 10.0;

/// Half-width of the neighbourhoods of 1 and 2 where the Taylor series in
/// zeta values is used; lnΓ has its zeros there.
const ROOT_BAND: f64 = 0.3;
const ZETA_TERMS: usize = 48;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("argument must be finite and > 0, got {x}")));
    }
    if (x - 1.0).abs() <= ROOT_BAND {
        return Ok(ln_gamma_1p(x - 1.0));
    }
    if (x - 2.0).abs() <= ROOT_BAND {
        let eps = x - 2.0;
        return Ok(eps.ln_1p() + ln_gamma_1p(eps));
    }
    if x >= STIRLING_MIN {
        return Ok(stirling(x));
    }
    let shift = (STIRLING_MIN - x).ceil();
    let mut prod = 1.0;
    let mut k = 0.0;
    while k < shift {
        prod *= x + k;
        k += 1.0;
    }
    Ok(stirling(x + shift) - prod.ln())
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut corr = 0.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let n = 2.0 * (j as f64 + 1.0);
        corr += b / (n * (n - 1.0)) * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + corr
}

/// lnΓ(1+ε) = −γε + Σ_{k≥2} ζ(k)(−ε)^k / k, valid for |ε| < 1.
fn ln_gamma_1p(eps: f64) -> f64 {
    let zeta = zeta_table();
    let mut sum = 0.0;
    let mut pow = eps * eps;
    for (i, z) in zeta.iter().enumerate() {
        let k = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * z * pow / k;
        pow *= eps;
    }
    -EULER_GAMMA * eps + sum
}

/// ζ(k) for k = 2 .. ZETA_TERMS+1, by Euler–Maclaurin summation.
fn zeta_table() -> &'static [f64; ZETA_TERMS] {
    static TABLE: OnceLock<[f64; ZETA_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; ZETA_TERMS];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = zeta_euler_maclaurin((i + 2) as f64);
        }
        out
    })
}

fn zeta_euler_maclaurin(s: f64) -> f64 {
    const N: f64 = 12.0;
    let mut head = 0.0;
    let mut n = N - 1.0;
    while n >= 1.0 {
        head += n.powf(-s);
        n -= 1.0;
    }
    let mut tail = N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = N.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        tail += b / fact * rising * npow;
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        npow /= N * N;
    }
    head + tail
}
