//! Multiprecision re-evaluation of the Bessel mode sums.
//!
//! The angular sums Σ_m w_m I_{ν_m}(z) lose roughly e^{z(1 - cos Δθ)} to
//! cancellation, which exceeds f64 range of accuracy long before `z` gets
//! large. When the f64 pass detects this the sum is redone here with enough
//! bits to absorb the loss.

use std::sync::OnceLock;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// A run of modes with nondecreasing order: mode `k` has index
/// `j = start + k·step`, order `order_scale·|j|` and phase `j·angle_scale·Δθ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeRun {
    pub start: f64,
    pub step: f64,
    pub order_scale: f64,
    pub angle_scale: f64,
    /// Folds the ±j pair into a real weight 2cos (1 at j = 0).
    pub paired: bool,
}

/// Working state shared by one evaluation.
pub(crate) struct Mp {
    p: usize,
    cc: Consts,
}

impl Mp {
    /// Precision chosen to absorb `loss_bits` of cancellation and still
    /// deliver well over 53 good bits.
    pub(crate) fn new(loss_bits: f64) -> Result<Self> {
        let need = loss_bits.max(0.0) + 128.0;
        let p = ((need / 64.0).ceil() as usize).max(3) * 64;
        let cc = Consts::new().map_err(|e| Error::Config(format!("multiprecision setup failed: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.p)
    }

    fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(self.p, RM, &mut self.cc)
    }

    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(self.p, RM, &mut self.cc)
    }

    /// Γ(x+1) for x ≥ 0 by Spouge's formula.
    fn gamma1p(&mut self, x: &BigFloat) -> BigFloat {
        let p = self.p;
        // Spouge with parameter `a` has relative error below (2π)^{-(a+1/2)};
        // the coefficients cancel by about a·log2(2π) bits, so work wider.
        let a = (p as f64 * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI).ln()).ceil() as i64 + 2;
        let wp = p + (a as f64 * 2.66) as usize + 64;
        let coeffs = spouge_coefficients(a, wp, &mut self.cc);
        let xw = x.clone().set_precision_owned(wp);
        let mut sum = coeffs[0].clone();
        for (k, c) in coeffs.iter().enumerate().skip(1) {
            let den = xw.add(&BigFloat::from_i64(k as i64, wp), wp, RM);
            sum = sum.add(&c.div(&den, wp, RM), wp, RM);
        }
        let xa = xw.add(&BigFloat::from_i64(a, wp), wp, RM);
        let half = BigFloat::from_f64(0.5, wp);
        let expo = xw.add(&half, wp, RM);
        let lead = expo.mul(&xa.ln(wp, RM, &mut self.cc), wp, RM).sub(&xa, wp, RM);
        let g = lead.exp(wp, RM, &mut self.cc).mul(&sum, wp, RM);
        g.set_precision_owned(p)
    }

    /// I_ν(z) by the ascending series, all in working precision.
    pub(crate) fn bessel_i(&mut self, nu: &BigFloat, z: &BigFloat) -> BigFloat {
        let p = self.p;
        let half_z = z.mul(&self.f(0.5), p, RM);
        let lead = if nu.is_zero() {
            self.int(1)
        } else {
            let g = if nu.is_int() && *nu < self.f(1e4) {
                let n = to_f64(nu) as i64;
                (2..=n).fold(self.int(1), |acc, k| acc.mul(&BigFloat::from_i64(k, p), p, RM))
            } else {
                self.gamma1p(nu)
            };
            let l = self.ln(&half_z);
            self.exp(&nu.mul(&l, p, RM)).div(&g, p, RM)
        };
        let q = half_z.mul(&half_z, p, RM);
        let mut term = self.int(1);
        let mut sum = self.int(1);
        let eps = self.f(2f64.powi(-(p as i32) + 8));
        let mut k: i64 = 0;
        loop {
            k += 1;
            let kb = self.int(k);
            let den = kb.mul(&nu.add(&kb, p, RM), p, RM);
            term = term.mul(&q, p, RM).div(&den, p, RM);
            sum = sum.add(&term, p, RM);
            // Terms shrink monotonically once k exceeds z/2.
            if term < sum.mul(&eps, p, RM) {
                break;
            }
        }
        lead.mul(&sum, p, RM)
    }
}

trait OwnedPrecision {
    fn set_precision_owned(self, p: usize) -> Self;
}

impl OwnedPrecision for BigFloat {
    fn set_precision_owned(mut self, p: usize) -> Self {
        let _ = self.set_precision(p, RM);
        self
    }
}

/// c_0 = √(2π), c_k = (−1)^{k−1} (a−k)^{k−1/2} e^{a−k} / (k−1)!.
type CoefficientCache = std::sync::Mutex<Vec<(i64, usize, Vec<BigFloat>)>>;

fn spouge_coefficients(a: i64, wp: usize, cc: &mut Consts) -> Vec<BigFloat> {
    static CACHE: OnceLock<CoefficientCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some((_, _, v)) = cache.lock().unwrap().iter().find(|(ca, cp, _)| *ca == a && *cp == wp) {
        return v.clone();
    }
    let two_pi = cc.pi(wp, RM).mul(&BigFloat::from_i64(2, wp), wp, RM);
    let mut out = vec![two_pi.sqrt(wp, RM)];
    let half = BigFloat::from_f64(0.5, wp);
    let mut fact = BigFloat::from_i64(1, wp);
    for k in 1..a {
        if k > 1 {
            fact = fact.mul(&BigFloat::from_i64(k - 1, wp), wp, RM);
        }
        let base = BigFloat::from_i64(a - k, wp);
        let pow = base
            .ln(wp, RM, cc)
            .mul(&BigFloat::from_i64(k, wp).sub(&half, wp, RM), wp, RM)
            .add(&base, wp, RM)
            .exp(wp, RM, cc);
        let mut c = pow.div(&fact, wp, RM);
        if k % 2 == 0 {
            c = c.neg();
        }
        out.push(c);
    }
    cache.lock().unwrap().push((a, wp, out.clone()));
    out
}

/// Nearest f64 to a finite BigFloat.
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return if x.is_inf_pos() {
            f64::INFINITY
        } else if x.is_inf_neg() {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
    };
    let n = words.len();
    if n == 0 || words.iter().all(|w| *w == 0) {
        return 0.0;
    }
    // value = 0.m × 2^exp, most significant word last.
    let hi = words[n - 1] as f64;
    let lo = if n >= 2 { words[n - 2] as f64 } else { 0.0 };
    let mantissa = hi + lo * 2f64.powi(-64);
    let v = scale_pow2(mantissa, exp - 64);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

fn scale_pow2(mut v: f64, mut e: i32) -> f64 {
    while e > 900 {
        v *= 2f64.powi(900);
        e -= 900;
    }
    while e < -900 {
        v *= 2f64.powi(-900);
        e += 900;
    }
    v * 2f64.powi(e)
}

/// Result of a multiprecision mode sum.
pub(crate) struct ModeSum {
    pub re: f64,
    pub im: f64,
    /// log2 of Σ|terms| / |Σ terms|, as measured in working precision.
    pub loss_bits: f64,
    pub precision: usize,
}

/// Evaluates `prefactor · e^{−(r1²+r2²)/2t} · Σ_runs w_k I_{ν_k}(z)` with
/// `w_k = e^{i·angle_k}`, or `2cos(angle_k)` (1 at index 0) for paired runs.
/// Precision is raised until it covers the measured cancellation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn mode_sum(
    runs: &[ModeRun],
    r1: f64,
    r2: f64,
    t: f64,
    dtheta: f64,
    prefactor: f64,
    loss_guess: f64,
    max_terms: usize,
) -> Result<ModeSum> {
    let mut guess = loss_guess;
    for _ in 0..6 {
        let out = mode_sum_at(runs, r1, r2, t, dtheta, prefactor, guess, max_terms)?;
        if out.loss_bits + 64.0 <= out.precision as f64 {
            return Ok(out);
        }
        guess = out.loss_bits + 32.0;
    }
    Err(Error::NonConvergence {
        func: "kernel mode sum (extended)",
        terms: max_terms,
        last_rel: f64::NAN,
    })
}

#[allow(clippy::too_many_arguments)]
fn mode_sum_at(
    runs: &[ModeRun],
    r1: f64,
    r2: f64,
    t: f64,
    dtheta: f64,
    prefactor: f64,
    loss_guess: f64,
    max_terms: usize,
) -> Result<ModeSum> {
    let mut mp = Mp::new(loss_guess)?;
    let p = mp.p;
    let (r1b, r2b, tb) = (mp.f(r1), mp.f(r2), mp.f(t));
    let z = r1b.mul(&r2b, p, RM).div(&tb, p, RM);
    let damp = r1b
        .mul(&r1b, p, RM)
        .add(&r2b.mul(&r2b, p, RM), p, RM)
        .div(&tb.mul(&mp.int(2), p, RM), p, RM)
        .neg();
    let dth = mp.f(dtheta);
    let mut re = mp.int(0);
    let mut im = mp.int(0);
    let mut total = mp.int(0);
    // Terms below this fraction of Σ|terms| cannot matter at precision p.
    let cut = mp.f(2f64.powi(-(p as i32) - 8));
    for run in runs {
        let scale = mp.f(run.order_scale);
        let ascale = mp.f(run.angle_scale);
        let mut small = 0;
        let mut accepted = false;
        for k in 0..max_terms {
            let index = mp.f(run.start).add(&mp.f(run.step * k as f64), p, RM);
            let nu = index.mul(&scale, p, RM).abs();
            let ival = mp.bessel_i(&nu, &z);
            let angle = index.mul(&ascale, p, RM).mul(&dth, p, RM);
            let c = angle.cos(p, RM, &mut mp.cc);
            if run.paired {
                let w = if index.is_zero() { 1 } else { 2 };
                let term = ival.mul(&mp.int(w), p, RM);
                re = re.add(&term.mul(&c, p, RM), p, RM);
                total = total.add(&term, p, RM);
            } else {
                let s = angle.sin(p, RM, &mut mp.cc);
                re = re.add(&ival.mul(&c, p, RM), p, RM);
                im = im.add(&ival.mul(&s, p, RM), p, RM);
                total = total.add(&ival, p, RM);
            }
            if ival <= total.mul(&cut, p, RM) {
                small += 1;
                if small >= 2 {
                    accepted = true;
                    break;
                }
            } else {
                small = 0;
            }
        }
        if !accepted {
            return Err(Error::NonConvergence {
                func: "kernel mode sum (extended)",
                terms: max_terms,
                last_rel: f64::NAN,
            });
        }
    }
    let mag = re.mul(&re, p, RM).add(&im.mul(&im, p, RM), p, RM).sqrt(p, RM);
    let loss_bits = if mag.is_zero() {
        p as f64
    } else {
        to_f64(&mp.ln(&total.div(&mag, p, RM))) / std::f64::consts::LN_2
    };
    let scale = mp.exp(&damp).mul(&mp.f(prefactor), p, RM);
    Ok(ModeSum {
        re: to_f64(&re.mul(&scale, p, RM)),
        im: to_f64(&im.mul(&scale, p, RM)),
        loss_bits,
        precision: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_round_trips() {
        for &x in &[1.0, -3.5e-30, 1.234_567_890_123_456_7e200, 6.02e23, -1e-300, 0.1] {
            assert_eq!(to_f64(&BigFloat::from_f64(x, 256)), x);
        }
        assert_eq!(to_f64(&BigFloat::from_f64(0.0, 256)), 0.0);
    }

    #[test]
    fn spouge_gamma() {
        let mut mp = Mp::new(0.0).unwrap();
        // Γ(1.5) = √π/2, Γ(4.5) = 105√π/16, Γ(6) = 120.
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let cases = [
            (0.5, 0.5 * sqrt_pi),
            (3.5, 105.0 / 16.0 * sqrt_pi),
            (5.0, 120.0),
            (0.0, 1.0),
        ];
        for (x, want) in cases {
            let g = to_f64(&mp.gamma1p(&BigFloat::from_f64(x, mp.p)));
            assert!(((g - want) / want).abs() < 2e-16, "x={x}: {g}");
        }
    }

    #[test]
    fn series_matches_closed_form() {
        let mut mp = Mp::new(0.0).unwrap();
        let p = mp.p;
        for &z in &[0.5, 3.0, 40.0] {
            let v = mp.bessel_i(&BigFloat::from_f64(0.5, p), &BigFloat::from_f64(z, p));
            let want = (2.0 / (std::f64::consts::PI * z)).sqrt() * f64::sinh(z);
            assert!(((to_f64(&v) - want) / want).abs() < 1e-15, "z={z}");
        }
    }
}
