//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals and on
//! half-lines, used by the density inversions and by the tests.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Kronrod abscissae on [-1, 1], descending; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Cap on interval bisections per finite integral.
    pub max_subdivisions: usize,
    /// Cap on panels when integrating over a half-line.
    pub max_panels: usize,
}

impl Default for QuadControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            max_panels: 200,
        }
    }
}

impl QuadControl {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let ctl = Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        };
        ctl.validate()?;
        Ok(ctl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || (self.abs_tol == 0.0 && self.rel_tol == 0.0) {
            return Err(domain(
                "QuadControl",
                format!(
                    "need abs_tol, rel_tol >= 0 and not both zero, got {} and {}",
                    self.abs_tol, self.rel_tol
                ),
            ));
        }
        if self.max_subdivisions == 0 || self.max_panels == 0 {
            return Err(domain("QuadControl", "subdivision and panel caps must be positive"));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// ∫|f| over the segment, for the round-off floor.
    magnitude: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut magnitude = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (l, r) = (f(c - dx), f(c + dx));
        let pair = l + r;
        magnitude += WGK[j] * (l.abs() + r.abs());
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
        magnitude: magnitude * h.abs(),
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, ctl: &QuadControl) -> Result<QuadResult> {
    ctl.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integrate", "interval endpoints must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut segs = vec![gk15(&mut f, a, b)];
    let mut evals = 15;
    loop {
        let value: f64 = segs.iter().map(|s| s.value).sum();
        let error: f64 = segs.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature {
                value,
                abs_error: error,
            });
        }
        // Cancellation puts a floor under the attainable error.
        let floor = 50.0 * f64::EPSILON * segs.iter().map(|s| s.magnitude).sum::<f64>();
        if error <= ctl.target(value).max(floor) {
            return Ok(QuadResult {
                value,
                abs_error: error,
                evaluations: evals,
            });
        }
        if segs.len() > ctl.max_subdivisions {
            return Err(Error::Quadrature {
                value,
                abs_error: error,
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segs.swap_remove(worst);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                value,
                abs_error: error,
            });
        }
        segs.push(gk15(&mut f, s.a, m));
        segs.push(gk15(&mut f, m, s.b));
        evals += 30;
    }
}

/// Integrates `f` over `[a, ∞)` as a sum of panels whose widths grow by
/// `growth` starting from `first_width`. Stops once two consecutive panels
/// contribute less than the tolerance; integrands must decay.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    first_width: f64,
    growth: f64,
    ctl: &QuadControl,
) -> Result<QuadResult> {
    ctl.validate()?;
    if !(first_width > 0.0) || !(growth >= 1.0) {
        return Err(domain(
            "integrate_to_infinity",
            "panel width must be > 0 and growth >= 1",
        ));
    }
    let mut total = 0.0;
    let mut error = 0.0;
    let mut evals = 0;
    let mut lo = a;
    let mut width = first_width;
    let mut quiet = 0;
    for _ in 0..ctl.max_panels {
        // Each panel gets a share of the budget of the integral so far, so a
        // small tail panel is not held to a tolerance relative to itself.
        let panel_ctl = QuadControl {
            abs_tol: 0.1 * ctl.target(total),
            ..*ctl
        };
        let hi = lo + width;
        let r = integrate(&mut f, lo, hi, &panel_ctl)?;
        total += r.value;
        error += r.abs_error;
        evals += r.evaluations;
        if r.value.abs() + r.abs_error <= 0.1 * ctl.target(total) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(QuadResult {
                    value: total,
                    abs_error: error,
                    evaluations: evals,
                });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= growth;
    }
    Err(Error::Quadrature {
        value: total,
        abs_error: error,
    })
}
