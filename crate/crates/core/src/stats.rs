//! Empirical CDFs, KS distances, histograms, bootstrap errors and the two
//! log-density fits (tail slope, centre curvature).

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Bootstrap resamples used unless a caller asks otherwise.
pub const DEFAULT_RESAMPLES: usize = 200;

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Sample mean and its standard error.
    pub fn mean_of(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientSamples {
                found: values.len(),
                required: 2,
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            value: mean,
            stderr: (var / n).sqrt(),
        })
    }
}

fn check_sorted(func: &'static str, samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { found: 0, required: 1 });
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(domain(func, "samples contain NaN"));
    }
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain(func, "samples must be sorted ascending"));
    }
    Ok(())
}

/// Fraction of `sorted` that is ≤ x.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// sup |F_n − F| evaluated on both sides of every jump of the empirical CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    check_sorted("ks_distance", sorted)?;
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Sorted copy with NaNs rejected.
pub fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(domain("sorted_copy", "values contain NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Equal-width bins on [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let s = Self { lo, hi, bins };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.bins == 0 {
            return Err(domain(
                "BinSpec",
                format!("need finite lo < hi and bins > 0, got {self:?}"),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.width() * i as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.lo + self.width() * (i as f64 + 0.5)
    }

    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }

    /// Counts per bin; values outside [lo, hi) are dropped.
    pub fn counts(&self, values: &[f64]) -> Vec<u64> {
        let mut c = vec![0; self.bins];
        for &v in values {
            if let Some(i) = self.index(v) {
                c[i] += 1;
            }
        }
        c
    }

    /// Density estimate normalized by the total count, including values
    /// outside the range.
    pub fn density(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len() as f64 * self.width();
        self.counts(values).into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Standard error of `statistic` from `resamples` bootstrap draws.
pub fn bootstrap_se<F: Fn(&[f64]) -> f64>(samples: &[f64], statistic: F, resamples: usize, seed: u64) -> Result<f64> {
    if samples.len() < 2 || resamples < 2 {
        return Err(Error::InsufficientSamples {
            found: samples.len().min(resamples),
            required: 2,
        });
    }
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut buf = vec![0.0; samples.len()];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.random_range(0..samples.len())];
            }
            statistic(&buf)
        })
        .collect();
    let m = stats.iter().sum::<f64>() / resamples as f64;
    Ok((stats.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt())
}

/// Least-squares line with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: Estimate,
    pub intercept: f64,
    /// Coefficient of determination; well below 1 flags a non-linear shape.
    pub r_squared: f64,
    pub points: usize,
}

/// Quadratic fit of −ln density around the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFit {
    /// Second derivative of the fitted quadratic.
    pub curvature: Estimate,
    pub r_squared: f64,
    pub points: usize,
}

const MIN_FIT_POINTS: usize = 5;

fn log_points<'a>(
    func: &'static str,
    xs: &'a [f64],
    densities: &'a [f64],
    keep: impl Fn(f64) -> bool + 'a,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if xs.len() != densities.len() {
        return Err(domain(func, "xs and densities differ in length"));
    }
    let mut px = Vec::new();
    let mut py = Vec::new();
    for (&x, &d) in xs.iter().zip(densities) {
        if !keep(x) {
            continue;
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(domain(
                func,
                format!("density must be positive and finite, got {d} at x = {x}"),
            ));
        }
        px.push(x);
        py.push(-d.ln());
    }
    if px.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            found: px.len(),
            required: MIN_FIT_POINTS,
        });
    }
    Ok((px, py))
}

/// Solves the normal equations of a polynomial fit of degree `deg` in the
/// centred abscissa; returns (coefficients, residual variance, R²).
fn poly_fit(x: &[f64], y: &[f64], x0: f64, deg: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let k = deg + 1;
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - x0;
        let pw: Vec<f64> = (0..k).map(|j| u.powi(j as i32)).collect();
        for r in 0..k {
            b[r] += pw[r] * yi;
            for c in 0..k {
                a[r][c] += pw[r] * pw[c];
            }
        }
    }
    let inv = invert(a);
    let coef: Vec<f64> = (0..k).map(|r| (0..k).map(|c| inv[r][c] * b[c]).sum()).collect();
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - x0;
        let fit: f64 = coef.iter().enumerate().map(|(j, c)| c * u.powi(j as i32)).sum();
        ss_res += (yi - fit).powi(2);
        ss_tot += (yi - ybar).powi(2);
    }
    let s2 = ss_res / (x.len() - k) as f64;
    let var: Vec<f64> = (0..k).map(|j| inv[j][j] * s2).collect();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (coef, var, r2)
}

/// Gauss–Jordan inverse of a small symmetric positive definite matrix.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for j in 0..n {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// Least-squares slope of ln(density) against |x| for |x| in `window`.
pub fn tail_log_slope(xs: &[f64], densities: &[f64], window: (f64, f64)) -> Result<SlopeFit> {
    let (lo, hi) = window;
    if !(lo >= 0.0 && lo < hi) {
        return Err(domain(
            "tail_log_slope",
            format!("window must satisfy 0 <= lo < hi, got {window:?}"),
        ));
    }
    let (px, py) = log_points("tail_log_slope", xs, densities, |x| x.abs() >= lo && x.abs() <= hi)?;
    let ax: Vec<f64> = px.iter().map(|x| x.abs()).collect();
    let x0 = ax.iter().sum::<f64>() / ax.len() as f64;
    let (coef, var, r2) = poly_fit(&ax, &py, x0, 1);
    Ok(SlopeFit {
        slope: Estimate {
            value: -coef[1],
            stderr: var[1].sqrt(),
        },
        intercept: -(coef[0] - coef[1] * x0),
        r_squared: r2,
        points: ax.len(),
    })
}

/// Curvature at x = 0 of a quadratic least-squares fit to −ln(density).
pub fn center_curvature(xs: &[f64], densities: &[f64]) -> Result<CurvatureFit> {
    let (px, py) = log_points("center_curvature", xs, densities, |_| true)?;
    let (coef, var, r2) = poly_fit(&px, &py, 0.0, 2);
    Ok(CurvatureFit {
        curvature: Estimate {
            value: 2.0 * coef[2],
            stderr: 2.0 * var[2].sqrt(),
        },
        r_squared: r2,
        points: px.len(),
    })
}

/// How a check compares its observation with the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
    /// Within k standard errors.
    StdErrors(f64),
    /// Observation at most the limit; `expected` is ignored.
    AtMost(f64),
}

impl Tolerance {
    pub fn allows(&self, observed: f64, expected: f64, stderr: Option<f64>) -> bool {
        let gap = (observed - expected).abs();
        match *self {
            Tolerance::Absolute(tol) => gap <= tol,
            Tolerance::Relative(tol) => gap <= tol * expected.abs(),
            Tolerance::StdErrors(k) => match stderr {
                Some(se) => gap <= k * se,
                None => false,
            },
            Tolerance::AtMost(limit) => observed <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub stderr: Option<f64>,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        observed: f64,
        expected: f64,
        stderr: Option<f64>,
        tolerance: Tolerance,
    ) -> Self {
        let pass = tolerance.allows(observed, expected, stderr);
        Self {
            name: name.into(),
            observed,
            expected,
            stderr,
            tolerance,
            pass,
        }
    }
}

/// Outcome of one verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    /// Present for distribution checks only.
    pub ks_distance: Option<f64>,
    pub n: usize,
    pub fitted_slope: Option<Estimate>,
    pub fitted_curvature: Option<Estimate>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl StatReport {
    pub fn new(n: usize) -> Self {
        Self {
            ks_distance: None,
            n,
            fitted_slope: None,
            fitted_curvature: None,
            checks: Vec::new(),
            pass: false,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.pass = self.recompute_pass();
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// True iff there is at least one check and every check passes when
    /// re-evaluated from its numbers.
    pub fn recompute_pass(&self) -> bool {
        !self.checks.is_empty()
            && self
                .checks
                .iter()
                .all(|c| c.tolerance.allows(c.observed, c.expected, c.stderr))
            && self.ks_distance.map_or(true, |d| (0.0..=1.0).contains(&d))
    }
}
