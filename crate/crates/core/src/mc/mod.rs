//! Monte Carlo engine: planar Brownian paths with the winding angle tracked
//! on the universal cover and the clock H = ∫ ds/r² accumulated along the
//! way, plus the estimators that compare them with the kernels.

mod tree;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::ConeGeometry;
use crate::stats::{BinSpec, Estimate, DEFAULT_RESAMPLES};
use tree::{mix, BrownianTree, TreeChain};

/// Fewest samples a radial bin must hold for a conditional estimate.
pub const MIN_BIN_SAMPLES: usize = 100;
/// A step whose chord passes within this fraction of `r_floor` of the origin
/// aborts the path.
pub const CHORD_ABORT_FRACTION: f64 = 1e-3;
/// Steps per attempt before a path is abandoned and re-drawn.
pub const MAX_STEPS_PER_PATH: u64 = 50_000_000;
/// Attempts per path before the simulation reports an error.
pub const MAX_ATTEMPTS: u32 = 64;

/// Tree leaves are at most this fraction of the step that queries them.
const LEAF_FRACTION: f64 = 0.25;
/// Clock span of the first tree of each log-mode excursion.
const LOG_FIRST_SPAN: f64 = 1.0;
const TREE_CARTESIAN: u64 = 0;
const TREE_LOG: u64 = 1;

/// Parameters of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub r_start: f64,
    pub t_total: f64,
    pub dt_max: f64,
    /// c in dt = min(dt_max, c·r²).
    pub dt_radius_factor: f64,
    /// Below this radius the walk continues in log-polar coordinates; chords
    /// passing within `CHORD_ABORT_FRACTION·r_floor` of the origin abort.
    pub r_floor: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl WalkConfig {
    /// Default stepping: dt_max = t/100, c = 0.01, r_floor = min(10⁻³√t, r₀/10).
    pub fn new(r_start: f64, t_total: f64, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            r_start,
            t_total,
            dt_max: 0.01 * t_total,
            dt_radius_factor: 0.01,
            r_floor: Self::default_r_floor(r_start, t_total),
            n_paths,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_r_floor(r_start: f64, t_total: f64) -> f64 {
        (1e-3 * t_total.sqrt()).min(0.1 * r_start)
    }

    /// The same configuration with dt_max and c halved.
    pub fn refined(&self) -> Self {
        Self {
            dt_max: 0.5 * self.dt_max,
            dt_radius_factor: 0.5 * self.dt_radius_factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.r_start > 0.0 && self.r_start.is_finite()) {
            return bad(format!("r_start must be finite and > 0, got {}", self.r_start));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return bad(format!("t_total must be finite and > 0, got {}", self.t_total));
        }
        if !(self.dt_max > 0.0 && self.dt_max <= self.t_total) {
            return bad(format!("dt_max must lie in (0, t_total], got {}", self.dt_max));
        }
        if !(self.dt_radius_factor > 0.0 && self.dt_radius_factor <= 1.0) {
            return bad(format!(
                "dt_radius_factor must lie in (0, 1], got {}",
                self.dt_radius_factor
            ));
        }
        if !(self.r_floor >= 0.0 && self.r_floor.is_finite()) {
            return bad(format!("r_floor must be finite and >= 0, got {}", self.r_floor));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        Ok(())
    }
}

/// End state of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingSample {
    /// Winding angle on the universal cover.
    pub dtheta_final: f64,
    pub r_final: f64,
    /// H = ∫₀^t ds/r(s)².
    pub clock: f64,
}

/// Event counts summed over paths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Entries into the log-polar regime below r_floor.
    pub floor_hits: u64,
    /// Paths re-drawn because a chord came too close to the origin.
    pub chord_aborts: u64,
    /// Paths re-drawn because they exhausted the step budget.
    pub budget_aborts: u64,
    /// Cartesian steps limited by dt_max.
    pub saturated_steps: u64,
    pub cartesian_steps: u64,
    pub log_steps: u64,
    /// Σ over paths of (H_endpoint − H_midpoint)/H_midpoint, where
    /// H_endpoint averages 1/r² over the two ends of each Cartesian step.
    pub clock_rule_gap: f64,
}

impl Diagnostics {
    fn add(&mut self, o: &Diagnostics) {
        self.floor_hits += o.floor_hits;
        self.chord_aborts += o.chord_aborts;
        self.budget_aborts += o.budget_aborts;
        self.saturated_steps += o.saturated_steps;
        self.cartesian_steps += o.cartesian_steps;
        self.log_steps += o.log_steps;
        self.clock_rule_gap += o.clock_rule_gap;
    }
}

/// Immutable result of [`simulate_paths`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingSampleSet {
    config: WalkConfig,
    samples: Vec<WindingSample>,
    diagnostics: Diagnostics,
}

impl WindingSampleSet {
    /// Reassembles a persisted set, checking its invariants.
    pub fn from_parts(config: WalkConfig, samples: Vec<WindingSample>, diagnostics: Diagnostics) -> Result<Self> {
        config.validate()?;
        if samples.len() != config.n_paths {
            return Err(Error::Config(format!(
                "sample count {} differs from n_paths {}",
                samples.len(),
                config.n_paths
            )));
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !(s.clock >= 0.0 && s.r_final >= 0.0 && s.dtheta_final.is_finite()))
        {
            return Err(Error::Config(format!("invalid sample {s:?}")));
        }
        Ok(Self {
            config,
            samples,
            diagnostics,
        })
    }

    pub fn config(&self) -> &WalkConfig {
        &self.config
    }
    pub fn samples(&self) -> &[WindingSample] {
        &self.samples
    }
    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// x = 2Δθ/ln t; requires t > 1.
    pub fn scaled_windings(&self) -> Result<Vec<f64>> {
        let t = self.config.t_total;
        if t <= 1.0 {
            return Err(domain("scaled_windings", format!("requires t > 1, got {t}")));
        }
        let l = t.ln();
        Ok(self.samples.iter().map(|s| 2.0 * s.dtheta_final / l).collect())
    }
}

enum Outcome {
    Done(WindingSample),
    ChordAbort,
    BudgetAbort,
}

struct Walker<'a> {
    cfg: &'a WalkConfig,
    key: u64,
    diag: Diagnostics,
}

impl Walker<'_> {
    fn run(&mut self) -> Outcome {
        let cfg = self.cfg;
        let t_end = cfg.t_total;
        let c = cfg.dt_radius_factor;
        let abort_dist = CHORD_ABORT_FRACTION * cfg.r_floor;
        let mut cart = BrownianTree::new(mix(&[self.key, TREE_CARTESIAN]), 0.0, t_end);
        let mut off = [cfg.r_start, 0.0];
        let mut pos = off;
        let mut s = 0.0;
        let (mut winding, mut clock, mut clock_end) = (0.0, 0.0, 0.0);
        let mut steps = 0u64;
        let mut excursion = 0u64;
        while s < t_end {
            let r2 = pos[0] * pos[0] + pos[1] * pos[1];
            if r2 < cfg.r_floor * cfg.r_floor {
                self.diag.floor_hits += 1;
                let chain = TreeChain::new(mix(&[self.key, TREE_LOG, excursion]), LOG_FIRST_SPAN);
                excursion += 1;
                let (p, ds, dh, dv, n) = log_excursion(chain, pos, s, t_end, cfg.r_floor, c);
                steps += n;
                self.diag.log_steps += n;
                s = if s + ds >= t_end { t_end } else { s + ds };
                clock += dh;
                clock_end += dh;
                winding += dv;
                pos = p;
                let r2 = pos[0] * pos[0] + pos[1] * pos[1];
                let w = cart.at(s, LEAF_FRACTION * (c * r2).min(cfg.dt_max));
                off = [pos[0] - w[0], pos[1] - w[1]];
                continue;
            }
            let mut dt = (c * r2).min(cfg.dt_max);
            if dt == cfg.dt_max {
                self.diag.saturated_steps += 1;
            }
            let s1 = if t_end - s <= dt {
                dt = t_end - s;
                t_end
            } else {
                s + dt
            };
            let w = cart.at(s1, LEAF_FRACTION * dt);
            let next = [off[0] + w[0], off[1] + w[1]];
            if chord_distance(pos, next) < abort_dist {
                return Outcome::ChordAbort;
            }
            let cross = pos[0] * next[1] - pos[1] * next[0];
            let dot = pos[0] * next[0] + pos[1] * next[1];
            winding += cross.atan2(dot);
            let mid = [0.5 * (pos[0] + next[0]), 0.5 * (pos[1] + next[1])];
            clock += dt / (mid[0] * mid[0] + mid[1] * mid[1]);
            let r2n = next[0] * next[0] + next[1] * next[1];
            clock_end += 0.5 * dt * (1.0 / r2 + 1.0 / r2n);
            pos = next;
            s = s1;
            steps += 1;
            self.diag.cartesian_steps += 1;
            if steps > MAX_STEPS_PER_PATH {
                return Outcome::BudgetAbort;
            }
        }
        if clock > 0.0 {
            self.diag.clock_rule_gap += (clock_end - clock) / clock;
        }
        Outcome::Done(WindingSample {
            dtheta_final: winding,
            r_final: pos[0].hypot(pos[1]),
            clock,
        })
    }
}

/// Distance from the origin to the segment a–b.
fn chord_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let u = if len2 > 0.0 {
        (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a[0] + u * d[0]).hypot(a[1] + u * d[1])
}

/// Excursion below r_floor in cover coordinates (u, v) = (ln r, θ), which
/// perform a standard Brownian motion in clock time; real time accrues as
/// ∫ e^{2u} dτ. Runs until r > 2·r_floor or the time horizon is reached.
/// Returns (position, real time, clock, winding, steps).
fn log_excursion(
    mut chain: TreeChain,
    pos: [f64; 2],
    s0: f64,
    t_end: f64,
    r_floor: f64,
    c: f64,
) -> ([f64; 2], f64, f64, f64, u64) {
    let u_exit = (2.0 * r_floor).ln();
    let mut u = 0.5 * (pos[0] * pos[0] + pos[1] * pos[1]).ln();
    let v0 = pos[1].atan2(pos[0]);
    let mut tau = 0.0;
    let mut w_prev = [0.0; 2];
    let mut elapsed = 0.0;
    let mut steps = 0;
    loop {
        let gap = u_exit - u;
        let mut h = c * gap.max(1.0).powi(2);
        let rate = (2.0 * u).exp();
        let last = s0 + elapsed + rate * h >= t_end;
        if last {
            h = (t_end - s0 - elapsed) / rate;
        }
        let w = chain.at(tau + h, LEAF_FRACTION * h);
        let u1 = u + (w[0] - w_prev[0]);
        elapsed += if last {
            t_end - s0 - elapsed
        } else {
            0.5 * h * (rate + (2.0 * u1).exp())
        };
        tau += h;
        u = u1;
        w_prev = w;
        steps += 1;
        if last || u > u_exit {
            break;
        }
    }
    let v = v0 + w_prev[1];
    let r = u.exp();
    ([r * v.cos(), r * v.sin()], elapsed, tau, w_prev[1], steps)
}

/// One path, re-drawn after aborts; deterministic in (seed, index).
pub fn simulate_path(cfg: &WalkConfig, index: u64) -> Result<(WindingSample, Diagnostics)> {
    let mut diag = Diagnostics::default();
    for attempt in 0..MAX_ATTEMPTS {
        let mut w = Walker {
            cfg,
            key: mix(&[cfg.seed, index, attempt as u64]),
            diag: Diagnostics::default(),
        };
        let out = w.run();
        diag.add(&w.diag);
        match out {
            Outcome::Done(s) => return Ok((s, diag)),
            Outcome::ChordAbort => diag.chord_aborts += 1,
            Outcome::BudgetAbort => diag.budget_aborts += 1,
        }
    }
    Err(Error::NonConvergence {
        func: "simulate_path",
        terms: MAX_ATTEMPTS as usize,
        last_rel: f64::NAN,
    })
}

/// Simulates `n_paths` independent paths from (r_start, 0). Output is
/// identical for identical configurations regardless of thread count.
pub fn simulate_paths(cfg: &WalkConfig) -> Result<WindingSampleSet> {
    cfg.validate()?;
    let results: Vec<Result<(WindingSample, Diagnostics)>> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(cfg, i))
        .collect();
    let mut samples = Vec::with_capacity(cfg.n_paths);
    let mut diag = Diagnostics::default();
    for r in results {
        let (s, d) = r?;
        samples.push(s);
        diag.add(&d);
    }
    Ok(WindingSampleSet {
        config: *cfg,
        samples,
        diagnostics: diag,
    })
}

/// Interval [lo, hi) of final radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    pub lo: f64,
    pub hi: f64,
}

impl RadialBin {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(domain("RadialBin", format!("need 0 <= lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn centred(r: f64, width: f64) -> Result<Self> {
        Self::new(r - 0.5 * width, r + 0.5 * width)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r < self.hi
    }
}

/// Bessel argument r₀·r_mid/t matching the kernels' convention.
pub fn conditioning_z(cfg: &WalkConfig, bin: &RadialBin) -> f64 {
    cfg.r_start * bin.mid() / cfg.t_total
}

fn in_bin<'a>(sset: &'a WindingSampleSet, bin: &RadialBin) -> Result<Vec<&'a WindingSample>> {
    let v: Vec<&WindingSample> = sset.samples.iter().filter(|s| bin.contains(s.r_final)).collect();
    if v.len() < MIN_BIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: v.len(),
            required: MIN_BIN_SAMPLES,
        });
    }
    Ok(v)
}

fn check_alpha(func: &'static str, alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(domain(func, format!("alpha must be finite, got {alpha}")));
    }
    Ok(())
}

/// Mean of exp(−α²H/2) over samples with r_final in the bin.
pub fn feynman_kac_char_fn(sset: &WindingSampleSet, alpha: f64, bin: &RadialBin) -> Result<Estimate> {
    check_alpha("feynman_kac_char_fn", alpha)?;
    let v: Vec<f64> = in_bin(sset, bin)?
        .iter()
        .map(|s| (-0.5 * alpha * alpha * s.clock).exp())
        .collect();
    Estimate::mean_of(&v)
}

/// Mean of e^{iαΔθ} over the bin; the imaginary part should vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCharFn {
    pub re: Estimate,
    pub im: Estimate,
}

pub fn empirical_char_fn(sset: &WindingSampleSet, alpha: f64, bin: &RadialBin) -> Result<EmpiricalCharFn> {
    check_alpha("empirical_char_fn", alpha)?;
    let v = in_bin(sset, bin)?;
    let re: Vec<f64> = v.iter().map(|s| (alpha * s.dtheta_final).cos()).collect();
    let im: Vec<f64> = v.iter().map(|s| (alpha * s.dtheta_final).sin()).collect();
    Ok(EmpiricalCharFn {
        re: Estimate::mean_of(&re)?,
        im: Estimate::mean_of(&im)?,
    })
}

/// Paired difference cos(αΔθ) − exp(−α²H/2) over the bin; its standard
/// error accounts for the correlation between the two averages.
pub fn feynman_kac_gap(sset: &WindingSampleSet, alpha: f64, bin: &RadialBin) -> Result<Estimate> {
    check_alpha("feynman_kac_gap", alpha)?;
    let v: Vec<f64> = in_bin(sset, bin)?
        .iter()
        .map(|s| (alpha * s.dtheta_final).cos() - (-0.5 * alpha * alpha * s.clock).exp())
        .collect();
    Estimate::mean_of(&v)
}

/// Complex histogram of the residual angle on the cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeHistogram {
    pub bins: BinSpec,
    /// Σ weights in the bin / (n_paths · bin width).
    pub values: Vec<Complex64>,
    /// Bootstrap standard errors of the real and imaginary parts.
    pub stderr: Vec<Complex64>,
    pub counts: Vec<u64>,
    /// Indices of bins that received no sample.
    pub empty_bins: Vec<usize>,
}

/// Wraps each cover winding θ as θ = φ + βn with n = round(θ/β) and weights
/// the sample by e^{−i2πδn}, so that the histogram of φ estimates the angular
/// profile of the cone kernel: Σ_n e^{−i2πδn} p(φ + βn). Samples outside the
/// radial bin (when given) and outside `bins` are dropped but still count in
/// the normalization.
pub fn cone_reweighted_histogram(
    sset: &WindingSampleSet,
    g: &ConeGeometry,
    bins: &BinSpec,
    r2_bin: Option<&RadialBin>,
) -> Result<ConeHistogram> {
    bins.validate()?;
    let beta = g.beta();
    let delta = g.delta();
    let entries: Vec<(usize, Complex64)> = sset
        .samples
        .iter()
        .filter(|s| r2_bin.map_or(true, |b| b.contains(s.r_final)))
        .filter_map(|s| {
            let n = (s.dtheta_final / beta).round();
            let phi = s.dtheta_final - beta * n;
            let w = if delta == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                // Reduce δn mod 1 before forming the phase.
                Complex64::from_polar(1.0, -2.0 * PI * (delta * n).rem_euclid(1.0))
            };
            bins.index(phi).map(|i| (i, w))
        })
        .collect();
    let norm = sset.len() as f64 * bins.width();
    let mut values = vec![Complex64::new(0.0, 0.0); bins.bins];
    let mut counts = vec![0u64; bins.bins];
    for &(i, w) in &entries {
        values[i] += w / norm;
        counts[i] += 1;
    }
    // Bootstrap over all n paths: a resampled path lands in the histogram
    // with probability entries/n, so draw from [0, n) and keep indices below
    // the number of entries.
    let n = sset.len();
    let mut rng = Pcg64Mcg::seed_from_u64(mix(&[sset.config.seed, 0xb007]));
    let mut s1 = vec![[0.0f64; 2]; bins.bins];
    let mut s2 = vec![[0.0f64; 2]; bins.bins];
    let mut scratch = vec![Complex64::new(0.0, 0.0); bins.bins];
    for _ in 0..DEFAULT_RESAMPLES {
        scratch.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let j = rng.random_range(0..n);
            if let Some(&(i, w)) = entries.get(j) {
                scratch[i] += w / norm;
            }
        }
        for (i, v) in scratch.iter().enumerate() {
            s1[i][0] += v.re;
            s1[i][1] += v.im;
            s2[i][0] += v.re * v.re;
            s2[i][1] += v.im * v.im;
        }
    }
    let b = DEFAULT_RESAMPLES as f64;
    let sd = |a: f64, q: f64| ((q - a * a / b) / (b - 1.0)).max(0.0).sqrt();
    let stderr = (0..bins.bins)
        .map(|i| Complex64::new(sd(s1[i][0], s2[i][0]), sd(s1[i][1], s2[i][1])))
        .collect();
    let empty_bins = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i)
        .collect();
    Ok(ConeHistogram {
        bins: *bins,
        values,
        stderr,
        counts,
        empty_bins,
    })
}
