use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use winding_core::kernels::{char_fn_plane, heat_kernel_cone};
use winding_core::mc::*;
use winding_core::quad::integrate;
use winding_core::stats::*;
use winding_core::winding_laws::spitzer_cdf;
use winding_core::{ConeGeometry, KernelPoint, QuadControl, SeriesControl};

use crate::config::{CheckKind, VerifyConfig};
use crate::output::read_samples;

pub fn run(cfg: &VerifyConfig, seed: u64) -> Result<(StatReport, Value)> {
    let Some(check) = cfg.check else {
        bail!("no check given; choose one of spitzer-ks, charfn-match, feynman-kac-identity, cone-histogram");
    };
    if cfg.samples.is_empty() {
        bail!("{} needs at least one --samples artifact", check.name());
    }
    if !(cfg.sigmas > 0.0) {
        bail!("sigmas must be positive, got {}", cfg.sigmas);
    }
    let mut sets = Vec::with_capacity(cfg.samples.len());
    for p in &cfg.samples {
        let (_, set) = read_samples(p)?;
        sets.push(set);
    }
    let inputs: Vec<Value> = cfg
        .samples
        .iter()
        .zip(&sets)
        .map(|(p, s)| json!({ "path": p, "walk": s.config(), "diagnostics": s.diagnostics() }))
        .collect();
    let report = match check {
        CheckKind::SpitzerKs => spitzer_ks(cfg, &sets, seed)?,
        _ => {
            if sets.len() != 1 {
                bail!("{} takes exactly one sample artifact, got {}", check.name(), sets.len());
            }
            let set = &sets[0];
            match check {
                CheckKind::CharfnMatch => charfn_match(cfg, set)?,
                CheckKind::FeynmanKacIdentity => feynman_kac(cfg, set)?,
                _ => cone_histogram(cfg, set)?,
            }
        }
    };
    Ok((report, json!({ "check": check.name(), "inputs": inputs })))
}

fn radial_bin(cfg: &VerifyConfig, set: &WindingSampleSet) -> Result<RadialBin> {
    Ok(match cfg.r_bin {
        Some(b) => RadialBin::new(b.lo, b.hi)?,
        None => RadialBin::centred(set.config().r_start, cfg.bin_width)?,
    })
}

fn spitzer_ks(cfg: &VerifyConfig, sets: &[WindingSampleSet], seed: u64) -> Result<StatReport> {
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[a].config().t_total.total_cmp(&sets[b].config().t_total));
    let mut report = StatReport::new(sets.iter().map(WindingSampleSet::len).sum());
    let mut previous: Option<(f64, f64, f64)> = None;
    for &i in &order {
        let s = &sets[i];
        let t = s.config().t_total;
        let x = s
            .scaled_windings()
            .with_context(|| format!("sample set {}", cfg.samples[i].display()))?;
        let stat = |v: &[f64]| ks_distance(&sorted_copy(v).expect("finite samples"), spitzer_cdf).expect("non-empty");
        let d = ks_distance(&sorted_copy(&x)?, spitzer_cdf)?;
        let se = bootstrap_se(&x, stat, cfg.resamples, seed)?;
        report.push(Check::new(
            format!("ks t={t}"),
            d,
            0.0,
            Some(se),
            Tolerance::AtMost(cfg.ks_max),
        ));
        report.note(format!("t={t}: KS {d:.5} ± {se:.5} over {} paths", s.len()));
        if let Some((t0, d0, se0)) = previous {
            let slack = cfg.monotone_sigmas * se.hypot(se0);
            report.push(Check::new(
                format!("ks non-increasing t={t0} -> t={t}"),
                d - d0,
                0.0,
                Some(se.hypot(se0)),
                Tolerance::AtMost(slack),
            ));
        }
        previous = Some((t, d, se));
        report.ks_distance = Some(d);
    }
    if order.len() > 1 {
        report.note("ks_distance is the value at the largest t");
    }
    Ok(report)
}

fn charfn_match(cfg: &VerifyConfig, set: &WindingSampleSet) -> Result<StatReport> {
    let bin = radial_bin(cfg, set)?;
    let z = conditioning_z(set.config(), &bin);
    let ctl = SeriesControl::default();
    let mut report = StatReport::new(set.len());
    report.note(format!("radial bin [{}, {}), z = {z}", bin.lo, bin.hi));
    for &alpha in &cfg.alphas {
        let want = char_fn_plane(z, alpha, &ctl)?;
        let fk = feynman_kac_char_fn(set, alpha, &bin)?;
        let em = empirical_char_fn(set, alpha, &bin)?;
        let k = Tolerance::StdErrors(cfg.sigmas);
        report.push(Check::new(
            format!("feynman-kac a={alpha}"),
            fk.value,
            want,
            Some(fk.stderr),
            k,
        ));
        report.push(Check::new(
            format!("empirical cos a={alpha}"),
            em.re.value,
            want,
            Some(em.re.stderr),
            k,
        ));
        report.push(Check::new(
            format!("feynman-kac vs empirical a={alpha}"),
            fk.value,
            em.re.value,
            Some(fk.stderr.hypot(em.re.stderr)),
            k,
        ));
        report.note(format!(
            "a={alpha}: kernel {want:.6}, feynman-kac {:.6} ± {:.6}, cos {:.6} ± {:.6}, sin {:.6} ± {:.6}",
            fk.value, fk.stderr, em.re.value, em.re.stderr, em.im.value, em.im.stderr
        ));
    }
    Ok(report)
}

fn feynman_kac(cfg: &VerifyConfig, set: &WindingSampleSet) -> Result<StatReport> {
    let bin = radial_bin(cfg, set)?;
    let mut report = StatReport::new(set.len());
    report.note("paired difference mean of cos(a dtheta) - exp(-a^2 H / 2) over the radial bin");
    for &alpha in &cfg.alphas {
        let gap = feynman_kac_gap(set, alpha, &bin)?;
        report.push(Check::new(
            format!("paired gap a={alpha}"),
            gap.value,
            0.0,
            Some(gap.stderr),
            Tolerance::StdErrors(cfg.sigmas),
        ));
    }
    Ok(report)
}

fn cone_histogram(cfg: &VerifyConfig, set: &WindingSampleSet) -> Result<StatReport> {
    let g = ConeGeometry::new(cfg.beta, cfg.delta)?;
    let w = set.config();
    let rbin = match cfg.r_bin {
        Some(b) => RadialBin::new(b.lo, b.hi)?,
        None => RadialBin::new(0.5 * w.r_start, 1.5 * w.r_start)?,
    };
    let h = cone_reweighted_histogram(set, &g, &cfg.bins, Some(&rbin))?;
    let ctl = SeriesControl::default();
    let q = QuadControl::new(1e-9, 1e-7)?;
    let mut report = StatReport::new(set.len());
    report.note(format!(
        "radial bin [{}, {}), beta {}, delta {}; expected values integrate the cone kernel over each cell",
        rbin.lo, rbin.hi, cfg.beta, cfg.delta
    ));
    for i in 0..cfg.bins.bins {
        let (a, b) = (cfg.bins.edge(i), cfg.bins.edge(i + 1));
        let cell = |imag: bool| -> winding_core::Result<f64> {
            let mut failure = None;
            let inner = |r: f64| {
                let angular = integrate(
                    |phi| match KernelPoint::new(w.r_start, r, phi, w.t_total)
                        .and_then(|p| heat_kernel_cone(&p, &g, &ctl))
                    {
                        Ok(v) if imag => v.im,
                        Ok(v) => v.re,
                        Err(_) => f64::NAN,
                    },
                    a,
                    b,
                    &q,
                );
                match angular {
                    Ok(v) => r * v.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            let v = integrate(inner, rbin.lo, rbin.hi, &q);
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(v?.value / cfg.bins.width())
        };
        let want_re = cell(false)?;
        let want_im = cell(true)?;
        let (got, se) = (h.values[i], h.stderr[i]);
        let k = Tolerance::StdErrors(cfg.sigmas);
        report.push(Check::new(format!("bin {i} re"), got.re, want_re, Some(se.re), k));
        let im_tol = if se.im > cfg.imag_abs_tol {
            k
        } else {
            Tolerance::Absolute(cfg.imag_abs_tol)
        };
        report.push(Check::new(format!("bin {i} im"), got.im, want_im, Some(se.im), im_tol));
    }
    if !h.empty_bins.is_empty() {
        report.note(format!("empty bins: {:?}", h.empty_bins));
    }
    Ok(report)
}
