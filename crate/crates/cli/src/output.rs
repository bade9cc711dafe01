use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use winding_core::mc::{Diagnostics, WindingSample, WindingSampleSet};

use crate::config::{ExperimentConfig, Format};

/// 17 significant digits, positional unless the exponent is extreme.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{v:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

/// A table with metadata, written as commented CSV or a single JSON object.
pub struct Artifact<'a> {
    pub title: &'static str,
    pub config: &'a ExperimentConfig,
    pub diagnostics: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Artifact<'_> {
    fn render(&self, format: Format) -> Result<String> {
        let config = serde_json::to_string(self.config)?;
        let mut out = String::new();
        match format {
            Format::Csv => {
                out.push_str(&format!("# winding {}\n# config: {config}\n", self.title));
                out.push_str(&format!(
                    "# diagnostics: {}\n",
                    serde_json::to_string(&self.diagnostics)?
                ));
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.to_string(), json!(v)))
                                .collect::<Map<_, _>>(),
                        )
                    })
                    .collect();
                out = serde_json::to_string_pretty(&json!({
                    "config": self.config,
                    "rows": rows,
                    "diagnostics": self.diagnostics,
                }))?;
                out.push('\n');
            }
        }
        Ok(out)
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> Result<()> {
        emit(&self.render(format)?, path)
    }
}

/// JSON report artifact: config, report and diagnostics.
pub fn write_report<R: Serialize>(
    config: &ExperimentConfig,
    report: &R,
    diagnostics: Value,
    path: Option<&Path>,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&json!({
        "config": config,
        "report": report,
        "diagnostics": diagnostics,
    }))?;
    text.push('\n');
    emit(&text, path)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

pub const SAMPLE_COLUMNS: [&str; 3] = ["dtheta_final", "r_final", "clock"];

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Reads a sample artifact written by `simulate`, in either format.
pub fn read_samples(path: &Path) -> Result<(ExperimentConfig, WindingSampleSet)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading sample artifact {}", path.display()))?;
    let bad = |msg: String| anyhow::anyhow!("malformed sample file {}: {msg}", path.display());
    let (config, samples, diagnostics): (ExperimentConfig, Vec<WindingSample>, Diagnostics) =
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let mut v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let take = |v: &mut Value, k: &str| {
                v.get_mut(k)
                    .map(Value::take)
                    .ok_or_else(|| bad(format!("missing `{k}`")))
            };
            let config = serde_json::from_value(take(&mut v, "config")?).map_err(|e| bad(e.to_string()))?;
            let samples = serde_json::from_value(take(&mut v, "rows")?).map_err(|e| bad(e.to_string()))?;
            let diagnostics = serde_json::from_value(take(&mut v, "diagnostics")?).map_err(|e| bad(e.to_string()))?;
            (config, samples, diagnostics)
        } else {
            let mut config = None;
            let mut diagnostics = None;
            let mut header = false;
            let mut samples = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if let Some(rest) = line.strip_prefix("# ") {
                    if let Some(c) = rest.strip_prefix("config: ") {
                        config = Some(serde_json::from_str(c).map_err(|e| bad(format!("line {}: {e}", i + 1)))?);
                    } else if let Some(d) = rest.strip_prefix("diagnostics: ") {
                        diagnostics = Some(serde_json::from_str(d).map_err(|e| bad(format!("line {}: {e}", i + 1)))?);
                    }
                    continue;
                }
                if !header {
                    if line != SAMPLE_COLUMNS.join(",") {
                        return Err(bad(format!(
                            "line {}: expected header {}",
                            i + 1,
                            SAMPLE_COLUMNS.join(",")
                        )));
                    }
                    header = true;
                    continue;
                }
                let cells: Vec<f64> = line
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
                if cells.len() != 3 {
                    return Err(bad(format!("line {}: expected 3 values, got {}", i + 1, cells.len())));
                }
                samples.push(WindingSample {
                    dtheta_final: cells[0],
                    r_final: cells[1],
                    clock: cells[2],
                });
            }
            if !header {
                return Err(bad("no header line".into()));
            }
            (
                config.ok_or_else(|| bad("missing `# config:` line".into()))?,
                samples,
                diagnostics.ok_or_else(|| bad("missing `# diagnostics:` line".into()))?,
            )
        };
    let Some(sim) = &config.simulate else {
        bail!("{} was not written by `simulate`", path.display());
    };
    let walk = sim.walk(config.seed)?;
    let set = WindingSampleSet::from_parts(walk, samples, diagnostics).map_err(|e| bad(e.to_string()))?;
    Ok((config, set))
}
