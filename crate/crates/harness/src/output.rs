//! Campaign artefacts: CSV tables, JSON dumps and a gnuplot-ready data file.
//!
//! Numbers are printed with Rust's shortest round-trip formatting, so equal
//! results give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nhsht_core::{BoundsReportF64, Scheme};
use serde::Serialize;

use crate::campaign::CampaignResult;
use crate::error::HarnessError;

pub const CAMPAIGN_CSV: &str = "campaign.csv";
pub const PER_HYPOTHESIS_CSV: &str = "per_hypothesis.csv";
pub const BOUNDS_CSV: &str = "bounds.csv";
pub const BOUNDS_JSON: &str = "bounds.json";
pub const POLICY_JSON: &str = "policy.json";
pub const CONFIG_ECHO: &str = "config.echo.json";
/// Verbatim copy of the config file a campaign was started from.
pub const CONFIG_COPY: &str = "config.toml";
pub const FIG2_DAT: &str = "fig2.dat";

pub fn campaign_csv(result: &CampaignResult) -> String {
    let mut s =
        String::from("scheme,delta,mean_total_cost,std_error,mean_N,error_rate,mean_cost_per_sample,capped_trials\n");
    for c in &result.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.scheme,
            c.delta,
            c.mean_total_cost,
            c.std_error,
            c.mean_num_samples,
            c.error_rate,
            c.mean_cost_per_sample,
            c.capped_trials
        );
    }
    s
}

pub fn per_hypothesis_csv(result: &CampaignResult) -> String {
    let mut s = String::from("scheme,delta,hypothesis,trials,mean_N,mean_total_cost,mean_cost_per_sample,errors\n");
    for c in &result.cells {
        for h in &c.per_hypothesis {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                c.scheme,
                c.delta,
                h.hypothesis,
                h.trials,
                h.mean_num_samples,
                h.mean_total_cost,
                h.mean_cost_per_sample,
                h.errors
            );
        }
    }
    s
}

pub fn bounds_csv(bounds: &BoundsReportF64) -> String {
    let mut s = String::from("delta,lower_full,lower_dominating,lower_dominating_cost,upper\n");
    for k in 0..bounds.delta_grid.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            bounds.delta_grid[k],
            bounds.lower_full[k],
            bounds.lower_dominating[k],
            bounds.lower_dominating_cost[k],
            bounds.upper[k]
        );
    }
    s
}

/// Whitespace-separated columns: `log10(1/delta)`, the mean cost of every
/// simulated scheme, then the cost lower and upper bounds.
pub fn fig2_dat(result: &CampaignResult) -> String {
    let schemes: Vec<Scheme> = result.policies.iter().map(|p| p.scheme).collect();
    let mut s = String::from("# log10_inv_delta");
    for scheme in &schemes {
        let _ = write!(s, " {scheme}");
    }
    s.push_str(" lower_bound upper_bound\n");
    let b = &result.bounds;
    for (k, &delta) in result.config.delta_grid.iter().enumerate() {
        let _ = write!(s, "{}", (1.0 / delta).log10());
        for &scheme in &schemes {
            let mean = result.cell(scheme, k).map_or(f64::NAN, |c| c.mean_total_cost);
            let _ = write!(s, " {mean}");
        }
        let _ = writeln!(s, " {} {}", b.lower_dominating_cost[k], b.upper[k]);
    }
    s
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes only the bound artefacts.
pub fn emit_bounds(bounds: &BoundsReportF64, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    ensure_dir(dir)?;
    let files = [(BOUNDS_CSV, bounds_csv(bounds)), (BOUNDS_JSON, to_json(bounds)?)];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes every artefact of a campaign into `dir` and returns the paths.
pub fn emit_outputs(result: &CampaignResult, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = emit_bounds(&result.bounds, dir)?;
    let files = [
        (CAMPAIGN_CSV, campaign_csv(result)),
        (PER_HYPOTHESIS_CSV, per_hypothesis_csv(result)),
        (POLICY_JSON, to_json(&result.policies)?),
        (CONFIG_ECHO, to_json(&result.config)?),
        (FIG2_DAT, fig2_dat(result)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}
