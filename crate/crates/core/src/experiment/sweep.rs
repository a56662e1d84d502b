//! Rate-versus-input sweeps of the activation chain.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{run_activation, run_with_drive};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::pbit::activation_probability;
use crate::signal::Trace;

pub const MIN_TICKS_PER_POINT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub input: f64,
    pub measured_rate: f64,
    pub model_rate: f64,
}

fn check_grid(grid: &[f64], ticks: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep grid has non-finite entries".into()));
    }
    if ticks < MIN_TICKS_PER_POINT {
        return Err(Error::InvalidParameter(format!(
            "ticks_per_point must be >= {MIN_TICKS_PER_POINT}, got {ticks}"
        )));
    }
    Ok(())
}

fn steps(cfg: &ExperimentConfig, ticks: usize) -> Result<(f64, usize)> {
    let rate = cfg.activation.sync_rate_hz * cfg.upsample_factor as f64;
    let spt = cfg.activation.steps_per_tick(rate)?;
    Ok((rate, ticks * spt))
}

/// Gated fraction under a constant p-neuron input, one point per voltage.
/// Point `k` uses seed `cfg.seed + k`.
pub fn sweep_vin(cfg: &ExperimentConfig, v_grid: &[f64], ticks_per_point: usize) -> Result<Vec<SweepPoint>> {
    check_grid(v_grid, ticks_per_point)?;
    cfg.activation.validate()?;
    let (rate, n) = steps(cfg, ticks_per_point)?;
    let zeros = vec![0.0; n];
    v_grid
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut act = cfg.activation;
            act.pneuron.seed = cfg.seed.wrapping_add(k as u64);
            let a = run_with_drive(&vec![v; n], &zeros, rate, 0.0, &act)?;
            Ok(SweepPoint {
                input: v,
                measured_rate: a.gated_fraction(),
                model_rate: activation_probability(v, &act.pneuron),
            })
        })
        .collect()
}

/// Gated fraction for a ramp of each slope (V/s) driven through the AFE and
/// p-neuron. The amplitude override is disabled so only the slope path acts.
pub fn sweep_slope(
    cfg: &ExperimentConfig,
    slope_grid: &[f64],
    ticks_per_point: usize,
) -> Result<Vec<SweepPoint>> {
    check_grid(slope_grid, ticks_per_point)?;
    cfg.activation.validate()?;
    let (rate, n) = steps(cfg, ticks_per_point)?;
    slope_grid
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut act = cfg.activation;
            act.pneuron.seed = cfg.seed.wrapping_add(k as u64);
            act.afe.amp_threshold_v = f64::INFINITY;
            act.force_on = false;
            let ramp = Trace::new((0..n).map(|i| s * i as f64 / rate).collect(), rate, 0.0)?;
            let a = run_activation(&ramp, &act)?;
            Ok(SweepPoint {
                input: s,
                measured_rate: a.gated_fraction(),
                model_rate: activation_probability(act.afe.slope_gain * s.abs(), &act.pneuron),
            })
        })
        .collect()
}

/// True when no point drops more than `tol` below any earlier point.
pub fn is_monotone_within(curve: &[SweepPoint], tol: f64) -> bool {
    let mut best = f64::NEG_INFINITY;
    for p in curve {
        if p.measured_rate < best - tol {
            return false;
        }
        best = best.max(p.measured_rate);
    }
    true
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub fn write_curve(curve: &[SweepPoint], input_name: &str, path: &Path) -> Result<()> {
    let mut body = format!("{input_name},measured_rate,model_rate\n");
    for p in curve {
        body.push_str(&format!("{},{},{}\n", p.input, p.measured_rate, p.model_rate));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
