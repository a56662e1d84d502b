//! Analog feature extraction.
//!
//! Two features are computed on the high-rate grid: the slope magnitude,
//! which drives the p-neuron, and the rectified amplitude, which drives the
//! deterministic override. The slope path splits the first difference into
//! positive and negative half-wave paths and recombines them, then smooths
//! with a causal moving average standing in for the analog bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfeConfig {
    /// Moving-average window of the slope path, in high-rate steps.
    pub smoothing_steps: usize,
    /// Analog response latency, in high-rate steps.
    pub delay_steps: usize,
    /// Volts of p-neuron drive per volt/second of slope.
    pub slope_gain: f64,
    /// Amplitude at or above which acquisition is forced on.
    pub amp_threshold_v: f64,
}

impl Default for AfeConfig {
    fn default() -> Self {
        Self {
            smoothing_steps: 50,
            delay_steps: 0,
            slope_gain: 4.0e-3,
            amp_threshold_v: 0.05,
        }
    }
}

impl AfeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_steps == 0 {
            return Err(Error::InvalidParameter("smoothing_steps must be >= 1".into()));
        }
        if !(self.slope_gain > 0.0 && self.slope_gain.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "slope_gain must be positive, got {}",
                self.slope_gain
            )));
        }
        // +inf is allowed and disables the amplitude path.
        if self.amp_threshold_v.is_nan() || self.amp_threshold_v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amp_threshold_v must be positive, got {}",
                self.amp_threshold_v
            )));
        }
        Ok(())
    }
}

/// Per-step features aligned with the source trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSignal {
    /// Smoothed |dx/dt| in volts per second.
    pub slope_mag: Vec<f64>,
    /// |x| in volts.
    pub amplitude: Vec<f64>,
    pub rate_hz: f64,
    pub delay_steps: usize,
}

impl FeatureSignal {
    pub fn len(&self) -> usize {
        self.slope_mag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slope_mag.is_empty()
    }
}

/// Splits `x` into its positive and negative half-waves; `pos - neg == x`.
pub fn half_wave_rectify(x: &Trace) -> (Trace, Trace) {
    let (pos, neg): (Vec<f64>, Vec<f64>) = x
        .samples()
        .iter()
        .map(|&v| (v.max(0.0), (-v).max(0.0)))
        .unzip();
    // Both halves inherit x's grid and finiteness, so construction cannot fail.
    let pos = Trace::new(pos, x.rate_hz(), x.t0_s()).expect("rectified trace is valid");
    let neg = Trace::new(neg, x.rate_hz(), x.t0_s()).expect("rectified trace is valid");
    (pos, neg)
}

pub fn extract_features(x: &Trace, cfg: &AfeConfig) -> Result<FeatureSignal> {
    cfg.validate()?;
    let n = x.len();
    if n < cfg.smoothing_steps + 1 {
        return Err(Error::TraceTooShort {
            len: n,
            needed: cfg.smoothing_steps + 1,
        });
    }
    let rate = x.rate_hz();
    let s = x.samples();

    let mut diff = Vec::with_capacity(n);
    diff.push(0.0);
    diff.extend(s.windows(2).map(|w| w[1] - w[0]));
    let diff = Trace::new(diff, rate, x.t0_s())?;
    let (pos, neg) = half_wave_rectify(&diff);

    // causal moving average over the available terms, d[0] excluded
    let w = cfg.smoothing_steps;
    let mut slope = vec![0.0; n];
    let mut acc = 0.0;
    let mag = |i: usize| pos.samples()[i] + neg.samples()[i];
    for (i, out) in slope.iter_mut().enumerate().skip(1) {
        acc += mag(i);
        if i > w {
            acc -= mag(i - w);
        }
        *out = (acc / i.min(w) as f64 * rate).max(0.0);
    }

    let amplitude: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    Ok(FeatureSignal {
        slope_mag: delay(slope, cfg.delay_steps),
        amplitude: delay(amplitude, cfg.delay_steps),
        rate_hz: rate,
        delay_steps: cfg.delay_steps,
    })
}

fn delay(mut v: Vec<f64>, steps: usize) -> Vec<f64> {
    let n = v.len();
    let k = steps.min(n);
    v.truncate(n - k);
    let mut out = vec![0.0; k];
    out.append(&mut v);
    out
}

/// The p-neuron input voltage at step `i`.
pub fn drive_voltage(f: &FeatureSignal, cfg: &AfeConfig, i: usize) -> Result<f64> {
    f.slope_mag
        .get(i)
        .map(|s| cfg.slope_gain * s)
        .ok_or(Error::IndexOutOfRange {
            index: i,
            len: f.len(),
        })
}

/// Drive voltage for every step.
pub fn drive_series(f: &FeatureSignal, cfg: &AfeConfig) -> Vec<f64> {
    f.slope_mag.iter().map(|s| cfg.slope_gain * s).collect()
}
