//! The activation unit: p-neuron output ORed with the amplitude override,
//! then ANDed with the synchronous clock to form the ADC clock enable.

use serde::{Deserialize, Serialize};

use crate::afe::{drive_series, extract_features, AfeConfig};
use crate::error::{Error, Result};
use crate::pbit::{activation_probability, decide_iid, EntropySource, Lfsr16, PNeuronConfig, TelegraphState};
use crate::signal::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    /// V_Sync frequency.
    pub sync_rate_hz: f64,
    /// Steps the amplitude override stays latched after the last crossing.
    pub hold_steps: usize,
    /// Ties the override line high: every sync tick is sampled.
    #[serde(default)]
    pub force_on: bool,
    pub pneuron: PNeuronConfig,
    pub afe: AfeConfig,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            sync_rate_hz: 2000.0,
            hold_steps: 50,
            force_on: false,
            pneuron: PNeuronConfig::default(),
            afe: AfeConfig::default(),
        }
    }
}

impl ActivationConfig {
    pub fn amp_threshold_v(&self) -> f64 {
        self.afe.amp_threshold_v
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sync_rate_hz > 0.0 && self.sync_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sync_rate_hz must be positive, got {}",
                self.sync_rate_hz
            )));
        }
        self.pneuron.validate()?;
        self.afe.validate()
    }

    /// High-rate steps per sync period; `rate_hz` must be an integer multiple
    /// of the sync rate.
    pub fn steps_per_tick(&self, rate_hz: f64) -> Result<usize> {
        let ratio = rate_hz / self.sync_rate_hz;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(Error::RateMismatch(format!(
                "grid rate {rate_hz} Hz is not an integer multiple of sync rate {} Hz",
                self.sync_rate_hz
            )));
        }
        Ok(rounded as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// ADC clock enable per high-rate step.
    pub gate: Vec<bool>,
    /// Step indices of V_Sync rising edges.
    pub sync_ticks: Vec<usize>,
    pub pneuron_out: Vec<bool>,
    pub det_override: Vec<bool>,
    /// Activation probability seen by the p-neuron per step.
    pub probability: Vec<f64>,
    pub rate_hz: f64,
    pub t0_s: f64,
    pub steps_per_tick: usize,
    pub delay_steps: usize,
}

impl ActivationTrace {
    pub fn len(&self) -> usize {
        self.gate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gate.is_empty()
    }

    pub fn gated_ticks(&self) -> impl Iterator<Item = usize> + '_ {
        self.sync_ticks.iter().copied().filter(|&i| self.gate[i])
    }

    pub fn gated_count(&self) -> usize {
        self.gated_ticks().count()
    }

    /// Fraction of sync ticks that were sampled.
    pub fn gated_fraction(&self) -> f64 {
        if self.sync_ticks.is_empty() {
            return 0.0;
        }
        self.gated_count() as f64 / self.sync_ticks.len() as f64
    }

    /// p-neuron output sampled at each sync tick.
    pub fn decisions_at_ticks(&self) -> Vec<bool> {
        self.sync_ticks.iter().map(|&i| self.pneuron_out[i]).collect()
    }
}

/// Runs features, p-neuron and gating over a high-rate trace.
pub fn run_activation(x_high: &Trace, cfg: &ActivationConfig) -> Result<ActivationTrace> {
    cfg.validate()?;
    cfg.steps_per_tick(x_high.rate_hz())?;
    let features = extract_features(x_high, &cfg.afe)?;
    let drive = drive_series(&features, &cfg.afe);
    run_with_drive(&drive, &features.amplitude, x_high.rate_hz(), x_high.t0_s(), cfg)
}

/// Gating from an explicit per-step drive voltage and amplitude feature.
pub fn run_with_drive(
    drive: &[f64],
    amplitude: &[f64],
    rate_hz: f64,
    t0_s: f64,
    cfg: &ActivationConfig,
) -> Result<ActivationTrace> {
    cfg.validate()?;
    let spt = cfg.steps_per_tick(rate_hz)?;
    let n = drive.len();
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    if amplitude.len() != n {
        return Err(Error::GridMismatch(format!(
            "drive has {n} steps, amplitude has {}",
            amplitude.len()
        )));
    }
    if let Some(i) = drive.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i });
    }

    let pn = &cfg.pneuron;
    let dt = 1.0 / rate_hz;
    let probability: Vec<f64> = drive.iter().map(|&v| activation_probability(v, pn)).collect();

    let mut pneuron_out = Vec::with_capacity(n);
    match pn.source {
        EntropySource::DigitalIid => {
            let mut lfsr = Lfsr16::from_seed(pn.seed);
            let mut held = false;
            for (i, &p) in probability.iter().enumerate() {
                if i % spt == 0 {
                    held = decide_iid(p, &mut lfsr)?;
                }
                pneuron_out.push(held);
            }
        }
        EntropySource::SmtjTelegraph => {
            let mut ts = TelegraphState::stationary(probability[0], pn.seed)?;
            pneuron_out.push(ts.state());
            for &p in &probability[1..] {
                pneuron_out.push(ts.advance(p, dt, pn.tau_s)?);
            }
        }
    }

    let threshold = cfg.afe.amp_threshold_v;
    let mut det_override = Vec::with_capacity(n);
    let mut last_cross: Option<usize> = None;
    for (i, &a) in amplitude.iter().enumerate() {
        if a >= threshold {
            last_cross = Some(i);
        }
        let latched = last_cross.is_some_and(|j| i - j <= cfg.hold_steps);
        det_override.push(cfg.force_on || latched);
    }

    let sync_ticks: Vec<usize> = (0..n).step_by(spt).collect();
    let gate: Vec<bool> = (0..n)
        .map(|i| i % spt == 0 && (pneuron_out[i] || det_override[i]))
        .collect();

    Ok(ActivationTrace {
        gate,
        sync_ticks,
        pneuron_out,
        det_override,
        probability,
        rate_hz,
        t0_s,
        steps_per_tick: spt,
        delay_steps: cfg.afe.delay_steps,
    })
}

/// Fraction of gated sync ticks in consecutive non-overlapping windows of
/// `window_ticks` ticks. A trailing partial window is reported over its own
/// length.
pub fn average_rate(a: &ActivationTrace, window_ticks: usize) -> Result<Vec<f64>> {
    if window_ticks == 0 {
        return Err(Error::InvalidParameter("window_ticks must be >= 1".into()));
    }
    if a.sync_ticks.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(a.sync_ticks
        .chunks(window_ticks)
        .map(|w| w.iter().filter(|&&i| a.gate[i]).count() as f64 / w.len() as f64)
        .collect())
}

/// Seconds from `onset_step` to the first gated step at or after it.
pub fn detection_latency(a: &ActivationTrace, onset_step: usize) -> Result<f64> {
    if onset_step >= a.len() {
        return Err(Error::IndexOutOfRange {
            index: onset_step,
            len: a.len(),
        });
    }
    a.gate[onset_step..]
        .iter()
        .position(|&g| g)
        .map(|k| k as f64 / a.rate_hz)
        .ok_or(Error::NoActivation { onset_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{upsample, RickerEvent};

    const RATE: f64 = 100_000.0;

    fn cfg_with(source: EntropySource, x: f64, seed: u64) -> ActivationConfig {
        let mut c = ActivationConfig::default();
        c.pneuron.source = source;
        c.pneuron.v_ref_v = PNeuronConfig::v_ref_for_min_rate(c.pneuron.beta, x);
        c.pneuron.seed = seed;
        c
    }

    fn zeros(ticks: usize) -> Trace {
        Trace::new(vec![0.0; ticks * 50], RATE, 0.0).unwrap()
    }

    #[test]
    fn baseline_rate_tracks_min_rate() {
        for source in [EntropySource::DigitalIid, EntropySource::SmtjTelegraph] {
            let a = run_activation(&zeros(10_000), &cfg_with(source, 0.05, 3)).unwrap();
            assert_eq!(a.sync_ticks.len(), 10_000);
            let f = a.gated_fraction();
            assert!((f - 0.05).abs() <= 0.01, "{source:?}: {f}");
        }
    }

    #[test]
    fn amplitude_override_dominates() {
        for seed in 0..5 {
            let x = Trace::new(vec![1.0; 5000], RATE, 0.0).unwrap();
            let a = run_activation(&x, &cfg_with(EntropySource::SmtjTelegraph, 0.05, seed)).unwrap();
            assert!(a.sync_ticks.iter().all(|&i| a.gate[i]));
        }
    }

    #[test]
    fn saturated_pneuron_is_regular_clock() {
        let mut c = cfg_with(EntropySource::DigitalIid, 0.5, 1);
        c.pneuron.beta = 1e3;
        c.pneuron.v_ref_v = 0.0;
        let n = 50 * 500;
        let a = run_with_drive(&vec![1.0; n], &vec![0.0; n], RATE, 0.0, &c).unwrap();
        assert_eq!(a.gated_count(), a.sync_ticks.len());
    }

    #[test]
    fn force_on_equals_tick_set() {
        let mut c = cfg_with(EntropySource::SmtjTelegraph, 0.02, 9);
        c.force_on = true;
        let a = run_activation(&zeros(300), &c).unwrap();
        let gated: Vec<usize> = a.gated_ticks().collect();
        assert_eq!(gated, a.sync_ticks);
    }

    #[test]
    fn gate_invariant_and_subset() {
        let ev = RickerEvent {
            duration_s: 0.5,
            rate_hz: 2000.0,
            wavelet_f0_hz: 30.0,
            onset_s: 0.25,
            amplitude: 1.0,
            noise_rms: 0.005,
            seed: 4,
        };
        let x = upsample(&ev.synthesize().unwrap(), 50).unwrap();
        for source in [EntropySource::DigitalIid, EntropySource::SmtjTelegraph] {
            let a = run_activation(&x, &cfg_with(source, 0.03, 2)).unwrap();
            for i in 0..a.len() {
                let tick = i % a.steps_per_tick == 0;
                assert_eq!(a.gate[i], (a.pneuron_out[i] || a.det_override[i]) && tick);
            }
            let b = run_activation(&x, &cfg_with(source, 0.03, 2)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rate_mismatch_rejected() {
        let x = Trace::new(vec![0.0; 1000], 3000.0, 0.0).unwrap();
        assert!(matches!(
            run_activation(&x, &ActivationConfig::default()),
            Err(Error::RateMismatch(_))
        ));
    }

    #[test]
    fn monotone_drive_monotone_rate() {
        let n = 50 * 10_000;
        let mut prev = -1.0;
        for (k, v) in [0.0, 0.2, 0.4, 0.6].into_iter().enumerate() {
            let c = cfg_with(EntropySource::SmtjTelegraph, 0.05, 10 + k as u64);
            let a = run_with_drive(&vec![v; n], &vec![0.0; n], RATE, 0.0, &c).unwrap();
            let f = a.gated_fraction();
            assert!(f >= prev, "{f} < {prev}");
            prev = f;
        }
    }

    #[test]
    fn average_rate_windows() {
        let mut c = cfg_with(EntropySource::DigitalIid, 0.05, 1);
        c.force_on = true;
        let a = run_activation(&zeros(100), &c).unwrap();
        assert_eq!(average_rate(&a, 10).unwrap(), vec![1.0; 10]);
        assert!(average_rate(&a, 0).is_err());

        let a = run_with_drive(&vec![-100.0; 5000], &vec![0.0; 5000], RATE, 0.0, &{
            let mut c = cfg_with(EntropySource::DigitalIid, 0.05, 1);
            c.pneuron.beta = 1e3;
            c.pneuron.v_ref_v = 0.0;
            c
        })
        .unwrap();
        assert!(average_rate(&a, 7).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn average_rate_concentrates_at_baseline() {
        let a = run_activation(&zeros(20_000), &cfg_with(EntropySource::DigitalIid, 0.05, 8)).unwrap();
        let w = average_rate(&a, 1000).unwrap();
        let m = crate::stats::mean(&w);
        let sd = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64).sqrt();
        assert!((m - 0.05).abs() < 0.01);
        assert!(sd < 0.01, "{sd}");
    }

    #[test]
    fn latency_immediate_override_and_no_activation() {
        let n = 5000;
        let onset = 1000; // a sync tick
        let mut amp = vec![0.0; n];
        amp[onset..].iter_mut().for_each(|v| *v = 1.0);
        let mut c = cfg_with(EntropySource::DigitalIid, 0.5, 1);
        c.pneuron.beta = 100.0;
        c.pneuron.v_ref_v = 1.0; // p-neuron silent
        let a = run_with_drive(&vec![0.0; n], &amp, RATE, 0.0, &c).unwrap();
        assert_eq!(detection_latency(&a, onset).unwrap(), 0.0);
        assert!(matches!(
            detection_latency(&run_with_drive(&vec![0.0; n], &vec![0.0; n], RATE, 0.0, &c).unwrap(), 10),
            Err(Error::NoActivation { onset_step: 10 })
        ));
        assert!(detection_latency(&a, n).is_err());
    }
}
