//! Survey runner: the P-ADC and R-ADC pipelines over the first N events.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    nmse_freq, nmse_time, reconstruct, sample, sample_regular, savings_from_counts, SampleStream,
};
use crate::activation::{average_rate, detection_latency, run_activation, ActivationTrace};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::signal::{upsample, write_trace, SurveyEvent, Trace};
use crate::stats::{mean, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMetrics {
    pub nmse_time: f64,
    pub nmse_freq: f64,
    pub r_adc_nmse_time: f64,
    pub r_adc_nmse_freq: f64,
    pub n_samples_p: usize,
    pub n_samples_r: usize,
    pub savings_pct: f64,
    pub active_time_pct: f64,
    /// Savings restricted to the span of sync ticks where the amplitude
    /// override was active; absent if it never fired.
    pub event_window_savings_pct: Option<f64>,
    /// Absent when the onset is unknown or nothing was sampled after it.
    pub detection_latency_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub index: usize,
    pub label: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EventMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub n_events: usize,
    pub n_failed: usize,
    /// Means over successful events.
    pub nmse_time: f64,
    pub nmse_freq: f64,
    pub nmse_time_median: f64,
    pub nmse_freq_median: f64,
    pub r_adc_nmse_time: f64,
    pub r_adc_nmse_freq: f64,
    /// Totals over successful events.
    pub n_samples_p: usize,
    pub n_samples_r: usize,
    pub savings_pct: f64,
    pub active_time_pct: f64,
    pub event_window_savings_pct: Option<f64>,
    pub detection_latency_s: Option<f64>,
    pub config: ExperimentConfig,
    pub per_event: Vec<EventReport>,
}

impl EvalReport {
    pub fn failures(&self) -> impl Iterator<Item = &EventReport> {
        self.per_event.iter().filter(|e| e.error.is_some())
    }
}

/// Everything produced for one event.
#[derive(Debug, Clone)]
pub struct EventOutcome {
    pub metrics: EventMetrics,
    pub activation: ActivationTrace,
    pub p_stream: SampleStream,
    pub r_stream: SampleStream,
    pub reconstruction: Trace,
    pub rate_windows: Vec<f64>,
}

/// Runs one event through upsample, activation, sampling, reconstruction
/// and metrics, with the p-neuron seeded by `seed`.
pub fn evaluate_event(event: &SurveyEvent, cfg: &ExperimentConfig, seed: u64) -> Result<EventOutcome> {
    let orig = &event.trace;
    let x_high = upsample(orig, cfg.upsample_factor)?;
    let mut act = cfg.activation;
    act.pneuron.seed = seed;
    let a = run_activation(&x_high, &act)?;

    let q = cfg.quantizer.as_ref();
    let p_stream = sample(&x_high, &a, q)?;
    let r_stream = sample_regular(&x_high, &a, q)?;
    let recon_p = reconstruct(&p_stream, orig.grid())?;
    let recon_r = reconstruct(&r_stream, orig.grid())?;

    let s = savings_from_counts(p_stream.len(), r_stream.len())?;
    let detection_latency_s = event.onset_s.and_then(|onset| {
        let step = ((onset - x_high.t0_s()) * x_high.rate_hz()).round();
        (step >= 0.0).then_some(step as usize).and_then(|k| detection_latency(&a, k).ok())
    });

    let metrics = EventMetrics {
        nmse_time: nmse_time(orig, &recon_p)?,
        nmse_freq: nmse_freq(orig, &recon_p, cfg.band_hz)?,
        r_adc_nmse_time: nmse_time(orig, &recon_r)?,
        r_adc_nmse_freq: nmse_freq(orig, &recon_r, cfg.band_hz)?,
        n_samples_p: p_stream.len(),
        n_samples_r: r_stream.len(),
        savings_pct: s.savings_pct,
        active_time_pct: s.active_time_pct,
        event_window_savings_pct: event_window_savings(&a),
        detection_latency_s,
    };
    let rate_windows = average_rate(&a, cfg.rate_window_ticks)?;
    Ok(EventOutcome {
        metrics,
        activation: a,
        p_stream,
        r_stream,
        reconstruction: recon_p,
        rate_windows,
    })
}

fn event_window_savings(a: &ActivationTrace) -> Option<f64> {
    let ticks = &a.sync_ticks;
    let first = ticks.iter().position(|&i| a.det_override[i])?;
    let last = ticks.iter().rposition(|&i| a.det_override[i])?;
    let window = &ticks[first..=last];
    let gated = window.iter().filter(|&&i| a.gate[i]).count();
    savings_from_counts(gated, window.len()).ok().map(|s| s.savings_pct)
}

/// Runs the survey and, when `output_dir` is set, writes `report.json` and
/// per-event CSV files. Per-event failures are recorded in the report and
/// do not stop the remaining events.
pub fn run_survey(cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let dataset = cfg.dataset.load(cfg.rate_hz)?;
    let events = dataset.first(cfg.n_events);
    if events.is_empty() {
        return Err(Error::Config("dataset has no events".into()));
    }

    let outcomes: Vec<(EventReport, Option<EventOutcome>)> = events
        .par_iter()
        .enumerate()
        .map(|(index, event)| {
            let seed = cfg.seed.wrapping_add(index as u64);
            let result = evaluate_event(event, cfg, seed);
            let (metrics, error, outcome) = match result {
                Ok(o) => (Some(o.metrics.clone()), None, Some(o)),
                Err(e) => (None, Some(e.to_string()), None),
            };
            let report = EventReport {
                index,
                label: event.label.clone(),
                seed,
                metrics,
                error,
            };
            (report, outcome)
        })
        .collect();

    let ok: Vec<&EventMetrics> = outcomes.iter().filter_map(|(r, _)| r.metrics.as_ref()).collect();
    let col = |f: fn(&EventMetrics) -> f64| -> Vec<f64> { ok.iter().map(|m| f(m)).collect() };
    let opt_mean = |f: fn(&EventMetrics) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = ok.iter().filter_map(|m| f(m)).collect();
        (!v.is_empty()).then(|| mean(&v))
    };

    let n_samples_p: usize = ok.iter().map(|m| m.n_samples_p).sum();
    let n_samples_r: usize = ok.iter().map(|m| m.n_samples_r).sum();
    let totals = savings_from_counts(n_samples_p, n_samples_r).ok();

    let report = EvalReport {
        dataset: dataset.label.clone(),
        n_events: events.len(),
        n_failed: events.len() - ok.len(),
        nmse_time: mean(&col(|m| m.nmse_time)),
        nmse_freq: mean(&col(|m| m.nmse_freq)),
        nmse_time_median: median(&col(|m| m.nmse_time)),
        nmse_freq_median: median(&col(|m| m.nmse_freq)),
        r_adc_nmse_time: mean(&col(|m| m.r_adc_nmse_time)),
        r_adc_nmse_freq: mean(&col(|m| m.r_adc_nmse_freq)),
        n_samples_p,
        n_samples_r,
        savings_pct: totals.map_or(f64::NAN, |s| s.savings_pct),
        active_time_pct: totals.map_or(f64::NAN, |s| s.active_time_pct),
        event_window_savings_pct: opt_mean(|m| m.event_window_savings_pct),
        detection_latency_s: opt_mean(|m| m.detection_latency_s),
        config: cfg.clone(),
        per_event: outcomes.iter().map(|(r, _)| r.clone()).collect(),
    };

    if let Some(dir) = &cfg.output_dir {
        write_outputs(dir, &report, &outcomes)?;
    }
    Ok(report)
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

fn write_outputs(
    dir: &Path,
    report: &EvalReport,
    outcomes: &[(EventReport, Option<EventOutcome>)],
) -> Result<()> {
    let events_dir = dir.join("events");
    fs::create_dir_all(&events_dir).map_err(|e| Error::io(&events_dir, e))?;
    let path = dir.join("report.json");
    fs::write(&path, report_json(report)?).map_err(|e| Error::io(&path, e))?;

    for (r, outcome) in outcomes {
        let Some(o) = outcome else { continue };
        let stem = events_dir.join(&r.label);
        write_stream(&o.p_stream, &stem.with_extension("samples.csv"))?;
        write_trace(&o.reconstruction, &stem.with_extension("recon.csv"))?;

        let window_s = report.config.rate_window_ticks as f64 / report.config.activation.sync_rate_hz;
        let mut body = String::from("window_start_s,rate\n");
        for (k, v) in o.rate_windows.iter().enumerate() {
            body.push_str(&format!("{},{}\n", o.activation.t0_s + k as f64 * window_s, v));
        }
        let path = stem.with_extension("rate.csv");
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn write_stream(s: &SampleStream, path: &Path) -> Result<()> {
    let mut body = String::from("t_s,value\n");
    for p in &s.points {
        body.push_str(&format!("{},{}\n", p.t_s, p.value));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::DatasetSource;
    use crate::signal::SurveySpec;

    fn small(n: usize) -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic(SurveySpec {
                n_events: n,
                ..SurveySpec::default()
            }),
            n_events: n,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn forced_activation_is_regular_sampling() {
        let mut cfg = small(1);
        cfg.activation.force_on = true;
        let r = run_survey(&cfg).unwrap();
        assert_eq!(r.savings_pct, 0.0);
        assert_eq!(r.nmse_time, 0.0);
        assert_eq!(r.nmse_freq, 0.0);
    }

    #[test]
    fn failures_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SurveySpec {
            n_events: 3,
            ..SurveySpec::default()
        };
        crate::signal::write_survey(&spec, dir.path()).unwrap();
        // an all-zero event cannot be normalized
        fs::write(dir.path().join("event_001.csv"), "value\n0\n0\n0\n0\n").unwrap();
        let cfg = ExperimentConfig {
            dataset: DatasetSource::Directory(dir.path().to_path_buf()),
            rate_hz: Some(2000.0),
            n_events: 3,
            ..ExperimentConfig::default()
        };
        let r = run_survey(&cfg).unwrap();
        assert_eq!(r.n_failed, 1);
        assert!(r.per_event[1].error.is_some());
        assert!(r.per_event[0].metrics.is_some() && r.per_event[2].metrics.is_some());
        let alone = {
            let mut c = cfg.clone();
            c.n_events = 1;
            run_survey(&c).unwrap()
        };
        assert_eq!(r.per_event[0].metrics, alone.per_event[0].metrics);
    }

    #[test]
    fn missing_dataset_is_an_error() {
        let cfg = ExperimentConfig {
            dataset: DatasetSource::Directory("/nonexistent/survey".into()),
            ..ExperimentConfig::default()
        };
        assert!(run_survey(&cfg).is_err());
    }
}
