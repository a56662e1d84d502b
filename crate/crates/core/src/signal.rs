//! Uniformly sampled traces, CSV I/O, synthetic active-seismic events and
//! upsampling onto the high-rate simulation grid.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled, finite, non-empty real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<f64>,
    rate_hz: f64,
    t0_s: f64,
}

/// Shape of a uniform grid without its values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rate_hz: f64,
    pub len: usize,
    pub t0_s: f64,
}

impl GridSpec {
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0_s + i as f64 / self.rate_hz
    }
}

impl Trace {
    pub fn new(samples: Vec<f64>, rate_hz: f64, t0_s: f64) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate_hz must be positive and finite, got {rate_hz}"
            )));
        }
        if !t0_s.is_finite() {
            return Err(Error::InvalidParameter(format!("t0_s must be finite, got {t0_s}")));
        }
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if let Some(row) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row });
        }
        Ok(Self {
            samples,
            rate_hz,
            t0_s,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn t0_s(&self) -> f64 {
        self.t0_s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0_s + i as f64 / self.rate_hz
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            rate_hz: self.rate_hz,
            len: self.samples.len(),
            t0_s: self.t0_s,
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// One active-source event of a survey.
#[derive(Debug, Clone)]
pub struct SurveyEvent {
    pub label: String,
    pub trace: Trace,
    /// Known source onset, when the event is synthetic.
    pub onset_s: Option<f64>,
}

/// Ordered events sharing one sample rate.
#[derive(Debug, Clone)]
pub struct SurveyDataset {
    pub label: String,
    events: Vec<SurveyEvent>,
}

impl SurveyDataset {
    pub fn new(label: impl Into<String>, events: Vec<SurveyEvent>) -> Result<Self> {
        if let Some(first) = events.first() {
            let rate = first.trace.rate_hz();
            if let Some(bad) = events.iter().find(|e| e.trace.rate_hz() != rate) {
                return Err(Error::RateMismatch(format!(
                    "event {} has rate {} Hz, survey rate is {} Hz",
                    bad.label,
                    bad.trace.rate_hz(),
                    rate
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            events,
        })
    }

    pub fn events(&self) -> &[SurveyEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The first `n` events, or all of them if fewer exist.
    pub fn first(&self, n: usize) -> &[SurveyEvent] {
        &self.events[..n.min(self.events.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
}

/// Loads a trace from disk.
///
/// A `time_s,value` file carries its own grid; the rate is inferred and the
/// timestamps must sit on a uniform grid within 1 ppm of the period. A
/// single `value` column needs `rate_hz` from the caller and starts at t = 0.
/// When both are present they must agree within 1 ppm.
pub fn load_trace(path: &Path, format: TraceFormat, rate_hz: Option<f64>) -> Result<Trace> {
    match format {
        TraceFormat::Csv => load_csv(path, rate_hz),
    }
}

fn load_csv(path: &Path, rate_hz: Option<f64>) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let timed = match cols.as_slice() {
        ["time_s", "value"] => true,
        ["value"] => false,
        _ => {
            return Err(Error::Csv(format!(
                "expected header `time_s,value` or `value`, got `{}`",
                cols.join(",")
            )))
        }
    };

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("row {row}: cannot parse `{s}`")))
        };
        let value = parse(record.get(usize::from(timed)).unwrap_or(""))?;
        if !value.is_finite() {
            return Err(Error::NonFinite { row });
        }
        if timed {
            let t = parse(record.get(0).unwrap_or(""))?;
            if !t.is_finite() {
                return Err(Error::NonFinite { row });
            }
            times.push(t);
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptyTrace);
    }

    if !timed {
        let rate = rate_hz.ok_or_else(|| {
            Error::Config(format!(
                "{} has no time column; a sample rate must be supplied",
                path.display()
            ))
        })?;
        return Trace::new(values, rate, 0.0);
    }

    let t0 = times[0];
    let rate = if times.len() >= 2 {
        let span = times[times.len() - 1] - t0;
        if span <= 0.0 {
            return Err(Error::NonUniformGrid { row: times.len() });
        }
        let inferred = snap_rate((times.len() - 1) as f64 / span);
        if let Some(given) = rate_hz {
            if ((given - inferred) / given).abs() > 1e-6 {
                return Err(Error::RateMismatch(format!(
                    "timestamps imply {inferred} Hz, configured {given} Hz"
                )));
            }
        }
        inferred
    } else {
        rate_hz.ok_or_else(|| {
            Error::Config("single-row trace needs an explicit sample rate".into())
        })?
    };

    let tol = 1e-6 / rate;
    for (i, &t) in times.iter().enumerate() {
        let ideal = t0 + i as f64 / rate;
        if (t - ideal).abs() > tol {
            return Err(Error::NonUniformGrid { row: i + 1 });
        }
    }
    Trace::new(values, rate, t0)
}

// Rates inferred from a timestamp span carry rounding noise; integral rates
// are by far the common case.
fn snap_rate(rate: f64) -> f64 {
    let rounded = rate.round();
    if rounded > 0.0 && ((rate - rounded) / rounded).abs() <= 1e-6 {
        rounded
    } else {
        rate
    }
}

/// Writes `time_s,value` CSV. Values use shortest round-trip formatting.
pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 24 + 16);
    out.push_str("time_s,value\n");
    for (i, v) in trace.samples().iter().enumerate() {
        out.push_str(&format!("{},{}\n", trace.time_at(i), v));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A Ricker wavelet arrival in white noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RickerEvent {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub wavelet_f0_hz: f64,
    pub onset_s: f64,
    pub amplitude: f64,
    pub noise_rms: f64,
    pub seed: u64,
}

/// Ricker wavelet (second derivative of a Gaussian), unit peak at `t = 0`.
pub fn ricker(t: f64, f0_hz: f64) -> f64 {
    let a = (PI * f0_hz * t).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

impl RickerEvent {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return bad(format!("rate_hz must be positive, got {}", self.rate_hz));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.onset_s > 0.0 && self.onset_s < self.duration_s) {
            return bad(format!(
                "onset_s must lie in (0, {}), got {}",
                self.duration_s, self.onset_s
            ));
        }
        if !(self.wavelet_f0_hz > 0.0 && self.wavelet_f0_hz < self.rate_hz / 2.0) {
            return bad(format!(
                "wavelet_f0_hz must lie in (0, {}), got {}",
                self.rate_hz / 2.0,
                self.wavelet_f0_hz
            ));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return bad(format!("amplitude must be positive, got {}", self.amplitude));
        }
        if !(self.noise_rms >= 0.0 && self.noise_rms.is_finite()) {
            return bad(format!("noise_rms must be non-negative, got {}", self.noise_rms));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        ((self.duration_s * self.rate_hz).round() as usize).max(1)
    }

    /// The wavelet alone, scaled so its largest sampled magnitude equals
    /// `amplitude`.
    pub fn clean_wavelet(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let raw: Vec<f64> = (0..self.len())
            .map(|i| ricker(i as f64 / self.rate_hz - self.onset_s, self.wavelet_f0_hz))
            .collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::InvalidParameter(
                "wavelet vanishes on the sampling grid".into(),
            ));
        }
        let scale = self.amplitude / peak;
        Ok(raw.into_iter().map(|v| v * scale).collect())
    }

    pub fn synthesize(&self) -> Result<Trace> {
        let mut samples = self.clean_wavelet()?;
        if self.noise_rms > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let normal = Normal::new(0.0, self.noise_rms)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for s in &mut samples {
                *s += normal.sample(&mut rng);
            }
        }
        Trace::new(samples, self.rate_hz, 0.0)
    }
}

/// Parameters for a synthetic survey of Ricker events at a fixed SNR.
///
/// SNR is the ratio of wavelet energy to noise energy over the whole trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySpec {
    pub n_events: usize,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub f0_range_hz: (f64, f64),
    pub amplitude_range: (f64, f64),
    pub onset_range_s: (f64, f64),
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SurveySpec {
    fn default() -> Self {
        Self {
            n_events: 50,
            duration_s: 1.0,
            rate_hz: 2000.0,
            f0_range_hz: (20.0, 40.0),
            amplitude_range: (0.8, 1.2),
            onset_range_s: (0.2, 0.8),
            snr_db: 26.0,
            seed: 7,
        }
    }
}

impl SurveySpec {
    /// Per-event parameters. Drawn from a generator seeded by `seed`, so the
    /// k-th event does not depend on `n_events`.
    pub fn event_params(&self) -> Result<Vec<RickerEvent>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let mut out = Vec::with_capacity(self.n_events);
        for k in 0..self.n_events {
            let f0 = draw(self.f0_range_hz);
            let amplitude = draw(self.amplitude_range);
            let onset = draw(self.onset_range_s);
            let mut ev = RickerEvent {
                duration_s: self.duration_s,
                rate_hz: self.rate_hz,
                wavelet_f0_hz: f0,
                onset_s: onset,
                amplitude,
                noise_rms: 0.0,
                seed: self.seed.wrapping_mul(1_000_003).wrapping_add(k as u64),
            };
            let clean = ev.clean_wavelet()?;
            let energy: f64 = clean.iter().map(|v| v * v).sum();
            let noise_energy = energy / 10f64.powf(self.snr_db / 10.0);
            ev.noise_rms = (noise_energy / clean.len() as f64).sqrt();
            out.push(ev);
        }
        Ok(out)
    }

    pub fn synthesize(&self) -> Result<SurveyDataset> {
        let events = self
            .event_params()?
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                Ok(SurveyEvent {
                    label: format!("event_{k:03}"),
                    trace: p.synthesize()?,
                    onset_s: Some(p.onset_s),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SurveyDataset::new(format!("synthetic(seed={})", self.seed), events)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    #[serde(flatten)]
    params: RickerEvent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    spec: SurveySpec,
    events: Vec<ManifestEntry>,
}

const MANIFEST: &str = "manifest.json";

/// Writes a synthetic survey as one CSV per event plus `manifest.json`.
pub fn write_survey(spec: &SurveySpec, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (k, params) in spec.event_params()?.into_iter().enumerate() {
        let name = format!("event_{k:03}.csv");
        let path = dir.join(&name);
        write_trace(&params.synthesize()?, &path)?;
        files.push(path);
        entries.push(ManifestEntry { file: name, params });
    }
    let manifest = Manifest {
        spec: spec.clone(),
        events: entries,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    Ok(files)
}

/// Loads every `*.csv` in `dir` in lexical order, one event per file. Onsets
/// are attached when a `manifest.json` written by [`write_survey`] is present.
pub fn load_survey(dir: &Path, rate_hz: Option<f64>) -> Result<SurveyDataset> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no CSV files in {}", dir.display())));
    }

    let manifest_path = dir.join(MANIFEST);
    let manifest: Option<Manifest> = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };

    let mut events = Vec::with_capacity(files.len());
    for path in files {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let trace = load_trace(&path, TraceFormat::Csv, rate_hz)?;
        let file_name = path.file_name().map(|s| s.to_string_lossy().into_owned());
        let onset_s = manifest.as_ref().and_then(|m| {
            m.events
                .iter()
                .find(|e| Some(&e.file) == file_name.as_ref())
                .map(|e| e.params.onset_s)
        });
        events.push(SurveyEvent {
            label,
            trace,
            onset_s,
        });
    }
    SurveyDataset::new(dir.display().to_string(), events)
}

/// Linear interpolation onto a grid `factor` times finer. The result has
/// `(n - 1) * factor + 1` samples and reproduces every original sample
/// exactly at index `i * factor`.
pub fn upsample(trace: &Trace, factor: usize) -> Result<Trace> {
    if factor == 0 {
        return Err(Error::InvalidParameter("upsample factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(trace.clone());
    }
    let x = trace.samples();
    let n = x.len();
    let mut out = Vec::with_capacity((n - 1) * factor + 1);
    for w in x.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        out.push(a);
        for r in 1..factor {
            let frac = r as f64 / factor as f64;
            out.push((a + (b - a) * frac).clamp(lo, hi));
        }
    }
    out.push(x[n - 1]);
    Trace::new(out, trace.rate_hz() * factor as f64, trace.t0_s())
}
