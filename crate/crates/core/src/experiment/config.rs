use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::acquisition::Quantizer;
use crate::activation::ActivationConfig;
use crate::error::{Error, Result};
use crate::pbit::{EntropySource, PNeuronConfig};
use crate::signal::{load_survey, SurveyDataset, SurveySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SurveySpec),
    Directory(PathBuf),
}

impl DatasetSource {
    pub fn load(&self, rate_hz: Option<f64>) -> Result<SurveyDataset> {
        match self {
            DatasetSource::Synthetic(spec) => spec.synthesize(),
            DatasetSource::Directory(dir) => {
                if !dir.is_dir() {
                    return Err(Error::Config(format!("dataset {} not found", dir.display())));
                }
                load_survey(dir, rate_hz)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Sample rate for value-only CSV files.
    pub rate_hz: Option<f64>,
    pub n_events: usize,
    pub activation: ActivationConfig,
    pub upsample_factor: usize,
    pub band_hz: (f64, f64),
    /// Event `k` runs its p-neuron with seed `seed + k`.
    pub seed: u64,
    pub quantizer: Option<Quantizer>,
    /// Window, in sync ticks, of the per-event average-rate trace.
    pub rate_window_ticks: usize,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic(SurveySpec::default()),
            rate_hz: None,
            n_events: 50,
            activation: ActivationConfig::default(),
            upsample_factor: 50,
            band_hz: (0.0, 200.0),
            seed: 1,
            quantizer: None,
            rate_window_ticks: 20,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_events == 0 {
            return Err(Error::Config("n_events must be >= 1".into()));
        }
        if self.upsample_factor == 0 {
            return Err(Error::Config("upsample factor must be >= 1".into()));
        }
        if self.rate_window_ticks == 0 {
            return Err(Error::Config("rate_window_ticks must be >= 1".into()));
        }
        let (lo, hi) = self.band_hz;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::Config(format!("invalid band {lo}:{hi}")));
        }
        self.activation.validate()
    }

    /// High-rate grid frequency for a dataset sampled at `rate_hz`.
    pub fn high_rate_hz(&self, rate_hz: f64) -> f64 {
        rate_hz * self.upsample_factor as f64
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        Overrides::from_file(path)?.apply(&mut cfg)?;
        Ok(cfg)
    }
}

/// Flat experiment settings shared by the config file and the CLI flags.
/// Every field is optional; set fields replace the current value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Directory of per-event CSV files (default: synthetic survey)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Sample rate of value-only CSV files, Hz
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Number of leading events to evaluate
    #[arg(long)]
    pub n_events: Option<usize>,
    /// Base seed; event k uses seed + k
    #[arg(long)]
    pub seed: Option<u64>,
    /// sMTJ retention time, microseconds
    #[arg(long)]
    pub tau_us: Option<f64>,
    /// p-neuron reference voltage, volts
    #[arg(long, allow_hyphen_values = true)]
    pub vref: Option<f64>,
    /// Target no-event sampling rate X; sets vref from beta
    #[arg(long)]
    pub min_rate: Option<f64>,
    /// Activation steepness, 1/V
    #[arg(long)]
    pub beta: Option<f64>,
    /// Entropy source: digital or smtj
    #[arg(long)]
    pub source: Option<String>,
    /// Synchronous clock frequency, Hz
    #[arg(long)]
    pub sync_hz: Option<f64>,
    /// Upsampling factor onto the simulation grid
    #[arg(long)]
    pub upsample: Option<usize>,
    /// Frequency band for spectral NMSE, `low:high` in Hz
    #[arg(long)]
    pub band: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// AFE slope gain, volts per volt/second
    #[arg(long)]
    pub slope_gain: Option<f64>,
    /// AFE slope smoothing window, high-rate steps
    #[arg(long)]
    pub smoothing_steps: Option<usize>,
    /// AFE response delay, high-rate steps
    #[arg(long)]
    pub delay_steps: Option<usize>,
    /// Amplitude override threshold, volts
    #[arg(long)]
    pub amp_threshold: Option<f64>,
    /// Amplitude override hold window, high-rate steps
    #[arg(long)]
    pub hold_steps: Option<usize>,
    /// Force the ADC on at every sync tick
    #[arg(long)]
    pub force_on: Option<bool>,
    /// Quantizer resolution in bits (unquantized when absent)
    #[arg(long)]
    pub adc_bits: Option<u32>,
    /// Quantizer full scale, volts
    #[arg(long)]
    pub adc_full_scale: Option<f64>,
    /// Seed of the synthetic survey
    #[arg(long)]
    pub synth_seed: Option<u64>,
    /// SNR of the synthetic survey, dB
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Number of synthetic events to generate
    #[arg(long)]
    pub synth_events: Option<usize>,
}

pub fn parse_band(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("band `{s}` must be `low:high`")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("band `{s}`: cannot parse `{v}`")))
    };
    let band = (parse(lo)?, parse(hi)?);
    if !(band.0 >= 0.0 && band.0 <= band.1) {
        return Err(Error::Config(format!("band `{s}` must satisfy 0 <= low <= high")));
    }
    Ok(band)
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(d) = &self.dataset {
            cfg.dataset = DatasetSource::Directory(d.clone());
        }
        if let DatasetSource::Synthetic(spec) = &mut cfg.dataset {
            if let Some(s) = self.synth_seed {
                spec.seed = s;
            }
            if let Some(s) = self.snr_db {
                spec.snr_db = s;
            }
            if let Some(n) = self.synth_events {
                spec.n_events = n;
            }
        }
        set(&mut cfg.rate_hz, self.rate_hz.map(Some));
        set(&mut cfg.n_events, self.n_events);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.upsample_factor, self.upsample);
        set(&mut cfg.output_dir, self.out.clone().map(Some));
        if let Some(b) = &self.band {
            cfg.band_hz = parse_band(b)?;
        }

        let act = &mut cfg.activation;
        set(&mut act.sync_rate_hz, self.sync_hz);
        set(&mut act.hold_steps, self.hold_steps);
        set(&mut act.force_on, self.force_on);
        set(&mut act.afe.slope_gain, self.slope_gain);
        set(&mut act.afe.smoothing_steps, self.smoothing_steps);
        set(&mut act.afe.delay_steps, self.delay_steps);
        set(&mut act.afe.amp_threshold_v, self.amp_threshold);

        let pn = &mut act.pneuron;
        set(&mut pn.beta, self.beta);
        set(&mut pn.tau_s, self.tau_us.map(|t| t * 1e-6));
        if let Some(s) = &self.source {
            pn.source = s.parse::<EntropySource>()?;
        }
        match (self.vref, self.min_rate) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("vref and min_rate are mutually exclusive".into()))
            }
            (Some(v), None) => pn.v_ref_v = v,
            (None, Some(x)) => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::Config(format!("min_rate must lie in (0, 1), got {x}")));
                }
                pn.v_ref_v = PNeuronConfig::v_ref_for_min_rate(pn.beta, x);
            }
            (None, None) => {}
        }

        if self.adc_bits.is_some() || self.adc_full_scale.is_some() {
            let mut q = cfg.quantizer.unwrap_or_default();
            set(&mut q.bits, self.adc_bits);
            set(&mut q.full_scale_v, self.adc_full_scale);
            if q.bits == 0 || q.bits > 52 {
                return Err(Error::Config(format!("adc_bits must lie in 1..=52, got {}", q.bits)));
            }
            cfg.quantizer = Some(q);
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_parsing() {
        assert_eq!(parse_band("0:200").unwrap(), (0.0, 200.0));
        assert!(parse_band("200").is_err());
        assert!(parse_band("300:200").is_err());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.toml");
        fs::write(&p, "n_events = 5\nbeta = 8.0\nsource = \"digital\"\nband = \"10:100\"\n").unwrap();
        let mut cfg = ExperimentConfig::from_file(&p).unwrap();
        assert_eq!(cfg.n_events, 5);
        assert_eq!(cfg.activation.pneuron.beta, 8.0);
        assert_eq!(cfg.activation.pneuron.source, EntropySource::DigitalIid);
        assert_eq!(cfg.band_hz, (10.0, 100.0));

        let cli = Overrides {
            n_events: Some(7),
            min_rate: Some(0.1),
            ..Overrides::default()
        };
        cli.apply(&mut cfg).unwrap();
        assert_eq!(cfg.n_events, 7);
        assert!((cfg.activation.pneuron.min_rate() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        fs::write(&p, "n_event = 5\n").unwrap();
        assert!(ExperimentConfig::from_file(&p).is_err());
    }

    #[test]
    fn vref_and_min_rate_conflict() {
        let o = Overrides {
            vref: Some(0.1),
            min_rate: Some(0.1),
            ..Overrides::default()
        };
        assert!(o.apply(&mut ExperimentConfig::default()).is_err());
    }
}
