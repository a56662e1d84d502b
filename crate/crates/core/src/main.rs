use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use probsense::experiment::{
    is_monotone_within, linspace, run_survey, sweep_slope, sweep_vin, write_curve,
    DatasetSource, ExperimentConfig, Overrides, SweepPoint,
};
use probsense::signal::write_survey;
use probsense::{Error, Result};

#[derive(Parser)]
#[command(name = "probsense", version, about = "Probabilistic event-gated acquisition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat TOML config; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        self.overrides.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the P-ADC / R-ADC survey and write report.json
    Run(Common),
    /// Measured sampling rate against a constant p-neuron input voltage
    SweepVin {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        v_min: f64,
        #[arg(long, default_value_t = 1.5)]
        v_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 10_000)]
        ticks: usize,
    },
    /// Measured sampling rate against the slope of a ramp input (V/s)
    SweepSlope {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        slope_min: f64,
        #[arg(long, default_value_t = 300.0)]
        slope_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 10_000)]
        ticks: usize,
    },
    /// Write a synthetic survey (one CSV per event plus manifest.json)
    Synth(Common),
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn print_curve(curve: &[SweepPoint], name: &str) {
    println!("{name:>12} {:>10} {:>10}", "measured", "model");
    for p in curve {
        println!("{:>12.4} {:>10.4} {:>10.4}", p.input, p.measured_rate, p.model_rate);
    }
    let max_dev = curve
        .iter()
        .map(|p| (p.measured_rate - p.model_rate).abs())
        .fold(0.0, f64::max);
    println!("max |measured - model| = {max_dev:.4}; monotone: {}", is_monotone_within(curve, 0.02));
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let mut cfg = common.resolve()?;
            cfg.output_dir = Some(out_dir(&cfg)?);
            let report = run_survey(&cfg)?;
            let dir = cfg.output_dir.as_ref().expect("set above");
            println!(
                "events: {} ({} failed)\nnmse_time: {:.4}% (median {:.4}%)\nnmse_freq: {:.4}% (median {:.4}%)\nr-adc nmse_time: {:.4}%\nsamples: {} / {} (savings {:.2}%, active {:.2}%)",
                report.n_events,
                report.n_failed,
                100.0 * report.nmse_time,
                100.0 * report.nmse_time_median,
                100.0 * report.nmse_freq,
                100.0 * report.nmse_freq_median,
                100.0 * report.r_adc_nmse_time,
                report.n_samples_p,
                report.n_samples_r,
                report.savings_pct,
                report.active_time_pct,
            );
            if let Some(l) = report.detection_latency_s {
                println!("mean detection latency: {:.1} us", l * 1e6);
            }
            println!("report: {}", dir.join("report.json").display());
            let mut ok = true;
            for f in report.failures() {
                ok = false;
                eprintln!("event {} ({}): {}", f.index, f.label, f.error.as_deref().unwrap_or(""));
            }
            Ok(ok)
        }
        Command::SweepVin { common, v_min, v_max, points, ticks } => {
            let cfg = common.resolve()?;
            let curve = sweep_vin(&cfg, &linspace(v_min, v_max, points), ticks)?;
            let path = out_dir(&cfg)?.join("sweep_vin.csv");
            write_curve(&curve, "v_in", &path)?;
            print_curve(&curve, "v_in");
            println!("curve: {}", path.display());
            Ok(true)
        }
        Command::SweepSlope { common, slope_min, slope_max, points, ticks } => {
            let cfg = common.resolve()?;
            let curve = sweep_slope(&cfg, &linspace(slope_min, slope_max, points), ticks)?;
            let path = out_dir(&cfg)?.join("sweep_slope.csv");
            write_curve(&curve, "slope", &path)?;
            print_curve(&curve, "slope");
            println!("curve: {}", path.display());
            Ok(true)
        }
        Command::Synth(common) => {
            let cfg = common.resolve()?;
            let spec = match &cfg.dataset {
                DatasetSource::Synthetic(s) => s.clone(),
                DatasetSource::Directory(_) => {
                    return Err(Error::Config("synth writes a synthetic survey; drop --dataset".into()))
                }
            };
            let dir = out_dir(&cfg)?;
            let files = write_survey(&spec, &dir)?;
            println!("wrote {} events to {}", files.len(), dir.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
