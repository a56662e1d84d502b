//! Gated sampling, reconstruction and fidelity metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationTrace;
use crate::error::{Error, Result};
use crate::signal::{GridSpec, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcKind {
    PAdc,
    RAdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t_s: f64,
    pub value: f64,
}

/// Non-uniform samples on the sync grid, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub points: Vec<SamplePoint>,
    pub source: AdcKind,
}

impl SampleStream {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Mid-tread uniform quantizer over `[-full_scale_v, full_scale_v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bits: u32,
    pub full_scale_v: f64,
}

impl Default for Quantizer {
    fn default() -> Self {
        Self {
            bits: 24,
            full_scale_v: 1.0,
        }
    }
}

impl Quantizer {
    pub fn step_v(&self) -> f64 {
        2.0 * self.full_scale_v / 2f64.powi(self.bits as i32)
    }

    pub fn quantize(&self, v: f64) -> f64 {
        let q = self.step_v();
        let top = self.full_scale_v - q;
        ((v / q).round() * q).clamp(-self.full_scale_v, top)
    }
}

fn collect(
    x_high: &Trace,
    a: &ActivationTrace,
    source: AdcKind,
    quantizer: Option<&Quantizer>,
    pick: impl Fn(usize) -> bool,
) -> Result<SampleStream> {
    if a.len() != x_high.len() || a.rate_hz != x_high.rate_hz() {
        return Err(Error::GridMismatch(format!(
            "activation has {} steps at {} Hz, trace has {} at {} Hz",
            a.len(),
            a.rate_hz,
            x_high.len(),
            x_high.rate_hz()
        )));
    }
    let x = x_high.samples();
    let points = a
        .sync_ticks
        .iter()
        .copied()
        .filter(|&i| pick(i))
        .map(|i| {
            let v = x[i];
            SamplePoint {
                t_s: x_high.time_at(i),
                value: quantizer.map_or(v, |q| q.quantize(v)),
            }
        })
        .collect();
    Ok(SampleStream { points, source })
}

/// P-ADC: the high-rate value at every gated sync tick.
pub fn sample(x_high: &Trace, a: &ActivationTrace, quantizer: Option<&Quantizer>) -> Result<SampleStream> {
    collect(x_high, a, AdcKind::PAdc, quantizer, |i| a.gate[i])
}

/// R-ADC: the high-rate value at every sync tick.
pub fn sample_regular(
    x_high: &Trace,
    a: &ActivationTrace,
    quantizer: Option<&Quantizer>,
) -> Result<SampleStream> {
    collect(x_high, a, AdcKind::RAdc, quantizer, |_| true)
}

/// Piecewise-linear interpolation through the stream onto `grid`, holding
/// the first and last values outside the sampled span. Grid points that
/// coincide with a sample (to within 1e-9 of a grid period) take its value
/// exactly.
pub fn reconstruct(s: &SampleStream, grid: GridSpec) -> Result<Trace> {
    let pts = &s.points;
    if pts.len() < 2 {
        return Err(Error::TooFewSamples(pts.len()));
    }
    if grid.len == 0 {
        return Err(Error::EmptyTrace);
    }
    let snap = 1e-9 / grid.rate_hz;
    let mut out = Vec::with_capacity(grid.len);
    let mut seg = 0;
    for j in 0..grid.len {
        let t = grid.time_at(j);
        if t <= pts[0].t_s + snap {
            out.push(pts[0].value);
            continue;
        }
        let last = pts[pts.len() - 1];
        if t >= last.t_s - snap {
            out.push(last.value);
            continue;
        }
        while pts[seg + 1].t_s < t - snap {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let v = if (t - a.t_s).abs() <= snap {
            a.value
        } else if (b.t_s - t).abs() <= snap {
            b.value
        } else {
            let w = (t - a.t_s) / (b.t_s - a.t_s);
            a.value + (b.value - a.value) * w
        };
        out.push(v);
    }
    Trace::new(out, grid.rate_hz, grid.t0_s)
}

fn check_pair(orig: &Trace, recon: &Trace) -> Result<()> {
    if orig.len() != recon.len() || orig.rate_hz() != recon.rate_hz() {
        return Err(Error::GridMismatch(format!(
            "original has {} samples at {} Hz, reconstruction {} at {} Hz",
            orig.len(),
            orig.rate_hz(),
            recon.len(),
            recon.rate_hz()
        )));
    }
    Ok(())
}

/// `sum((orig - recon)^2) / sum(orig^2)`.
pub fn nmse_time(orig: &Trace, recon: &Trace) -> Result<f64> {
    check_pair(orig, recon)?;
    energy_nmse(orig.samples(), recon.samples())
}

fn energy_nmse(orig: &[f64], recon: &[f64]) -> Result<f64> {
    let energy: f64 = orig.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let err: f64 = orig.iter().zip(recon).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(err / energy)
}

/// Magnitudes of the one-sided DFT bins with `low <= f <= high`.
pub fn band_magnitudes(x: &Trace, band_hz: (f64, f64)) -> Result<Vec<f64>> {
    let (low, high) = band_hz;
    let nyquist = x.rate_hz() / 2.0;
    if !(low >= 0.0 && low <= high && high <= nyquist) {
        return Err(Error::InvalidParameter(format!(
            "band {low}..{high} Hz must satisfy 0 <= low <= high <= {nyquist}"
        )));
    }
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = x.rate_hz() / n as f64;
    let mags: Vec<f64> = (0..=n / 2)
        .filter(|&k| {
            let f = k as f64 * df;
            f >= low && f <= high
        })
        .map(|k| buf[k].norm())
        .collect();
    if mags.is_empty() {
        return Err(Error::EmptyBand);
    }
    Ok(mags)
}

/// Energy-normalized squared error between in-band DFT magnitudes.
pub fn nmse_freq(orig: &Trace, recon: &Trace, band_hz: (f64, f64)) -> Result<f64> {
    check_pair(orig, recon)?;
    let a = band_magnitudes(orig, band_hz)?;
    let b = band_magnitudes(recon, band_hz)?;
    energy_nmse(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    pub savings_pct: f64,
    pub active_time_pct: f64,
}

/// Sample-count savings of `p` relative to `r`. One sync period of ADC
/// activity is charged per sample.
pub fn savings(p: &SampleStream, r: &SampleStream) -> Result<Savings> {
    savings_from_counts(p.len(), r.len())
}

pub fn savings_from_counts(n_p: usize, n_r: usize) -> Result<Savings> {
    if n_r == 0 {
        return Err(Error::EmptyStream);
    }
    let active_time_pct = 100.0 * n_p as f64 / n_r as f64;
    Ok(Savings {
        savings_pct: 100.0 - active_time_pct,
        active_time_pct,
    })
}
