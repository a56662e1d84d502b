//! The probabilistic neuron: a logistic activation driven by the AFE output,
//! realized with either an i.i.d. digital entropy source or a stochastic MTJ
//! random-telegraph source.

mod lfsr;
mod telegraph;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lfsr::Lfsr16;
pub use telegraph::{
    dwell_times, estimate_retention, interior_run_lengths, TelegraphState, MAX_STEP_FRACTION,
    P_CLAMP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    /// Fresh LFSR-driven Bernoulli decision at every sync tick.
    DigitalIid,
    /// Random-telegraph state evolving on the high-rate grid.
    SmtjTelegraph,
}

impl std::str::FromStr for EntropySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "digital" | "digital_iid" => Ok(Self::DigitalIid),
            "smtj" | "smtj_telegraph" => Ok(Self::SmtjTelegraph),
            other => Err(Error::Config(format!(
                "unknown entropy source `{other}` (expected digital or smtj)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PNeuronConfig {
    /// Activation steepness, 1/V.
    pub beta: f64,
    /// Comparator reference, V. Sets the zero-drive rate.
    pub v_ref_v: f64,
    pub source: EntropySource,
    /// Mean sMTJ retention time at p = 0.5, seconds.
    pub tau_s: f64,
    pub seed: u64,
}

impl Default for PNeuronConfig {
    fn default() -> Self {
        Self {
            beta: 10.0,
            // X = 0.02
            v_ref_v: 49f64.ln() / 10.0,
            source: EntropySource::SmtjTelegraph,
            tau_s: 500e-6,
            seed: 1,
        }
    }
}

impl PNeuronConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.tau_s > 0.0 && self.tau_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau_s must be positive, got {}", self.tau_s)));
        }
        if !self.v_ref_v.is_finite() {
            return Err(Error::InvalidParameter("v_ref_v must be finite".into()));
        }
        let x = self.min_rate();
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "minimum rate sigmoid(-beta*v_ref) = {x} must lie strictly inside (0, 1)"
            )));
        }
        Ok(())
    }

    /// The no-event activation probability X.
    pub fn min_rate(&self) -> f64 {
        logistic(-self.beta * self.v_ref_v)
    }

    /// The reference voltage that yields minimum rate `x` at steepness `beta`.
    pub fn v_ref_for_min_rate(beta: f64, x: f64) -> f64 {
        (1.0 / x - 1.0).ln() / beta
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(beta * (v_in - v_ref))`.
pub fn activation_probability(v_in_v: f64, cfg: &PNeuronConfig) -> f64 {
    logistic(cfg.beta * (v_in_v - cfg.v_ref_v))
}

/// One independent Bernoulli(p) decision from a 16-bit LFSR uniform.
pub fn decide_iid(p: f64, rng: &mut Lfsr16) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(rng.next_uniform() < p)
}
