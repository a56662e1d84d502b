//! Two-state random-telegraph model of a stochastic MTJ.
//!
//! With activation probability `p` and retention time `tau`, the mean dwell
//! in state 1 is `2·tau·p` and in state 0 is `2·tau·(1 - p)`. The stationary
//! occupancy of state 1 is therefore `p`, and at `p = 0.5` both dwells equal
//! `tau`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Saturation clamp applied to `p` before computing dwell times.
pub const P_CLAMP: f64 = 1e-6;

/// Largest admissible `dt / min_dwell` for a single first-order step.
pub const MAX_STEP_FRACTION: f64 = 0.1;

/// Mean dwell times `(tau_1, tau_0)` for activation probability `p`.
pub fn dwell_times(p: f64, tau_s: f64) -> (f64, f64) {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    (2.0 * tau_s * p, 2.0 * tau_s * (1.0 - p))
}

#[derive(Debug, Clone)]
pub struct TelegraphState {
    state: bool,
    time_in_state_s: f64,
    rng: ChaCha8Rng,
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

fn check_tau(tau_s: f64) -> Result<()> {
    if tau_s > 0.0 && tau_s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tau_s must be positive, got {tau_s}")))
    }
}

impl TelegraphState {
    pub fn new(state: bool, seed: u64) -> Self {
        Self {
            state,
            time_in_state_s: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Starts in state 1 with probability `p`, i.e. from the stationary law.
    pub fn stationary(p: f64, seed: u64) -> Result<Self> {
        check_p(p)?;
        let mut ts = Self::new(false, seed);
        ts.state = ts.rng.gen::<f64>() < p;
        Ok(ts)
    }

    pub fn state(&self) -> bool {
        self.state
    }

    pub fn time_in_state_s(&self) -> f64 {
        self.time_in_state_s
    }

    fn flip(&mut self) {
        self.state = !self.state;
        self.time_in_state_s = 0.0;
    }

    /// One first-order step: leaves the current state with probability
    /// `dt / tau_state`. Requires `dt <= min(tau_1, tau_0) / 10`.
    pub fn step(&mut self, p: f64, dt_s: f64, tau_s: f64) -> Result<bool> {
        check_p(p)?;
        check_tau(tau_s)?;
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt_s must be positive, got {dt_s}")));
        }
        let (tau_1, tau_0) = dwell_times(p, tau_s);
        let min_dwell = tau_1.min(tau_0);
        if dt_s > MAX_STEP_FRACTION * min_dwell {
            return Err(Error::TelegraphStepTooCoarse {
                dt_s,
                min_dwell_s: min_dwell,
            });
        }
        let dwell = if self.state { tau_1 } else { tau_0 };
        if self.rng.gen::<f64>() < dt_s / dwell {
            self.flip();
        } else {
            self.time_in_state_s += dt_s;
        }
        Ok(self.state)
    }

    /// Advances by `dt_s`, splitting it into the fewest sub-steps that each
    /// satisfy the [`step`](Self::step) bound. Sub-steps without a flip are
    /// skipped in bulk by drawing the geometric waiting time, so the cost is
    /// proportional to the number of flips rather than sub-steps.
    pub fn advance(&mut self, p: f64, dt_s: f64, tau_s: f64) -> Result<bool> {
        check_p(p)?;
        check_tau(tau_s)?;
        if !(dt_s > 0.0 && dt_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt_s must be positive, got {dt_s}")));
        }
        let (tau_1, tau_0) = dwell_times(p, tau_s);
        let max_sub = MAX_STEP_FRACTION * tau_1.min(tau_0);
        if dt_s <= max_sub {
            return self.step(p, dt_s, tau_s);
        }
        let n = (dt_s / max_sub).ceil() as u64;
        let sub = dt_s / n as f64;
        let mut remaining = n;
        while remaining > 0 {
            let q = sub / if self.state { tau_1 } else { tau_0 };
            // sub-steps up to and including the first flip, K >= 1
            let u: f64 = 1.0 - self.rng.gen::<f64>();
            let k = (u.ln() / (-q).ln_1p()).ceil().max(1.0);
            if k > remaining as f64 {
                self.time_in_state_s += remaining as f64 * sub;
                break;
            }
            remaining -= k as u64;
            self.flip();
        }
        Ok(self.state)
    }
}

/// Mean run length of `bits` times `dt_s`. Runs touching either end are
/// counted as they appear.
pub fn estimate_retention(bits: &[bool], dt_s: f64) -> Result<f64> {
    if !(dt_s > 0.0 && dt_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt_s must be positive, got {dt_s}")));
    }
    let transitions = bits.windows(2).filter(|w| w[0] != w[1]).count();
    if transitions == 0 {
        return Err(Error::NoTransitions);
    }
    let runs = transitions + 1;
    Ok(bits.len() as f64 / runs as f64 * dt_s)
}

/// Lengths (in steps) of all complete runs, excluding the first and last.
pub fn interior_run_lengths(bits: &[bool]) -> Vec<(bool, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..bits.len() {
        if bits[i] != bits[i - 1] {
            runs.push((bits[i - 1], i - start));
            start = i;
        }
    }
    if !runs.is_empty() {
        runs.remove(0);
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 500e-6;
    const DT: f64 = 10e-6;

    fn simulate(p: f64, tau: f64, dt: f64, steps: usize, seed: u64) -> Vec<bool> {
        let mut ts = TelegraphState::stationary(p, seed).unwrap();
        (0..steps).map(|_| ts.step(p, dt, tau).unwrap()).collect()
    }

    #[test]
    fn coarse_step_is_an_error() {
        let mut ts = TelegraphState::new(false, 1);
        // p = 0.5 => dwell 500 us, bound 50 us
        assert!(ts.step(0.5, 50e-6, TAU).is_ok());
        assert!(matches!(
            ts.step(0.5, 60e-6, TAU),
            Err(Error::TelegraphStepTooCoarse { .. })
        ));
        assert!(matches!(ts.step(0.05, DT, TAU), Err(Error::TelegraphStepTooCoarse { .. })));
        assert!(matches!(ts.step(1.5, DT, TAU), Err(Error::ProbabilityOutOfRange(_))));
    }

    #[test]
    fn retention_examples() {
        let alt: Vec<bool> = (0..100).map(|i| i % 2 == 1).collect();
        assert!((estimate_retention(&alt, 1e-6).unwrap() - 1e-6).abs() < 1e-18);
        let b = [false, false, false, true, true, true];
        assert!((estimate_retention(&b, 1e-6).unwrap() - 3e-6).abs() < 1e-18);
        assert!(matches!(estimate_retention(&[true; 10], 1e-6), Err(Error::NoTransitions)));
    }

    #[test]
    fn mean_dwell_at_half() {
        // ~1.2e5 dwells of mean 50 steps
        let bits = simulate(0.5, TAU, DT, 6_000_000, 11);
        let runs = interior_run_lengths(&bits);
        assert!(runs.len() >= 100_000, "{}", runs.len());
        for state in [false, true] {
            let r: Vec<usize> = runs.iter().filter(|r| r.0 == state).map(|r| r.1).collect();
            let mean = r.iter().sum::<usize>() as f64 / r.len() as f64 * DT;
            assert!((mean - TAU).abs() / TAU < 0.05, "state {state}: {mean}");
        }
        let est = estimate_retention(&bits, DT).unwrap();
        assert!((est - TAU).abs() / TAU < 0.05, "{est}");
    }

    #[test]
    fn dwell_distribution_is_geometric() {
        let bits = simulate(0.5, TAU, DT, 6_000_000, 12);
        let mut runs: Vec<usize> = interior_run_lengths(&bits).into_iter().map(|r| r.1).collect();
        runs.sort_unstable();
        let q = DT / TAU;
        let n = runs.len() as f64;
        let mut ks: f64 = 0.0;
        let mut i = 0;
        let max = *runs.last().unwrap();
        for k in 1..=max {
            while i < runs.len() && runs[i] <= k {
                i += 1;
            }
            let empirical = i as f64 / n;
            let model = 1.0 - (1.0 - q).powi(k as i32);
            ks = ks.max((empirical - model).abs());
        }
        assert!(ks < 0.02, "KS {ks}");
    }

    #[test]
    fn stationary_fraction_at_point_eight() {
        let bits = simulate(0.8, TAU, DT, 2_000_000, 13);
        let frac = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
        assert!((frac - 0.8).abs() < 0.01, "{frac}");
    }

    #[test]
    fn advance_matches_stationary_law_when_saturated() {
        for &(p, seed) in &[(0.03, 1u64), (0.97, 2), (1e-9, 3)] {
            let mut ts = TelegraphState::stationary(p, seed).unwrap();
            let steps = 400_000;
            let ones = (0..steps).filter(|_| ts.advance(p, DT, TAU).unwrap()).count();
            let frac = ones as f64 / steps as f64;
            let pc = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
            assert!((frac - pc).abs() < 0.01, "p {p}: {frac}");
        }
    }

    #[test]
    fn advance_correlation_matches_substep_chain() {
        // p = 0.05 at dt = 20 us needs four 5 us sub-steps per call
        let (p, dt) = (0.05, 20e-6);
        let mut ts = TelegraphState::stationary(p, 4).unwrap();
        let x: Vec<f64> = (0..1_000_000)
            .map(|_| f64::from(u8::from(ts.advance(p, dt, TAU).unwrap())))
            .collect();
        let rho = crate::stats::autocorrelation(&x, 1);
        let (tau_1, tau_0) = dwell_times(p, TAU);
        let sub = dt / 4.0;
        let expected = (1.0 - sub / tau_1 - sub / tau_0).powi(4);
        assert!((rho - expected).abs() < 0.02, "{rho} vs {expected}");
    }

    #[test]
    fn seeded_runs_identical() {
        assert_eq!(simulate(0.3, TAU, DT, 10_000, 5), simulate(0.3, TAU, DT, 10_000, 5));
    }
}
