//! Per-packet size noise for the d*-style obfuscation.

use serde::{Deserialize, Serialize};

use crate::rng::{open_unit, StreamRng};

/// Default sensitivity Δ in bytes.
pub const DEFAULT_SENSITIVITY: f64 = 500.0;
/// Default horizon T of the recursive-reference mechanism.
pub const DEFAULT_HORIZON: usize = 1024;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseMechanism {
    /// Independent Laplace(Δ/ε) noise on every emission.
    #[default]
    LaplacePerPacket,
    /// Step `t` (1-based) reuses the noise of its reference step
    /// `t - lowbit(t)` and adds one fresh Laplace(Δ/ε · ⌈log2 T⌉) draw, so it
    /// carries `popcount(t) <= ⌈log2(t+1)⌉` draws in total.
    RecursiveReference { horizon: usize },
    /// Replays a fixed sequence, then zeros; for deterministic replays.
    Scripted { values: Vec<i64> },
}

/// Inverse CDF of Laplace(0, scale) at `u ∈ (0, 1)`.
pub fn laplace_inverse_cdf(scale: f64, u: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// One rounded Laplace(Δ/ε) draw.
pub fn dstar_noise(sensitivity: f64, epsilon: f64, rng: &mut StreamRng) -> i64 {
    laplace_inverse_cdf(sensitivity / epsilon, open_unit(rng)).round() as i64
}

/// Stateful noise source for one direction of one trace.
pub struct NoiseStream {
    mechanism: NoiseMechanism,
    scale: f64,
    rng: StreamRng,
    history: Vec<f64>,
}

impl NoiseStream {
    pub fn new(mechanism: NoiseMechanism, sensitivity: f64, epsilon: f64, rng: StreamRng) -> Self {
        NoiseStream {
            mechanism,
            scale: sensitivity / epsilon,
            rng,
            history: Vec::new(),
        }
    }

    /// Noise for emission number `step` (0-based); steps must be requested in order.
    pub fn sample(&mut self, step: usize) -> i64 {
        match &self.mechanism {
            NoiseMechanism::LaplacePerPacket => {
                laplace_inverse_cdf(self.scale, open_unit(&mut self.rng)).round() as i64
            }
            NoiseMechanism::Scripted { values } => values.get(step).copied().unwrap_or(0),
            NoiseMechanism::RecursiveReference { horizon } => {
                debug_assert_eq!(step, self.history.len());
                let levels = (*horizon.max(&2) as f64).log2().ceil();
                let t = step + 1;
                let reference = t - (t & t.wrapping_neg());
                let base = if reference == 0 {
                    0.0
                } else {
                    self.history[reference - 1]
                };
                let value =
                    base + laplace_inverse_cdf(self.scale * levels, open_unit(&mut self.rng));
                self.history.push(value);
                value.round() as i64
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn inverse_cdf_closed_form() {
        assert_eq!(laplace_inverse_cdf(2.0, 0.5), 0.0);
        let v = laplace_inverse_cdf(2.0, 0.9);
        assert!((v - 2.0 * 5f64.ln()).abs() < 1e-12);
        assert_eq!(v.round() as i64, 3);
        assert!((laplace_inverse_cdf(2.0, 0.1) + 2.0 * 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn infinite_epsilon_is_silent() {
        let mut s = NoiseStream::new(
            NoiseMechanism::LaplacePerPacket,
            500.0,
            f64::INFINITY,
            rng::stream(1, &[]),
        );
        assert!((0..1000).all(|i| s.sample(i) == 0));
    }

    #[test]
    fn scripted_then_zero() {
        let mut s = NoiseStream::new(
            NoiseMechanism::Scripted {
                values: vec![-30, 40],
            },
            1.0,
            1.0,
            rng::stream(1, &[]),
        );
        assert_eq!(
            (0..3).map(|i| s.sample(i)).collect::<Vec<_>>(),
            vec![-30, 40, 0]
        );
    }

    #[test]
    fn recursive_reference_variance_tracks_popcount() {
        // step t carries popcount(t) independent draws of scale b·L
        let (b, horizon) = (1.0, 16);
        let levels = 4.0;
        let trials = 20_000;
        let mut sq = [0.0f64; 8];
        for trial in 0..trials {
            let mut s = NoiseStream::new(
                NoiseMechanism::RecursiveReference { horizon },
                b,
                1.0,
                rng::stream(trial, &[]),
            );
            for (step, acc) in sq.iter_mut().enumerate() {
                let v = s.sample(step) as f64;
                *acc += v * v / trials as f64;
            }
        }
        for (step, &var) in sq.iter().enumerate() {
            let draws = (step + 1).count_ones() as f64;
            let expected = draws * 2.0 * (b * levels) * (b * levels);
            assert!(
                (var / expected - 1.0).abs() < 0.1,
                "step {step}: {var} vs {expected}"
            );
            assert!(draws <= ((step + 2) as f64).log2().ceil());
        }
    }
}
