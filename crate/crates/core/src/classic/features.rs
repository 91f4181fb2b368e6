//! CUMUL and CNS19 feature rows.

use serde::{Deserialize, Serialize};

use crate::preprocess::{direction_filter, Keep};
use crate::trace::{Direction, Histogram, Trace};
use crate::{Error, Result};

pub const DEFAULT_CUMUL_POINTS: usize = 100;
pub const DEFAULT_MAX_BURSTS: usize = 60;
pub const DEFAULT_SIZE_BINS: usize = 32;

/// `[in_bytes, out_bytes, in_count, out_count]` followed by `n_points`
/// equidistant samples of the cumulative signed-size curve.
pub fn cumul_features(trace: &Trace, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::Config("CUMUL needs at least 2 sample points".into()));
    }
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut row = vec![0.0; 4];
    let mut knots = Vec::with_capacity(trace.len());
    let mut acc = 0.0;
    for p in trace {
        let size = f64::from(p.size);
        match p.direction {
            Direction::Incoming => {
                row[0] += size;
                row[2] += 1.0;
            }
            Direction::Outgoing => {
                row[1] += size;
                row[3] += 1.0;
            }
        }
        acc += p.signed_size() as f64;
        knots.push(acc);
    }
    let last = (knots.len() - 1) as f64;
    for j in 0..n_points {
        let pos = j as f64 * last / (n_points - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(knots.len() - 1);
        let frac = pos - lo as f64;
        row.push(knots[lo] + frac * (knots[hi] - knots[lo]));
    }
    Ok(row)
}

/// Signed sums of maximal same-direction runs.
pub fn bursts(trace: &Trace) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::new();
    let mut current: Option<Direction> = None;
    for p in trace {
        if current == Some(p.direction) {
            *out.last_mut().expect("open burst") += p.signed_size();
        } else {
            out.push(p.signed_size());
            current = Some(p.direction);
        }
    }
    out
}

/// First `max_bursts` signed burst sizes (zero padded), then
/// `[total_bytes, num_bursts, pct_incoming, num_packets]`, then a
/// `size_bins`-bin log histogram of packet sizes (counts).
pub fn cns19_features(trace: &Trace, max_bursts: usize, size_bins: usize) -> Result<Vec<f64>> {
    if max_bursts == 0 || size_bins == 0 {
        return Err(Error::Config(
            "max_bursts and size_bins must be >= 1".into(),
        ));
    }
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let bursts = bursts(trace);
    let mut row: Vec<f64> = bursts.iter().take(max_bursts).map(|&b| b as f64).collect();
    row.resize(max_bursts, 0.0);

    let n = trace.len() as f64;
    row.push(trace.total_bytes() as f64);
    row.push(bursts.len() as f64);
    row.push(trace.count(Direction::Incoming) as f64 / n);
    row.push(n);

    let edges = Histogram::log_edges(1.0, 2048.0, size_bins);
    let hist = Histogram::from_samples(edges, trace.iter().map(|p| f64::from(p.size)));
    row.extend(hist.bin_mass().iter().map(|m| (m * n).round()));
    Ok(row)
}

/// Which feature extractor to run, and on which directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Cumul {
        n_points: usize,
        keep: Keep,
    },
    Cns19 {
        max_bursts: usize,
        size_bins: usize,
        keep: Keep,
    },
}

impl FeatureSpec {
    pub fn cumul() -> Self {
        FeatureSpec::Cumul {
            n_points: DEFAULT_CUMUL_POINTS,
            keep: Keep::Both,
        }
    }

    pub fn cns19() -> Self {
        FeatureSpec::Cns19 {
            max_bursts: DEFAULT_MAX_BURSTS,
            size_bins: DEFAULT_SIZE_BINS,
            keep: Keep::Both,
        }
    }

    pub fn with_keep(self, keep: Keep) -> Self {
        match self {
            FeatureSpec::Cumul { n_points, .. } => FeatureSpec::Cumul { n_points, keep },
            FeatureSpec::Cns19 {
                max_bursts,
                size_bins,
                ..
            } => FeatureSpec::Cns19 {
                max_bursts,
                size_bins,
                keep,
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            FeatureSpec::Cumul { n_points, keep } => format!("cumul(n={n_points},{keep:?})"),
            FeatureSpec::Cns19 {
                max_bursts,
                size_bins,
                keep,
            } => format!("cns19(bursts={max_bursts},bins={size_bins},{keep:?})"),
        }
    }

    pub fn extract(&self, trace: &Trace) -> Result<Vec<f64>> {
        match *self {
            FeatureSpec::Cumul { n_points, keep } => {
                cumul_features(&direction_filter(trace, keep)?, n_points)
            }
            FeatureSpec::Cns19 {
                max_bursts,
                size_bins,
                keep,
            } => cns19_features(&direction_filter(trace, keep)?, max_bursts, size_bins),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_trace() -> Trace {
        Trace::from_tuples(&[(1, 20, 0.5), (1, 50, 2.1), (-1, 250, 5.3), (1, 100, 6.7)]).unwrap()
    }

    #[test]
    fn cumul_worked_example() {
        let row = cumul_features(&worked_trace(), 2).unwrap();
        assert_eq!(row, vec![250.0, 170.0, 1.0, 3.0, 20.0, -80.0]);
        // intermediate samples interpolate between knots (20, 70, -180, -80)
        let row = cumul_features(&worked_trace(), 3).unwrap();
        assert_eq!(&row[4..], &[20.0, -55.0, -80.0]);
    }

    #[test]
    fn cumul_single_packet_is_constant() {
        let t = Trace::from_tuples(&[(1, 42, 0.0)]).unwrap();
        assert_eq!(&cumul_features(&t, 2).unwrap()[4..], &[42.0, 42.0]);
        assert!(cumul_features(&t, 1).is_err());
    }

    #[test]
    fn cumul_is_linear_in_sizes() {
        let doubled =
            Trace::from_tuples(&[(1, 40, 0.5), (1, 100, 2.1), (-1, 500, 5.3), (1, 200, 6.7)])
                .unwrap();
        let a = cumul_features(&worked_trace(), 7).unwrap();
        let b = cumul_features(&doubled, 7).unwrap();
        for (x, y) in a[4..].iter().zip(&b[4..]) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn cns19_worked_example() {
        let row = cns19_features(&worked_trace(), 4, 8).unwrap();
        assert_eq!(&row[..4], &[70.0, -250.0, 100.0, 0.0]);
        assert_eq!(&row[4..8], &[420.0, 3.0, 0.25, 4.0]);
        assert_eq!(row[8..].iter().sum::<f64>(), 4.0);
        let row = cns19_features(&worked_trace(), 2, 8).unwrap();
        assert_eq!(&row[..2], &[70.0, -250.0]);
        assert_eq!(row[3], 3.0);
    }

    #[test]
    fn cns19_all_outgoing() {
        let t = Trace::from_tuples(&[(1, 10, 0.0), (1, 20, 1.0)]).unwrap();
        let row = cns19_features(&t, 3, 4).unwrap();
        assert_eq!(&row[..3], &[30.0, 0.0, 0.0]);
        assert_eq!(row[4], 1.0);
        assert_eq!(row[5], 0.0);
    }

    #[test]
    fn incoming_only_spec() {
        let spec = FeatureSpec::cns19().with_keep(Keep::Incoming);
        let row = spec.extract(&worked_trace()).unwrap();
        assert_eq!(row[0], -250.0);
        let out_only = Trace::from_tuples(&[(1, 10, 0.0)]).unwrap();
        assert!(spec.extract(&out_only).is_err());
    }
}
