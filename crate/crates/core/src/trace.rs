//! Packet/trace data model, labelled datasets and summary histograms.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest number of distinct speaking voices a dataset may carry.
pub const MAX_VOICES: usize = 5;

/// Default split between burst-mode and gap-mode interarrivals.
pub const DEFAULT_BURST_GAP_THRESHOLD_MS: f64 = 50.0;

const SIZE_HIST_RANGE: (f64, f64) = (1.0, 2048.0);
const SIZE_HIST_BINS: usize = 32;
const INTERARRIVAL_HIST_RANGE_MS: (f64, f64) = (0.1, 10_000.0);
const INTERARRIVAL_HIST_BINS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Toward the voice service (+1).
    Outgoing,
    /// Toward the speaker (−1).
    Incoming,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Outgoing, Direction::Incoming];

    pub fn sign(self) -> i8 {
        match self {
            Direction::Outgoing => 1,
            Direction::Incoming => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            1 => Some(Direction::Outgoing),
            -1 => Some(Direction::Incoming),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Direction::Outgoing => 0,
            Direction::Incoming => 1,
        }
    }
}

/// Time since trace start, stored as integer tenths of a millisecond.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_tenths(tenths: u64) -> Self {
        Timestamp(tenths)
    }

    /// Rounds to the nearest tenth of a millisecond; negative inputs clamp to zero.
    pub fn from_millis(ms: f64) -> Self {
        if ms.is_nan() || ms <= 0.0 {
            Timestamp(0)
        } else {
            Timestamp((ms * 10.0).round() as u64)
        }
    }

    pub fn tenths(self) -> u64 {
        self.0
    }

    pub fn millis(self) -> f64 {
        self.0 as f64 / 10.0
    }

    pub fn saturating_sub(self, other: Timestamp) -> Timestamp {
        Timestamp(self.0.saturating_sub(other.0))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} ms", self.0 / 10, self.0 % 10)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub direction: Direction,
    pub size: u32,
    pub timestamp: Timestamp,
}

impl Packet {
    pub fn new(direction: Direction, size: u32, timestamp: Timestamp) -> Self {
        Packet {
            direction,
            size,
            timestamp,
        }
    }

    /// `direction × size`.
    pub fn signed_size(&self) -> i64 {
        i64::from(self.direction.sign()) * i64::from(self.size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Empty,
    ZeroSize,
    TimestampDecreases {
        previous: Timestamp,
        current: Timestamp,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Offending packet, `None` for whole-trace violations.
    pub index: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.index {
            write!(f, "packet {i}: ")?;
        }
        match &self.kind {
            ViolationKind::Empty => write!(f, "trace has no packets"),
            ViolationKind::ZeroSize => write!(f, "size must be at least 1 byte"),
            ViolationKind::TimestampDecreases { previous, current } => {
                write!(f, "timestamp decreases ({previous} -> {current})")
            }
        }
    }
}

/// Checks every packet and ordering invariant, reporting all violations.
pub fn validate_trace(packets: &[Packet]) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if packets.is_empty() {
        violations.push(Violation {
            index: None,
            kind: ViolationKind::Empty,
        });
    }
    for (i, p) in packets.iter().enumerate() {
        if p.size == 0 {
            violations.push(Violation {
                index: Some(i),
                kind: ViolationKind::ZeroSize,
            });
        }
        if i > 0 && p.timestamp < packets[i - 1].timestamp {
            violations.push(Violation {
                index: Some(i),
                kind: ViolationKind::TimestampDecreases {
                    previous: packets[i - 1].timestamp,
                    current: p.timestamp,
                },
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// A non-empty, time-ordered packet sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trace {
    packets: Vec<Packet>,
}

impl Trace {
    pub fn new(packets: Vec<Packet>) -> Result<Self> {
        validate_trace(&packets).map_err(|v| {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Error::InvalidTrace(msgs.join("; "))
        })?;
        Ok(Trace { packets })
    }

    /// Builds a trace from `(sign, size, milliseconds)` tuples.
    pub fn from_tuples(tuples: &[(i8, u32, f64)]) -> Result<Self> {
        let packets = tuples
            .iter()
            .map(|&(sign, size, ms)| {
                let direction = Direction::from_sign(sign.into()).ok_or_else(|| {
                    Error::InvalidTrace(format!("direction must be +1 or -1, got {sign}"))
                })?;
                Ok(Packet::new(direction, size, Timestamp::from_millis(ms)))
            })
            .collect::<Result<Vec<_>>>()?;
        Trace::new(packets)
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn into_packets(self) -> Vec<Packet> {
        self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Packet> {
        self.packets.iter()
    }

    pub fn first_timestamp(&self) -> Timestamp {
        self.packets[0].timestamp
    }

    pub fn last_timestamp(&self) -> Timestamp {
        self.packets[self.packets.len() - 1].timestamp
    }

    pub fn duration(&self) -> Timestamp {
        self.last_timestamp().saturating_sub(self.first_timestamp())
    }

    pub fn total_bytes(&self) -> u64 {
        self.packets.iter().map(|p| u64::from(p.size)).sum()
    }

    pub fn count(&self, direction: Direction) -> usize {
        self.packets
            .iter()
            .filter(|p| p.direction == direction)
            .count()
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a Packet;
    type IntoIter = std::slice::Iter<'a, Packet>;

    fn into_iter(self) -> Self::IntoIter {
        self.packets.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandCategory {
    /// The response is (almost) always the same.
    Single,
    /// The response changes with time of asking.
    TimeSensitive,
    /// The response is drawn from a fixed finite set.
    Multiple,
}

impl CommandCategory {
    pub const ALL: [CommandCategory; 3] = [
        CommandCategory::Single,
        CommandCategory::TimeSensitive,
        CommandCategory::Multiple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandCategory::Single => "single",
            CommandCategory::TimeSensitive => "time_sensitive",
            CommandCategory::Multiple => "multiple",
        }
    }
}

impl fmt::Display for CommandCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTrace {
    pub trace: Trace,
    pub command_id: usize,
    pub category: CommandCategory,
    pub voice_id: u8,
    pub monitored: bool,
}

impl LabeledTrace {
    pub fn new(
        trace: Trace,
        command_id: usize,
        category: CommandCategory,
        voice_id: u8,
        monitored: bool,
    ) -> Result<Self> {
        if usize::from(voice_id) >= MAX_VOICES {
            return Err(Error::InvalidTrace(format!(
                "voice id {voice_id} outside 0..{MAX_VOICES}"
            )));
        }
        Ok(LabeledTrace {
            trace,
            command_id,
            category,
            voice_id,
            monitored,
        })
    }
}

pub type Manifest = BTreeMap<String, serde_json::Value>;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    traces: Vec<LabeledTrace>,
    num_classes: usize,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn new(traces: Vec<LabeledTrace>, num_classes: usize, manifest: Manifest) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(bad) = traces.iter().find(|t| t.command_id >= num_classes) {
            return Err(Error::InvalidTrace(format!(
                "command id {} not below num_classes {num_classes}",
                bad.command_id
            )));
        }
        Ok(Dataset {
            traces,
            num_classes,
            manifest,
        })
    }

    pub fn traces(&self) -> &[LabeledTrace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> Vec<usize> {
        self.traces.iter().map(|t| t.command_id).collect()
    }

    pub fn categories(&self) -> Vec<CommandCategory> {
        self.traces.iter().map(|t| t.category).collect()
    }

    /// Trace count for every class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for t in &self.traces {
            counts[t.command_id] += 1;
        }
        counts
    }

    /// Sub-dataset made of the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let traces = indices.iter().map(|&i| self.traces[i].clone()).collect();
        Dataset::new(traces, self.num_classes, self.manifest.clone())
    }

    /// Replaces every trace while keeping labels, e.g. after obfuscation.
    pub fn map_traces<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(usize, &LabeledTrace) -> Result<Trace>,
    {
        let traces = self
            .traces
            .iter()
            .enumerate()
            .map(|(i, lt)| {
                Ok(LabeledTrace {
                    trace: f(i, lt)?,
                    ..lt.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(traces, self.num_classes, self.manifest.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bin_edges: Vec<f64>,
    bin_mass: Vec<f64>,
}

impl Histogram {
    /// Validates edges/masses: edges strictly increasing, masses non-negative
    /// and summing to 1 (or all zero for an empty histogram).
    pub fn new(bin_edges: Vec<f64>, bin_mass: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 || bin_mass.len() + 1 != bin_edges.len() {
            return Err(Error::Config(format!(
                "histogram needs |mass| = |edges| - 1 >= 1, got {} edges and {} masses",
                bin_edges.len(),
                bin_mass.len()
            )));
        }
        if bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "histogram edges must strictly increase".into(),
            ));
        }
        if bin_mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config(
                "histogram masses must be finite and >= 0".into(),
            ));
        }
        let total: f64 = bin_mass.iter().sum();
        if total != 0.0 && (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("histogram mass sums to {total}")));
        }
        Ok(Histogram {
            bin_edges,
            bin_mass,
        })
    }

    /// `bins` log-spaced bins spanning `[lo, hi]`.
    pub fn log_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
        let ratio = (hi / lo).ln();
        (0..=bins)
            .map(|i| {
                if i == bins {
                    hi
                } else {
                    lo * (ratio * i as f64 / bins as f64).exp()
                }
            })
            .collect()
    }

    /// Normalized histogram of `counts` over `edges`; all-zero counts give
    /// an empty histogram.
    fn from_counts(bin_edges: Vec<f64>, counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let bin_mass = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect();
        Histogram {
            bin_edges,
            bin_mass,
        }
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(bin_edges: Vec<f64>, samples: I) -> Self {
        let mut counts = vec![0u64; bin_edges.len() - 1];
        for s in samples {
            counts[bin_index(&bin_edges, s)] += 1;
        }
        Histogram::from_counts(bin_edges, &counts)
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn bin_mass(&self) -> &[f64] {
        &self.bin_mass
    }

    pub fn num_bins(&self) -> usize {
        self.bin_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_mass.iter().all(|&m| m == 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.bin_mass.iter().sum()
    }

    /// Bin holding `value`; out-of-range values fall into the end bins.
    pub fn bin_of(&self, value: f64) -> usize {
        bin_index(&self.bin_edges, value)
    }

    pub fn mass_at(&self, value: f64) -> f64 {
        self.bin_mass[self.bin_of(value)]
    }

    /// Inverse-CDF draw for `u ∈ [0, 1]`, interpolating linearly inside the
    /// selected bin.
    pub fn sample(&self, u: f64) -> Result<f64> {
        let last_nonzero = self
            .bin_mass
            .iter()
            .rposition(|&m| m > 0.0)
            .ok_or(Error::EmptyHistogram("cannot sample"))?;
        let u = u.clamp(0.0, 1.0);
        let mut cum = 0.0;
        for (i, &m) in self.bin_mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if u < cum + m || i == last_nonzero {
                let frac = ((u - cum) / m).clamp(0.0, 1.0);
                let (lo, hi) = (self.bin_edges[i], self.bin_edges[i + 1]);
                return Ok(lo + frac * (hi - lo));
            }
            cum += m;
        }
        unreachable!("last non-zero bin always returns")
    }
}

fn bin_index(edges: &[f64], value: f64) -> usize {
    let bins = edges.len() - 1;
    // first edge strictly greater than value, minus one
    let upper = edges.partition_point(|&e| e <= value);
    upper.saturating_sub(1).min(bins - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub packet_size_hist_in: Histogram,
    pub packet_size_hist_out: Histogram,
    pub interarrival_hist_burst: Histogram,
    pub interarrival_hist_gap: Histogram,
    pub max_abs_size: u32,
    pub burst_gap_threshold_ms: f64,
}

impl SummaryStats {
    pub fn size_hist(&self, direction: Direction) -> &Histogram {
        match direction {
            Direction::Outgoing => &self.packet_size_hist_out,
            Direction::Incoming => &self.packet_size_hist_in,
        }
    }

    /// Statistics over an arbitrary collection of traces.
    pub fn from_traces<'a, I>(traces: I, burst_gap_threshold_ms: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Trace>,
    {
        if !(burst_gap_threshold_ms > 0.0) {
            return Err(Error::Config(format!(
                "burst/gap threshold must be positive, got {burst_gap_threshold_ms}"
            )));
        }
        let size_edges = Histogram::log_edges(SIZE_HIST_RANGE.0, SIZE_HIST_RANGE.1, SIZE_HIST_BINS);
        let gap_edges = Histogram::log_edges(
            INTERARRIVAL_HIST_RANGE_MS.0,
            INTERARRIVAL_HIST_RANGE_MS.1,
            INTERARRIVAL_HIST_BINS,
        );
        let mut size_in = vec![0u64; SIZE_HIST_BINS];
        let mut size_out = vec![0u64; SIZE_HIST_BINS];
        let mut burst = vec![0u64; INTERARRIVAL_HIST_BINS];
        let mut gap = vec![0u64; INTERARRIVAL_HIST_BINS];
        let mut max_abs_size = 0;
        let mut seen = false;

        for trace in traces {
            seen = true;
            for p in trace {
                let bin = bin_index(&size_edges, f64::from(p.size));
                match p.direction {
                    Direction::Incoming => size_in[bin] += 1,
                    Direction::Outgoing => size_out[bin] += 1,
                }
                max_abs_size = max_abs_size.max(p.size);
            }
            for w in trace.packets().windows(2) {
                let dt = w[1].timestamp.saturating_sub(w[0].timestamp).millis();
                let bin = bin_index(&gap_edges, dt);
                if dt < burst_gap_threshold_ms {
                    burst[bin] += 1;
                } else {
                    gap[bin] += 1;
                }
            }
        }
        if !seen {
            return Err(Error::EmptyDataset);
        }
        Ok(SummaryStats {
            packet_size_hist_in: Histogram::from_counts(size_edges.clone(), &size_in),
            packet_size_hist_out: Histogram::from_counts(size_edges, &size_out),
            interarrival_hist_burst: Histogram::from_counts(gap_edges.clone(), &burst),
            interarrival_hist_gap: Histogram::from_counts(gap_edges, &gap),
            max_abs_size,
            burst_gap_threshold_ms,
        })
    }
}

/// Size and interarrival distributions over a whole dataset.
pub fn dataset_stats(dataset: &Dataset, burst_gap_threshold_ms: f64) -> Result<SummaryStats> {
    SummaryStats::from_traces(
        dataset.traces().iter().map(|t| &t.trace),
        burst_gap_threshold_ms,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_trace() -> Trace {
        Trace::from_tuples(&[(1, 20, 0.5), (1, 50, 2.1), (-1, 250, 5.3), (1, 100, 6.7)]).unwrap()
    }

    fn labeled(trace: Trace, class: usize) -> LabeledTrace {
        LabeledTrace::new(trace, class, CommandCategory::Single, 0, true).unwrap()
    }

    #[test]
    fn worked_trace_is_valid() {
        assert!(validate_trace(worked_trace().packets()).is_ok());
        assert!(Trace::from_tuples(&[(1, 20, 0.0)]).is_ok());
    }

    #[test]
    fn decreasing_timestamp_reported_with_index() {
        let packets = vec![
            Packet::new(Direction::Outgoing, 20, Timestamp::from_millis(5.0)),
            Packet::new(Direction::Incoming, 30, Timestamp::from_millis(2.0)),
        ];
        let violations = validate_trace(&packets).unwrap_err();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].index, Some(1));
        assert!(matches!(
            violations[0].kind,
            ViolationKind::TimestampDecreases { .. }
        ));
    }

    #[test]
    fn all_violations_listed() {
        let packets = vec![
            Packet::new(Direction::Outgoing, 0, Timestamp::from_tenths(10)),
            Packet::new(Direction::Incoming, 30, Timestamp::from_tenths(5)),
            Packet::new(Direction::Incoming, 0, Timestamp::from_tenths(5)),
        ];
        let v = validate_trace(&packets).unwrap_err();
        let idx: Vec<_> = v.iter().map(|v| v.index).collect();
        assert_eq!(idx, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(
            validate_trace(&[]).unwrap_err()[0].kind,
            ViolationKind::Empty
        );
    }

    #[test]
    fn timestamps_round_to_tenths() {
        assert_eq!(Timestamp::from_millis(5.3).tenths(), 53);
        assert_eq!(Timestamp::from_millis(0.04).tenths(), 0);
        assert_eq!(Timestamp::from_millis(-3.0), Timestamp::ZERO);
    }

    #[test]
    fn dataset_rejects_out_of_range_labels() {
        let err = Dataset::new(vec![labeled(worked_trace(), 3)], 3, Manifest::new());
        assert!(err.is_err());
        assert!(matches!(
            Dataset::new(vec![], 1, Manifest::new()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn stats_split_burst_and_gap() {
        let t = Trace::from_tuples(&[(1, 20, 0.0), (1, 20, 1.0), (1, 20, 10.0)]).unwrap();
        let d = Dataset::new(vec![labeled(t, 0)], 1, Manifest::new()).unwrap();
        let s = dataset_stats(&d, 5.0).unwrap();
        assert_eq!(s.interarrival_hist_burst.mass_at(1.0), 1.0);
        assert_eq!(s.interarrival_hist_gap.mass_at(9.0), 1.0);
        assert_eq!(s.max_abs_size, 20);
        assert!(s.packet_size_hist_in.is_empty());
        assert_eq!(s.packet_size_hist_out.mass_at(20.0), 1.0);
    }

    #[test]
    fn stats_single_packet_has_empty_interarrivals() {
        let t = Trace::from_tuples(&[(-1, 300, 0.0)]).unwrap();
        let d = Dataset::new(vec![labeled(t, 0)], 1, Manifest::new()).unwrap();
        let s = dataset_stats(&d, DEFAULT_BURST_GAP_THRESHOLD_MS).unwrap();
        assert!(s.interarrival_hist_burst.is_empty());
        assert!(s.interarrival_hist_gap.is_empty());
        assert_eq!(s.packet_size_hist_in.mass_at(300.0), 1.0);
        assert!(s.packet_size_hist_out.is_empty());
    }

    #[test]
    fn stats_outgoing_only_sizes() {
        let a = Trace::from_tuples(&[(1, 100, 0.0)]).unwrap();
        let b = Trace::from_tuples(&[(1, 200, 0.0)]).unwrap();
        let d = Dataset::new(vec![labeled(a, 0), labeled(b, 0)], 1, Manifest::new()).unwrap();
        let s = dataset_stats(&d, 50.0).unwrap();
        assert!(s.packet_size_hist_in.is_empty());
        assert_eq!(s.packet_size_hist_out.mass_at(100.0), 0.5);
        assert_eq!(s.packet_size_hist_out.mass_at(200.0), 0.5);
        assert_ne!(
            s.packet_size_hist_out.bin_of(100.0),
            s.packet_size_hist_out.bin_of(200.0)
        );
    }

    #[test]
    fn stats_reject_bad_threshold() {
        let d = Dataset::new(vec![labeled(worked_trace(), 0)], 1, Manifest::new()).unwrap();
        assert!(dataset_stats(&d, 0.0).is_err());
    }

    #[test]
    fn histogram_validation() {
        assert!(Histogram::new(vec![0.0, 1.0], vec![1.0]).is_ok());
        assert!(Histogram::new(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(Histogram::new(vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(Histogram::new(vec![0.0, 1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn log_edges_shape() {
        let e = Histogram::log_edges(1.0, 2048.0, 32);
        assert_eq!(e.len(), 33);
        assert_eq!(e[0], 1.0);
        assert_eq!(e[32], 2048.0);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn out_of_range_values_land_in_end_bins() {
        let h = Histogram::from_samples(vec![1.0, 2.0, 3.0], [0.5, 2.0, 99.0]);
        assert_eq!(h.bin_mass(), &[1.0 / 3.0, 2.0 / 3.0]);
    }
}
