//! Traffic obfuscation: adaptive padding driven by interarrival histograms,
//! dummy sizes drawn from the real size distribution, power-of-two length
//! extension, and per-packet size noise with a FIFO byte buffer.
//!
//! Each direction is simulated on its own. Real packets are never delayed:
//! a real packet always goes on the wire at its original timestamp, but its
//! noisy wire size may be too small to carry all of its bytes. Displaced bytes
//! wait in a FIFO buffer and ride on the next emission, real or dummy.

mod metrics;
mod noise;

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{self, open_unit, StreamRng};
use crate::trace::{Dataset, Direction, Histogram, Packet, SummaryStats, Timestamp, Trace};
use crate::{Error, Result};

pub use metrics::{defense_metrics, format_cost_row, DefenseMetrics, DefenseReport};
pub use noise::{
    dstar_noise, laplace_inverse_cdf, NoiseMechanism, NoiseStream, DEFAULT_HORIZON,
    DEFAULT_SENSITIVITY,
};

pub const DEFAULT_MIN_WIRE_SIZE: u32 = 60;
pub const DEFAULT_MAX_WIRE_SIZE: u32 = 1514;

const TAG_PADDING: u64 = 0xAD;
const TAG_NOISE: u64 = 0xD5;
const TAG_TRACE: u64 = 0x7E;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationParams {
    pub epsilon: f64,
    pub noise_mechanism: NoiseMechanism,
    /// Δ in bytes; the Laplace scale is Δ/ε.
    pub sensitivity: f64,
    pub stats: SummaryStats,
    pub min_wire_size: u32,
    pub max_wire_size: u32,
    pub adaptive_padding: bool,
    pub seed: u64,
}

impl ObfuscationParams {
    pub fn new(epsilon: f64, stats: SummaryStats, seed: u64) -> Self {
        ObfuscationParams {
            epsilon,
            noise_mechanism: NoiseMechanism::default(),
            sensitivity: DEFAULT_SENSITIVITY,
            stats,
            min_wire_size: DEFAULT_MIN_WIRE_SIZE,
            max_wire_size: DEFAULT_MAX_WIRE_SIZE,
            adaptive_padding: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(Error::Config("sensitivity must be positive".into()));
        }
        if self.min_wire_size == 0 || self.min_wire_size > self.max_wire_size {
            return Err(Error::Config(format!(
                "wire size bounds [{}, {}] invalid",
                self.min_wire_size, self.max_wire_size
            )));
        }
        Ok(())
    }

    /// Laplace scale b = Δ/ε in bytes.
    pub fn noise_scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }
}

/// Least power of two that is `>= m`.
pub fn target_length(m: usize) -> usize {
    m.max(1).next_power_of_two()
}

/// Inverse-CDF draw from `hist` at `u`.
pub fn sample_histogram(hist: &Histogram, u: f64) -> Result<f64> {
    hist.sample(u)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePacket {
    pub direction: Direction,
    pub wire_size: u32,
    pub send_time: Timestamp,
    /// `(origin packet index, bytes)` in delivery order.
    pub real_payload: Vec<(usize, u32)>,
    pub pad_bytes: u32,
    pub is_dummy: bool,
}

impl WirePacket {
    pub fn real_bytes(&self) -> u64 {
        self.real_payload.iter().map(|&(_, b)| u64::from(b)).sum()
    }
}

/// Wire packets of one direction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub packets: Vec<WirePacket>,
    /// Emissions before power-of-two extension (includes flush dummies).
    pub pre_extension_count: usize,
}

impl Lane {
    pub fn final_length(&self) -> usize {
        self.packets.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObfuscatedTrace {
    pub outgoing: Lane,
    pub incoming: Lane,
    pub original_packets: usize,
    pub original_bytes: u64,
}

impl ObfuscatedTrace {
    pub fn lane(&self, direction: Direction) -> &Lane {
        match direction {
            Direction::Outgoing => &self.outgoing,
            Direction::Incoming => &self.incoming,
        }
    }

    /// Both lanes merged by send time; outgoing first on equal times.
    pub fn wire_packets(&self) -> Vec<&WirePacket> {
        let mut all: Vec<&WirePacket> = self
            .outgoing
            .packets
            .iter()
            .chain(&self.incoming.packets)
            .collect();
        all.sort_by_key(|p| (p.send_time, p.direction));
        all
    }

    /// What an on-path observer sees.
    pub fn to_trace(&self) -> Result<Trace> {
        Trace::new(
            self.wire_packets()
                .into_iter()
                .map(|w| Packet::new(w.direction, w.wire_size, w.send_time))
                .collect(),
        )
    }

    pub fn wire_bytes(&self) -> u64 {
        self.outgoing
            .packets
            .iter()
            .chain(&self.incoming.packets)
            .map(|p| u64::from(p.wire_size))
            .sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Burst,
    Gap,
}

struct LaneSim<'a> {
    direction: Direction,
    params: &'a ObfuscationParams,
    padding_rng: StreamRng,
    noise: NoiseStream,
    buffer: VecDeque<(usize, u32)>,
    out: Vec<WirePacket>,
    now: Timestamp,
    mode: Mode,
}

impl LaneSim<'_> {
    fn sample_gap(&mut self) -> Result<Timestamp> {
        let stats = &self.params.stats;
        let (hist, fallback) = match self.mode {
            Mode::Burst => (&stats.interarrival_hist_burst, &stats.interarrival_hist_gap),
            Mode::Gap => (&stats.interarrival_hist_gap, &stats.interarrival_hist_burst),
        };
        let hist = if hist.is_empty() { fallback } else { hist };
        if hist.is_empty() {
            return Err(Error::EmptyHistogram("interarrival"));
        }
        let ms = hist.sample(open_unit(&mut self.padding_rng))?;
        let tenths = ((ms * 10.0).round() as u64).max(1);
        Ok(Timestamp::from_tenths(self.now.tenths() + tenths))
    }

    fn dummy_size(&mut self) -> Result<u32> {
        let hist = self.params.stats.size_hist(self.direction);
        if hist.is_empty() {
            return Err(Error::EmptyHistogram("packet size"));
        }
        let size = hist.sample(open_unit(&mut self.padding_rng))?;
        Ok((size.round() as u32).max(1))
    }

    fn emit(&mut self, time: Timestamp, own: Option<(usize, u32)>, scheduled: u32) {
        let sigma = self.noise.sample(self.out.len());
        let wire = (i64::from(scheduled) + sigma).clamp(
            i64::from(self.params.min_wire_size),
            i64::from(self.params.max_wire_size),
        ) as u32;

        let mut room = wire;
        let mut payload = Vec::new();
        while room > 0 {
            let Some(front) = self.buffer.front_mut() else {
                break;
            };
            let take = front.1.min(room);
            payload.push((front.0, take));
            room -= take;
            front.1 -= take;
            if front.1 == 0 {
                self.buffer.pop_front();
            }
        }
        if let Some((origin, size)) = own {
            let take = size.min(room);
            if take > 0 {
                payload.push((origin, take));
                room -= take;
            }
            if size > take {
                self.buffer.push_back((origin, size - take));
            }
        }
        self.out.push(WirePacket {
            direction: self.direction,
            wire_size: wire,
            send_time: time,
            real_payload: payload,
            pad_bytes: room,
            is_dummy: own.is_none(),
        });
        self.now = time;
    }

    fn emit_dummy(&mut self, time: Timestamp) -> Result<()> {
        let size = self.dummy_size()?;
        self.emit(time, None, size);
        self.mode = Mode::Gap;
        Ok(())
    }

    fn run(mut self, reals: &[(usize, Packet)]) -> Result<Lane> {
        if reals.is_empty() {
            return Ok(Lane::default());
        }
        for &(origin, p) in reals {
            if self.params.adaptive_padding {
                // a real packet arriving before the sampled gap expires
                // preempts the dummy and resets the sampler
                loop {
                    let deadline = self.sample_gap()?;
                    if deadline >= p.timestamp {
                        break;
                    }
                    self.emit_dummy(deadline)?;
                }
            }
            self.emit(p.timestamp, Some((origin, p.size)), p.size);
            self.mode = Mode::Burst;
        }
        while !self.buffer.is_empty() {
            let t = self.sample_gap()?;
            self.emit_dummy(t)?;
        }
        let pre_extension_count = self.out.len();
        let target = target_length(pre_extension_count);
        while self.out.len() < target {
            let t = self.sample_gap()?;
            self.emit_dummy(t)?;
        }
        Ok(Lane {
            packets: self.out,
            pre_extension_count,
        })
    }
}

/// Obfuscates `trace` with the random streams rooted at `params.seed`.
pub fn obfuscate_trace(trace: &Trace, params: &ObfuscationParams) -> Result<ObfuscatedTrace> {
    obfuscate_trace_seeded(trace, params, params.seed)
}

pub fn obfuscate_trace_seeded(
    trace: &Trace,
    params: &ObfuscationParams,
    seed: u64,
) -> Result<ObfuscatedTrace> {
    params.validate()?;
    let mut lanes = Direction::BOTH.iter().map(|&direction| {
        let reals: Vec<(usize, Packet)> = trace
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| p.direction == direction)
            .collect();
        let d = direction.index() as u64;
        let sim = LaneSim {
            direction,
            params,
            padding_rng: rng::stream(seed, &[TAG_PADDING, d]),
            noise: NoiseStream::new(
                params.noise_mechanism.clone(),
                params.sensitivity,
                params.epsilon,
                rng::stream(seed, &[TAG_NOISE, d]),
            ),
            buffer: VecDeque::new(),
            out: Vec::new(),
            now: Timestamp::ZERO,
            mode: Mode::Gap,
        };
        sim.run(&reals)
    });
    let outgoing = lanes.next().expect("two lanes")?;
    let incoming = lanes.next().expect("two lanes")?;
    Ok(ObfuscatedTrace {
        outgoing,
        incoming,
        original_packets: trace.len(),
        original_bytes: trace.total_bytes(),
    })
}

/// Obfuscates every trace with independent per-trace streams.
pub fn obfuscate_dataset(
    dataset: &Dataset,
    params: &ObfuscationParams,
) -> Result<Vec<ObfuscatedTrace>> {
    dataset
        .traces()
        .par_iter()
        .enumerate()
        .map(|(i, lt)| {
            let seed = rng::derive_seed(params.seed, &[TAG_TRACE, i as u64]);
            obfuscate_trace_seeded(&lt.trace, params, seed)
        })
        .collect()
}

/// The dataset as seen on the wire after obfuscation, labels unchanged.
pub fn observed_dataset(dataset: &Dataset, obfuscated: &[ObfuscatedTrace]) -> Result<Dataset> {
    if obfuscated.len() != dataset.len() {
        return Err(Error::Shape(format!(
            "{} obfuscated traces for {} originals",
            obfuscated.len(),
            dataset.len()
        )));
    }
    dataset.map_traces(|i, _| obfuscated[i].to_trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::DEFAULT_BURST_GAP_THRESHOLD_MS;

    fn stats_for(traces: &[Trace]) -> SummaryStats {
        SummaryStats::from_traces(traces, DEFAULT_BURST_GAP_THRESHOLD_MS).unwrap()
    }

    fn sample_trace() -> Trace {
        Trace::from_tuples(&[
            (1, 300, 0.0),
            (1, 800, 4.0),
            (1, 1200, 9.0),
            (-1, 1400, 300.0),
            (-1, 1400, 303.0),
            (-1, 900, 420.0),
            (1, 80, 421.0),
        ])
        .unwrap()
    }

    #[test]
    fn power_of_two_targets() {
        assert_eq!(target_length(5), 8);
        assert_eq!(target_length(8), 8);
        assert_eq!(target_length(1000), 1024);
        assert_eq!(target_length(1), 1);
    }

    #[test]
    fn histogram_sampling_interpolates() {
        let h = Histogram::new(vec![0.0, 1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_histogram(&h, 0.25).unwrap(), 0.5);
        assert_eq!(sample_histogram(&h, 0.75).unwrap(), 1.5);
        let single = Histogram::new(vec![3.0, 7.0], vec![1.0]).unwrap();
        assert_eq!(sample_histogram(&single, 0.0).unwrap(), 3.0);
        let empty = Histogram::from_samples(vec![0.0, 1.0], std::iter::empty());
        assert!(matches!(
            sample_histogram(&empty, 0.5),
            Err(Error::EmptyHistogram(_))
        ));
    }

    #[test]
    fn buffer_worked_example() {
        let t = Trace::from_tuples(&[(1, 100, 0.0), (1, 200, 10.0)]).unwrap();
        let mut params = ObfuscationParams::new(1.0, stats_for(std::slice::from_ref(&t)), 0);
        params.adaptive_padding = false;
        params.min_wire_size = 1;
        params.noise_mechanism = NoiseMechanism::Scripted {
            values: vec![-30, 40],
        };
        let o = obfuscate_trace(&t, &params).unwrap();
        let lane = &o.outgoing.packets;
        assert_eq!(lane.len(), 2);
        assert_eq!(lane[0].wire_size, 70);
        assert_eq!(lane[0].real_payload, vec![(0, 70)]);
        assert_eq!(lane[1].wire_size, 240);
        assert_eq!(lane[1].real_payload, vec![(0, 30), (1, 200)]);
        assert_eq!(lane[1].pad_bytes, 10);
        assert_eq!(lane.iter().map(WirePacket::real_bytes).sum::<u64>(), 300);
        assert!(o.incoming.packets.is_empty());
    }

    #[test]
    fn identity_limit() {
        let t = Trace::from_tuples(&[
            (1, 100, 0.0),
            (-1, 400, 2.0),
            (1, 200, 10.0),
            (-1, 90, 11.0),
        ])
        .unwrap();
        let mut params =
            ObfuscationParams::new(f64::INFINITY, stats_for(std::slice::from_ref(&t)), 3);
        params.adaptive_padding = false;
        let o = obfuscate_trace(&t, &params).unwrap();
        assert_eq!(o.to_trace().unwrap(), t);
        assert!(o
            .wire_packets()
            .iter()
            .all(|w| w.pad_bytes == 0 && !w.is_dummy));
    }

    #[test]
    fn three_reals_round_up() {
        let t = sample_trace();
        let params = ObfuscationParams::new(0.05, stats_for(std::slice::from_ref(&t)), 5);
        let o = obfuscate_trace(&t, &params).unwrap();
        for d in Direction::BOTH {
            let lane = o.lane(d);
            let m = lane.pre_extension_count;
            assert!(lane.final_length() >= 4);
            assert_eq!(lane.final_length(), target_length(m));
            assert!(lane.final_length() / 2 < m && m <= lane.final_length());
        }
    }

    #[test]
    fn conservation_and_fifo() {
        let t = sample_trace();
        for seed in 0..50 {
            let params = ObfuscationParams::new(0.005, stats_for(std::slice::from_ref(&t)), seed);
            let o = obfuscate_trace(&t, &params).unwrap();
            let mut delivered = vec![0u64; t.len()];
            for d in Direction::BOTH {
                let mut last_origin = 0;
                for w in &o.lane(d).packets {
                    assert_eq!(
                        w.real_bytes() + u64::from(w.pad_bytes),
                        u64::from(w.wire_size)
                    );
                    for &(origin, bytes) in &w.real_payload {
                        assert!(origin >= last_origin);
                        assert_eq!(t.packets()[origin].direction, d);
                        last_origin = origin;
                        delivered[origin] += u64::from(bytes);
                    }
                }
            }
            let sizes: Vec<u64> = t.iter().map(|p| u64::from(p.size)).collect();
            assert_eq!(delivered, sizes);
        }
    }

    #[test]
    fn real_packets_keep_their_timestamps() {
        let t = sample_trace();
        let params = ObfuscationParams::new(0.5, stats_for(std::slice::from_ref(&t)), 1);
        let o = obfuscate_trace(&t, &params).unwrap();
        for d in Direction::BOTH {
            let reals: Vec<_> = o.lane(d).packets.iter().filter(|w| !w.is_dummy).collect();
            let originals: Vec<_> = t.iter().filter(|p| p.direction == d).collect();
            assert_eq!(reals.len(), originals.len());
            for (w, p) in reals.iter().zip(originals) {
                assert_eq!(w.send_time, p.timestamp);
            }
            let times: Vec<_> = o.lane(d).packets.iter().map(|w| w.send_time).collect();
            assert!(times.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn missing_size_histogram_is_an_error() {
        let out_only = Trace::from_tuples(&[(1, 100, 0.0), (1, 100, 1.0)]).unwrap();
        let mixed = Trace::from_tuples(&[
            (1, 100, 0.0),
            (-1, 100, 1.0),
            (-1, 100, 2.0),
            (-1, 100, 3.0),
        ])
        .unwrap();
        let params = ObfuscationParams::new(1.0, stats_for(&[out_only]), 0);
        assert!(matches!(
            obfuscate_trace(&mixed, &params),
            Err(Error::EmptyHistogram("packet size"))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let t = sample_trace();
        let mut p = ObfuscationParams::new(0.0, stats_for(std::slice::from_ref(&t)), 0);
        assert!(obfuscate_trace(&t, &p).is_err());
        p.epsilon = 1.0;
        p.min_wire_size = 2000;
        assert!(obfuscate_trace(&t, &p).is_err());
    }
}
