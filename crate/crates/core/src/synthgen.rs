//! Seeded generator of smart-speaker-like command traffic.
//!
//! Each command owns an outgoing query shape (the uploaded voice request) and
//! one or more incoming response shapes. A trace is an outgoing burst shaped
//! by the query and the asking voice, a think-time pause, then an incoming
//! burst shaped by the selected response variant. Voices only touch the
//! outgoing side.
//!
//! Shapes are turned into concrete packet templates with a per-shape seed,
//! so with zero jitter every trace of a (class, voice, variant, epoch) cell
//! is identical. Jitter multiplies sizes, gaps and counts by `1 + j·N(0,1)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{self, StreamRng};
use crate::trace::{
    CommandCategory, Dataset, Direction, LabeledTrace, Manifest, Packet, Timestamp, Trace,
    MAX_VOICES,
};
use crate::{Error, Result};

pub const MIN_PACKET_SIZE: u32 = 60;
pub const MAX_PACKET_SIZE: u32 = 1514;
pub const MAX_MULTIPLE_VARIANTS: usize = 8;

/// Category mix of the Amazon Echo command list.
pub const DEFAULT_CATEGORY_RATIOS: [f64; 3] = [0.45, 0.21, 0.34];

const TAG_CATEGORY: u64 = 0xC47E;
const TAG_PROFILE: u64 = 0x9F0F;
const TAG_VOICE: u64 = 0x0B1C;
const TAG_TRACE: u64 = 0x7ACE;

const PAUSE_PROBABILITY: f64 = 0.04;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub num_classes: usize,
    pub traces_per_class: usize,
    /// (Single, TimeSensitive, Multiple).
    pub category_ratios: [f64; 3],
    pub num_voices: usize,
    /// Global multiplier on every shape's jitter.
    pub noise_level: f64,
    pub seed: u64,
    /// Number of response variants per time-sensitive command.
    pub time_epochs: usize,
    /// The last `unmonitored_classes` command ids are flagged unmonitored.
    pub unmonitored_classes: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_classes: 20,
            traces_per_class: 100,
            category_ratios: DEFAULT_CATEGORY_RATIOS,
            num_voices: MAX_VOICES,
            noise_level: 1.0,
            seed: 0,
            time_epochs: 3,
            unmonitored_classes: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.category_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.category_ratios.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::Config(format!(
                "category ratios must be non-negative and sum to 1, got {:?}",
                self.category_ratios
            )));
        }
        if self.num_classes == 0 || self.traces_per_class == 0 {
            return Err(Error::Config("class and trace counts must be >= 1".into()));
        }
        if self.num_voices == 0 || self.num_voices > MAX_VOICES {
            return Err(Error::Config(format!(
                "num_voices must be in 1..={MAX_VOICES}"
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::Config("noise_level must be finite and >= 0".into()));
        }
        if self.time_epochs < 2 {
            return Err(Error::Config("time_epochs must be >= 2".into()));
        }
        if self.unmonitored_classes >= self.num_classes && self.unmonitored_classes > 0 {
            return Err(Error::Config(
                "at least one class must stay monitored".into(),
            ));
        }
        Ok(())
    }
}

/// Statistical shape of one burst of traffic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstShape {
    pub total_bytes: u32,
    pub packet_size_mean: f64,
    pub packet_size_std: f64,
    pub interarrival_mean_ms: f64,
    pub interarrival_std_ms: f64,
    /// Relative noise level in `[0, 1]`.
    pub jitter: f64,
    /// Seed of the deterministic packet template behind this shape.
    pub template_seed: u64,
}

pub type ResponseShape = BurstShape;
pub type OutgoingShape = BurstShape;

#[derive(Clone, Debug, PartialEq)]
struct Template {
    sizes: Vec<f64>,
    gaps_ms: Vec<f64>,
}

impl BurstShape {
    fn template(&self) -> Template {
        let mut rng = rng::stream(self.template_seed, &[]);
        let n = ((f64::from(self.total_bytes) / self.packet_size_mean).round() as usize).max(1);
        let mut sizes = Vec::with_capacity(n);
        let mut gaps_ms = Vec::with_capacity(n);
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            sizes.push(clip_size(self.packet_size_mean + self.packet_size_std * z));
            if i == 0 {
                gaps_ms.push(0.0);
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut gap = (self.interarrival_mean_ms + self.interarrival_std_ms * z).max(0.1);
            if rng.random::<f64>() < PAUSE_PROBABILITY {
                gap += rng.random_range(60.0..400.0);
            }
            gaps_ms.push(gap);
        }
        Template { sizes, gaps_ms }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.total_bytes >= 1
            && self.packet_size_mean > 0.0
            && self.interarrival_mean_ms > 0.0
            && self.packet_size_std >= 0.0
            && self.interarrival_std_ms >= 0.0
            && (0.0..=1.0).contains(&self.jitter);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid burst shape {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandProfile {
    pub command_id: usize,
    pub category: CommandCategory,
    pub response_variants: Vec<ResponseShape>,
    pub query_shape: OutgoingShape,
    /// Pause between the end of the query and the first response packet.
    pub response_delay_ms: f64,
}

impl CommandProfile {
    pub fn validate(&self) -> Result<()> {
        let k = self.response_variants.len();
        let ok = match self.category {
            CommandCategory::Single => k == 1,
            CommandCategory::TimeSensitive => k >= 2,
            CommandCategory::Multiple => (2..=MAX_MULTIPLE_VARIANTS).contains(&k),
        };
        if !ok {
            return Err(Error::Config(format!(
                "command {} ({}) has {k} response variants",
                self.command_id, self.category
            )));
        }
        self.query_shape.validate()?;
        self.response_variants
            .iter()
            .try_for_each(BurstShape::validate)
    }
}

/// Per-voice perturbation of the outgoing query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoiceProfile {
    /// Multiplier on outgoing packet sizes, in `[0.8, 1.2]`.
    pub size_scale: f64,
    /// Multiplier on outgoing packet count, in `[0.9, 1.1]`.
    pub count_factor: f64,
}

pub fn voice_profiles(seed: u64, num_voices: usize) -> Vec<VoiceProfile> {
    (0..num_voices)
        .map(|v| {
            let mut r = rng::stream(seed, &[TAG_VOICE, v as u64]);
            VoiceProfile {
                size_scale: r.random_range(0.8..=1.2),
                count_factor: r.random_range(0.9..=1.1),
            }
        })
        .collect()
}

/// Largest-remainder apportionment of `total` items over `ratios`.
pub fn apportion(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    // stable sort keeps category order on equal remainders
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra)
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn sample_shape<R: Rng>(
    rng: &mut R,
    total_bytes: (f64, f64),
    size_mean: (f64, f64),
    size_std: (f64, f64),
    ia_mean: (f64, f64),
) -> BurstShape {
    let interarrival_mean_ms = rng.random_range(ia_mean.0..ia_mean.1);
    BurstShape {
        total_bytes: rng.random_range(total_bytes.0..total_bytes.1).round() as u32,
        packet_size_mean: rng.random_range(size_mean.0..size_mean.1),
        packet_size_std: rng.random_range(size_std.0..size_std.1),
        interarrival_mean_ms,
        interarrival_std_ms: interarrival_mean_ms * rng.random_range(0.3..0.8),
        jitter: rng.random_range(0.05..0.15),
        template_seed: rng.random(),
    }
}

fn response_variant<R: Rng>(rng: &mut R, base: &BurstShape) -> BurstShape {
    BurstShape {
        total_bytes: (f64::from(base.total_bytes) * rng.random_range(0.6..1.4)).round() as u32,
        packet_size_mean: (base.packet_size_mean * rng.random_range(0.9..1.1))
            .clamp(f64::from(MIN_PACKET_SIZE), f64::from(MAX_PACKET_SIZE)),
        template_seed: rng.random(),
        ..base.clone()
    }
}

/// Builds `num_classes` command profiles with category counts apportioned from
/// the configured ratios.
pub fn make_command_profiles(cfg: &GenConfig) -> Result<Vec<CommandProfile>> {
    cfg.validate()?;
    let counts = apportion(cfg.num_classes, &cfg.category_ratios);
    let mut categories: Vec<CommandCategory> = CommandCategory::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(&c, &n)| std::iter::repeat_n(c, n))
        .collect();
    categories.shuffle(&mut rng::stream(cfg.seed, &[TAG_CATEGORY]));

    categories
        .into_iter()
        .enumerate()
        .map(|(command_id, category)| {
            let mut r = rng::stream(cfg.seed, &[TAG_PROFILE, command_id as u64]);
            let query_shape = sample_shape(
                &mut r,
                (8_000.0, 60_000.0),
                (500.0, 1300.0),
                (50.0, 250.0),
                (3.0, 15.0),
            );
            let base = sample_shape(
                &mut r,
                (15_000.0, 150_000.0),
                (900.0, 1450.0),
                (50.0, 300.0),
                (2.0, 12.0),
            );
            let variants = match category {
                CommandCategory::Single => 1,
                CommandCategory::TimeSensitive => cfg.time_epochs,
                CommandCategory::Multiple => r.random_range(2..=MAX_MULTIPLE_VARIANTS),
            };
            let response_variants = (0..variants)
                .map(|_| response_variant(&mut r, &base))
                .collect();
            let profile = CommandProfile {
                command_id,
                category,
                response_variants,
                query_shape,
                response_delay_ms: r.random_range(200.0..900.0),
            };
            profile.validate()?;
            Ok(profile)
        })
        .collect()
}

fn clip_size(size: f64) -> f64 {
    size.round()
        .clamp(f64::from(MIN_PACKET_SIZE), f64::from(MAX_PACKET_SIZE))
}

fn jittered<R: Rng>(rng: &mut R, value: f64, jitter: f64) -> f64 {
    if jitter == 0.0 {
        return value;
    }
    let z: f64 = StandardNormal.sample(rng);
    value * (1.0 + jitter * z)
}

/// Appends one burst to `out`, starting at `start_ms`; returns the time of the
/// last packet.
#[allow(clippy::too_many_arguments)]
fn realize_burst<R: Rng>(
    out: &mut Vec<Packet>,
    shape: &BurstShape,
    direction: Direction,
    size_scale: f64,
    count_factor: f64,
    jitter: f64,
    start_ms: f64,
    rng: &mut R,
) -> f64 {
    let template = shape.template();
    let n = template.sizes.len();
    let count = (jittered(rng, n as f64 * count_factor, jitter).round() as usize).max(1);
    let mut t = start_ms;
    for k in 0..count {
        let slot = k % n;
        let base_gap = if k > 0 && slot == 0 {
            shape.interarrival_mean_ms
        } else {
            template.gaps_ms[slot]
        };
        t += jittered(rng, base_gap, jitter).max(0.0);
        let size = clip_size(jittered(rng, template.sizes[slot] * size_scale, jitter));
        out.push(Packet::new(
            direction,
            size as u32,
            Timestamp::from_millis(t),
        ));
    }
    t
}

/// Command profiles plus voice perturbations for one configuration.
#[derive(Clone, Debug)]
pub struct Generator {
    cfg: GenConfig,
    profiles: Vec<CommandProfile>,
    voices: Vec<VoiceProfile>,
}

impl Generator {
    pub fn new(cfg: GenConfig) -> Result<Self> {
        let profiles = make_command_profiles(&cfg)?;
        let voices = voice_profiles(cfg.seed, cfg.num_voices);
        Ok(Generator {
            cfg,
            profiles,
            voices,
        })
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    pub fn profiles(&self) -> &[CommandProfile] {
        &self.profiles
    }

    pub fn voices(&self) -> &[VoiceProfile] {
        &self.voices
    }

    pub fn generate_trace(
        &self,
        command_id: usize,
        voice_id: usize,
        epoch: usize,
        rng: &mut StreamRng,
    ) -> Result<LabeledTrace> {
        let profile = self
            .profiles
            .get(command_id)
            .ok_or_else(|| Error::Config(format!("unknown command id {command_id}")))?;
        let voice = self.voices.get(voice_id).ok_or_else(|| {
            Error::Config(format!(
                "voice id {voice_id} not below num_voices {}",
                self.voices.len()
            ))
        })?;
        let monitored = command_id < self.cfg.num_classes - self.cfg.unmonitored_classes;
        generate_trace(
            profile,
            voice_id,
            voice,
            epoch,
            self.cfg.noise_level,
            monitored,
            rng,
        )
    }
}

/// One labelled trace for `profile` asked by `voice`.
///
/// Single commands always use variant 0, time-sensitive commands the variant
/// of `epoch`, multiple-response commands a uniformly drawn variant.
pub fn generate_trace(
    profile: &CommandProfile,
    voice_id: usize,
    voice: &VoiceProfile,
    epoch: usize,
    noise_level: f64,
    monitored: bool,
    rng: &mut StreamRng,
) -> Result<LabeledTrace> {
    let variants = profile.response_variants.len();
    let variant = match profile.category {
        CommandCategory::Single => 0,
        CommandCategory::TimeSensitive => {
            if epoch >= variants {
                return Err(Error::EpochOutOfRange { epoch, variants });
            }
            epoch
        }
        CommandCategory::Multiple => rng.random_range(0..variants),
    };

    let query = &profile.query_shape;
    let response = &profile.response_variants[variant];
    let query_jitter = (query.jitter * noise_level).min(1.0);
    let response_jitter = (response.jitter * noise_level).min(1.0);

    let mut packets = Vec::new();
    let query_end = realize_burst(
        &mut packets,
        query,
        Direction::Outgoing,
        voice.size_scale,
        voice.count_factor,
        query_jitter,
        0.0,
        rng,
    );
    let delay = jittered(rng, profile.response_delay_ms, response_jitter).max(0.0);
    realize_burst(
        &mut packets,
        response,
        Direction::Incoming,
        1.0,
        1.0,
        response_jitter,
        query_end + delay,
        rng,
    );

    let voice_id = u8::try_from(voice_id)
        .map_err(|_| Error::Config(format!("voice id {voice_id} too large")))?;
    LabeledTrace::new(
        Trace::new(packets)?,
        profile.command_id,
        profile.category,
        voice_id,
        monitored,
    )
}

/// `traces_per_class` traces per command; voices cycle within each class and
/// time-sensitive epochs advance round-robin once per voice cycle.
pub fn generate_dataset(cfg: &GenConfig, epochs: usize) -> Result<Dataset> {
    if epochs == 0 || epochs > cfg.time_epochs {
        return Err(Error::Config(format!(
            "epochs must be in 1..={}, got {epochs}",
            cfg.time_epochs
        )));
    }
    let generator = Generator::new(cfg.clone())?;
    let jobs: Vec<(usize, usize)> = (0..cfg.num_classes)
        .flat_map(|c| (0..cfg.traces_per_class).map(move |i| (c, i)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(class, index)| {
            let voice = index % cfg.num_voices;
            let epoch = (index / cfg.num_voices) % epochs;
            let mut r = rng::stream(cfg.seed, &[TAG_TRACE, class as u64, index as u64]);
            generator.generate_trace(class, voice, epoch, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut manifest = Manifest::new();
    manifest.insert("source".into(), "synthgen".into());
    manifest.insert("generator".into(), serde_json::to_value(cfg)?);
    manifest.insert("epochs".into(), epochs.into());
    Dataset::new(traces, cfg.num_classes, manifest)
}
