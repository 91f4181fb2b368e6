use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::defense::{Lane, ObfuscatedTrace, WirePacket};
use crate::trace::{
    CommandCategory, Dataset, Direction, LabeledTrace, Manifest, Packet, Timestamp, Trace,
};
use crate::{Error, Result};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub num_classes: usize,
    pub trace_count: usize,
    pub class_counts: Vec<usize>,
    pub provenance: Manifest,
}

/// `dir/name.jsonl` → `dir/name.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "traces".into());
    path.with_file_name(format!("{stem}.manifest.json"))
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    command_id: usize,
    category: CommandCategory,
    voice_id: u8,
    monitored: bool,
    packets: Vec<Vec<serde_json::Value>>,
}

fn header(lt: &LabeledTrace) -> TraceLine {
    TraceLine {
        command_id: lt.command_id,
        category: lt.category,
        voice_id: lt.voice_id,
        monitored: lt.monitored,
        packets: Vec::new(),
    }
}

fn write_lines<I>(path: &Path, lines: I) -> Result<()>
where
    I: IntoIterator<Item = TraceLine>,
{
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_manifest(path: &Path, dataset: &Dataset) -> Result<()> {
    let manifest = DatasetManifest {
        format_version: TRACE_FORMAT_VERSION,
        num_classes: dataset.num_classes(),
        trace_count: dataset.len(),
        class_counts: dataset.class_counts(),
        provenance: dataset.manifest.clone(),
    };
    let mut w = BufWriter::new(File::create(manifest_path(path))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    write_lines(
        path,
        dataset.traces().iter().map(|lt| TraceLine {
            packets: lt
                .trace
                .iter()
                .map(|p| {
                    vec![
                        p.direction.sign().into(),
                        p.size.into(),
                        p.timestamp.tenths().into(),
                    ]
                })
                .collect(),
            ..header(lt)
        }),
    )?;
    write_manifest(path, dataset)
}

/// Writes the wire view of every trace: `[direction, wire_size,
/// send_time_tenths_ms, is_dummy, pad_bytes, [[origin, bytes], ..]]`.
pub fn write_obfuscated(
    dataset: &Dataset,
    obfuscated: &[ObfuscatedTrace],
    path: &Path,
) -> Result<()> {
    if obfuscated.len() != dataset.len() {
        return Err(Error::Shape(format!(
            "{} obfuscated traces for {} labels",
            obfuscated.len(),
            dataset.len()
        )));
    }
    write_lines(
        path,
        dataset
            .traces()
            .iter()
            .zip(obfuscated)
            .map(|(lt, o)| TraceLine {
                packets: o
                    .wire_packets()
                    .into_iter()
                    .map(|w| {
                        vec![
                            w.direction.sign().into(),
                            w.wire_size.into(),
                            w.send_time.tenths().into(),
                            u8::from(w.is_dummy).into(),
                            w.pad_bytes.into(),
                            serde_json::to_value(&w.real_payload).expect("payload serializes"),
                        ]
                    })
                    .collect(),
                ..header(lt)
            }),
    )?;
    let observed = crate::defense::observed_dataset(dataset, obfuscated)?;
    write_manifest(path, &observed)
}

struct Parsed {
    header: TraceLine,
    wire: Vec<WirePacket>,
}

fn int(v: &serde_json::Value, what: &str) -> std::result::Result<i64, String> {
    v.as_i64()
        .ok_or_else(|| format!("{what} must be an integer, got {v}"))
}

fn parse_packet(fields: &[serde_json::Value]) -> std::result::Result<WirePacket, String> {
    if fields.len() != 3 && fields.len() != 6 {
        return Err(format!("packet needs 3 or 6 fields, got {}", fields.len()));
    }
    let direction = Direction::from_sign(int(&fields[0], "direction")?)
        .ok_or_else(|| format!("direction must be +1 or -1, got {}", fields[0]))?;
    let size = int(&fields[1], "size")?;
    if size < 1 || size > i64::from(u32::MAX) {
        return Err(format!("packet size {size} out of range"));
    }
    let ts = int(&fields[2], "timestamp")?;
    if ts < 0 {
        return Err(format!("negative timestamp {ts}"));
    }
    let mut wire = WirePacket {
        direction,
        wire_size: size as u32,
        send_time: Timestamp::from_tenths(ts as u64),
        real_payload: Vec::new(),
        pad_bytes: 0,
        is_dummy: false,
    };
    if fields.len() == 6 {
        wire.is_dummy = match int(&fields[3], "is_dummy")? {
            0 => false,
            1 => true,
            other => return Err(format!("is_dummy must be 0 or 1, got {other}")),
        };
        wire.pad_bytes = u32::try_from(int(&fields[4], "pad_bytes")?)
            .map_err(|_| "pad_bytes out of range".to_string())?;
        wire.real_payload = serde_json::from_value(fields[5].clone())
            .map_err(|e| format!("bad payload map: {e}"))?;
        if wire.real_bytes() + u64::from(wire.pad_bytes) != u64::from(wire.wire_size) {
            return Err("payload plus padding does not equal wire size".into());
        }
    }
    Ok(wire)
}

fn read_lines(path: &Path) -> Result<Vec<Parsed>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let header: TraceLine = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        let wire = header
            .packets
            .iter()
            .enumerate()
            .map(|(k, f)| parse_packet(f).map_err(|m| fail(format!("packet {k}: {m}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(Parsed { header, wire });
    }
    Ok(out)
}

fn labeled(path: &Path, line: usize, p: &Parsed) -> Result<LabeledTrace> {
    let packets = p
        .wire
        .iter()
        .map(|w| Packet::new(w.direction, w.wire_size, w.send_time))
        .collect();
    let h = &p.header;
    Trace::new(packets)
        .and_then(|t| LabeledTrace::new(t, h.command_id, h.category, h.voice_id, h.monitored))
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })
}

/// Reads a trace file and checks it against its manifest. Obfuscated files
/// load as the observer's view (wire sizes and send times).
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest =
        serde_json::from_reader(BufReader::new(File::open(manifest_path(path))?))?;
    if manifest.format_version != TRACE_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "trace format version {} (expected {TRACE_FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    let parsed = read_lines(path)?;
    let traces = parsed
        .iter()
        .enumerate()
        .map(|(i, p)| labeled(path, i + 1, p))
        .collect::<Result<Vec<_>>>()?;
    if traces.len() != manifest.trace_count {
        return Err(Error::Manifest(format!(
            "manifest lists {} traces, file has {}",
            manifest.trace_count,
            traces.len()
        )));
    }
    let dataset = Dataset::new(traces, manifest.num_classes, manifest.provenance)?;
    if dataset.class_counts() != manifest.class_counts {
        return Err(Error::Manifest(
            "per-class counts differ from the manifest".into(),
        ));
    }
    Ok(dataset)
}

/// Reads the full wire-level detail of an obfuscated trace file.
pub fn read_obfuscated(path: &Path) -> Result<Vec<ObfuscatedTrace>> {
    read_lines(path)?
        .into_iter()
        .map(|p| {
            let mut outgoing = Lane::default();
            let mut incoming = Lane::default();
            let mut bytes = 0u64;
            let mut packets = 0usize;
            for w in p.wire {
                for &(origin, b) in &w.real_payload {
                    bytes += u64::from(b);
                    packets = packets.max(origin + 1);
                }
                match w.direction {
                    Direction::Outgoing => outgoing.packets.push(w),
                    Direction::Incoming => incoming.packets.push(w),
                }
            }
            for lane in [&mut outgoing, &mut incoming] {
                // everything before the final power-of-two padding run
                let last_payload = lane
                    .packets
                    .iter()
                    .rposition(|w| !w.real_payload.is_empty())
                    .map_or(0, |i| i + 1);
                lane.pre_extension_count = last_payload;
            }
            Ok(ObfuscatedTrace {
                outgoing,
                incoming,
                original_packets: packets,
                original_bytes: bytes,
            })
        })
        .collect()
}
