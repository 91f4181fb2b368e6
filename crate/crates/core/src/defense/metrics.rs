//! Latency and bandwidth cost of an obfuscated trace.

use serde::{Deserialize, Serialize};

use super::ObfuscatedTrace;
use crate::trace::{Direction, Trace};
use crate::{Error, Result};

const BYTES_PER_KB: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefenseMetrics {
    /// Mean over real packets of (departure of last byte − original timestamp), ms.
    pub latency_per_packet: f64,
    /// Departure of the final real byte − original last timestamp, ms.
    pub latency_per_trace: f64,
    pub latency_per_trace_pct: f64,
    pub bandwidth_overhead_kb: f64,
    pub bandwidth_overhead_pct: f64,
    pub real_packets: usize,
    pub real_bytes: u64,
    pub wire_bytes: u64,
    /// Sum of per-packet latencies, ms.
    pub latency_sum: f64,
}

pub fn defense_metrics(trace: &Trace, obfuscated: &ObfuscatedTrace) -> Result<DefenseMetrics> {
    let n = trace.len();
    if obfuscated.original_packets != n || obfuscated.original_bytes != trace.total_bytes() {
        return Err(Error::Shape(
            "obfuscated trace does not match the original".into(),
        ));
    }
    let mut delivered = vec![0u64; n];
    let mut last_byte = vec![None; n];
    for direction in Direction::BOTH {
        for w in &obfuscated.lane(direction).packets {
            for &(origin, bytes) in &w.real_payload {
                let Some(p) = trace.packets().get(origin) else {
                    return Err(Error::Shape(format!("payload references packet {origin}")));
                };
                if p.direction != direction {
                    return Err(Error::Shape(format!(
                        "packet {origin} delivered on the wrong lane"
                    )));
                }
                delivered[origin] += u64::from(bytes);
                last_byte[origin] = Some(w.send_time);
            }
        }
    }

    let mut latency_sum = 0.0;
    let mut final_byte = trace.first_timestamp();
    for (i, p) in trace.iter().enumerate() {
        let done = match last_byte[i] {
            Some(t) if delivered[i] == u64::from(p.size) => t,
            _ => {
                return Err(Error::Shape(format!(
                    "packet {i} delivered {} of {} bytes",
                    delivered[i], p.size
                )))
            }
        };
        latency_sum += done.saturating_sub(p.timestamp).millis();
        final_byte = final_byte.max(done);
    }

    let latency_per_trace = final_byte.saturating_sub(trace.last_timestamp()).millis();
    let duration = trace.duration().millis();
    let real_bytes = trace.total_bytes();
    let wire_bytes = obfuscated.wire_bytes();
    let extra = wire_bytes.saturating_sub(real_bytes) as f64;
    Ok(DefenseMetrics {
        latency_per_packet: latency_sum / n as f64,
        latency_per_trace,
        latency_per_trace_pct: if duration > 0.0 {
            100.0 * latency_per_trace / duration
        } else {
            0.0
        },
        bandwidth_overhead_kb: extra / BYTES_PER_KB,
        bandwidth_overhead_pct: 100.0 * extra / real_bytes as f64,
        real_packets: n,
        real_bytes,
        wire_bytes,
        latency_sum,
    })
}

/// Dataset-level summary with the columns of a latency/bandwidth trade-off table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefenseReport {
    pub epsilon: f64,
    pub traces: usize,
    /// Pooled over all real packets, ms.
    pub latency_per_packet_ms: f64,
    pub latency_per_trace_ms: f64,
    pub latency_per_trace_pct: f64,
    pub bandwidth_overhead_kb: f64,
    /// Total extra bytes over total real bytes.
    pub bandwidth_overhead_pct: f64,
}

impl DefenseReport {
    pub fn aggregate(epsilon: f64, metrics: &[DefenseMetrics]) -> Self {
        let n = metrics.len().max(1) as f64;
        let packets: usize = metrics.iter().map(|m| m.real_packets).sum();
        let latency: f64 = metrics.iter().map(|m| m.latency_sum).sum();
        let real: u64 = metrics.iter().map(|m| m.real_bytes).sum();
        let wire: u64 = metrics.iter().map(|m| m.wire_bytes).sum();
        DefenseReport {
            epsilon,
            traces: metrics.len(),
            latency_per_packet_ms: if packets == 0 {
                0.0
            } else {
                latency / packets as f64
            },
            latency_per_trace_ms: metrics.iter().map(|m| m.latency_per_trace).sum::<f64>() / n,
            latency_per_trace_pct: metrics.iter().map(|m| m.latency_per_trace_pct).sum::<f64>() / n,
            bandwidth_overhead_kb: metrics.iter().map(|m| m.bandwidth_overhead_kb).sum::<f64>() / n,
            bandwidth_overhead_pct: if real == 0 {
                0.0
            } else {
                100.0 * wire.saturating_sub(real) as f64 / real as f64
            },
        }
    }

    pub fn table_row(&self) -> String {
        format_cost_row(
            self.latency_per_packet_ms,
            self.latency_per_trace_ms,
            self.latency_per_trace_pct,
            self.bandwidth_overhead_kb,
            self.bandwidth_overhead_pct,
        )
    }
}

/// `"<per-packet> ms / <per-trace> ms (<pct>%) / <KB> KB (<pct>%)"`.
pub fn format_cost_row(
    per_packet_ms: f64,
    per_trace_ms: f64,
    per_trace_pct: f64,
    overhead_kb: f64,
    overhead_pct: f64,
) -> String {
    format!(
        "{per_packet_ms:.1} ms / {per_trace_ms:.1} ms ({per_trace_pct:.1}%) / {overhead_kb:.2} KB ({overhead_pct:.1}%)"
    )
}
