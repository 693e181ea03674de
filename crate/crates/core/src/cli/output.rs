//! Result files. Every file is written to a temporary sibling first and then
//! renamed, so readers never observe a partial file.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::gait_plan::PhaseTimeline;
use crate::simulator::{ComparisonRow, RecoveryEnvelope, SimLog};

pub const TRAJECTORY_HEADER: [&str; 16] = [
    "t",
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "xi_x",
    "xi_y",
    "cop_x",
    "cop_y",
    "cmp_x",
    "cmp_y",
    "Hdot_x",
    "Hdot_y",
    "foothold_id",
    "push_active",
];

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path.file_name().ok_or_else(|| {
        io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name")
    })?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn finish(w: csv::Writer<Vec<u8>>) -> io::Result<Vec<u8>> {
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

fn num(v: f64) -> String {
    // Drops the sign of negative zero.
    format!("{}", v + 0.0)
}

pub fn trajectory_csv(log: &SimLog) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &log.samples {
        w.write_record([
            num(s.t),
            num(s.com.x[0]),
            num(s.com.x[1]),
            num(s.com.z),
            num(s.com.v[0]),
            num(s.com.v[1]),
            num(s.xi[0]),
            num(s.xi[1]),
            num(s.cop[0]),
            num(s.cop[1]),
            num(s.cmp[0]),
            num(s.cmp[1]),
            num(s.hdot[0]),
            num(s.hdot[1]),
            s.foothold.to_string(),
            u8::from(s.push_active).to_string(),
        ])?;
    }
    finish(w)
}

/// One row per foothold: nominal and executed positions and the touchdown time.
pub fn footsteps_csv(log: &SimLog, timeline: &PhaseTimeline) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "foothold_id",
        "side",
        "landing_t",
        "nominal_x",
        "nominal_y",
        "x",
        "y",
        "deviation",
    ])?;
    for (j, (f, nom)) in log.footholds.iter().zip(&log.nominal_footholds).enumerate() {
        let side = serde_json::to_value(f.side)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        w.write_record([
            j.to_string(),
            side,
            num(timeline.landing_tick(j) as f64 * timeline.period),
            num(nom.pos[0]),
            num(nom.pos[1]),
            num(f.pos[0]),
            num(f.pos[1]),
            num((f.pos[0] - nom.pos[0]).hypot(f.pos[1] - nom.pos[1])),
        ])?;
    }
    finish(w)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mode",
        "outcome",
        "forward_envelope",
        "forward_unbounded",
        "lateral_envelope",
        "lateral_unbounded",
        "peak_Hdot",
        "max_foothold_deviation",
    ])?;
    for r in rows {
        let outcome = if r.outcome.completed() {
            "completed"
        } else {
            "fell"
        };
        w.write_record([
            r.mode.to_string(),
            outcome.to_string(),
            num(r.envelope_forward.magnitude),
            r.envelope_forward.unbounded.to_string(),
            num(r.envelope_lateral.magnitude),
            r.envelope_lateral.unbounded.to_string(),
            num(r.peak_hdot),
            num(r.max_foothold_deviation),
        ])?;
    }
    finish(w)
}

pub fn json_bytes<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Serialize)]
pub struct EnvelopeReport<'a> {
    pub scenario: &'a str,
    pub mode: String,
    #[serde(flatten)]
    pub envelope: &'a RecoveryEnvelope,
}
