//! Trajectory file format (delimited text) and the ground-truth label
//! sidecar.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Demonstration, Sample, UnitQuaternion, Vec3};
use crate::models::{ModelKind, ParamVector};
use crate::segmentation::Segment;
use crate::synth::LabeledDemonstration;

const BASE_COLUMNS: [&str; 14] = [
    "t", "rx", "ry", "rz", "qw", "qx", "qy", "qz", "fx", "fy", "fz", "nx", "ny", "nz",
];
const VEL_COLUMNS: [&str; 6] = ["vx", "vy", "vz", "wx", "wy", "wz"];

/// Serialize a demonstration as delimited text with a header row, 12
/// significant digits per value.
pub fn write_trajectory<W: Write>(
    out: W,
    demo: &Demonstration,
    include_velocities: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if include_velocities {
        header.extend(VEL_COLUMNS);
    }
    w.write_record(&header).map_err(csv_err)?;
    for s in demo.samples() {
        let mut row = vec![
            s.t, s.r.x, s.r.y, s.r.z, s.q.scalar(), s.q.vector().x, s.q.vector().y,
            s.q.vector().z, s.f.x, s.f.y, s.f.z, s.n.x, s.n.y, s.n.z,
        ];
        if include_velocities {
            row.extend([s.v.x, s.v.y, s.v.z, s.omega.x, s.omega.y, s.omega.z]);
        }
        let rec: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Parse a trajectory file. Velocity columns are optional; when absent the
/// velocities are zeroed and should be estimated downstream.
///
/// Returns the demonstration and whether velocities were present.
pub fn read_trajectory<R: Read>(input: R) -> Result<(Demonstration, bool)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let ncols = header.len();
    let with_vel = match ncols {
        14 => false,
        20 => true,
        other => {
            return Err(Error::Parse(format!(
                "expected 14 or 20 columns, found {other}"
            )))
        }
    };
    for (i, expect) in BASE_COLUMNS.iter().enumerate() {
        if header.get(i).map(str::trim) != Some(*expect) {
            return Err(Error::Parse(format!(
                "column {i} must be '{expect}', found '{}'",
                header.get(i).unwrap_or("")
            )));
        }
    }
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != ncols {
            return Err(Error::Parse(format!(
                "row {line}: expected {ncols} fields, found {}",
                rec.len()
            )));
        }
        let mut vals = [0.0f64; 20];
        for (i, field) in rec.iter().enumerate() {
            vals[i] = field.trim().parse().map_err(|_| {
                Error::Parse(format!("row {line}: bad number '{field}'"))
            })?;
        }
        let q = UnitQuaternion::new(vals[4], vals[5], vals[6], vals[7])
            .map_err(|e| Error::Parse(format!("row {line}: {e}")))?;
        samples.push(Sample {
            t: vals[0],
            r: Vec3::new(vals[1], vals[2], vals[3]),
            q,
            f: Vec3::new(vals[8], vals[9], vals[10]),
            n: Vec3::new(vals[11], vals[12], vals[13]),
            v: if with_vel {
                Vec3::new(vals[14], vals[15], vals[16])
            } else {
                Vec3::ZERO
            },
            omega: if with_vel {
                Vec3::new(vals[17], vals[18], vals[19])
            } else {
                Vec3::ZERO
            },
        });
    }
    if samples.len() < 2 {
        return Err(Error::Parse("trajectory needs at least 2 rows".into()));
    }
    let dt = (samples[samples.len() - 1].t - samples[0].t) / (samples.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Parse("sample times are not increasing".into()));
    }
    let demo = Demonstration::new(samples, 1.0 / dt)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok((demo, with_vel))
}

/// One labeled ground-truth interval in a sidecar file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelEntry {
    pub segment: Segment,
    pub kind: ModelKind,
    pub alpha: ParamVector,
}

/// Write the ground-truth sidecar of a generated demonstration.
pub fn write_labels<W: Write>(out: W, labeled: &LabeledDemonstration) -> Result<()> {
    let entries: Vec<LabelEntry> = labeled
        .true_segments
        .iter()
        .map(|(segment, kind, alpha)| LabelEntry {
            segment: *segment,
            kind: *kind,
            alpha: alpha.clone(),
        })
        .collect();
    serde_json::to_writer_pretty(out, &entries).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<LabelEntry>> {
    serde_json::from_reader(input).map_err(|e| Error::Parse(e.to_string()))
}

/// Convenience file wrappers.
pub fn write_trajectory_file(
    path: &Path,
    demo: &Demonstration,
    include_velocities: bool,
) -> Result<()> {
    write_trajectory(std::fs::File::create(path)?, demo, include_velocities)
}

pub fn read_trajectory_file(path: &Path) -> Result<(Demonstration, bool)> {
    read_trajectory(std::fs::File::open(path)?)
}
