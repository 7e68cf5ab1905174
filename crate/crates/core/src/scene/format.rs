//! JSON Lines wire format for recordings.
//!
//! Line 1 is a header object carrying the format version, camera intrinsics,
//! and the object catalog. Every following line but the last is one frame.
//! The final line is a trailer holding interaction intervals. Unknown fields
//! are rejected everywhere so schema drift surfaces as a load error.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Frame, InteractionEvent, ObjectCatalogEntry, Recording};
use crate::geometry::CameraModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("io error reading recording")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraRecord {
    focal_length_px: f64,
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
    max_fov_deg: f64,
}

impl From<&CameraModel> for CameraRecord {
    fn from(camera: &CameraModel) -> Self {
        let [cx, cy] = camera.principal_point();
        let [width, height] = camera.resolution();
        Self {
            focal_length_px: camera.focal_length_px(),
            cx,
            cy,
            width,
            height,
            max_fov_deg: camera.max_fov_deg(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    version: u32,
    recording_id: String,
    sample_rate_hz: f64,
    camera: CameraRecord,
    task_label: String,
    silhouettes_stored: bool,
    catalog: Vec<ObjectCatalogEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrailerRecord {
    interactions: Vec<InteractionEvent>,
}

/// Serializes a recording to a writer, one JSON object per line.
pub fn save_recording<W: Write>(recording: &Recording, writer: &mut W) -> io::Result<()> {
    let header = HeaderRecord {
        version: FORMAT_VERSION,
        recording_id: recording.recording_id.clone(),
        sample_rate_hz: recording.sample_rate_hz,
        camera: (&recording.camera).into(),
        task_label: recording.task_label.clone(),
        silhouettes_stored: recording.silhouettes_stored,
        catalog: recording.catalog.clone(),
    };
    write_line(writer, &header)?;
    for frame in &recording.frames {
        write_line(writer, frame)?;
    }
    let trailer = TrailerRecord {
        interactions: recording.interactions.clone(),
    };
    write_line(writer, &trailer)
}

pub fn save_recording_path(recording: &Recording, path: &Path) -> io::Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    save_recording(recording, &mut writer)?;
    writer.flush()
}

fn write_line<W: Write, T: Serialize>(writer: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *writer, value).map_err(io::Error::other)?;
    writer.write_all(b"\n")
}

pub fn load_recording(path: &Path) -> Result<Recording, LoadError> {
    parse_recording(BufReader::new(File::open(path)?))
}

/// Parses a recording, reporting 1-based line numbers on failure.
pub fn parse_recording<R: BufRead>(reader: R) -> Result<Recording, LoadError> {
    let mut lines = reader.lines().enumerate();

    let (idx, header_line) = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (idx, line);
                }
            }
            None => {
                return Err(LoadError::Format {
                    line: 1,
                    message: "empty recording, expected header line".into(),
                })
            }
        }
    };
    let header = parse_header(idx + 1, &header_line)?;
    let camera = CameraModel::new(
        header.camera.focal_length_px,
        [header.camera.cx, header.camera.cy],
        [header.camera.width, header.camera.height],
        header.camera.max_fov_deg,
    )
    .map_err(|e| LoadError::Format {
        line: idx + 1,
        message: e.to_string(),
    })?;

    let mut frames = Vec::new();
    let mut trailer: Option<TrailerRecord> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if trailer.is_some() {
            return Err(LoadError::Format {
                line: line_no,
                message: "content after interactions trailer".into(),
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|source| LoadError::Json {
                line: line_no,
                source,
            })?;
        if value.get("t_ns").is_some() {
            let frame: Frame = serde_json::from_value(value).map_err(|source| LoadError::Json {
                line: line_no,
                source,
            })?;
            frames.push(frame);
        } else if value.get("interactions").is_some() {
            trailer = Some(
                serde_json::from_value(value).map_err(|source| LoadError::Json {
                    line: line_no,
                    source,
                })?,
            );
        } else {
            return Err(LoadError::Format {
                line: line_no,
                message: "expected a frame (t_ns) or trailer (interactions) object".into(),
            });
        }
    }
    let trailer = trailer.ok_or_else(|| LoadError::Format {
        line: idx + 2 + frames.len(),
        message: "missing interactions trailer".into(),
    })?;

    Ok(Recording {
        recording_id: header.recording_id,
        sample_rate_hz: header.sample_rate_hz,
        camera,
        task_label: header.task_label,
        silhouettes_stored: header.silhouettes_stored,
        catalog: header.catalog,
        frames,
        interactions: trailer.interactions,
    })
}

fn parse_header(line_no: usize, line: &str) -> Result<HeaderRecord, LoadError> {
    // Check the version before the strict typed parse so future versions
    // fail with a clear message instead of an unknown-field error.
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|source| LoadError::Json {
            line: line_no,
            source,
        })?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(found) => return Err(LoadError::UnsupportedVersion { found }),
        None => {
            return Err(LoadError::Format {
                line: line_no,
                message: "header missing integer version field".into(),
            })
        }
    }
    serde_json::from_value(value).map_err(|source| LoadError::Json {
        line: line_no,
        source,
    })
}
