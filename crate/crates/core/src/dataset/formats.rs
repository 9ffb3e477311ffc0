//! Parsers and writers for every file format. Parsers work on raw bytes and
//! never panic; every error carries a line or byte location.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::geometry::{CameraModel, CameraPose, DepthMap};
use crate::matching::{DescriptorKind, DescriptorSet, Direction, Keypoint, KeypointList, Match, MatchList};

pub const DESCRIPTOR_VERSION: u32 = 1;
const DESC_MAGIC: &[u8; 4] = b"DESC";
const DEPTH_MAGIC: &[u8; 4] = b"DPTH";
const DESC_HEADER: usize = 17;
const DEPTH_HEADER: usize = 12;
const POSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based line number in a text file.
    Line(usize),
    /// Byte offset in a binary file.
    Byte(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Byte(n) => write!(f, "byte {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub location: Location,
    pub message: String,
}

fn at_line(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { location: Location::Line(line), message: message.into() }
}

fn at_byte(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError { location: Location::Byte(offset), message: message.into() }
}

/// Exact round trip: 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn text(bytes: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        at_line(line, format!("invalid UTF-8 at byte {}", e.valid_up_to()))
    })
}

/// Non-blank lines with their 1-based numbers, split into tokens.
fn records(s: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    s.split('\n')
        .enumerate()
        .map(|(k, l)| (k + 1, l.split_ascii_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
}

fn float(tok: &str, line: usize) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(at_line(line, format!("expected a finite number, found {tok:?}"))),
    }
}

fn unsigned<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, ParseError> {
    tok.parse::<T>().map_err(|_| at_line(line, format!("expected a non-negative integer, found {tok:?}")))
}

fn expect_len(tokens: &[&str], n: usize, line: usize) -> Result<(), ParseError> {
    if tokens.len() != n {
        return Err(at_line(line, format!("expected {n} fields, found {}", tokens.len())));
    }
    Ok(())
}

fn floats(tokens: &[&str], line: usize) -> Result<Vec<f64>, ParseError> {
    tokens.iter().map(|t| float(t, line)).collect()
}

fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('#') && !id.chars().any(char::is_whitespace)
}

// ---------------------------------------------------------------------------
// Calibration

pub fn format_calibration(cam: &CameraModel) -> String {
    let mut s = format!("{} {}\n", cam.width(), cam.height());
    for m in [cam.intrinsics(), cam.rotation()] {
        for r in 0..3 {
            s += &format!("{} {} {}\n", fmt_f64(m[(r, 0)]), fmt_f64(m[(r, 1)]), fmt_f64(m[(r, 2)]));
        }
    }
    let t = cam.translation();
    s += &format!("{} {} {}\n", fmt_f64(t.x), fmt_f64(t.y), fmt_f64(t.z));
    s
}

pub fn parse_calibration(bytes: &[u8]) -> Result<CameraModel, ParseError> {
    let s = text(bytes)?;
    let recs: Vec<_> = records(s).collect();
    if recs.len() != 8 {
        let line = recs.get(8).map_or(recs.last().map_or(1, |r| r.0), |r| r.0);
        return Err(at_line(line, format!("expected 8 records, found {}", recs.len())));
    }
    let (l0, t0) = &recs[0];
    expect_len(t0, 2, *l0)?;
    let w: u32 = unsigned(t0[0], *l0)?;
    let h: u32 = unsigned(t0[1], *l0)?;
    if w == 0 || h == 0 {
        return Err(at_line(*l0, "image size must be at least 1x1"));
    }
    let mut rows = Vec::with_capacity(7);
    for (line, toks) in &recs[1..] {
        expect_len(toks, 3, *line)?;
        rows.push(floats(toks, *line)?);
    }
    let mat = |k: usize| Matrix3::from_fn(|r, c| rows[k + r][c]);
    let (k, r) = (mat(0), mat(3));
    let t = Vector3::new(rows[6][0], rows[6][1], rows[6][2]);
    CameraModel::new(k, Matrix3::identity(), Vector3::zeros(), w, h)
        .map_err(|e| at_line(recs[1].0, e.to_string()))?;
    CameraModel::new(k, r, t, w, h).map_err(|e| at_line(recs[4].0, e.to_string()))
}

// ---------------------------------------------------------------------------
// Keypoints

pub fn format_keypoints(kps: &KeypointList) -> String {
    let mut s = String::new();
    for k in kps.iter() {
        s += &format!(
            "{} {} {} {} {}\n",
            fmt_f64(k.x),
            fmt_f64(k.y),
            fmt_f64(k.scale),
            fmt_f64(k.orientation),
            fmt_f64(k.score)
        );
    }
    s
}

pub fn parse_keypoints(bytes: &[u8]) -> Result<KeypointList, ParseError> {
    let s = text(bytes)?;
    let mut lines = Vec::new();
    let mut kps = Vec::new();
    for (line, toks) in records(s) {
        expect_len(&toks, 5, line)?;
        let v = floats(&toks, line)?;
        kps.push(Keypoint { x: v[0], y: v[1], scale: v[2], orientation: v[3], score: v[4] });
        lines.push(line);
    }
    KeypointList::new(kps).map_err(|e| match e {
        crate::matching::MatchError::InvalidKeypoint { index, reason } => at_line(lines[index], reason),
        other => at_line(1, other.to_string()),
    })
}

// ---------------------------------------------------------------------------
// Descriptors

pub fn format_descriptors(d: &DescriptorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(DESC_HEADER + d.count() * d.row_len() * 4);
    out.extend_from_slice(DESC_MAGIC);
    out.extend_from_slice(&DESCRIPTOR_VERSION.to_le_bytes());
    out.extend_from_slice(&(d.count() as u32).to_le_bytes());
    out.extend_from_slice(&(d.dim() as u32).to_le_bytes());
    match d.kind() {
        DescriptorKind::Float32 => {
            out.push(0);
            for v in d.float_data().expect("float set") {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        DescriptorKind::Binary => {
            out.push(1);
            out.extend_from_slice(d.binary_data().expect("binary set"));
        }
    }
    out
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, ParseError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| at_byte(bytes.len(), format!("truncated header: {} bytes", bytes.len())))
}

fn check_magic(bytes: &[u8], magic: &[u8; 4]) -> Result<(), ParseError> {
    match bytes.get(..4) {
        Some(m) if m == magic => Ok(()),
        Some(_) => Err(at_byte(0, format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)))),
        None => Err(at_byte(bytes.len(), format!("truncated header: {} bytes", bytes.len()))),
    }
}

fn payload_size(a: usize, b: usize, c: usize, header: usize) -> Option<usize> {
    a.checked_mul(b)?.checked_mul(c)?.checked_add(header)
}

fn check_size(bytes: &[u8], expected: Option<usize>) -> Result<(), ParseError> {
    match expected {
        Some(n) if n == bytes.len() => Ok(()),
        Some(n) => Err(at_byte(
            n.min(bytes.len()),
            format!("expected {n} bytes, found {}", bytes.len()),
        )),
        None => Err(at_byte(4, "declared size overflows")),
    }
}

pub fn parse_descriptors(bytes: &[u8]) -> Result<DescriptorSet, ParseError> {
    check_magic(bytes, DESC_MAGIC)?;
    let version = read_u32(bytes, 4)?;
    if version != DESCRIPTOR_VERSION {
        return Err(at_byte(4, format!("unsupported version {version}")));
    }
    let count = read_u32(bytes, 8)? as usize;
    let dim = read_u32(bytes, 12)? as usize;
    if dim == 0 {
        return Err(at_byte(12, "dimension must be positive"));
    }
    let kind = *bytes.get(16).ok_or_else(|| at_byte(bytes.len(), "truncated header"))?;
    let payload = &bytes[DESC_HEADER.min(bytes.len())..];
    match kind {
        0 => {
            check_size(bytes, payload_size(count, dim, 4, DESC_HEADER))?;
            let mut data = Vec::with_capacity(count * dim);
            for (k, c) in payload.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                if !v.is_finite() {
                    return Err(at_byte(DESC_HEADER + 4 * k, "non-finite descriptor value"));
                }
                data.push(v);
            }
            DescriptorSet::float(count, dim, data).map_err(|e| at_byte(DESC_HEADER, e.to_string()))
        }
        1 => {
            let row = dim.div_ceil(8);
            check_size(bytes, payload_size(count, row, 1, DESC_HEADER))?;
            let spare = row * 8 - dim;
            if spare > 0 {
                let low = 0xffu8 >> (8 - spare);
                if let Some(r) = payload.chunks(row).position(|c| c[row - 1] & low != 0) {
                    return Err(at_byte(DESC_HEADER + r * row + row - 1, "non-zero padding bits"));
                }
            }
            DescriptorSet::binary(count, dim, payload.to_vec()).map_err(|e| at_byte(DESC_HEADER, e.to_string()))
        }
        k => Err(at_byte(16, format!("unknown descriptor kind {k}"))),
    }
}

// ---------------------------------------------------------------------------
// Depth

pub fn format_depth(d: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(DEPTH_HEADER + d.values().len() * 4);
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&d.width().to_le_bytes());
    out.extend_from_slice(&d.height().to_le_bytes());
    for v in d.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_depth(bytes: &[u8]) -> Result<DepthMap, ParseError> {
    check_magic(bytes, DEPTH_MAGIC)?;
    let w = read_u32(bytes, 4)?;
    let h = read_u32(bytes, 8)?;
    if w == 0 || h == 0 {
        return Err(at_byte(4, "depth map size must be at least 1x1"));
    }
    check_size(bytes, payload_size(w as usize, h as usize, 4, DEPTH_HEADER))?;
    let mut values = Vec::with_capacity(w as usize * h as usize);
    for (k, c) in bytes[DEPTH_HEADER..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        if !v.is_finite() {
            return Err(at_byte(DEPTH_HEADER + 4 * k, "non-finite depth value"));
        }
        values.push(v);
    }
    DepthMap::new(w, h, values).map_err(|e| at_byte(DEPTH_HEADER, e.to_string()))
}

// ---------------------------------------------------------------------------
// Observations

/// One 2D observation of a 3D point.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub point_id: u64,
    pub image_id: String,
    pub xy: Vector2<f64>,
}

pub fn format_observations(obs: &[Observation]) -> String {
    let mut s = String::new();
    for o in obs {
        s += &format!("{} {} {} {}\n", o.point_id, o.image_id, fmt_f64(o.xy.x), fmt_f64(o.xy.y));
    }
    s
}

pub fn parse_observations(bytes: &[u8]) -> Result<Vec<Observation>, ParseError> {
    let s = text(bytes)?;
    let mut out = Vec::new();
    for (line, toks) in records(s) {
        expect_len(&toks, 4, line)?;
        if !is_valid_id(toks[1]) {
            return Err(at_line(line, format!("invalid image id {:?}", toks[1])));
        }
        out.push(Observation {
            point_id: unsigned(toks[0], line)?,
            image_id: toks[1].to_string(),
            xy: Vector2::new(float(toks[2], line)?, float(toks[3], line)?),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pair co-visibility cache

pub fn format_pairs(pairs: &[(String, String, f64)]) -> String {
    let mut s = String::new();
    for (a, b, v) in pairs {
        s += &format!("{a} {b} {}\n", fmt_f64(*v));
    }
    s
}

pub fn parse_pairs(bytes: &[u8]) -> Result<Vec<(String, String, f64)>, ParseError> {
    let s = text(bytes)?;
    let mut out = Vec::new();
    for (line, toks) in records(s) {
        expect_len(&toks, 3, line)?;
        for id in &toks[..2] {
            if !is_valid_id(id) {
                return Err(at_line(line, format!("invalid image id {id:?}")));
            }
        }
        let v = float(toks[2], line)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(at_line(line, format!("co-visibility {v} outside [0, 1]")));
        }
        out.push((toks[0].to_string(), toks[1].to_string(), v));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Matches

/// Header `#matches direction=<tag> provenance=<steps>`, then one
/// `index_i index_j distance [second_distance]` row per match.
pub fn format_matches(m: &MatchList) -> String {
    let mut s = format!("#matches direction={} provenance={}\n", m.direction.tag(), m.provenance_string());
    for e in &m.entries {
        s += &format!("{} {} {}", e.index_i, e.index_j, fmt_f64(e.distance));
        if let Some(sd) = e.second_distance {
            s += &format!(" {}", fmt_f64(sd));
        }
        s.push('\n');
    }
    s
}

pub fn parse_matches(bytes: &[u8]) -> Result<MatchList, ParseError> {
    let s = text(bytes)?;
    let mut lines = s.split('\n');
    let header = lines.next().unwrap_or("");
    let rest = header
        .strip_prefix("#matches ")
        .ok_or_else(|| at_line(1, "expected header \"#matches direction=<tag> provenance=<steps>\""))?;
    let rest = rest.strip_prefix("direction=").ok_or_else(|| at_line(1, "missing direction="))?;
    let (tag, rest) = rest.split_once(' ').ok_or_else(|| at_line(1, "missing provenance="))?;
    let direction: Direction = tag.parse().map_err(|e: String| at_line(1, e))?;
    let provenance = rest.strip_prefix("provenance=").ok_or_else(|| at_line(1, "missing provenance="))?;
    let provenance = MatchList::parse_provenance(provenance.trim_end_matches('\r'));

    let mut entries = Vec::new();
    for (k, l) in lines.enumerate() {
        let line = k + 2;
        let toks: Vec<&str> = l.split_ascii_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 && toks.len() != 4 {
            return Err(at_line(line, format!("expected 3 or 4 fields, found {}", toks.len())));
        }
        let distance = float(toks[2], line)?;
        let second_distance = toks.get(3).map(|t| float(t, line)).transpose()?;
        if distance < 0.0 || second_distance.is_some_and(|d| d < 0.0) {
            return Err(at_line(line, "distances must be non-negative"));
        }
        entries.push(Match {
            index_i: unsigned(toks[0], line)?,
            index_j: unsigned(toks[1], line)?,
            distance,
            second_distance,
        });
    }
    Ok(MatchList::new(entries, direction, provenance))
}

// ---------------------------------------------------------------------------
// Reconstructions

/// Camera poses of one ingested reconstruction. Images that are not listed
/// are unregistered. `#stat key value` lines are passed through.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reconstruction {
    pub poses: BTreeMap<String, CameraPose>,
    pub stats: BTreeMap<String, String>,
}

pub fn format_reconstruction(r: &Reconstruction) -> String {
    let mut s = String::new();
    for (k, v) in &r.stats {
        s += &format!("#stat {k} {v}\n");
    }
    for (id, p) in &r.poses {
        s += id;
        for v in p.rotation.transpose().iter().chain(p.translation.iter()) {
            s += " ";
            s += &fmt_f64(*v);
        }
        s.push('\n');
    }
    s
}

pub fn parse_reconstruction(bytes: &[u8]) -> Result<Reconstruction, ParseError> {
    let s = text(bytes)?;
    let mut out = Reconstruction::default();
    for (line, toks) in records(s) {
        if toks[0] == "#stat" {
            if toks.len() < 3 {
                return Err(at_line(line, "expected \"#stat <key> <value>\""));
            }
            out.stats.insert(toks[1].to_string(), toks[2..].join(" "));
            continue;
        }
        if toks[0].starts_with('#') {
            continue;
        }
        expect_len(&toks, 13, line)?;
        let v = floats(&toks[1..], line)?;
        // Rows of R are listed first; from_row_slice reads them in that order.
        let rotation = Matrix3::from_row_slice(&v[..9]);
        let translation = Vector3::new(v[9], v[10], v[11]);
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if err >= POSE_TOL || rotation.determinant() <= 0.0 {
            return Err(at_line(line, "rotation is not a proper orthonormal matrix"));
        }
        if out.poses.insert(toks[0].to_string(), CameraPose::new(rotation, translation)).is_some() {
            return Err(at_line(line, format!("duplicate image {}", toks[0])));
        }
    }
    Ok(out)
}
