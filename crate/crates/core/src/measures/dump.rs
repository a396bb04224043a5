//! Serialization of path ensembles and measure flows.
//!
//! CSV: header `time,particle,x0,...,x{d-1}`, rows ordered by time then particle.
//!
//! Binary (all integers and floats little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `MVLPATH1` or `MVLFLOW1`          |
//! | 8      | 4    | format version (`1`)                    |
//! | 12     | 4    | state dimension `d`                     |
//! | 16     | 8    | particle count `N`                      |
//! | 24     | 8    | grid intervals `n`                      |
//! | 32     | 8    | horizon `T` (f64)                       |
//! | 40     | ...  | `(n+1) * N * d` f64 states, time-major  |

use std::io::{Read, Write};
use std::sync::Arc;

use super::ensemble::{parse_f64, ParticleEnsemble};
use super::grid::TimeGrid;
use super::paths::{MeasureFlow, PathEnsemble};
use crate::error::{Error, Result};

pub const PATH_MAGIC: [u8; 8] = *b"MVLPATH1";
pub const FLOW_MAGIC: [u8; 8] = *b"MVLFLOW1";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

fn write_frames_csv<W: Write>(
    out: W,
    grid: &TimeGrid,
    dim: usize,
    frame: impl Fn(usize) -> Arc<[f64]>,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string(), "particle".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    writer.write_record(&header)?;
    for k in 0..grid.len() {
        let t = grid.point(k).to_string();
        let data = frame(k);
        for (i, x) in data.chunks_exact(dim).enumerate() {
            let mut row = Vec::with_capacity(dim + 2);
            row.push(t.clone());
            row.push(i.to_string());
            row.extend(x.iter().map(f64::to_string));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_paths_csv<W: Write>(paths: &PathEnsemble, out: W) -> Result<()> {
    write_frames_csv(out, paths.grid(), paths.dim(), |k| paths.frame(k).into())
}

pub fn write_flow_csv<W: Write>(flow: &MeasureFlow, out: W) -> Result<()> {
    if flow.ensembles().iter().any(|e| !e.is_uniform()) {
        return Err(Error::Unsupported(
            "flow CSV carries no weights; ensembles must be uniform".into(),
        ));
    }
    write_frames_csv(out, flow.grid(), flow.dim(), |k| {
        flow.at(k).shared_states().clone()
    })
}

fn read_frames_csv<R: Read>(input: R) -> Result<(TimeGrid, usize, Vec<Arc<[f64]>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() < 3 || &header[0] != "time" || &header[1] != "particle" {
        return Err(Error::parse(1, "header must start with `time,particle,x0`"));
    }
    let dim = header.len() - 2;
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("x{j}") {
            return Err(Error::parse(1, format!("expected column `x{j}`, found `{name}`")));
        }
    }

    let mut times: Vec<f64> = Vec::new();
    let mut frames: Vec<Vec<f64>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let t = parse_f64(&record[0], line)?;
        let particle: usize = record[1]
            .parse()
            .map_err(|_| Error::parse(line, "particle is not an index"))?;
        if particle == 0 {
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(Error::parse(line, "times must increase"));
                }
            }
            times.push(t);
            frames.push(Vec::new());
        }
        let frame = frames
            .last_mut()
            .ok_or_else(|| Error::parse(line, "first row must be particle 0"))?;
        if frame.len() != particle * dim {
            return Err(Error::parse(line, "particles must be listed in order"));
        }
        for field in record.iter().skip(2) {
            frame.push(parse_f64(field, line)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::parse(0, "need at least two time points"));
    }
    if times[0] != 0.0 {
        return Err(Error::parse(2, "first time must be 0"));
    }
    let width = frames[0].len();
    if frames.iter().any(|f| f.len() != width) {
        return Err(Error::parse(0, "every time point needs the same particles"));
    }
    let grid = TimeGrid::new(*times.last().unwrap(), times.len() - 1)
        .map_err(|e| Error::parse(0, e.to_string()))?;
    for (k, &t) in times.iter().enumerate() {
        let expected = grid.point(k);
        if (t - expected).abs() > 1e-9 * grid.horizon().max(1.0) {
            return Err(Error::parse(0, format!("time {t} is off the uniform grid")));
        }
    }
    Ok((grid, dim, frames.into_iter().map(Arc::from).collect()))
}

pub fn read_paths_csv<R: Read>(input: R) -> Result<PathEnsemble> {
    let (grid, dim, frames) = read_frames_csv(input)?;
    PathEnsemble::from_frames(grid, dim, frames)
}

pub fn read_flow_csv<R: Read>(input: R) -> Result<MeasureFlow> {
    Ok(read_paths_csv(input)?.to_flow())
}

fn write_binary<W: Write>(
    mut out: W,
    magic: [u8; 8],
    grid: &TimeGrid,
    dim: usize,
    count: usize,
    frame: impl Fn(usize) -> Arc<[f64]>,
) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&magic);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&(dim as u32).to_le_bytes());
    header.extend_from_slice(&(count as u64).to_le_bytes());
    header.extend_from_slice(&(grid.intervals() as u64).to_le_bytes());
    header.extend_from_slice(&grid.horizon().to_le_bytes());
    out.write_all(&header)?;
    let mut buf = Vec::new();
    for k in 0..grid.len() {
        buf.clear();
        for v in frame(k).iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_paths_binary<W: Write>(paths: &PathEnsemble, out: W) -> Result<()> {
    write_binary(out, PATH_MAGIC, paths.grid(), paths.dim(), paths.len(), |k| {
        paths.frame(k).into()
    })
}

pub fn write_flow_binary<W: Write>(flow: &MeasureFlow, out: W) -> Result<()> {
    if flow.ensembles().iter().any(|e| !e.is_uniform()) {
        return Err(Error::Unsupported(
            "binary flow dump carries no weights; ensembles must be uniform".into(),
        ));
    }
    write_binary(out, FLOW_MAGIC, flow.grid(), flow.dim(), flow.size(), |k| {
        flow.at(k).shared_states().clone()
    })
}

/// Decodes a binary dump from memory, checking every header field and the
/// exact payload length before touching the data.
fn decode_binary(bytes: &[u8], magic: [u8; 8]) -> Result<(TimeGrid, usize, Vec<Arc<[f64]>>)> {
    let bad = |msg: &str| Error::parse(0, msg.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if bytes[..8] != magic {
        return Err(bad("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(8) != FORMAT_VERSION {
        return Err(bad("unsupported format version"));
    }
    let dim = u32_at(12) as usize;
    let count = usize::try_from(u64_at(16)).map_err(|_| bad("particle count too large"))?;
    let intervals = usize::try_from(u64_at(24)).map_err(|_| bad("interval count too large"))?;
    let horizon = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    if dim == 0 || count == 0 {
        return Err(bad("empty ensemble"));
    }
    let grid = TimeGrid::new(horizon, intervals).map_err(|e| bad(&e.to_string()))?;
    let width = count.checked_mul(dim).ok_or_else(|| bad("size overflow"))?;
    let values = width
        .checked_mul(grid.intervals().checked_add(1).ok_or_else(|| bad("size overflow"))?)
        .ok_or_else(|| bad("size overflow"))?;
    let payload = values.checked_mul(8).ok_or_else(|| bad("size overflow"))?;
    if bytes.len() - HEADER_LEN != payload {
        return Err(bad("payload length does not match header"));
    }
    let data = &bytes[HEADER_LEN..];
    let frames = data
        .chunks_exact(width * 8)
        .map(|chunk| {
            chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect::<Vec<_>>()
                .into()
        })
        .collect();
    Ok((grid, dim, frames))
}

pub fn decode_paths_binary(bytes: &[u8]) -> Result<PathEnsemble> {
    let (grid, dim, frames) = decode_binary(bytes, PATH_MAGIC)?;
    PathEnsemble::from_frames(grid, dim, frames).map_err(|e| Error::parse(0, e.to_string()))
}

pub fn decode_flow_binary(bytes: &[u8]) -> Result<MeasureFlow> {
    let (grid, dim, frames) = decode_binary(bytes, FLOW_MAGIC)?;
    let count = frames[0].len() / dim;
    if frames.iter().flat_map(|f| f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::parse(0, "non-finite state"));
    }
    let ensembles = frames
        .into_iter()
        .enumerate()
        .map(|(k, f)| ParticleEnsemble::from_parts(dim, f, count, grid.point(k)))
        .collect();
    MeasureFlow::new(grid, ensembles)
}

pub fn read_paths_binary<R: Read>(mut input: R) -> Result<PathEnsemble> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_paths_binary(&bytes)
}

pub fn read_flow_binary<R: Read>(mut input: R) -> Result<MeasureFlow> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_flow_binary(&bytes)
}
