//! Snapshot files, quick-look images and the energy log.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::energy::PhaseDensity;
use crate::grid::{GridError, GridField};

const MAGIC: &[u8; 4] = b"TDF1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a field snapshot (bad magic)")]
    BadMagic,
    #[error("snapshot has {0} channels, expected {1}")]
    ChannelCount(usize, usize),
    #[error("malformed {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Header `TDF1`, `u32 n`, `u32 channels`, then `n·n` little-endian `f64`
/// per channel, row-major.
pub fn write_snapshot(path: &Path, channels: &[&GridField]) -> Result<(), IoError> {
    let n = channels.first().map(|c| c.n()).ok_or(IoError::Malformed("empty channel list"))?;
    for c in channels {
        if c.n() != n {
            return Err(GridError::ResolutionMismatch(n, c.n()).into());
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(channels.len() as u32).to_le_bytes())?;
    for c in channels {
        for v in c.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Vec<GridField>, IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 12];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![0u8; n * n * 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(GridField::new(n, data)?);
    }
    let mut rest = Vec::new();
    if r.read_to_end(&mut rest)? != 0 {
        return Err(IoError::Malformed("trailing bytes in snapshot"));
    }
    Ok(out)
}

pub fn write_density(path: &Path, u: &PhaseDensity) -> Result<(), IoError> {
    write_snapshot(path, &[&u.u1, &u.u2])
}

pub fn read_density(path: &Path) -> Result<PhaseDensity, IoError> {
    let mut ch = read_snapshot(path)?;
    if ch.len() != 2 {
        return Err(IoError::ChannelCount(ch.len(), 2));
    }
    let u2 = ch.pop().unwrap();
    let u1 = ch.pop().unwrap();
    PhaseDensity::new(u1, u2).map_err(|_| IoError::Malformed("channel sizes differ"))
}

/// 8-bit binary PGM, linearly scaled from the field's range.
pub fn write_pgm(path: &Path, f: &GridField) -> Result<(), IoError> {
    let n = f.n();
    let lo = f.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = f.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let bytes: Vec<u8> = f
        .data()
        .iter()
        .map(|v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Reads an 8-bit P5 image; returns `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let (kind, w, h, px) = read_netpbm(path)?;
    if kind != "P5" {
        return Err(IoError::Malformed("pgm magic"));
    }
    Ok((w, h, px))
}

/// Phase 1 red, phase 2 blue, background white, blended by volume fraction.
pub fn write_composite_ppm(path: &Path, u: &PhaseDensity) -> Result<(), IoError> {
    let n = u.n();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(3 * n * n);
    for (&a, &b) in u.u1.data().iter().zip(u.u2.data()) {
        let a = a.clamp(0.0, 1.0);
        let b = b.clamp(0.0, 1.0 - a);
        let z = 1.0 - a - b;
        let rgb = [z + a, z, z + b];
        bytes.extend(rgb.iter().map(|c| (255.0 * c).round().clamp(0.0, 255.0) as u8));
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let (kind, w, h, px) = read_netpbm(path)?;
    if kind != "P6" {
        return Err(IoError::Malformed("ppm magic"));
    }
    Ok((w, h, px))
}

fn read_netpbm(path: &Path) -> Result<(String, usize, usize, Vec<u8>), IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(IoError::Malformed("image header"));
        }
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| IoError::Malformed("image header"));
    let (w, h) = (parse(&tokens[1])?, parse(&tokens[2])?);
    if parse(&tokens[3])? != 255 {
        return Err(IoError::Malformed("image depth"));
    }
    let per = if tokens[0] == "P6" { 3 } else { 1 };
    let mut px = vec![0u8; w * h * per];
    r.read_exact(&mut px)?;
    Ok((tokens[0].clone(), w, h, px))
}

/// One row of the energy log.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub total: f64,
    pub gradient: f64,
    pub well: f64,
    pub nonlocal: f64,
    pub mass1_drift: f64,
    pub mass2_drift: f64,
}

pub const ENERGY_CSV_HEADER: &str =
    "step,time,total,gradient_term,well_term,nonlocal_term,mass1_drift,mass2_drift";

pub fn write_energy_csv(path: &Path, rows: &[EnergyRecord]) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{ENERGY_CSV_HEADER}")?;
    for r in rows {
        // `{:e}` prints the shortest representation that round-trips.
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.step, r.time, r.total, r.gradient, r.well, r.nonlocal, r.mass1_drift, r.mass2_drift
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRecord>, IoError> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == ENERGY_CSV_HEADER => {}
        _ => return Err(IoError::Malformed("energy log header")),
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(IoError::Malformed("energy log row"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| IoError::Malformed("energy log value"));
        out.push(EnergyRecord {
            step: f[0].parse().map_err(|_| IoError::Malformed("energy log step"))?,
            time: num(f[1])?,
            total: num(f[2])?,
            gradient: num(f[3])?,
            well: num(f[4])?,
            nonlocal: num(f[5])?,
            mass1_drift: num(f[6])?,
            mass2_drift: num(f[7])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("ternary-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let a = GridField::from_fn(16, |x, y| (x * 7.3).sin() + y * y * 1e-300).unwrap();
        let b = GridField::from_fn(16, |x, y| x * y - 0.1).unwrap();
        let p = tmp("snap.tdf");
        write_snapshot(&p, &[&a, &b]).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back, vec![a, b]);
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"TDF1");
        assert_eq!(bytes.len(), 12 + 2 * 16 * 16 * 8);
    }

    #[test]
    fn rejects_foreign_files() {
        let p = tmp("bad.tdf");
        std::fs::write(&p, b"PK\x03\x04abcdefgh").unwrap();
        assert!(matches!(read_snapshot(&p), Err(IoError::BadMagic)));
    }

    #[test]
    fn images_round_trip() {
        let u1 = GridField::from_fn(8, |x, _| if x < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let u2 = GridField::from_fn(8, |x, y| if x >= 0.0 && y < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let u = PhaseDensity::new(u1.clone(), u2).unwrap();
        let p = tmp("c.ppm");
        write_composite_ppm(&p, &u).unwrap();
        let (w, h, px) = read_ppm(&p).unwrap();
        assert_eq!((w, h), (8, 8));
        assert_eq!(&px[..3], &[255, 0, 0]);
        let last = 3 * (8 * 8 - 1);
        assert_eq!(&px[last..last + 3], &[255, 255, 255]);
        let q = tmp("c.pgm");
        write_pgm(&q, &u1).unwrap();
        let (_, _, g) = read_pgm(&q).unwrap();
        assert_eq!(g[0], 255);
        assert_eq!(g[63], 0);
    }

    #[test]
    fn energy_log_round_trip() {
        let rows = vec![
            EnergyRecord {
                step: 0,
                time: 0.0,
                total: 0.123456789012345,
                gradient: 1e-3 / 3.0,
                well: 2.0f64.sqrt(),
                nonlocal: 0.0,
                mass1_drift: 0.0,
                mass2_drift: -1e-17,
            },
            EnergyRecord {
                step: 5,
                time: 0.5,
                total: 1.0,
                gradient: 0.1,
                well: 0.2,
                nonlocal: 0.7,
                mass1_drift: 0.0,
                mass2_drift: 0.0,
            },
        ];
        let p = tmp("e.csv");
        write_energy_csv(&p, &rows).unwrap();
        assert_eq!(read_energy_csv(&p).unwrap(), rows);
    }
}
