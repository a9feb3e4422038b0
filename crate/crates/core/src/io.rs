//! GBD1 depth files and ASCII PLY point clouds.
//!
//! GBD1 layout: magic `GBD1`, u32-LE width, u32-LE height, f64-LE standoff,
//! then width×height f32-LE depths in meters, row-major, NaN = invalid.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::domain::{is_valid_depth, DepthImage, PointCloud, INVALID_DEPTH};

pub const GBD1_MAGIC: [u8; 4] = *b"GBD1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn gbd1_err(reason: impl Into<String>) -> IoError {
    IoError::Format {
        what: "GBD1 file",
        reason: reason.into(),
    }
}

/// Encodes a depth image. Invalid pixels are written as quiet NaN.
pub fn encode_gbd1(depth: &DepthImage, standoff: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 4 * depth.data().len());
    out.extend_from_slice(&GBD1_MAGIC);
    out.extend_from_slice(&(depth.width() as u32).to_le_bytes());
    out.extend_from_slice(&(depth.height() as u32).to_le_bytes());
    out.extend_from_slice(&standoff.to_le_bytes());
    for &d in depth.data() {
        let d = if is_valid_depth(d) { d } else { INVALID_DEPTH };
        out.extend_from_slice(&d.to_le_bytes());
    }
    out
}

/// Decodes a GBD1 buffer into the image and its standoff.
pub fn decode_gbd1(bytes: &[u8]) -> Result<(DepthImage, f64), IoError> {
    if bytes.len() < 20 {
        return Err(gbd1_err(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if bytes[..4] != GBD1_MAGIC {
        return Err(gbd1_err("bad magic"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let standoff = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if !(standoff.is_finite() && standoff > 0.0) {
        return Err(gbd1_err(format!("standoff {standoff}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| gbd1_err("dimensions overflow"))?;
    let body = &bytes[20..];
    if body.len() != 4 * n {
        return Err(gbd1_err(format!(
            "{width}x{height} needs {} payload bytes, found {}",
            4 * n,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let depth = DepthImage::new(width, height, data).map_err(|e| gbd1_err(e.to_string()))?;
    Ok((depth, standoff))
}

pub fn write_gbd1(path: &Path, depth: &DepthImage, standoff: f64) -> Result<(), IoError> {
    fs::write(path, encode_gbd1(depth, standoff)).map_err(io_err(path))
}

pub fn read_gbd1(path: &Path) -> Result<(DepthImage, f64), IoError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    decode_gbd1(&bytes)
}

/// Writes `cloud` as ASCII PLY with float x, y, z.
pub fn write_ply<W: Write>(mut w: W, cloud: &PointCloud) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "end_header")?;
    for p in cloud.iter() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

fn ply_err(reason: impl Into<String>) -> IoError {
    IoError::Format {
        what: "PLY file",
        reason: reason.into(),
    }
}

/// Reads an ASCII PLY vertex list. Extra vertex properties are skipped;
/// x, y and z must all be present.
pub fn read_ply<R: BufRead>(r: R) -> Result<PointCloud, IoError> {
    let mut lines = r.lines();
    let mut next = || -> Result<Option<String>, IoError> {
        lines.next().transpose().map_err(|e| ply_err(e.to_string()))
    };
    if next()?.as_deref().map(str::trim) != Some("ply") {
        return Err(ply_err("missing `ply` header"));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    loop {
        let line = next()?.ok_or_else(|| ply_err("header not terminated"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] if *fmt != "ascii" => {
                return Err(ply_err(format!("unsupported format {fmt}")));
            }
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|e| ply_err(e.to_string()))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => {
                return Err(ply_err("list properties on vertices are unsupported"));
            }
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            _ => {}
        }
    }
    let count = count.ok_or_else(|| ply_err("no vertex element"))?;
    let col = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| ply_err(format!("no `{name}` property")))
    };
    let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let line =
            next()?.ok_or_else(|| ply_err(format!("expected {count} vertices, found {k}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| ply_err(format!("vertex {k}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != props.len() {
            return Err(ply_err(format!("vertex {k} has {} values", vals.len())));
        }
        let p = Vector3::new(vals[ix], vals[iy], vals[iz]);
        if !p.iter().all(|c| c.is_finite()) {
            return Err(ply_err(format!("vertex {k} is not finite")));
        }
        points.push(p);
    }
    Ok(PointCloud::new(points))
}

pub fn save_ply(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    write_ply(&mut w, cloud)
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

pub fn load_ply(path: &Path) -> Result<PointCloud, IoError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    read_ply(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let d = DepthImage::new(2, 1, vec![0.5, f32::NAN]).unwrap();
        let b = encode_gbd1(&d, 0.8);
        assert_eq!(&b[..4], b"GBD1");
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..12], &[1, 0, 0, 0]);
        assert_eq!(&b[12..20], &0.8f64.to_le_bytes());
        assert_eq!(&b[20..24], &0.5f32.to_le_bytes());
        assert!(f32::from_le_bytes(b[24..28].try_into().unwrap()).is_nan());
        assert_eq!(b.len(), 28);
    }

    #[test]
    fn rejects_bad_files() {
        let good = encode_gbd1(&DepthImage::filled(3, 2, 0.7), 0.8);
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_gbd1(&bad_magic).is_err());
        assert!(decode_gbd1(&good[..good.len() - 1]).is_err());
        assert!(decode_gbd1(&good[..10]).is_err());
        let mut negative = good.clone();
        negative[20..24].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(decode_gbd1(&negative).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.gbd1");
        let d = DepthImage::new(2, 2, vec![0.1, 0.2, f32::NAN, 0.8]).unwrap();
        write_gbd1(&path, &d, 0.8).unwrap();
        let (back, s) = read_gbd1(&path).unwrap();
        assert_eq!(back.to_bits(), d.to_bits());
        assert_eq!(s, 0.8);
        assert!(matches!(
            read_gbd1(&dir.path().join("missing")),
            Err(IoError::Io { .. })
        ));
    }

    #[test]
    fn ply_with_extra_properties() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float z\nproperty uchar red\nproperty float x\nproperty float y\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n3 255 1 2\n6 0 4 5\n";
        let c = read_ply(text.as_bytes()).unwrap();
        assert_eq!(
            c.points,
            vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0)]
        );
        assert!(read_ply("ply\nformat binary_little_endian 1.0\nend_header\n".as_bytes()).is_err());
        assert!(read_ply("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn gbd1_round_trips_bits(
            w in 1usize..12,
            h in 1usize..12,
            seed in prop::collection::vec(prop::option::of(0.01f32..10.0), 144),
            standoff in 0.1f64..5.0,
        ) {
            let data: Vec<f32> = (0..w * h).map(|i| seed[i].unwrap_or(f32::NAN)).collect();
            let d = DepthImage::new(w, h, data).unwrap();
            let (back, s) = decode_gbd1(&encode_gbd1(&d, standoff)).unwrap();
            prop_assert_eq!(back.width(), w);
            prop_assert_eq!(back.height(), h);
            prop_assert_eq!(s.to_bits(), standoff.to_bits());
            for (a, b) in back.data().iter().zip(d.data()) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }

        #[test]
        fn ply_round_trips(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0), 0..50)) {
            let cloud: PointCloud = pts.iter().map(|&(x, y, z)| Vector3::new(x, y, z)).collect();
            let mut buf = Vec::new();
            write_ply(&mut buf, &cloud).unwrap();
            prop_assert_eq!(read_ply(buf.as_slice()).unwrap(), cloud);
        }
    }
}
