//! Binary cache of preprocessed clouds.
//!
//! ```text
//! "STPC"  u32 version
//! u32 class count, then per class: u32 byte length + UTF-8 name
//! u32 sample count, then per sample: u8 label + 1024×3 f32
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ndcore::Tensor;

use super::{Dataset, PointCloud};

pub const CACHE_MAGIC: &[u8; 4] = b"STPC";
pub const CACHE_VERSION: u32 = 1;
/// Points per cached sample.
pub const CACHE_POINTS: usize = 1024;

pub fn write_cache_to(w: &mut impl Write, dataset: &Dataset) -> Result<()> {
    if dataset.class_names.len() > 256 {
        return Err(Error::Data(format!("{} classes do not fit a u8 label", dataset.class_names.len())));
    }
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(dataset.class_names.len() as u32).to_le_bytes())?;
    for name in &dataset.class_names {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    w.write_all(&(dataset.clouds.len() as u32).to_le_bytes())?;
    for c in &dataset.clouds {
        if c.points.shape() != [CACHE_POINTS, 3] {
            return Err(Error::Data(format!(
                "{}: cache samples must be [{CACHE_POINTS} x 3], got {:?}",
                c.source_id,
                c.points.shape()
            )));
        }
        if c.label >= dataset.class_names.len() {
            return Err(Error::Data(format!("{}: label {} out of range", c.source_id, c.label)));
        }
        w.write_all(&[c.label as u8])?;
        for &v in c.points.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_cache(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_cache_to(&mut w, dataset)?;
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_cache_from(r: &mut impl Read) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format(format!("not a point-cloud cache (magic {magic:?})")));
    }
    let version = read_u32(r)?;
    if version != CACHE_VERSION {
        return Err(Error::Format(format!("cache version {version} is not supported (expected {CACHE_VERSION})")));
    }
    let classes = read_u32(r)? as usize;
    let mut class_names = Vec::with_capacity(classes.min(256));
    for _ in 0..classes {
        let len = read_u32(r)? as usize;
        let mut bytes = Vec::new();
        r.take(len as u64).read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(Error::Io(std::io::ErrorKind::UnexpectedEof.into()));
        }
        class_names.push(String::from_utf8(bytes).map_err(|_| Error::Format("class name is not UTF-8".into()))?);
    }
    let samples = read_u32(r)? as usize;
    let mut clouds = Vec::with_capacity(samples.min(1 << 16));
    let mut buf = vec![0u8; CACHE_POINTS * 3 * 4];
    for i in 0..samples {
        let mut label = [0u8; 1];
        r.read_exact(&mut label)?;
        let label = label[0] as usize;
        if label >= classes {
            return Err(Error::Format(format!("sample {i}: label {label} out of range")));
        }
        r.read_exact(&mut buf)?;
        let data = buf.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).collect();
        clouds.push(PointCloud { points: Tensor::new(&[CACHE_POINTS, 3], data)?, label, source_id: format!("#{i}") });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    Ok(Dataset { clouds, class_names })
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    read_cache_from(&mut BufReader::new(fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Rng;

    fn dataset() -> Dataset {
        let mut rng = Rng::new(1);
        let clouds = (0..3)
            .map(|i| {
                let pts: Tensor<f64> = rng.uniform::<f32>(-1.0, 1.0, &[CACHE_POINTS, 3]).unwrap().cast();
                PointCloud { points: pts, label: i % 2, source_id: format!("#{i}") }
            })
            .collect();
        Dataset { clouds, class_names: vec!["Douglas fir".into(), "Red oak".into()] }
    }

    fn bytes(d: &Dataset) -> Vec<u8> {
        let mut out = Vec::new();
        write_cache_to(&mut out, d).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bitwise() {
        let d = dataset();
        let b = bytes(&d);
        assert_eq!(b.len(), 4 + 4 + 4 + (4 + 11) + (4 + 7) + 4 + 3 * (1 + CACHE_POINTS * 12));
        let back = read_cache_from(&mut b.as_slice()).unwrap();
        assert_eq!(back.class_names, d.class_names);
        for (a, b) in back.clouds.iter().zip(&d.clouds) {
            assert_eq!(a.label, b.label);
            assert!(a.points.data().iter().zip(b.points.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let b = bytes(&dataset());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(read_cache_from(&mut bad.as_slice()), Err(Error::Format(_))));
        let mut bad = b.clone();
        bad[4..8].copy_from_slice(&(CACHE_VERSION + 1).to_le_bytes());
        assert!(matches!(read_cache_from(&mut bad.as_slice()), Err(Error::Format(_))));
        for cut in [2, 10, 20, b.len() - 1] {
            assert!(matches!(read_cache_from(&mut &b[..cut]), Err(Error::Io(_))), "cut {cut}");
        }
        let mut long = b.clone();
        long.push(0);
        assert!(matches!(read_cache_from(&mut long.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_wrong_point_count() {
        let mut d = dataset();
        d.clouds[1].points = Tensor::zeros(&[512, 3]);
        assert!(matches!(write_cache_to(&mut Vec::new(), &d), Err(Error::Data(_))));
    }
}
