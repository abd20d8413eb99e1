//! Dataset pipeline: reading clouds, farthest-point sampling, unit-sphere
//! normalisation, stratified splitting, class weights, augmentation and the
//! binary cache.

mod cache;
mod io;
mod sampling;
mod split;
pub mod synth;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use cache::{read_cache, read_cache_from, write_cache, write_cache_to, CACHE_MAGIC, CACHE_POINTS, CACHE_VERSION};
pub use io::{parse_ply, parse_xyz, read_cloud, write_ply, write_xyz, CloudFormat, RawCloud};
pub use sampling::{augment_translate, fps, fps_indices, normalize_unit_sphere};
pub use split::{class_weights, counts, stratified_split, train_share, DatasetSplit, MAX_CLASS_WEIGHT};

use crate::error::{Error, Result};
use crate::ndcore::Tensor;

/// Default per-axis translation range for augmentation.
pub const DEFAULT_MAX_SHIFT: f64 = 0.2;
/// Default train fraction.
pub const TRAIN_RATIO: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    /// `[n × 3]` coordinates.
    pub points: Tensor<f64>,
    pub label: usize,
    pub source_id: String,
}

/// Labelled clouds with their class names, before splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub clouds: Vec<PointCloud>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split(self, ratio: f64, seed: u64) -> Result<DatasetSplit> {
        stratified_split(self.clouds, self.class_names, ratio, seed)
    }
}

/// Class names, plus `(label, path)` for every cloud file.
pub type Listing = (Vec<String>, Vec<(usize, std::path::PathBuf)>);

/// Cloud files under `<root>/<class>/`, classes and files in name order.
pub fn list_directory(root: impl AsRef<Path>) -> Result<Listing> {
    let root = root.as_ref();
    let mut class_dirs: Vec<_> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter(|e| !e.file_name().to_string_lossy().starts_with('.'))
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Data(format!("{}: no class directories", root.display())));
    }
    let mut names = Vec::new();
    let mut files = Vec::new();
    for dir in class_dirs {
        let label = names.len();
        let mut entries: Vec<_> =
            fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect();
        entries.sort();
        let before = files.len();
        for path in entries {
            if CloudFormat::from_path(&path).is_ok() {
                files.push((label, path));
            } else {
                log::warn!("skipping {}: not an .xyz or .ply file", path.display());
            }
        }
        if files.len() == before {
            return Err(Error::Data(format!("{}: class directory holds no clouds", dir.display())));
        }
        names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    Ok((names, files))
}

/// Farthest-point samples `points` clouds, normalises them to the unit sphere
/// and rounds coordinates to 32-bit precision.
pub fn preprocess_cloud(points: &Tensor<f64>, m: usize) -> Result<Tensor<f64>> {
    let sampled = normalize_unit_sphere(&fps(points, m)?);
    Ok(sampled.map(|v| v as f32 as f64))
}

/// Reads and preprocesses every cloud under `root` in parallel.
pub fn load_directory(root: impl AsRef<Path>, points: usize) -> Result<Dataset> {
    let (class_names, files) = list_directory(root)?;
    let clouds = files
        .par_iter()
        .map(|(label, path)| {
            let raw = read_cloud(path)?;
            Ok(PointCloud { points: preprocess_cloud(&raw.points, points)?, label: *label, source_id: raw.source_id })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { clouds, class_names })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        for (class, n) in [("pine", 3), ("ash", 2)] {
            let d = dir.path().join(class);
            fs::create_dir(&d).unwrap();
            for i in 0..n {
                let pts = crate::ndcore::Rng::new(i).uniform::<f64>(0.0, 10.0, &[50, 3]).unwrap();
                write_xyz(d.join(format!("t{i}.xyz")), &pts).unwrap();
            }
            fs::write(d.join("notes.txt"), "x").unwrap();
        }
        let ds = load_directory(dir.path(), 16).unwrap();
        assert_eq!(ds.class_names, vec!["ash", "pine"]);
        assert_eq!(ds.clouds.len(), 5);
        assert_eq!(ds.clouds.iter().map(|c| c.label).collect::<Vec<_>>(), vec![0, 0, 1, 1, 1]);
        for c in &ds.clouds {
            assert_eq!(c.points.shape(), &[16, 3]);
            assert!(c.points.data().iter().all(|&v| v == v as f32 as f64));
        }
    }

    #[test]
    fn empty_class_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("empty")).unwrap();
        assert!(matches!(load_directory(dir.path(), 16), Err(Error::Data(_))));
    }

    #[test]
    fn parse_errors_propagate_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("oak");
        fs::create_dir(&d).unwrap();
        fs::write(d.join("a.xyz"), "1 2 3\n4 5\n").unwrap();
        assert!(matches!(load_directory(dir.path(), 4), Err(Error::Parse { line: 2, .. })));
    }
}
