use crate::error::{Error, Result};
use crate::ndcore::Rng;

use super::PointCloud;

/// Largest class weight; keeps tiny classes from dominating the loss.
pub const MAX_CLASS_WEIGHT: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
    pub class_names: Vec<String>,
    pub class_weights: Vec<f64>,
}

impl DatasetSplit {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn train_counts(&self) -> Vec<usize> {
        counts(&self.train, self.classes())
    }

    pub fn test_counts(&self) -> Vec<usize> {
        counts(&self.test, self.classes())
    }
}

pub fn counts(clouds: &[PointCloud], classes: usize) -> Vec<usize> {
    let mut c = vec![0; classes];
    for cloud in clouds {
        c[cloud.label] += 1;
    }
    c
}

/// Training samples taken from a class of `count`: `round(ratio·count)`,
/// kept within `[1, count − 1]`.
pub fn train_share(count: usize, ratio: f64) -> usize {
    ((ratio * count as f64).round() as usize).clamp(1, count - 1)
}

/// Splits each class separately after a seeded shuffle of its members.
pub fn stratified_split(
    clouds: Vec<PointCloud>,
    class_names: Vec<String>,
    ratio: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let classes = class_names.len();
    let mut by_class: Vec<Vec<PointCloud>> = vec![Vec::new(); classes];
    for c in clouds {
        if c.label >= classes {
            return Err(Error::Data(format!("{}: label {} out of range", c.source_id, c.label)));
        }
        by_class[c.label].push(c);
    }
    let mut rng = Rng::new(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (name, mut members) in class_names.iter().zip(by_class) {
        if members.len() < 2 {
            return Err(Error::Data(format!("class `{name}` has {} sample(s), need at least 2", members.len())));
        }
        rng.shuffle(&mut members);
        let k = train_share(members.len(), ratio);
        test.extend(members.split_off(k));
        train.extend(members);
    }
    let class_weights = class_weights(&counts(&train, classes))?;
    Ok(DatasetSplit { train, test, class_names, class_weights })
}

/// `min(mean/count, 10)` for classes below the mean count, 1 otherwise.
pub fn class_weights(train_counts: &[usize]) -> Result<Vec<f64>> {
    if train_counts.is_empty() || train_counts.contains(&0) {
        return Err(Error::Data(format!("every class needs training samples, counts {train_counts:?}")));
    }
    let mean = train_counts.iter().sum::<usize>() as f64 / train_counts.len() as f64;
    Ok(train_counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            if c < mean {
                (mean / c).min(MAX_CLASS_WEIGHT)
            } else {
                1.0
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Tensor;

    fn fake(counts: &[usize]) -> (Vec<PointCloud>, Vec<String>) {
        let mut clouds = Vec::new();
        for (label, &n) in counts.iter().enumerate() {
            for i in 0..n {
                clouds.push(PointCloud { points: Tensor::zeros(&[1, 3]), label, source_id: format!("{label}-{i}") });
            }
        }
        (clouds, counts.iter().enumerate().map(|(i, _)| format!("c{i}")).collect())
    }

    #[test]
    fn reproduces_reference_distribution() {
        let full = [164, 183, 158, 100, 39, 25, 22];
        let (clouds, names) = fake(&full);
        let split = stratified_split(clouds, names, 0.8, 0).unwrap();
        assert_eq!(split.train_counts(), vec![131, 146, 126, 80, 31, 20, 18]);
        assert_eq!(split.test_counts(), vec![33, 37, 32, 20, 8, 5, 4]);
        assert_eq!((split.train.len(), split.test.len()), (552, 139));
    }

    #[test]
    fn partition_and_determinism() {
        let (clouds, names) = fake(&[10, 7, 3]);
        let a = stratified_split(clouds.clone(), names.clone(), 0.8, 5).unwrap();
        let b = stratified_split(clouds.clone(), names.clone(), 0.8, 5).unwrap();
        let ids = |v: &[PointCloud]| v.iter().map(|c| c.source_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a.train), ids(&b.train));
        let mut all = ids(&a.train);
        all.extend(ids(&a.test));
        all.sort();
        let mut expected = ids(&clouds);
        expected.sort();
        assert_eq!(all, expected);
        let c = stratified_split(clouds, names, 0.8, 6).unwrap();
        assert_ne!(ids(&a.train), ids(&c.train));
    }

    #[test]
    fn test_fraction_within_one_sample() {
        for n in 2..200 {
            let test = n - train_share(n, 0.8);
            assert!((test as f64 - 0.2 * n as f64).abs() <= 1.0, "n={n}");
        }
    }

    #[test]
    fn tiny_class_rejected() {
        let (clouds, names) = fake(&[5, 1]);
        assert!(matches!(stratified_split(clouds, names, 0.8, 0), Err(Error::Data(_))));
    }

    #[test]
    fn weights() {
        let w = class_weights(&[131, 146, 126, 80, 31, 20, 18]).unwrap();
        assert!((w[6] - (552.0 / 7.0) / 18.0).abs() < 1e-12);
        assert!((w[6] - 4.381).abs() < 1e-3);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[3], 1.0);
        assert_eq!(class_weights(&[5, 5, 5]).unwrap(), vec![1.0; 3]);
        assert_eq!(class_weights(&[1000, 1]).unwrap()[1], MAX_CLASS_WEIGHT);
        assert!(class_weights(&[3, 0]).is_err());
    }
}
