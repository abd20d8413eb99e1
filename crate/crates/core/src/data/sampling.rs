//! Farthest-point sampling, unit-sphere normalisation and rigid translation
//! augmentation.

use crate::error::{Error, Result};
use crate::ndcore::{Rng, Scalar, Tensor};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroid(points: &Tensor<f64>) -> [f64; 3] {
    let n = points.rows() as f64;
    let mut c = [0.0; 3];
    for p in points.data().chunks(3) {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.map(|v| v / n)
}

/// Greedy farthest-point order over all `n` points: starts at the point
/// nearest the centroid and repeatedly takes the point farthest from the
/// selected set. Ties go to the lowest index.
fn fps_order(points: &Tensor<f64>, m: usize) -> Vec<usize> {
    let n = points.rows();
    let c = centroid(points);
    let mut start = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let d = sq_dist(points.row(i), &c);
        if d < best {
            best = d;
            start = i;
        }
    }
    let mut order = Vec::with_capacity(m);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut current = start;
    for _ in 0..m {
        order.push(current);
        let p = points.row(current);
        let mut next = 0;
        let mut far = f64::NEG_INFINITY;
        for (i, md) in min_dist.iter_mut().enumerate() {
            let d = sq_dist(points.row(i), p);
            if d < *md {
                *md = d;
            }
            if *md > far {
                far = *md;
                next = i;
            }
        }
        current = next;
    }
    order
}

/// Indices of `m` farthest-point samples. With fewer than `m` points, the
/// full farthest-point ordering is repeated cyclically.
pub fn fps_indices(points: &Tensor<f64>, m: usize) -> Result<Vec<usize>> {
    let n = match points.shape() {
        [n, 3] if *n > 0 => *n,
        s => return Err(Error::Data(format!("fps needs a non-empty [n x 3] cloud, got {s:?}"))),
    };
    if m == 0 {
        return Err(Error::Config("fps sample count must be >= 1".into()));
    }
    let order = fps_order(points, m.min(n));
    Ok((0..m).map(|i| order[i % order.len()]).collect())
}

/// The `m` farthest-point samples as a `[m × 3]` cloud.
pub fn fps(points: &Tensor<f64>, m: usize) -> Result<Tensor<f64>> {
    let idx = fps_indices(points, m)?;
    let data = idx.iter().flat_map(|&i| points.row(i).iter().copied()).collect();
    Tensor::new(&[m, 3], data)
}

/// Centres the cloud and scales it so the farthest point has norm 1. A cloud
/// whose points all coincide maps to the origin.
pub fn normalize_unit_sphere(points: &Tensor<f64>) -> Tensor<f64> {
    let c = centroid(points);
    let centred: Vec<f64> = points.data().chunks(3).flat_map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]).collect();
    let radius = centred.chunks(3).map(|p| sq_dist(p, &[0.0; 3])).fold(0.0, f64::max).sqrt();
    let scale = if radius > 0.0 { 1.0 / radius } else { 1.0 };
    Tensor::new(points.shape(), centred.into_iter().map(|v| v * scale).collect()).expect("same shape")
}

/// Adds one offset drawn from `[−max_shift, max_shift]³` to every point.
pub fn augment_translate<T: Scalar>(points: &Tensor<T>, rng: &mut Rng, max_shift: f64) -> Tensor<T> {
    if max_shift <= 0.0 {
        return points.clone();
    }
    let offset: [T; 3] = std::array::from_fn(|_| T::from_f64(rng.uniform_f64(-max_shift, max_shift)));
    let data = points.data().chunks(3).flat_map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]]).collect();
    Tensor::new(points.shape(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Rng;
    use proptest::prelude::*;

    fn cloud(data: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(&[data.len() / 3, 3], data).unwrap()
    }

    /// Straightforward re-statement of the sampling rule.
    fn fps_reference(points: &Tensor<f64>, m: usize) -> Vec<usize> {
        let n = points.rows();
        let mean: Vec<f64> = (0..3).map(|a| (0..n).map(|i| points.row(i)[a]).sum::<f64>() / n as f64).collect();
        let start = (0..n)
            .min_by(|&a, &b| {
                sq_dist(points.row(a), &mean).partial_cmp(&sq_dist(points.row(b), &mean)).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let mut chosen = vec![start];
        while chosen.len() < m.min(n) {
            let score =
                |i: usize| chosen.iter().map(|&j| sq_dist(points.row(i), points.row(j))).fold(f64::INFINITY, f64::min);
            let next = (0..n).max_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap().then(b.cmp(&a))).unwrap();
            chosen.push(next);
        }
        (0..m).map(|i| chosen[i % chosen.len()]).collect()
    }

    #[test]
    fn collinear_hand_case() {
        let c = cloud(&[0., 0., 0., 1., 0., 0., 2., 0., 0., 3., 0., 0.]);
        assert_eq!(fps_indices(&c, 2).unwrap(), vec![1, 3]);
    }

    #[test]
    fn m_equal_n_selects_everything() {
        let c = Rng::new(1).uniform::<f64>(-1.0, 1.0, &[17, 3]).unwrap();
        let mut idx = fps_indices(&c, 17).unwrap();
        idx.sort();
        assert_eq!(idx, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn short_clouds_cycle() {
        let c = cloud(&[0., 0., 0., 1., 0., 0., 5., 0., 0.]);
        let idx = fps_indices(&c, 7).unwrap();
        assert_eq!(&idx[3..6], &idx[..3]);
        assert_eq!(idx[6], idx[0]);
        assert_eq!(fps(&c, 7).unwrap().shape(), &[7, 3]);
    }

    #[test]
    fn matches_reference() {
        let mut rng = Rng::new(2);
        for trial in 0..40 {
            let n = 1 + trial % 32;
            let c = rng.uniform::<f64>(-1.0, 1.0, &[n, 3]).unwrap();
            for m in [1, n / 2 + 1, n, n + 3] {
                assert_eq!(fps_indices(&c, m).unwrap(), fps_reference(&c, m));
            }
        }
    }

    #[test]
    fn spread_beats_random_subsets() {
        let mut rng = Rng::new(3);
        let min_pair = |c: &Tensor<f64>, idx: &[usize]| {
            let mut best = f64::INFINITY;
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a + 1..] {
                    best = best.min(sq_dist(c.row(i), c.row(j)));
                }
            }
            best
        };
        for _ in 0..100 {
            let c = rng.uniform::<f64>(-1.0, 1.0, &[40, 3]).unwrap();
            let chosen = fps_indices(&c, 8).unwrap();
            let mut all: Vec<usize> = (0..40).collect();
            rng.shuffle(&mut all);
            assert!(min_pair(&c, &chosen) >= min_pair(&c, &all[..8]));
        }
    }

    #[test]
    fn empty_cloud_errors() {
        assert!(matches!(fps_indices(&Tensor::zeros(&[0, 3]), 4), Err(Error::Data(_))));
    }

    #[test]
    fn normalization_cases() {
        let c = cloud(&[1., 0., 0., -1., 0., 0.]);
        assert_eq!(normalize_unit_sphere(&c), c);
        let c = cloud(&[2., 0., 0., 0., 0., 0.]);
        assert_eq!(normalize_unit_sphere(&c).data(), &[1., 0., 0., -1., 0., 0.]);
        let c = cloud(&[4., -2., 7.]);
        assert_eq!(normalize_unit_sphere(&c).data(), &[0., 0., 0.]);
    }

    #[test]
    fn translation_cancels_after_normalization() {
        let c = Rng::new(4).uniform::<f64>(-3.0, 5.0, &[30, 3]).unwrap();
        let moved = augment_translate(&c, &mut Rng::new(5), 10.0);
        let (a, b) = (normalize_unit_sphere(&c), normalize_unit_sphere(&moved));
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn augmentation_is_rigid_and_seeded() {
        let c = Rng::new(6).uniform::<f32>(-1.0, 1.0, &[20, 3]).unwrap();
        let a = augment_translate(&c, &mut Rng::new(7), 0.2);
        assert_eq!(a, augment_translate(&c, &mut Rng::new(7), 0.2));
        assert_eq!(augment_translate(&c, &mut Rng::new(7), 0.0), c);
        let shift: Vec<f32> = (0..3).map(|k| a.data()[k] - c.data()[k]).collect();
        assert!(shift.iter().all(|s| s.abs() <= 0.2 + 1e-6));
        for (p, q) in a.data().chunks(3).zip(c.data().chunks(3)) {
            for k in 0..3 {
                assert!((p[k] - q[k] - shift[k]).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(data in proptest::collection::vec(-100.0f64..100.0, 3..60)) {
            let n = data.len() / 3;
            let c = Tensor::from_f64(&[n, 3], &data[..n * 3]).unwrap();
            let once = normalize_unit_sphere(&c);
            let twice = normalize_unit_sphere(&once);
            for (x, y) in once.data().iter().zip(twice.data()) {
                prop_assert!((x - y).abs() < 1e-6);
            }
            let r = once.data().chunks(3).map(|p| sq_dist(p, &[0.0; 3])).fold(0.0, f64::max).sqrt();
            prop_assert!(r == 0.0 || (r - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fps_returns_input_indices(n in 1usize..30, m in 1usize..40, seed in 0u64..1000) {
            let c = Rng::new(seed).uniform::<f64>(-1.0, 1.0, &[n, 3]).unwrap();
            let idx = fps_indices(&c, m).unwrap();
            prop_assert_eq!(idx.len(), m);
            prop_assert!(idx.iter().all(|&i| i < n));
            let distinct: std::collections::BTreeSet<_> = idx.iter().collect();
            prop_assert_eq!(distinct.len(), m.min(n));
        }
    }
}
