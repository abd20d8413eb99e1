//! Synthetic three-class shape dataset: sphere surface, cube surface and a
//! flat disc, each randomly rotated.

use std::f64::consts::PI;

use crate::ndcore::{Rng, Tensor};

use super::{normalize_unit_sphere, Dataset, PointCloud};

pub const SHAPE_NAMES: [&str; 3] = ["sphere", "cube", "disc"];

fn sphere_point(rng: &mut Rng) -> [f64; 3] {
    loop {
        let v = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 1e-12 {
            return v.map(|x| x / r);
        }
    }
}

fn cube_point(rng: &mut Rng) -> [f64; 3] {
    let face = rng.int_inclusive(0, 5);
    let mut p = [rng.uniform_f64(-1.0, 1.0), rng.uniform_f64(-1.0, 1.0), rng.uniform_f64(-1.0, 1.0)];
    p[face / 2] = if face.is_multiple_of(2) { -1.0 } else { 1.0 };
    p
}

fn disc_point(rng: &mut Rng) -> [f64; 3] {
    let r = rng.uniform_f64(0.0, 1.0).sqrt();
    let t = rng.uniform_f64(0.0, 2.0 * PI);
    [r * t.cos(), r * t.sin(), 0.0]
}

/// Uniformly random rotation, from a normalised random quaternion.
fn random_rotation(rng: &mut Rng) -> [[f64; 3]; 3] {
    let mut q = [0.0; 4];
    let mut norm = 0.0;
    while norm < 1e-12 {
        q = std::array::from_fn(|_| rng.standard_normal());
        norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let [w, x, y, z] = q.map(|v| v / norm);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// One normalised cloud of `class` (index into [`SHAPE_NAMES`]).
pub fn shape_cloud(class: usize, points: usize, rng: &mut Rng) -> Tensor<f64> {
    let rot = random_rotation(rng);
    let mut data = Vec::with_capacity(points * 3);
    for _ in 0..points {
        let p = match class {
            0 => sphere_point(rng),
            1 => cube_point(rng),
            _ => disc_point(rng),
        };
        data.extend(rot.iter().map(|r| r[0] * p[0] + r[1] * p[1] + r[2] * p[2]));
    }
    normalize_unit_sphere(&Tensor::new(&[points, 3], data).expect("shape"))
}

/// `per_class` clouds of each shape, class by class, fully determined by `seed`.
pub fn shapes_dataset(per_class: usize, points: usize, seed: u64) -> Dataset {
    let mut rng = Rng::new(seed);
    let mut clouds = Vec::with_capacity(3 * per_class);
    for (label, name) in SHAPE_NAMES.iter().enumerate() {
        for i in 0..per_class {
            clouds.push(PointCloud {
                points: shape_cloud(label, points, &mut rng),
                label,
                source_id: format!("{name}-{i:03}"),
            });
        }
    }
    Dataset { clouds, class_names: SHAPE_NAMES.iter().map(|s| s.to_string()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norms(t: &Tensor<f64>) -> Vec<f64> {
        t.data().chunks(3).map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).collect()
    }

    #[test]
    fn shapes_have_their_geometry() {
        let mut rng = Rng::new(0);
        let sphere = shape_cloud(0, 200, &mut rng);
        let n = norms(&sphere);
        // Centring moves points off the exact sphere only slightly.
        assert!(n.iter().all(|&r| r > 0.8 && r <= 1.0 + 1e-12));

        let disc = shape_cloud(2, 200, &mut rng);
        // Points are coplanar: the 3×3 scatter matrix is singular.
        let mut s = [[0.0; 3]; 3];
        for p in disc.data().chunks(3) {
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] += p[i] * p[j];
                }
            }
        }
        let det = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) - s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0])
            + s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
        assert!(det.abs() < 1e-6, "{det}");
    }

    #[test]
    fn dataset_is_seeded_and_balanced() {
        let a = shapes_dataset(4, 64, 9);
        assert_eq!(a.clouds.len(), 12);
        assert_eq!(a.clouds.iter().filter(|c| c.label == 1).count(), 4);
        let b = shapes_dataset(4, 64, 9);
        assert!(a.clouds.iter().zip(&b.clouds).all(|(x, y)| x.points == y.points));
    }
}
