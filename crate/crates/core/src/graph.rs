//! k-NN graphs, EdgeConv feature assembly, edge max-aggregation and global
//! max+mean pooling, each with its backward pass.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ndcore::{ReduceKind, Scalar, Tensor};

/// Directed k-nearest-neighbour graph; row `i` of `neighbors` lists the `k`
/// closest other points, nearest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnGraph {
    n: usize,
    k: usize,
    neighbors: Vec<usize>,
}

impl KnnGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.neighbors
    }
}

/// Exact Euclidean k-NN by brute force over `points: [n × d]`.
///
/// Self-loops are excluded; equal distances are ordered by point index.
pub fn knn<T: Scalar>(points: &Tensor<T>, k: usize) -> Result<KnnGraph> {
    let (n, d) = match points.shape() {
        [n, d] => (*n, *d),
        s => return Err(Error::Dimension(format!("knn expects [n x d] points, got {s:?}"))),
    };
    if k == 0 || n <= k {
        return Err(Error::Config(format!("knn needs n > k >= 1, got n={n}, k={k}")));
    }
    points.check_finite("knn")?;
    let data = points.data();
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = &data[i * d..(i + 1) * d];
            let mut cand: Vec<(T, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let pj = &data[j * d..(j + 1) * d];
                    let dist = pi.iter().zip(pj).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
                    (dist, j)
                })
                .collect();
            let order =
                |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, order);
                cand.truncate(k);
            }
            cand.sort_unstable_by(order);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(KnnGraph { n, k, neighbors: rows.concat() })
}

/// Edge features `[n·k × 2d]`: row `i·k + e` is `(x_i, x_j − x_i)` for the
/// `e`-th neighbour `j` of `i`.
pub fn edge_features<T: Scalar>(x: &Tensor<T>, graph: &KnnGraph) -> Result<Tensor<T>> {
    let d = match x.shape() {
        [n, d] if *n == graph.n => *d,
        s => return Err(Error::Dimension(format!("edge features: graph has {} points, features {s:?}", graph.n))),
    };
    let mut out = Vec::with_capacity(graph.n * graph.k * 2 * d);
    for i in 0..graph.n {
        let xi = x.row(i);
        for &j in graph.neighbors(i) {
            let xj = x.row(j);
            out.extend_from_slice(xi);
            out.extend(xj.iter().zip(xi).map(|(&b, &a)| b - a));
        }
    }
    Tensor::new(&[graph.n * graph.k, 2 * d], out)
}

/// Gradient of [`edge_features`] with respect to `x`.
pub fn edge_features_backward<T: Scalar>(grad: &Tensor<T>, graph: &KnnGraph) -> Result<Tensor<T>> {
    let d = match grad.shape() {
        [rows, w] if *rows == graph.n * graph.k && w % 2 == 0 => w / 2,
        s => return Err(Error::Dimension(format!("edge feature gradient has shape {s:?}"))),
    };
    let mut gx = vec![T::zero(); graph.n * d];
    for i in 0..graph.n {
        for (e, &j) in graph.neighbors(i).iter().enumerate() {
            let g = grad.row(i * graph.k + e);
            for c in 0..d {
                let (g_center, g_rel) = (g[c], g[d + c]);
                gx[i * d + c] += g_center - g_rel;
                gx[j * d + c] += g_rel;
            }
        }
    }
    Tensor::new(&[graph.n, d], gx)
}

/// Channelwise max over each point's `k` edges: `[n·k × c] → [n × c]`.
///
/// The second value holds, per output entry, the winning edge slot in `0..k`.
pub fn edge_aggregate_max<T: Scalar>(per_edge: &Tensor<T>, k: usize) -> Result<(Tensor<T>, Vec<usize>)> {
    let (rows, c) = match per_edge.shape() {
        [r, c] if k > 0 && r % k == 0 => (*r, *c),
        s => return Err(Error::Dimension(format!("edge aggregation of {s:?} with k={k}"))),
    };
    let r = per_edge.clone().reshape(&[rows / k, k, c])?.reduce(1, ReduceKind::Max)?;
    Ok((r.values, r.argmax.expect("max reduction reports argmax")))
}

/// Routes each aggregated gradient back to its winning edge only.
pub fn edge_aggregate_max_backward<T: Scalar>(grad: &Tensor<T>, argmax: &[usize], k: usize) -> Result<Tensor<T>> {
    let (n, c) = match grad.shape() {
        [n, c] if n * c == argmax.len() => (*n, *c),
        s => return Err(Error::Dimension(format!("edge max gradient {s:?} vs {} slots", argmax.len()))),
    };
    let mut out = vec![T::zero(); n * k * c];
    for i in 0..n {
        for ch in 0..c {
            let e = argmax[i * c + ch];
            out[(i * k + e) * c + ch] = grad.data()[i * c + ch];
        }
    }
    Tensor::new(&[n * k, c], out)
}

/// `[n × c] → [1 × 2c]`: channelwise max over points, then channelwise mean.
pub fn global_pool<T: Scalar>(features: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let c = match features.shape() {
        [n, c] if *n > 0 => *c,
        s => return Err(Error::Dimension(format!("global pool needs [n>=1 x c], got {s:?}"))),
    };
    let max = features.reduce(0, ReduceKind::Max)?;
    let mean = features.reduce(0, ReduceKind::Mean)?;
    let mut data = max.values.into_data();
    data.extend_from_slice(mean.values.data());
    Ok((Tensor::new(&[1, 2 * c], data)?, max.argmax.expect("max reduction reports argmax")))
}

/// Max half goes to the arg-max point, mean half is spread as `1/n`.
pub fn global_pool_backward<T: Scalar>(grad: &Tensor<T>, argmax: &[usize], n: usize) -> Result<Tensor<T>> {
    let c = argmax.len();
    if grad.len() != 2 * c || n == 0 {
        return Err(Error::Dimension(format!("global pool gradient of length {} for {c} channels", grad.len())));
    }
    let inv_n = T::one() / T::from_f64(n as f64);
    let g = grad.data();
    let mut out = vec![T::zero(); n * c];
    for row in out.chunks_mut(c) {
        for (ch, v) in row.iter_mut().enumerate() {
            *v = g[c + ch] * inv_n;
        }
    }
    for (ch, &p) in argmax.iter().enumerate() {
        out[p * c + ch] += g[ch];
    }
    Tensor::new(&[n, c], out)
}
