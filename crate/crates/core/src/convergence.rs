//! Truncation behaviour of the per-frame harmonic expansion
//! `φ_G(n, x) = Σ_{k=1..G} x·(a_k·cos(2πkn/W) + b_k·sin(2πkn/W))`
//! with decaying coefficients `a_k = b_k = k⁻²`.
//!
//! The limit function has no closed form, so a `4G`-term evaluation stands in
//! for it.

use crate::stft_kan::harmonic_basis;

/// Coefficient of harmonic `k` (1-based).
fn coefficient(k: usize) -> f64 {
    1.0 / (k * k) as f64
}

/// `φ_G` at window position `n` for a frame sample `x`.
fn partial_sum(cos: &[f64], sin: &[f64], w: usize, terms: usize, n: usize, x: f64) -> f64 {
    (0..terms).map(|k| x * coefficient(k + 1) * (cos[k * w + n] + sin[k * w + n])).sum()
}

/// `sup |φ_4G − φ_G|` over window positions `n < W` and frame samples
/// `x ∈ {−C, C}`.
pub fn truncation_gap(grid_size: usize, window_size: usize, bound: f64) -> f64 {
    let long = 4 * grid_size;
    let (cos, sin) = harmonic_basis::<f64>(long, window_size);
    let (cos, sin) = (cos.data(), sin.data());
    let mut sup = 0.0f64;
    for n in 0..window_size {
        for x in [-bound, bound] {
            let gap =
                partial_sum(cos, sin, window_size, long, n, x) - partial_sum(cos, sin, window_size, grid_size, n, x);
            sup = sup.max(gap.abs());
        }
    }
    sup
}

/// `Σ_{k>G} k⁻⁴`, the full tail of the squared coefficients.
pub fn quartic_tail(grid_size: usize) -> f64 {
    let zeta4 = std::f64::consts::PI.powi(4) / 90.0;
    // Subtract the head; summing small terms first keeps the head accurate.
    let head: f64 = (1..=grid_size).rev().map(|k| coefficient(k).powi(2)).sum();
    (zeta4 - head).max(0.0)
}

/// `C·√2·sqrt(Σ_{k>G} 2k⁻⁴)`: a sup bound that omits the norm of the
/// basis tail.
pub fn coefficient_tail_bound(grid_size: usize, bound: f64) -> f64 {
    bound * 2f64.sqrt() * (2.0 * quartic_tail(grid_size)).sqrt()
}

/// Cauchy–Schwarz bound on the `4G` truncation gap:
/// `C·sqrt(Σ_{G<k≤4G} 2k⁻⁴)·sqrt(3G)`, since each of the `3G` omitted
/// harmonics contributes `cos² + sin² = 1` to the basis norm.
pub fn finite_tail_bound(grid_size: usize, bound: f64) -> f64 {
    let coeff: f64 = (grid_size + 1..=4 * grid_size).rev().map(|k| 2.0 * coefficient(k).powi(2)).sum();
    bound * coeff.sqrt() * ((3 * grid_size) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRIDS: [usize; 5] = [1, 2, 4, 8, 16];

    #[test]
    fn gap_at_origin_is_the_coefficient_tail() {
        // At n = 0 every cosine is 1 and every sine 0.
        for g in GRIDS {
            let tail: f64 = (g + 1..=4 * g).map(coefficient).sum();
            assert!((truncation_gap(g, 1, 1.0) - tail).abs() < 1e-14);
        }
    }

    #[test]
    fn gap_scales_with_amplitude_and_shrinks_in_g() {
        for w in [8, 64, 257] {
            let gaps: Vec<f64> = GRIDS.iter().map(|&g| truncation_gap(g, w, 1.0)).collect();
            assert!(gaps.windows(2).all(|p| p[1] < p[0]), "W={w}: {gaps:?}");
            assert!((truncation_gap(4, w, 2.5) - 2.5 * gaps[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_tail_bound_holds() {
        for w in [2, 3, 8, 64, 257] {
            for g in GRIDS {
                for c in [0.5, 1.0, 3.0] {
                    assert!(truncation_gap(g, w, c) <= finite_tail_bound(g, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn quartic_tail_matches_direct_sum() {
        for g in GRIDS {
            let direct: f64 = (g + 1..200_000).rev().map(|k| coefficient(k).powi(2)).sum();
            assert!((quartic_tail(g) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_tail_bound_is_too_tight() {
        // The gap decays like 1/G, the coefficient-only bound like G^-1.5.
        for g in GRIDS {
            assert!(truncation_gap(g, 64, 1.0) > coefficient_tail_bound(g, 1.0));
        }
        // Even the cosine-only gap at n = 0 escapes it from G = 4 on.
        for g in [4, 8, 16] {
            assert!(truncation_gap(g, 1, 1.0) > coefficient_tail_bound(g, 1.0));
        }
    }
}
