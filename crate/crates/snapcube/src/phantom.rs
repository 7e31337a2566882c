//! Synthetic spectral scenes for experiments and tests.
//!
//! A phantom is a sum of spatial Gaussian bumps, each carrying a smooth
//! nonnegative spectral signature (a mixture of three Gaussian profiles
//! over the band index), normalized so the global maximum is exactly 1.
//! Everything is drawn deterministically from the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor3;

struct Blob {
    center_m: f64,
    center_n: f64,
    spatial_sigma: f64,
    amplitude: f64,
    // Three spectral Gaussian components: (weight, mean, sigma).
    spectral: [(f64, f64, f64); 3],
}

/// Deterministic random phantom with `blobs` Gaussian bumps. Values lie in
/// `[0,1]` with maximum exactly 1; `blobs = 0` yields the zero cube. The
/// spectral sigmas are kept >= 1.4 bands so adjacent-band jumps stay small.
pub fn make_phantom(rows: usize, cols: usize, bands: usize, blobs: usize, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_extent = rows.min(cols) as f64;
    let spectral_sigma_hi = (bands as f64 / 3.0).max(1.8);
    let blobs: Vec<Blob> = (0..blobs)
        .map(|_| Blob {
            center_m: rng.random_range(0.0..=(rows.saturating_sub(1)) as f64),
            center_n: rng.random_range(0.0..=(cols.saturating_sub(1)) as f64),
            spatial_sigma: (rng.random_range(0.04..0.11) * min_extent).max(1.0),
            amplitude: rng.random_range(0.4..1.0),
            spectral: std::array::from_fn(|_| {
                (
                    rng.random_range(0.25..1.0),
                    rng.random_range(0.0..=(bands.saturating_sub(1)) as f64),
                    rng.random_range(1.4..spectral_sigma_hi),
                )
            }),
        })
        .collect();

    let mut cube = Tensor3::from_fn(rows, cols, bands, |m, n, l| {
        let mut v = 0.0;
        for b in &blobs {
            let dm = m as f64 - b.center_m;
            let dn = n as f64 - b.center_n;
            let spatial =
                (-(dm * dm + dn * dn) / (2.0 * b.spatial_sigma * b.spatial_sigma)).exp();
            let mut spectral = 0.0;
            for (weight, mean, sigma) in b.spectral {
                let dl = l as f64 - mean;
                spectral += weight * (-dl * dl / (2.0 * sigma * sigma)).exp();
            }
            v += b.amplitude * spatial * spectral;
        }
        v
    });
    let max = cube.data().iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        cube = cube.scale(1.0 / max);
    }
    cube
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_is_normalized_with_exact_unit_max() {
        let p = make_phantom(32, 32, 8, 5, 7);
        assert!(p.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let max = p.data().iter().cloned().fold(0.0_f64, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn phantom_is_deterministic() {
        let a = make_phantom(16, 16, 6, 4, 3);
        let b = make_phantom(16, 16, 6, 4, 3);
        assert_eq!(a, b);
        let c = make_phantom(16, 16, 6, 4, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_blobs_give_zero_cube() {
        let p = make_phantom(8, 8, 4, 0, 1);
        assert!(p.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spectra_are_smooth_across_bands() {
        for seed in 0..10u64 {
            let p = make_phantom(24, 24, 10, 6, seed);
            let mut worst = 0.0_f64;
            for m in 0..24 {
                for n in 0..24 {
                    for l in 0..9 {
                        worst = worst.max((p.get(m, n, l + 1) - p.get(m, n, l)).abs());
                    }
                }
            }
            assert!(worst <= 0.5, "seed {seed}: max adjacent-band jump {worst}");
        }
    }

    #[test]
    fn degenerate_extents_are_handled() {
        let p = make_phantom(1, 1, 1, 3, 5);
        assert_eq!(p.dims(), (1, 1, 1));
        assert_eq!(p.get(0, 0, 0), 1.0);
    }
}
