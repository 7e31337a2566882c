//! Reconstruction quality metrics on `[0,1]`-normalized cubes.
//!
//! PSNR and SSIM are computed per spatial band and averaged over bands; SAM
//! treats each spatial position as a spectral vector and averages the angle
//! over positions. Conventions: PSNR peak 1.0, capped at 100 dB per band;
//! SSIM uses an 11x11 Gaussian window (sigma 1.5) with the usual constants
//! K1 = 0.01, K2 = 0.03 at dynamic range 1.0; SAM is reported in radians.

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Per-band cap: identical bands report this instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01; // (K1 * range)^2
const SSIM_C2: f64 = 0.03 * 0.03; // (K2 * range)^2

fn check_dims(reference: &Tensor3, reconstruction: &Tensor3) -> Result<()> {
    if reference.dims() != reconstruction.dims() {
        return Err(Error::shape(format!(
            "metric inputs have dims {:?} and {:?}",
            reference.dims(),
            reconstruction.dims()
        )));
    }
    Ok(())
}

/// Band-averaged peak signal-to-noise ratio in dB, peak 1.0.
pub fn psnr(reference: &Tensor3, reconstruction: &Tensor3) -> Result<f64> {
    check_dims(reference, reconstruction)?;
    let plane = (reference.rows() * reference.cols()) as f64;
    let mut total = 0.0;
    for l in 0..reference.bands() {
        let mse: f64 = reference
            .band(l)
            .iter()
            .zip(reconstruction.band(l))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / plane;
        let band_db = if mse == 0.0 {
            PSNR_CAP_DB
        } else {
            (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
        };
        total += band_db;
    }
    Ok(total / reference.bands() as f64)
}

/// Normalized 11-tap Gaussian window.
fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Valid-mode separable Gaussian filtering of one band plane.
fn filter_valid(img: &[f64], rows: usize, cols: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oc = cols - SSIM_WINDOW + 1;
    let or = rows - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; rows * oc];
    for r in 0..rows {
        let src = &img[r * cols..(r + 1) * cols];
        let dst = &mut horiz[r * oc..(r + 1) * oc];
        for (c, d) in dst.iter_mut().enumerate() {
            *d = taps.iter().zip(&src[c..c + SSIM_WINDOW]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; or * oc];
    for r in 0..or {
        let dst = &mut out[r * oc..(r + 1) * oc];
        for (i, t) in taps.iter().enumerate() {
            let src = &horiz[(r + i) * oc..(r + i + 1) * oc];
            for (d, v) in dst.iter_mut().zip(src) {
                *d += t * v;
            }
        }
    }
    out
}

/// Band-averaged structural similarity in `[-1, 1]`.
pub fn ssim(reference: &Tensor3, reconstruction: &Tensor3) -> Result<f64> {
    check_dims(reference, reconstruction)?;
    let (rows, cols, bands) = reference.dims();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::argument(format!(
            "ssim needs spatial extents of at least {SSIM_WINDOW}, got {rows}x{cols}"
        )));
    }
    let taps = gaussian_taps();
    let mut total = 0.0;
    for l in 0..bands {
        let a = reference.band(l);
        let b = reconstruction.band(l);
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
        let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
        let mu_a = filter_valid(a, rows, cols, &taps);
        let mu_b = filter_valid(b, rows, cols, &taps);
        let e_aa = filter_valid(&aa, rows, cols, &taps);
        let e_bb = filter_valid(&bb, rows, cols, &taps);
        let e_ab = filter_valid(&prod, rows, cols, &taps);
        let mut acc = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
        }
        total += acc / mu_a.len() as f64;
    }
    Ok(total / bands as f64)
}

/// Spectral angle mean plus the count of positions skipped because either
/// spectral vector was identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sam {
    pub radians: f64,
    pub skipped: usize,
}

/// Pixel-averaged spectral angle mapper in radians.
pub fn sam(reference: &Tensor3, reconstruction: &Tensor3) -> Result<Sam> {
    check_dims(reference, reconstruction)?;
    let (rows, cols, bands) = reference.dims();
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for m in 0..rows {
        for n in 0..cols {
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for l in 0..bands {
                let a = reference.get(m, n, l);
                let b = reconstruction.get(m, n, l);
                dot += a * b;
                na += a * a;
                nb += b * b;
            }
            if na == 0.0 || nb == 0.0 {
                skipped += 1;
                continue;
            }
            // Aligned or anti-aligned vectors (identical inputs included)
            // must give exactly 0 or pi; the division/sqrt path would lose
            // that to acos's ill-conditioning near |cos| = 1.
            let angle = if dot * dot >= na * nb {
                if dot >= 0.0 {
                    0.0
                } else {
                    std::f64::consts::PI
                }
            } else {
                (dot / (na * nb).sqrt()).clamp(-1.0, 1.0).acos()
            };
            total += angle;
            counted += 1;
        }
    }
    let radians = if counted == 0 { 0.0 } else { total / counted as f64 };
    Ok(Sam { radians, skipped })
}
