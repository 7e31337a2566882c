//! Reference reconstructions: back-projection and a sparsity
//! proximal-gradient solver in a 3-D DCT basis.
//!
//! Back-projection normalizes the adjoint image by the per-voxel sensing
//! weight, giving a cheap quality floor. The proximal-gradient baseline
//! minimizes
//!
//! ```text
//! 0.5 * ||y - H vect(C x1 D1' x2 D2' x3 D3')||^2 + lambda * ||C||_1
//! ```
//!
//! over DCT coefficients `C` with a monotone accelerated scheme
//! (soft-threshold prox, step `1/L` from 30 power iterations, restart to
//! the best iterate whenever acceleration overshoots), so the objective
//! never increases across iterations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cassi::{adjoint, adjoint_stacked, forward, CodedApertureSet, MeasurementSet};
use crate::error::{Error, Result};
use crate::tensor::{mode_product, Matrix, Tensor3};

/// Adjoint image divided by the per-voxel sensing weight `H^T 1`; voxels no
/// measurement touches are left at zero.
pub fn back_projection(
    m: &MeasurementSet,
    a: &CodedApertureSet,
    dims: (usize, usize, usize),
) -> Result<Tensor3> {
    let numerator = adjoint(m, a, dims)?;
    let ones = vec![1.0; m.stacked_len()];
    let weights = adjoint_stacked(&ones, a, dims)?;
    let mut out = numerator;
    out.data_mut()
        .iter_mut()
        .zip(weights.data())
        .for_each(|(v, w)| {
            if *w > 0.0 {
                *v /= w;
            } else {
                *v = 0.0;
            }
        });
    Ok(out)
}

/// Orthonormal type-II DCT matrix: row `k` holds the frequency-`k` basis
/// vector sampled at the `n` grid points.
pub fn dct_matrix(n: usize) -> Matrix {
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    Matrix::from_fn(n, n, |k, i| {
        let s = if k == 0 { scale0 } else { scale };
        s * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n as f64)).cos()
    })
}

/// Soft-thresholding: `sign(v) * max(|v| - t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

struct DctBasis {
    d1: Matrix,
    d2: Matrix,
    d3: Matrix,
}

impl DctBasis {
    fn new(dims: (usize, usize, usize)) -> Self {
        Self {
            d1: dct_matrix(dims.0),
            d2: dct_matrix(dims.1),
            d3: dct_matrix(dims.2),
        }
    }

    /// Coefficients -> image domain.
    fn synthesize(&self, c: &Tensor3) -> Result<Tensor3> {
        let x = mode_product(c, &self.d1.transpose(), 1)?;
        let x = mode_product(&x, &self.d2.transpose(), 2)?;
        mode_product(&x, &self.d3.transpose(), 3)
    }

    /// Image domain -> coefficients (the adjoint of `synthesize`).
    fn analyze(&self, x: &Tensor3) -> Result<Tensor3> {
        let c = mode_product(x, &self.d1, 1)?;
        let c = mode_product(&c, &self.d2, 2)?;
        mode_product(&c, &self.d3, 3)
    }
}

/// The default sparsity weight: `0.01 * ||analyze(H^T y)||_inf`.
pub fn default_lambda(
    m: &MeasurementSet,
    a: &CodedApertureSet,
    dims: (usize, usize, usize),
) -> Result<f64> {
    let basis = DctBasis::new(dims);
    let back = adjoint(m, a, dims)?;
    let coeffs = basis.analyze(&back)?;
    let peak = coeffs.data().iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    Ok(0.01 * peak)
}

/// Largest eigenvalue of `analyze . H^T H . synthesize` by 30 power
/// iterations (equals the squared largest singular value of `H`).
fn operator_norm_sq(a: &CodedApertureSet, dims: (usize, usize, usize), basis: &DctBasis) -> Result<f64> {
    let (m, n, l) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut b = Tensor3::from_fn(m, n, l, |_, _, _| rng.random_range(-1.0..1.0));
    let mut lambda = 0.0;
    for _ in 0..30 {
        let x = basis.synthesize(&b)?;
        let hx = forward(&x, a)?.stacked();
        let back = adjoint_stacked(&hx, a, dims)?;
        let next = basis.analyze(&back)?;
        lambda = next.norm_sq().sqrt();
        if lambda == 0.0 {
            return Err(Error::numerical(
                "sensing operator is identically zero; cannot estimate a step size",
            ));
        }
        b = next.scale(1.0 / lambda);
    }
    Ok(lambda)
}

/// Accelerated proximal-gradient reconstruction with an l1 penalty on 3-D
/// DCT coefficients. Returns the reconstruction and the per-iteration
/// objective values (index 0 is the starting objective at zero
/// coefficients).
pub fn fista_dct_with_trace(
    m: &MeasurementSet,
    a: &CodedApertureSet,
    dims: (usize, usize, usize),
    lambda: f64,
    iterations: usize,
) -> Result<(Tensor3, Vec<f64>)> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::argument(format!(
            "sparsity weight must be positive, got {lambda}"
        )));
    }
    if iterations < 1 {
        return Err(Error::argument("iteration count must be at least 1"));
    }
    a.check_scene_dims(dims)?;
    let basis = DctBasis::new(dims);
    let y = m.stacked();
    let lipschitz = operator_norm_sq(a, dims, &basis)? * 1.05; // safety margin
    let step = 1.0 / lipschitz;

    let objective = |c: &Tensor3| -> Result<f64> {
        let hx = forward(&basis.synthesize(c)?, a)?.stacked();
        let fidelity: f64 = hx.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum();
        let l1: f64 = c.data().iter().map(|v| v.abs()).sum();
        Ok(0.5 * fidelity + lambda * l1)
    };
    let gradient = |c: &Tensor3| -> Result<Tensor3> {
        let hx = forward(&basis.synthesize(c)?, a)?.stacked();
        let residual: Vec<f64> = hx.iter().zip(&y).map(|(p, q)| p - q).collect();
        basis.analyze(&adjoint_stacked(&residual, a, dims)?)
    };

    let (mr, nr, lr) = dims;
    let mut x = Tensor3::zeros(mr, nr, lr); // best (monotone) iterate
    let mut x_prev = x.clone();
    let mut z = x.clone(); // extrapolation point
    let mut t = 1.0_f64;
    let mut best_obj = objective(&x)?;
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(best_obj);
    for it in 0..iterations {
        let g = gradient(&z)?;
        let candidate = Tensor3::from_fn(mr, nr, lr, |i, j, k| {
            soft_threshold(z.get(i, j, k) - step * g.get(i, j, k), lambda * step)
        });
        if candidate.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite iterate at iteration {it}"
            )));
        }
        let cand_obj = objective(&candidate)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // Monotone update: keep the candidate only when it improves; either
        // way the momentum uses it, so acceleration is preserved.
        let (x_next, obj_next) = if cand_obj <= best_obj {
            (candidate.clone(), cand_obj)
        } else {
            (x.clone(), best_obj)
        };
        z = Tensor3::from_fn(mr, nr, lr, |i, j, k| {
            x_next.get(i, j, k)
                + (t / t_next) * (candidate.get(i, j, k) - x_next.get(i, j, k))
                + ((t - 1.0) / t_next) * (x_next.get(i, j, k) - x_prev.get(i, j, k))
        });
        x_prev = x;
        x = x_next;
        best_obj = obj_next;
        t = t_next;
        trace.push(best_obj);
    }
    Ok((basis.synthesize(&x)?, trace))
}

/// [`fista_dct_with_trace`] without the objective trace.
pub fn fista_dct(
    m: &MeasurementSet,
    a: &CodedApertureSet,
    dims: (usize, usize, usize),
    lambda: f64,
    iterations: usize,
) -> Result<Tensor3> {
    Ok(fista_dct_with_trace(m, a, dims, lambda, iterations)?.0)
}
