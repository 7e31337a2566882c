//! Low-rank Tucker latent: the learnable first layer of the generator.
//!
//! The latent stores a small core `Z0` (dims scaled down by the rank factor
//! `rho`) together with three tall factor matrices `U`, `V`, `W`. Expansion
//!
//! ```text
//! Z = Z0 x1 U  x2 V  x3 W
//! ```
//!
//! produces the full-size feature tensor fed to the network. All four
//! components are optimization variables; [`TuckerLatent::backprop`] returns
//! their exact gradients given the loss gradient with respect to `Z`.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::tensor::{mode_product, unfold, Matrix, Tensor3};

/// Core/factor extents for a rank factor: `max(1, round-half-up(rho * extent))`
/// per mode.
pub fn dims_from_rho(m: usize, n: usize, l: usize, rho: f64) -> Result<(usize, usize, usize)> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::argument(format!(
            "rank factor must lie in (0,1], got {rho}"
        )));
    }
    let scale = |extent: usize| ((rho * extent as f64).round() as usize).max(1);
    Ok((scale(m), scale(n), scale(l)))
}

/// Gradients of a scalar loss with respect to each latent component.
#[derive(Debug, Clone)]
pub struct TuckerGrads {
    pub core: Tensor3,
    pub u: Matrix,
    pub v: Matrix,
    pub w: Matrix,
}

/// Learnable Tucker latent: core plus per-mode factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerLatent {
    core: Tensor3,
    u: Matrix,
    v: Matrix,
    w: Matrix,
}

impl TuckerLatent {
    /// Builds a latent from explicit parts, validating that the factor
    /// shapes agree with the core. Warns on stderr when the latent holds at
    /// least as many scalars as the tensor it expands to (no compression).
    pub fn from_parts(core: Tensor3, u: Matrix, v: Matrix, w: Matrix) -> Result<Self> {
        let (mr, nr, lr) = core.dims();
        for (name, factor, want) in [("U", &u, mr), ("V", &v, nr), ("W", &w, lr)] {
            if factor.cols() != want {
                return Err(Error::shape(format!(
                    "factor {name} has {} columns but the core extent is {want}",
                    factor.cols()
                )));
            }
            if factor.rows() < want {
                return Err(Error::shape(format!(
                    "factor {name} is {}x{}, which would expand below the core extent",
                    factor.rows(),
                    factor.cols()
                )));
            }
        }
        let lat = Self { core, u, v, w };
        let (m, n, l) = lat.expanded_dims();
        if lat.param_count() >= m * n * l {
            eprintln!(
                "warning: tucker latent holds {} parameters for a {}x{}x{} tensor ({} voxels); no compression",
                lat.param_count(),
                m,
                n,
                l,
                m * n * l
            );
        }
        Ok(lat)
    }

    /// Random initialization: core entries are standard Gaussian, factor
    /// entries Gaussian with standard deviation `1/sqrt(columns)` so the
    /// expanded tensor has entries of unit order. Deterministic given `seed`.
    pub fn init(m: usize, n: usize, l: usize, rho: f64, seed: u64) -> Result<Self> {
        let (mr, nr, lr) = dims_from_rho(m, n, l, rho)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std_normal = Normal::new(0.0, 1.0).expect("unit scale is valid");
        let core = Tensor3::from_fn(mr, nr, lr, |_, _, _| std_normal.sample(&mut rng));
        let mut factor = |rows: usize, cols: usize| {
            let n = Normal::new(0.0, 1.0 / (cols as f64).sqrt()).expect("cols >= 1");
            Matrix::from_fn(rows, cols, |_, _| n.sample(&mut rng))
        };
        let u = factor(m, mr);
        let v = factor(n, nr);
        let w = factor(l, lr);
        Self::from_parts(core, u, v, w)
    }

    pub fn core(&self) -> &Tensor3 {
        &self.core
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub(crate) fn core_mut(&mut self) -> &mut Tensor3 {
        &mut self.core
    }

    pub(crate) fn u_mut(&mut self) -> &mut Matrix {
        &mut self.u
    }

    pub(crate) fn v_mut(&mut self) -> &mut Matrix {
        &mut self.v
    }

    pub(crate) fn w_mut(&mut self) -> &mut Matrix {
        &mut self.w
    }

    /// Dims of the expanded tensor `Z`.
    pub fn expanded_dims(&self) -> (usize, usize, usize) {
        (self.u.rows(), self.v.rows(), self.w.rows())
    }

    /// Scalar count of the latent: core voxels plus factor entries.
    pub fn param_count(&self) -> usize {
        self.core.len()
            + self.u.rows() * self.u.cols()
            + self.v.rows() * self.v.cols()
            + self.w.rows() * self.w.cols()
    }

    /// Expands the latent to the full feature tensor via successive mode
    /// products.
    pub fn expand(&self) -> Result<Tensor3> {
        let z = mode_product(&self.core, &self.u, 1)?;
        let z = mode_product(&z, &self.v, 2)?;
        mode_product(&z, &self.w, 3)
    }

    /// Gradients of the loss with respect to (core, U, V, W) given
    /// `g = dLoss/dZ` at the expanded tensor.
    ///
    /// The core gradient contracts `g` back through the transposed factors;
    /// each factor gradient pairs the mode-n unfolding of `g` with the
    /// unfolding of the core expanded along the other two modes.
    pub fn backprop(&self, g: &Tensor3) -> Result<TuckerGrads> {
        if g.dims() != self.expanded_dims() {
            return Err(Error::shape(format!(
                "gradient dims {:?} differ from expanded dims {:?}",
                g.dims(),
                self.expanded_dims()
            )));
        }
        let ut = self.u.transpose();
        let vt = self.v.transpose();
        let wt = self.w.transpose();

        let core = mode_product(&mode_product(&mode_product(g, &ut, 1)?, &vt, 2)?, &wt, 3)?;

        let core_vw = mode_product(&mode_product(&self.core, &self.v, 2)?, &self.w, 3)?;
        let u = unfold(g, 1).matmul(&unfold(&core_vw, 1).transpose())?;

        let core_uw = mode_product(&mode_product(&self.core, &self.u, 1)?, &self.w, 3)?;
        let v = unfold(g, 2).matmul(&unfold(&core_uw, 2).transpose())?;

        let core_uv = mode_product(&mode_product(&self.core, &self.u, 1)?, &self.v, 2)?;
        let w = unfold(g, 3).matmul(&unfold(&core_uv, 3).transpose())?;

        Ok(TuckerGrads { core, u, v, w })
    }
}
