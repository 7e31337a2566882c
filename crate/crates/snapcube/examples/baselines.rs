//! The deep prior against two classical reconstructions.
//!
//! Same single-shot measurement, three solvers:
//!   * back-projection — the adjoint with per-voxel sensing weights divided
//!     out; instant, and exactly inverts nothing but sets the floor.
//!   * fista-dct — monotone proximal-gradient descent on an L1 penalty over
//!     orthonormal 3-D DCT coefficients; a strong hand-crafted smoothness
//!     prior.
//!   * deep prior — the untrained generator with a low-rank Tucker latent.
//!
//! Run with: cargo run --release --example baselines

use snapcube::baseline::{back_projection, default_lambda, fista_dct};
use snapcube::cassi::{forward, generate_aperture, ApertureKind};
use snapcube::metrics::{psnr, sam, ssim};
use snapcube::phantom::make_phantom;
use snapcube::solver::{fit, FitConfig};
use snapcube::tensor::Tensor3;
use snapcube::Result;

fn main() -> Result<()> {
    let dims = (24, 24, 6);
    let scene = make_phantom(dims.0, dims.1, dims.2, 4, 4);
    let aperture =
        generate_aperture(ApertureKind::BinarySpatial, dims.0, dims.1, dims.2, 1, 0.5, 21)?;
    let meas = forward(&scene, &aperture)?;
    println!(
        "scene {}x{}x{}, single noiseless shot\n",
        dims.0, dims.1, dims.2
    );

    let bp = back_projection(&meas, &aperture, dims)?;

    let lambda = default_lambda(&meas, &aperture, dims)?;
    println!("fista-dct sparsity weight (derived from the data): {lambda:.4e}");
    let fista = fista_dct(&meas, &aperture, dims, lambda, 250)?;

    let cfg = FitConfig {
        iterations: 800,
        restarts: 2,
        width: 6,
        seed: 31,
        ..FitConfig::default()
    };
    println!(
        "deep prior: {} iterations x {} restarts\n",
        cfg.iterations, cfg.restarts
    );
    let deep = fit(&meas, &aperture, dims, &cfg, None)?.reconstruction;

    println!("  method            psnr(dB)   ssim     sam(rad)");
    for (name, rec) in [
        ("back-projection", &bp),
        ("fista-dct      ", &fista),
        ("deep prior     ", &deep),
    ] {
        row(name, &scene, rec)?;
    }
    Ok(())
}

fn row(name: &str, scene: &Tensor3, rec: &Tensor3) -> Result<()> {
    println!(
        "  {name}   {:8.2}   {:.4}   {:.4}",
        psnr(scene, rec)?,
        ssim(scene, rec)?,
        sam(scene, rec)?.radians
    );
    Ok(())
}
