//! How the Tucker rank budget shapes reconstruction quality.
//!
//! The latent input to the generator is a Tucker tensor whose ranks are a
//! fraction `rho` of the scene extents. Small `rho` means few learnable
//! latent parameters — a hard low-rank constraint; `rho = 1` removes the
//! constraint entirely (and the library says so on stderr, since the latent
//! then holds more entries than the scene has voxels). This sweep fits the
//! same single-shot measurement at several ratios.
//!
//! Run with: cargo run --release --example rank_sweep

use snapcube::cassi::{forward, generate_aperture, ApertureKind};
use snapcube::metrics::psnr;
use snapcube::phantom::make_phantom;
use snapcube::solver::{fit, FitConfig};
use snapcube::tucker::{dims_from_rho, TuckerLatent};
use snapcube::{derive_seed, Result};

fn main() -> Result<()> {
    let (m, n, l) = (32, 32, 8);
    let scene = make_phantom(m, n, l, 4, 1);
    let aperture = generate_aperture(ApertureKind::BinarySpatial, m, n, l, 1, 0.5, 101)?;
    let meas = forward(&scene, &aperture)?;
    println!("scene {m}x{n}x{l} ({} voxels), single shot, noiseless", m * n * l);
    println!("800 iterations per fit\n");
    println!("  rho   ranks      latent params   psnr(dB)   final loss");

    for (i, rho) in [0.1, 0.3, 0.5, 1.0].into_iter().enumerate() {
        let ranks = dims_from_rho(m, n, l, rho)?;
        let params = TuckerLatent::init(m, n, l, rho, 0)?.param_count();
        let cfg = FitConfig {
            iterations: 800,
            restarts: 1,
            rho,
            seed: derive_seed(5, i as u64),
            ..FitConfig::default()
        };
        let result = fit(&meas, &aperture, (m, n, l), &cfg, None)?;
        println!(
            "  {rho:.1}   {:2}x{:2}x{:1}   {params:13}   {:8.2}   {:.4e}",
            ranks.0,
            ranks.1,
            ranks.2,
            psnr(&scene, &result.reconstruction)?,
            result.final_losses[0]
        );
    }
    println!("\ntiny rank budgets underfit; mid-range ratios carry the scene's");
    println!("low-rank spectral structure at a fraction of the voxel count");
    Ok(())
}
