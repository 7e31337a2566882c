//! What the learnable low-rank latent buys over a frozen random input.
//!
//! `FitMode::Full` optimizes generator weights and the Tucker latent
//! jointly; `FitMode::DipFixedInput` freezes the latent at its random
//! initialization and learns only the weights — the classic deep-image-prior
//! recipe. With the same step budget, learning the latent consistently
//! reaches a lower measurement residual.
//!
//! Run with: cargo run --release --example dip_ablation

use snapcube::cassi::{forward, generate_aperture, ApertureKind};
use snapcube::metrics::psnr;
use snapcube::phantom::make_phantom;
use snapcube::solver::{fit, FitConfig, FitMode};
use snapcube::{derive_seed, Result};

fn main() -> Result<()> {
    let dims = (16, 16, 4);
    let scene = make_phantom(dims.0, dims.1, dims.2, 4, 2);
    let aperture =
        generate_aperture(ApertureKind::BinarySpatial, dims.0, dims.1, dims.2, 1, 0.5, 102)?;
    let meas = forward(&scene, &aperture)?;
    println!("scene {}x{}x{}, single shot, 800 steps each\n", dims.0, dims.1, dims.2);
    println!("  mode   seed   final loss   psnr(dB)");

    for mode in [FitMode::Full, FitMode::DipFixedInput] {
        for s in 0..3u64 {
            let cfg = FitConfig {
                iterations: 800,
                restarts: 1,
                width: 4,
                mode,
                seed: derive_seed(7, s),
                ..FitConfig::default()
            };
            let result = fit(&meas, &aperture, dims, &cfg, None)?;
            println!(
                "  {:4}   {s:4}   {:10.4e}   {:8.2}",
                mode.as_str(),
                result.final_losses[0],
                psnr(&scene, &result.reconstruction)?
            );
        }
    }
    println!("\n'full' fits the measurements tighter than 'dip' at equal budget:");
    println!("the latent is where the low-rank spectral structure lives");
    Ok(())
}
