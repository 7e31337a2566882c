//! The sensing model: coded apertures, dispersion, and the adjoint.
//!
//! Builds a small scene, masks it with a coded aperture, disperses each band
//! one column further than the last, and integrates on the detector. Then
//! checks the two properties everything downstream leans on: the adjoint
//! identity and agreement with an explicitly materialized sensing matrix.
//!
//! Run with: cargo run --example forward_model

use snapcube::cassi::{
    adjoint, adjoint_stacked, build_dense_oracle, detector_cols, forward, generate_aperture,
    ApertureKind,
};
use snapcube::phantom::make_phantom;
use snapcube::tensor::vectorize;
use snapcube::Result;

fn main() -> Result<()> {
    let (m, n, l) = (8, 10, 4);
    let scene = make_phantom(m, n, l, 3, 7);
    println!("scene: {m}x{n}x{l} cube, values in [0,1]");
    println!(
        "detector: {m} rows x {} cols per shot (N + L - 1 = {} + {} - 1)\n",
        detector_cols(n, l),
        n,
        l
    );

    for (kind, label) in [
        (ApertureKind::BinarySpatial, "binary spatial (one mask, all bands)"),
        (ApertureKind::ColoredSpectral, "colored (independent mask per band)"),
    ] {
        println!("== {label} ==");
        let aperture = generate_aperture(kind, m, n, l, 2, 0.5, 42)?;
        let meas = forward(&scene, &aperture)?;
        println!(
            "{} shots, stacked measurement vector of length {}",
            meas.shots(),
            meas.stacked_len()
        );

        // First detector rows of shot 0: each column sums shifted, masked bands.
        let shot = meas.image(0);
        for r in 0..3 {
            let row: Vec<String> = (0..shot.cols()).map(|c| format!("{:4.2}", shot.get(r, c))).collect();
            println!("  row {r}: {}", row.join(" "));
        }

        // Adjoint identity <Hx, y> = <x, H^T y> for a fixed probe y.
        let y: Vec<f64> = (0..meas.stacked_len())
            .map(|i| ((i as f64) * 0.37).sin())
            .collect();
        let hx = meas.stacked();
        let lhs: f64 = hx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let hty = adjoint_stacked(&y, &aperture, (m, n, l))?;
        let rhs: f64 = scene.data().iter().zip(hty.data()).map(|(a, b)| a * b).sum();
        println!("  <Hx, y>   = {lhs:.12}");
        println!("  <x, H^T y> = {rhs:.12}  (gap {:.2e})", (lhs - rhs).abs());

        // The operator is linear, so it IS a matrix; materialize it and compare.
        let h = build_dense_oracle(&aperture, (m, n, l))?;
        let x = vectorize(&scene);
        let mut worst: f64 = 0.0;
        for (r, row_result) in hx.iter().enumerate() {
            let explicit: f64 = (0..x.len()).map(|c| h.get(r, c) * x[c]).sum();
            worst = worst.max((explicit - row_result).abs());
        }
        println!(
            "  dense {}x{} matrix agrees with the operator to {worst:.2e}",
            h.rows(),
            h.cols()
        );

        // Back-projected energy lands only where the aperture was open.
        let back = adjoint(&meas, &aperture, (m, n, l))?;
        let nonzero = back.data().iter().filter(|v| **v != 0.0).count();
        println!("  adjoint image: {nonzero}/{} voxels touched\n", back.len());
    }
    Ok(())
}
