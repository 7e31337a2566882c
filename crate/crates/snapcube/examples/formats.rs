//! The on-disk artifact formats: cubes, measurements, apertures, PGM, CSV.
//!
//! Everything the pipeline writes is a small little-endian binary format
//! with an explicit header, plus PGM for viewable band images and a flat
//! CSV escape hatch for getting external data in. This example round-trips
//! each one and shows what the reader does with a corrupt file.
//!
//! Run with: cargo run --example formats

use snapcube::cassi::{add_noise, forward, generate_aperture, ApertureKind};
use snapcube::phantom::make_phantom;
use snapcube::{io, Result};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("snapcube_formats_example");
    std::fs::create_dir_all(&dir)?;

    // Spectral cube (SCB1): header is magic + three u32 extents.
    let scene = make_phantom(6, 5, 3, 2, 8);
    let cube_path = dir.join("scene.scb");
    io::write_cube(&cube_path, &scene)?;
    let bytes = std::fs::read(&cube_path)?;
    println!(
        "SCB1: {} bytes ({} header + {} voxels x 4); magic {:?}, digest {}",
        bytes.len(),
        16,
        scene.len(),
        std::str::from_utf8(&bytes[..4]).unwrap(),
        &io::sha256_hex(&bytes)[..16]
    );
    let back = io::read_cube(&cube_path)?;
    println!(
        "      read back {}x{}x{}; re-encoded bytes identical: {}",
        back.rows(),
        back.cols(),
        back.bands(),
        io::encode_cube(&back)? == bytes
    );

    // Measurements (SME1) carry their provenance: SNR, noise seed, kind.
    let aperture = generate_aperture(ApertureKind::BinarySpatial, 6, 5, 3, 2, 0.5, 33)?;
    let meas = add_noise(&forward(&scene, &aperture)?, 30.0, 77)?;
    let meas_path = dir.join("m.sme");
    io::write_measurements(&meas_path, &meas)?;
    let loaded = io::read_measurements(&meas_path)?;
    let p = loaded.provenance();
    println!(
        "SME1: {} shots of {}x{}; provenance snr {} dB, seed {}, kind {}",
        loaded.shots(),
        loaded.detector_rows(),
        loaded.detector_cols(),
        p.snr_db,
        p.seed,
        p.kind.as_str()
    );

    // Apertures (SCA1) round-trip exactly: generated codes are 0/1.
    let ca_path = dir.join("a.sca");
    io::write_aperture(&ca_path, &aperture)?;
    println!("SCA1: read-back equals original: {}", io::read_aperture(&ca_path)? == aperture);

    // One band as a 16-bit PGM, viewable anywhere.
    let pgm_path = dir.join("band0.pgm");
    io::write_band_pgm(&pgm_path, &scene, 0)?;
    let pgm = std::fs::read(&pgm_path)?;
    println!(
        "PGM:  header {:?}, {} bytes total",
        std::str::from_utf8(&pgm[..12]).unwrap(),
        pgm.len()
    );

    // CSV escape hatch: one `m,n,l,value` row per voxel, any order.
    let mut csv = String::new();
    for l in 0..3 {
        for m in 0..6 {
            for n in 0..5 {
                csv.push_str(&format!("{m},{n},{l},{}\n", scene.get(m, n, l)));
            }
        }
    }
    let csv_path = dir.join("scene.csv");
    std::fs::write(&csv_path, csv)?;
    let converted = io::read_cube_csv(&csv_path, (6, 5, 3))?;
    println!(
        "CSV:  rebuilt cube encodes to the same bytes: {}",
        io::encode_cube(&converted)? == bytes
    );

    // Corrupt files fail loudly, with the byte offset of the defect.
    let mut broken = bytes.clone();
    broken.truncate(30);
    match io::decode_cube(&broken) {
        Err(e) => println!("corrupt file: {e}"),
        Ok(_) => println!("corrupt file unexpectedly parsed"),
    }

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
