//! Binary file formats, PGM export, CSV import, and content digests.
//!
//! Three little-endian binary formats cover the pipeline artifacts:
//!
//! * `SCB1` — a spectral cube: magic, `M, N, L` as `u32`, then `M·N·L`
//!   `f32` values in tensor storage order (band-major, then row-major).
//! * `SME1` — a measurement set: magic, `S, M, cols` as `u32`, the SNR in dB
//!   as `f64` (`+inf` marks noiseless data), the noise seed as `u64`, an
//!   aperture-kind byte, then `S·M·cols` `f32` values shot-major.
//! * `SCA1` — a coded aperture set: magic, kind byte, `S, M, N, B` as `u32`
//!   (`B` is the stored planes per shot: 1 for binary codes, the band count
//!   for colored codes), then `S·M·N·B` `f32` values shot-major.
//!
//! Payload values are stored as `f32`; a file read back and rewritten is
//! byte-identical, and an in-memory value survives a write/read round trip
//! bitwise exactly when it is `f32`-representable (everything the pipeline
//! writes natively is). Malformed input is reported as a format error with
//! the byte offset of the defect.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::cassi::{ApertureKind, CodedApertureSet, MeasurementSet, Provenance};
use crate::tensor::{Matrix, Tensor3};
use crate::{Error, Result};

const CUBE_MAGIC: &[u8; 4] = b"SCB1";
const MEAS_MAGIC: &[u8; 4] = b"SME1";
const APERTURE_MAGIC: &[u8; 4] = b"SCA1";

/// Refuse headers that declare more elements than any desk-scale artifact;
/// guards allocation before the payload length check can run.
const MAX_ELEMENTS: u64 = 1 << 30;

// ---------------------------------------------------------------------------
// decode cursor

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.buf.len() as u64,
                format!(
                    "unexpected end of file: {what} needs {n} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::format(
                0,
                format!(
                    "bad magic: expected {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            ));
        }
        Ok(())
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64_le(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("slice length 8")))
    }

    fn f64_le(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_bits(self.u64_le(what)?))
    }

    /// Positive extent field; zero is a header defect, not a shape error.
    fn extent(&mut self, what: &str) -> Result<usize> {
        let at = self.offset();
        let v = self.u32_le(what)?;
        if v == 0 {
            return Err(Error::format(at, format!("{what} must be positive")));
        }
        Ok(v as usize)
    }

    /// Reads `count` `f32` values as `f64`, rejecting non-finite entries at
    /// their exact byte offset.
    fn f32_payload(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let start = self.offset();
        let raw = self.take(count * 4, what)?;
        let mut out = Vec::with_capacity(count);
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(Error::format(
                    start + 4 * i as u64,
                    format!("{what} value {i} is not finite ({v})"),
                ));
            }
            out.push(f64::from(v));
        }
        Ok(out)
    }

    fn expect_eof(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.offset(),
                format!("{} trailing bytes after payload", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn check_element_budget(offset: u64, elements: u64) -> Result<()> {
    if elements > MAX_ELEMENTS {
        return Err(Error::format(
            offset,
            format!("header declares {elements} elements, limit is {MAX_ELEMENTS}"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// encode helpers

fn push_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| Error::argument(format!("{what} {v} exceeds the u32 header field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn push_f32_payload(out: &mut Vec<u8>, values: &[f64], what: &str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::argument(format!(
                "{what} value {i} is not finite ({v}); refusing to write"
            )));
        }
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SCB1 spectral cubes

/// Serializes a cube to SCB1 bytes.
pub fn encode_cube(cube: &Tensor3) -> Result<Vec<u8>> {
    let (m, n, l) = cube.dims();
    let mut out = Vec::with_capacity(16 + 4 * cube.len());
    out.extend_from_slice(CUBE_MAGIC);
    push_u32(&mut out, m, "cube rows")?;
    push_u32(&mut out, n, "cube cols")?;
    push_u32(&mut out, l, "cube bands")?;
    push_f32_payload(&mut out, cube.data(), "cube")?;
    Ok(out)
}

/// Parses SCB1 bytes into a cube.
pub fn decode_cube(bytes: &[u8]) -> Result<Tensor3> {
    let mut c = Cursor::new(bytes);
    c.magic(CUBE_MAGIC)?;
    let dims_at = c.offset();
    let m = c.extent("cube rows")?;
    let n = c.extent("cube cols")?;
    let l = c.extent("cube bands")?;
    check_element_budget(dims_at, m as u64 * n as u64 * l as u64)?;
    let data = c.f32_payload(m * n * l, "cube")?;
    c.expect_eof()?;
    Tensor3::new(m, n, l, data)
}

pub fn write_cube(path: impl AsRef<Path>, cube: &Tensor3) -> Result<()> {
    std::fs::write(path, encode_cube(cube)?)?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<Tensor3> {
    decode_cube(&std::fs::read(path)?)
}

// ---------------------------------------------------------------------------
// SME1 measurement sets

fn kind_byte(kind: ApertureKind) -> u8 {
    match kind {
        ApertureKind::BinarySpatial => 0,
        ApertureKind::ColoredSpectral => 1,
    }
}

fn kind_from_byte(offset: u64, b: u8) -> Result<ApertureKind> {
    match b {
        0 => Ok(ApertureKind::BinarySpatial),
        1 => Ok(ApertureKind::ColoredSpectral),
        _ => Err(Error::format(
            offset,
            format!("aperture-kind byte must be 0 or 1, got {b}"),
        )),
    }
}

/// Serializes a measurement set to SME1 bytes.
pub fn encode_measurements(m: &MeasurementSet) -> Result<Vec<u8>> {
    let prov = m.provenance();
    if prov.snr_db.is_nan() || prov.snr_db == f64::NEG_INFINITY {
        return Err(Error::argument(format!(
            "SNR must be finite or +inf, got {}",
            prov.snr_db
        )));
    }
    let mut out = Vec::with_capacity(33 + 4 * m.stacked_len());
    out.extend_from_slice(MEAS_MAGIC);
    push_u32(&mut out, m.shots(), "shot count")?;
    push_u32(&mut out, m.detector_rows(), "detector rows")?;
    push_u32(&mut out, m.detector_cols(), "detector cols")?;
    out.extend_from_slice(&prov.snr_db.to_bits().to_le_bytes());
    out.extend_from_slice(&prov.seed.to_le_bytes());
    out.push(kind_byte(prov.kind));
    for s in 0..m.shots() {
        push_f32_payload(&mut out, m.image(s).data(), "measurement")?;
    }
    Ok(out)
}

/// Parses SME1 bytes into a measurement set.
pub fn decode_measurements(bytes: &[u8]) -> Result<MeasurementSet> {
    let mut c = Cursor::new(bytes);
    c.magic(MEAS_MAGIC)?;
    let dims_at = c.offset();
    let shots = c.extent("shot count")?;
    let rows = c.extent("detector rows")?;
    let cols = c.extent("detector cols")?;
    check_element_budget(dims_at, shots as u64 * rows as u64 * cols as u64)?;
    let snr_at = c.offset();
    let snr_db = c.f64_le("SNR field")?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::format(
            snr_at,
            format!("SNR field must be finite or +inf, got {snr_db}"),
        ));
    }
    let seed = c.u64_le("seed field")?;
    let kind_at = c.offset();
    let kind = kind_from_byte(kind_at, c.u8("aperture-kind byte")?)?;
    let mut images = Vec::with_capacity(shots);
    for _ in 0..shots {
        let data = c.f32_payload(rows * cols, "measurement")?;
        images.push(Matrix::new(rows, cols, data)?);
    }
    c.expect_eof()?;
    MeasurementSet::new(images, Provenance { seed, snr_db, kind })
}

pub fn write_measurements(path: impl AsRef<Path>, m: &MeasurementSet) -> Result<()> {
    std::fs::write(path, encode_measurements(m)?)?;
    Ok(())
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<MeasurementSet> {
    decode_measurements(&std::fs::read(path)?)
}

// ---------------------------------------------------------------------------
// SCA1 coded aperture sets

/// Serializes a coded aperture set to SCA1 bytes.
pub fn encode_aperture(a: &CodedApertureSet) -> Result<Vec<u8>> {
    let (m, n) = a.spatial_dims();
    let planes = a.code_bands().unwrap_or(1);
    let mut out = Vec::with_capacity(21 + 4 * a.shots() * m * n * planes);
    out.extend_from_slice(APERTURE_MAGIC);
    out.push(kind_byte(a.kind()));
    push_u32(&mut out, a.shots(), "shot count")?;
    push_u32(&mut out, m, "aperture rows")?;
    push_u32(&mut out, n, "aperture cols")?;
    push_u32(&mut out, planes, "aperture planes")?;
    for s in 0..a.shots() {
        match a.code(s) {
            crate::cassi::ShotCode::Binary(code) => {
                push_f32_payload(&mut out, code.data(), "aperture")?
            }
            crate::cassi::ShotCode::Colored(code) => {
                push_f32_payload(&mut out, code.data(), "aperture")?
            }
        }
    }
    Ok(out)
}

/// Parses SCA1 bytes into a coded aperture set.
pub fn decode_aperture(bytes: &[u8]) -> Result<CodedApertureSet> {
    let mut c = Cursor::new(bytes);
    c.magic(APERTURE_MAGIC)?;
    let kind_at = c.offset();
    let kind = kind_from_byte(kind_at, c.u8("aperture-kind byte")?)?;
    let dims_at = c.offset();
    let shots = c.extent("shot count")?;
    let rows = c.extent("aperture rows")?;
    let cols = c.extent("aperture cols")?;
    let planes_at = c.offset();
    let planes = c.extent("aperture planes")?;
    if kind == ApertureKind::BinarySpatial && planes != 1 {
        return Err(Error::format(
            planes_at,
            format!("binary apertures store one plane per shot, header says {planes}"),
        ));
    }
    check_element_budget(dims_at, shots as u64 * rows as u64 * cols as u64 * planes as u64)?;
    match kind {
        ApertureKind::BinarySpatial => {
            let mut codes = Vec::with_capacity(shots);
            for _ in 0..shots {
                let at = c.offset();
                let data = c.f32_payload(rows * cols, "aperture")?;
                if let Some(i) = data.iter().position(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::format(
                        at + 4 * i as u64,
                        format!("binary aperture entry must be 0 or 1, got {}", data[i]),
                    ));
                }
                codes.push(Matrix::new(rows, cols, data)?);
            }
            c.expect_eof()?;
            CodedApertureSet::from_binary(codes)
        }
        ApertureKind::ColoredSpectral => {
            let mut codes = Vec::with_capacity(shots);
            for _ in 0..shots {
                let at = c.offset();
                let data = c.f32_payload(rows * cols * planes, "aperture")?;
                if let Some(i) = data.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::format(
                        at + 4 * i as u64,
                        format!("colored aperture entry must lie in [0,1], got {}", data[i]),
                    ));
                }
                codes.push(Tensor3::new(rows, cols, planes, data)?);
            }
            c.expect_eof()?;
            CodedApertureSet::from_colored(codes)
        }
    }
}

pub fn write_aperture(path: impl AsRef<Path>, a: &CodedApertureSet) -> Result<()> {
    std::fs::write(path, encode_aperture(a)?)?;
    Ok(())
}

pub fn read_aperture(path: impl AsRef<Path>) -> Result<CodedApertureSet> {
    decode_aperture(&std::fs::read(path)?)
}

// ---------------------------------------------------------------------------
// PGM band export

/// Renders one band as a binary PGM (P5) image with 16-bit samples.
///
/// Values are clamped to `[0,1]` and scaled to `0..=65535`. Samples are
/// written big-endian as Netpbm requires, so the files open in standard
/// viewers; the custom binary formats above stay little-endian.
pub fn encode_band_pgm(cube: &Tensor3, band: usize) -> Result<Vec<u8>> {
    let (m, n, l) = cube.dims();
    if band >= l {
        return Err(Error::argument(format!(
            "band {band} out of range for a cube with {l} bands"
        )));
    }
    let mut out = format!("P5\n{n} {m}\n65535\n").into_bytes();
    for &v in cube.band(band) {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

pub fn write_band_pgm(path: impl AsRef<Path>, cube: &Tensor3, band: usize) -> Result<()> {
    std::fs::write(path, encode_band_pgm(cube, band)?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV import

/// Parses a flat CSV (one `m,n,l,value` row per voxel) into a cube.
///
/// Every voxel must appear exactly once; indices are zero-based. Blank lines
/// are ignored. Defects are reported at the byte offset of the offending
/// line.
pub fn decode_cube_csv(text: &str, dims: (usize, usize, usize)) -> Result<Tensor3> {
    let (m, n, l) = dims;
    if m == 0 || n == 0 || l == 0 {
        return Err(Error::argument(format!(
            "cube extents must be positive, got {m}x{n}x{l}"
        )));
    }
    let total = m * n * l;
    let mut data = vec![0.0; total];
    let mut seen = vec![false; total];
    let mut filled = 0usize;
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len() as u64;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::format(
                at,
                format!("expected 4 comma-separated fields, found {}", fields.len()),
            ));
        }
        let idx = |s: &str, what: &str, max: usize| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| Error::format(at, format!("{what} index {s:?} is not an integer")))?;
            if v >= max {
                return Err(Error::format(
                    at,
                    format!("{what} index {v} out of range (extent {max})"),
                ));
            }
            Ok(v)
        };
        let (mi, ni, li) = (
            idx(fields[0], "row", m)?,
            idx(fields[1], "col", n)?,
            idx(fields[2], "band", l)?,
        );
        let v: f64 = fields[3]
            .parse()
            .map_err(|_| Error::format(at, format!("value {:?} is not a number", fields[3])))?;
        if !v.is_finite() {
            return Err(Error::format(at, format!("value {v} is not finite")));
        }
        let flat = li * m * n + mi * n + ni;
        if seen[flat] {
            return Err(Error::format(
                at,
                format!("voxel ({mi},{ni},{li}) appears more than once"),
            ));
        }
        seen[flat] = true;
        data[flat] = v;
        filled += 1;
    }
    if filled != total {
        return Err(Error::format(
            offset,
            format!("CSV covers {filled} of {total} voxels for extents {m}x{n}x{l}"),
        ));
    }
    Tensor3::new(m, n, l, data)
}

pub fn read_cube_csv(path: impl AsRef<Path>, dims: (usize, usize, usize)) -> Result<Tensor3> {
    decode_cube_csv(&std::fs::read_to_string(path)?, dims)
}

// ---------------------------------------------------------------------------
// normalization and digests

/// Scales a cube so its global maximum is exactly 1, returning the divisor.
///
/// A cube with no positive value is returned unchanged with scale 1 — there
/// is nothing meaningful to normalize against.
pub fn normalize_cube(cube: &Tensor3) -> (Tensor3, f64) {
    let max = cube.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return (cube.clone(), 1.0);
    }
    (cube.map(|v| v / max), max)
}

/// Writes the normalization divisor next to an artifact, round-trip exact.
pub fn write_scale_sidecar(path: impl AsRef<Path>, scale: f64) -> Result<()> {
    std::fs::write(path, format!("{scale:.17e}\n"))?;
    Ok(())
}

pub fn read_scale_sidecar(path: impl AsRef<Path>) -> Result<f64> {
    let text = std::fs::read_to_string(path)?;
    text.trim()
        .parse()
        .map_err(|_| Error::format(0, format!("scale sidecar {:?} is not a number", text.trim())))
}

/// Hex SHA-256 of a byte string; the digest recorded in run manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_hex_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cassi::{add_noise, forward, generate_aperture};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Random cube whose values are exactly representable in `f32`.
    fn random_f32_cube(rows: usize, cols: usize, bands: usize, seed: u64) -> Tensor3 {
        let mut rng = StdRng::seed_from_u64(seed);
        Tensor3::from_fn(rows, cols, bands, |_, _, _| {
            f64::from(rng.random_range(-1.0f32..1.0f32))
        })
    }

    #[test]
    fn cube_round_trip_is_bitwise() {
        let cube = random_f32_cube(8, 8, 4, 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.scb");
        write_cube(&path, &cube).unwrap();
        let back = read_cube(&path).unwrap();
        assert_eq!(back.dims(), cube.dims());
        for (a, b) in back.data().iter().zip(cube.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn cube_header_is_sixteen_bytes_little_endian() {
        let bytes = encode_cube(&Tensor3::zeros(256, 256, 10)).unwrap();
        assert_eq!(&bytes[0..4], b"SCB1");
        assert_eq!(&bytes[4..8], &[0x00, 0x01, 0x00, 0x00]);
        assert_eq!(&bytes[8..12], &[0x00, 0x01, 0x00, 0x00]);
        assert_eq!(&bytes[12..16], &[0x0A, 0x00, 0x00, 0x00]);
        assert_eq!(bytes.len(), 16 + 256 * 256 * 10 * 4);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        let mut bytes = encode_cube(&Tensor3::zeros(2, 2, 2)).unwrap();
        bytes[0..4].copy_from_slice(b"XXXX");
        match decode_cube(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_end_offset() {
        let bytes = encode_cube(&random_f32_cube(3, 3, 2, 1)).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match decode_cube(cut) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, cut.len() as u64);
                assert!(message.contains("end of file"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = encode_cube(&random_f32_cube(2, 2, 2, 2)).unwrap();
        let end = bytes.len() as u64;
        bytes.push(0);
        match decode_cube(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, end),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_reports_exact_offset() {
        let mut bytes = encode_cube(&random_f32_cube(2, 3, 2, 3)).unwrap();
        let voxel = 5;
        let at = 16 + 4 * voxel;
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_cube(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, at as u64),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn writing_non_finite_values_is_an_argument_error() {
        let mut cube = Tensor3::zeros(2, 2, 2);
        cube.data_mut()[3] = f64::INFINITY;
        assert!(matches!(encode_cube(&cube), Err(Error::Argument(_))));
    }

    #[test]
    fn zero_extent_header_is_a_format_error() {
        let mut bytes = encode_cube(&Tensor3::zeros(2, 2, 2)).unwrap();
        bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
        match decode_cube(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn measurement_round_trip_preserves_provenance() {
        let x = random_f32_cube(5, 6, 3, 4).map(f64::abs);
        let aperture =
            generate_aperture(ApertureKind::ColoredSpectral, 5, 6, 3, 2, 0.5, 11).unwrap();
        let m = forward(&x, &aperture).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.sme");
        write_measurements(&path, &m).unwrap();
        let back = read_measurements(&path).unwrap();
        assert_eq!(back.provenance(), m.provenance());
        assert_eq!(back.shots(), m.shots());
        // Detector sums need not be f32-representable, so compare the
        // re-encoded bytes rather than the in-memory values.
        assert_eq!(
            encode_measurements(&back).unwrap(),
            encode_measurements(&m).unwrap()
        );
    }

    #[test]
    fn infinite_snr_survives_the_header() {
        let x = random_f32_cube(4, 4, 2, 9).map(f64::abs);
        let aperture =
            generate_aperture(ApertureKind::BinarySpatial, 4, 4, 2, 1, 0.5, 13).unwrap();
        let m = forward(&x, &aperture).unwrap();
        let bytes = encode_measurements(&m).unwrap();
        let back = decode_measurements(&bytes).unwrap();
        assert_eq!(back.provenance().snr_db, f64::INFINITY);
        assert_eq!(back.provenance().kind, ApertureKind::BinarySpatial);
    }

    #[test]
    fn nan_snr_field_is_rejected_at_its_offset() {
        let x = random_f32_cube(4, 4, 2, 9).map(f64::abs);
        let aperture =
            generate_aperture(ApertureKind::BinarySpatial, 4, 4, 2, 1, 0.5, 13).unwrap();
        let mut bytes = encode_measurements(&forward(&x, &aperture).unwrap()).unwrap();
        bytes[16..24].copy_from_slice(&f64::NAN.to_bits().to_le_bytes());
        match decode_measurements(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn noisy_measurement_file_round_trips_byte_identically() {
        let x = random_f32_cube(6, 6, 4, 21).map(f64::abs);
        let aperture =
            generate_aperture(ApertureKind::BinarySpatial, 6, 6, 4, 2, 0.5, 22).unwrap();
        let noisy = add_noise(&forward(&x, &aperture).unwrap(), 25.0, 23).unwrap();
        let first = encode_measurements(&noisy).unwrap();
        let reread = decode_measurements(&first).unwrap();
        assert_eq!(encode_measurements(&reread).unwrap(), first);
    }

    #[test]
    fn aperture_round_trips_for_both_kinds() {
        let dir = tempfile::tempdir().unwrap();
        for (kind, name) in [
            (ApertureKind::BinarySpatial, "b.sca"),
            (ApertureKind::ColoredSpectral, "c.sca"),
        ] {
            let a = generate_aperture(kind, 7, 5, 3, 2, 0.4, 31).unwrap();
            let path = dir.path().join(name);
            write_aperture(&path, &a).unwrap();
            assert_eq!(read_aperture(&path).unwrap(), a);
        }
    }

    #[test]
    fn invalid_kind_byte_is_rejected() {
        let a = generate_aperture(ApertureKind::BinarySpatial, 3, 3, 1, 1, 0.5, 5).unwrap();
        let mut bytes = encode_aperture(&a).unwrap();
        bytes[4] = 7;
        match decode_aperture(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn non_binary_entry_in_binary_aperture_is_rejected() {
        let a = generate_aperture(ApertureKind::BinarySpatial, 3, 3, 1, 1, 0.5, 5).unwrap();
        let mut bytes = encode_aperture(&a).unwrap();
        let at = bytes.len() - 4;
        bytes[at..].copy_from_slice(&0.5f32.to_le_bytes());
        match decode_aperture(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, at as u64),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_header_and_samples_are_big_endian() {
        let cube = Tensor3::new(2, 3, 1, vec![0.0, 0.5, 1.0, 1.5, -0.25, 0.25]).unwrap();
        let bytes = encode_band_pgm(&cube, 0).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let samples: Vec<u16> = bytes[header.len()..]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        // 0.5 * 65535 = 32767.5 rounds away from zero; out-of-range clamps.
        assert_eq!(samples, vec![0, 32768, 65535, 65535, 0, 16384]);
    }

    #[test]
    fn pgm_band_out_of_range_is_an_argument_error() {
        let cube = Tensor3::zeros(2, 2, 2);
        assert!(matches!(encode_band_pgm(&cube, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_import_matches_the_cube_it_describes() {
        let cube = random_f32_cube(3, 2, 2, 17);
        let mut text = String::new();
        // Shuffled order must not matter.
        for m in (0..3).rev() {
            for l in 0..2 {
                for n in 0..2 {
                    text.push_str(&format!("{m},{n},{l},{}\n", cube.get(m, n, l)));
                }
            }
        }
        let parsed = decode_cube_csv(&text, (3, 2, 2)).unwrap();
        for (a, b) in parsed.data().iter().zip(cube.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_duplicate_and_missing_voxels_are_format_errors() {
        let dup = "0,0,0,1.0\n0,0,0,2.0\n";
        match decode_cube_csv(dup, (1, 1, 2)) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, 10);
                assert!(message.contains("more than once"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
        match decode_cube_csv("0,0,0,1.0\n", (1, 1, 2)) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains("1 of 2"), "{message}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn csv_bad_index_and_value_are_format_errors() {
        assert!(matches!(
            decode_cube_csv("5,0,0,1.0\n", (1, 1, 1)),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            decode_cube_csv("0,0,0,abc\n", (1, 1, 1)),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            decode_cube_csv("0,0,0,inf\n", (1, 1, 1)),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn normalization_scales_max_to_one_and_reports_the_divisor() {
        let cube = Tensor3::new(1, 2, 2, vec![0.5, 2.0, 1.0, 0.0]).unwrap();
        let (scaled, scale) = normalize_cube(&cube);
        assert_eq!(scale, 2.0);
        assert_eq!(scaled.data(), &[0.25, 1.0, 0.5, 0.0]);
        let zero = Tensor3::zeros(2, 2, 1);
        let (same, s) = normalize_cube(&zero);
        assert_eq!(s, 1.0);
        assert_eq!(same.data(), zero.data());
    }

    #[test]
    fn scale_sidecar_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.scale");
        for scale in [1.0, 2.0, 0.7371235, 1e-9, 12345.678901] {
            write_scale_sidecar(&path, scale).unwrap();
            assert_eq!(read_scale_sidecar(&path).unwrap(), scale);
        }
    }

    #[test]
    fn sha256_matches_the_known_empty_digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(sha256_hex(b"snapcube").len(), 64);
        assert_eq!(sha256_hex(b"snapcube"), sha256_hex(b"snapcube"));
    }
}
