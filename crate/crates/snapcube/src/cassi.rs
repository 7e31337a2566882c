//! CASSI forward operator and adjoint.
//!
//! One snapshot codes the scene with a per-pixel aperture, disperses each
//! band horizontally by its band index, and integrates along the spectral
//! axis onto the detector:
//!
//! ```text
//! Y = sum_l shift_{l-1}( X_l .* C_l )          (detector is M x (N+L-1))
//! ```
//!
//! For a binary-spatial aperture the mask `C_l = C` is shared by all bands;
//! a colored aperture carries one mask plane per band (each pixel acts as a
//! spectral filter). Stacking the vectorized shots of `S` snapshots yields a
//! linear map `y = H vect(X)`; [`build_dense_oracle`] materializes `H`
//! explicitly for small instances so the operator paths can be checked
//! against plain matrix algebra.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor3};

/// Columns a detector image has for `n` scene columns and `l` bands.
pub fn detector_cols(n: usize, l: usize) -> usize {
    n + l - 1
}

/// Default column cap for [`build_dense_oracle`].
pub const DENSE_ORACLE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApertureKind {
    /// One 0/1 transmission mask per shot, shared by all bands.
    BinarySpatial,
    /// One `[0,1]` mask plane per (shot, band): per-pixel spectral filters.
    ColoredSpectral,
}

impl ApertureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ApertureKind::BinarySpatial => "bernoulli",
            ApertureKind::ColoredSpectral => "colored",
        }
    }
}

/// One shot's transmission code, borrowed from a [`CodedApertureSet`].
#[derive(Debug, Clone, Copy)]
pub enum ShotCode<'a> {
    Binary(&'a Matrix),
    Colored(&'a Tensor3),
}

impl ShotCode<'_> {
    pub fn spatial_dims(&self) -> (usize, usize) {
        match self {
            ShotCode::Binary(m) => (m.rows(), m.cols()),
            ShotCode::Colored(t) => (t.rows(), t.cols()),
        }
    }

    /// Mask plane seen by band `l`.
    fn band_plane(&self, l: usize) -> &[f64] {
        match self {
            ShotCode::Binary(m) => m.data(),
            ShotCode::Colored(t) => t.band(l),
        }
    }
}

/// The set of transmission codes for all shots of an acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedApertureSet {
    codes: Codes,
}

#[derive(Debug, Clone, PartialEq)]
enum Codes {
    Binary(Vec<Matrix>),
    Colored(Vec<Tensor3>),
}

impl CodedApertureSet {
    /// Wraps explicit binary codes. All shots must share extents and every
    /// entry must be 0 or 1.
    pub fn from_binary(codes: Vec<Matrix>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::argument("aperture needs at least one shot"));
        }
        let (m, n) = (codes[0].rows(), codes[0].cols());
        for (s, c) in codes.iter().enumerate() {
            if (c.rows(), c.cols()) != (m, n) {
                return Err(Error::shape(format!(
                    "shot {s} code is {}x{}, expected {m}x{n}",
                    c.rows(),
                    c.cols()
                )));
            }
            if let Some(v) = c.data().iter().find(|v| **v != 0.0 && **v != 1.0) {
                return Err(Error::argument(format!(
                    "binary aperture entries must be 0 or 1, found {v}"
                )));
            }
        }
        Ok(Self {
            codes: Codes::Binary(codes),
        })
    }

    /// Wraps explicit colored codes (entries in `[0,1]`, shared extents).
    pub fn from_colored(codes: Vec<Tensor3>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::argument("aperture needs at least one shot"));
        }
        let dims = codes[0].dims();
        for (s, c) in codes.iter().enumerate() {
            if c.dims() != dims {
                return Err(Error::shape(format!(
                    "shot {s} code dims {:?} differ from {:?}",
                    c.dims(),
                    dims
                )));
            }
            if let Some(v) = c.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::argument(format!(
                    "colored aperture entries must lie in [0,1], found {v}"
                )));
            }
        }
        Ok(Self {
            codes: Codes::Colored(codes),
        })
    }

    pub fn kind(&self) -> ApertureKind {
        match self.codes {
            Codes::Binary(_) => ApertureKind::BinarySpatial,
            Codes::Colored(_) => ApertureKind::ColoredSpectral,
        }
    }

    pub fn shots(&self) -> usize {
        match &self.codes {
            Codes::Binary(v) => v.len(),
            Codes::Colored(v) => v.len(),
        }
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        match &self.codes {
            Codes::Binary(v) => (v[0].rows(), v[0].cols()),
            Codes::Colored(v) => (v[0].rows(), v[0].cols()),
        }
    }

    /// Band count of colored codes; binary codes apply to any band count.
    pub fn code_bands(&self) -> Option<usize> {
        match &self.codes {
            Codes::Binary(_) => None,
            Codes::Colored(v) => Some(v[0].bands()),
        }
    }

    pub fn code(&self, shot: usize) -> ShotCode<'_> {
        match &self.codes {
            Codes::Binary(v) => ShotCode::Binary(&v[shot]),
            Codes::Colored(v) => ShotCode::Colored(&v[shot]),
        }
    }

    /// Checks that this aperture can sense a cube of the given extents.
    pub fn check_scene_dims(&self, dims: (usize, usize, usize)) -> Result<()> {
        let (m, n, l) = dims;
        let (cm, cn) = self.spatial_dims();
        if (cm, cn) != (m, n) {
            return Err(Error::shape(format!(
                "aperture is {cm}x{cn} but scene is {m}x{n} spatially"
            )));
        }
        if let Some(cl) = self.code_bands() {
            if cl != l {
                return Err(Error::shape(format!(
                    "colored aperture has {cl} bands but scene has {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws a random aperture set. Binary codes are i.i.d. Bernoulli with the
/// given transmittance; colored codes draw an independent Bernoulli pass/block
/// decision per (pixel, band). Deterministic in `(seed, dims)`.
pub fn generate_aperture(
    kind: ApertureKind,
    rows: usize,
    cols: usize,
    bands: usize,
    shots: usize,
    transmittance: f64,
    seed: u64,
) -> Result<CodedApertureSet> {
    if !(transmittance > 0.0 && transmittance < 1.0) {
        return Err(Error::argument(format!(
            "transmittance must lie strictly in (0,1), got {transmittance}"
        )));
    }
    if shots == 0 {
        return Err(Error::argument("shot count must be at least 1"));
    }
    if rows == 0 || cols == 0 || bands == 0 {
        return Err(Error::argument(format!(
            "scene extents must be positive, got {rows}x{cols}x{bands}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bernoulli = || {
        if rand::Rng::random::<f64>(&mut rng) < transmittance {
            1.0
        } else {
            0.0
        }
    };
    match kind {
        ApertureKind::BinarySpatial => {
            let codes = (0..shots)
                .map(|_| Matrix::from_fn(rows, cols, |_, _| bernoulli()))
                .collect();
            CodedApertureSet::from_binary(codes)
        }
        ApertureKind::ColoredSpectral => {
            let codes = (0..shots)
                .map(|_| Tensor3::from_fn(rows, cols, bands, |_, _, _| bernoulli()))
                .collect();
            CodedApertureSet::from_colored(codes)
        }
    }
}

/// How a measurement set was produced: the noise seed, the SNR in dB
/// (`f64::INFINITY` marks noiseless data), and the aperture kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub snr_db: f64,
    pub kind: ApertureKind,
}

/// `S` detector images plus the stacked measurement vector they define.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    images: Vec<Matrix>,
    provenance: Provenance,
}

impl MeasurementSet {
    pub fn new(images: Vec<Matrix>, provenance: Provenance) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::argument("measurement needs at least one shot"));
        }
        let (m, c) = (images[0].rows(), images[0].cols());
        for (s, im) in images.iter().enumerate() {
            if (im.rows(), im.cols()) != (m, c) {
                return Err(Error::shape(format!(
                    "shot {s} image is {}x{}, expected {m}x{c}",
                    im.rows(),
                    im.cols()
                )));
            }
        }
        Ok(Self { images, provenance })
    }

    pub fn shots(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, shot: usize) -> &Matrix {
        &self.images[shot]
    }

    pub fn detector_rows(&self) -> usize {
        self.images[0].rows()
    }

    pub fn detector_cols(&self) -> usize {
        self.images[0].cols()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Concatenation of the vectorized shot images, in shot order.
    pub fn stacked(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.stacked_len());
        for im in &self.images {
            y.extend_from_slice(im.data());
        }
        y
    }

    pub fn stacked_len(&self) -> usize {
        self.shots() * self.detector_rows() * self.detector_cols()
    }
}

/// Senses one shot: codes, disperses, and integrates the cube onto the
/// detector.
pub fn forward_shot(x: &Tensor3, code: ShotCode<'_>) -> Result<Matrix> {
    let (m, n, l) = x.dims();
    let (cm, cn) = code.spatial_dims();
    if (cm, cn) != (m, n) {
        return Err(Error::shape(format!(
            "code is {cm}x{cn} but scene is {m}x{n} spatially"
        )));
    }
    if let ShotCode::Colored(t) = code {
        if t.bands() != l {
            return Err(Error::shape(format!(
                "colored code has {} bands but scene has {l}",
                t.bands()
            )));
        }
    }
    let out_cols = detector_cols(n, l);
    let mut y = Matrix::zeros(m, out_cols);
    for ell in 0..l {
        let plane = x.band(ell);
        let mask = code.band_plane(ell);
        for r in 0..m {
            let src = &plane[r * n..(r + 1) * n];
            let msk = &mask[r * n..(r + 1) * n];
            let dst = &mut y.row_mut(r)[ell..ell + n];
            for ((d, s), c) in dst.iter_mut().zip(src).zip(msk) {
                *d += s * c;
            }
        }
    }
    Ok(y)
}

/// Applies [`forward_shot`] per shot and stacks the results. Linear in `x`.
pub fn forward(x: &Tensor3, aperture: &CodedApertureSet) -> Result<MeasurementSet> {
    aperture.check_scene_dims(x.dims())?;
    let images = (0..aperture.shots())
        .map(|s| forward_shot(x, aperture.code(s)))
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(
        images,
        Provenance {
            seed: 0,
            snr_db: f64::INFINITY,
            kind: aperture.kind(),
        },
    )
}

/// Adjoint applied to a stacked measurement vector: un-shifts each band's
/// column window, masks by the code, and accumulates over shots.
pub fn adjoint_stacked(
    y: &[f64],
    aperture: &CodedApertureSet,
    dims: (usize, usize, usize),
) -> Result<Tensor3> {
    aperture.check_scene_dims(dims)?;
    let (m, n, l) = dims;
    let cols = detector_cols(n, l);
    let shot_len = m * cols;
    if y.len() != aperture.shots() * shot_len {
        return Err(Error::shape(format!(
            "stacked vector has length {} but {} shots of {m}x{cols} need {}",
            y.len(),
            aperture.shots(),
            aperture.shots() * shot_len
        )));
    }
    let mut out = Tensor3::zeros(m, n, l);
    for s in 0..aperture.shots() {
        let code = aperture.code(s);
        let shot = &y[s * shot_len..(s + 1) * shot_len];
        for ell in 0..l {
            let mask = code.band_plane(ell);
            let plane = out.band_mut(ell);
            for r in 0..m {
                let src = &shot[r * cols + ell..r * cols + ell + n];
                let msk = &mask[r * n..(r + 1) * n];
                let dst = &mut plane[r * n..(r + 1) * n];
                for ((d, s_), c) in dst.iter_mut().zip(src).zip(msk) {
                    *d += s_ * c;
                }
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`forward`] applied to a measurement set.
pub fn adjoint(
    m: &MeasurementSet,
    aperture: &CodedApertureSet,
    dims: (usize, usize, usize),
) -> Result<Tensor3> {
    if m.shots() != aperture.shots() {
        return Err(Error::shape(format!(
            "measurement has {} shots but aperture has {}",
            m.shots(),
            aperture.shots()
        )));
    }
    adjoint_stacked(&m.stacked(), aperture, dims)
}

/// Materializes the sensing matrix `H` (shape `S*M*(N+L-1) x M*N*L`).
/// Test-scale only; refuses instances above `cap` columns.
pub fn build_dense_oracle_with_cap(
    aperture: &CodedApertureSet,
    dims: (usize, usize, usize),
    cap: usize,
) -> Result<Matrix> {
    aperture.check_scene_dims(dims)?;
    let (m, n, l) = dims;
    let voxels = m * n * l;
    if voxels > cap {
        return Err(Error::argument(format!(
            "dense oracle refused: {voxels} columns exceed cap {cap}; use the operator form"
        )));
    }
    let cols = detector_cols(n, l);
    let shot_len = m * cols;
    let mut h = Matrix::zeros(aperture.shots() * shot_len, voxels);
    for s in 0..aperture.shots() {
        let code = aperture.code(s);
        for ell in 0..l {
            let mask = code.band_plane(ell);
            for r in 0..m {
                for c in 0..n {
                    let row = s * shot_len + r * cols + (c + ell);
                    let col = ell * m * n + r * n + c;
                    h.set(row, col, mask[r * n + c]);
                }
            }
        }
    }
    Ok(h)
}

/// [`build_dense_oracle_with_cap`] at the default cap of
/// [`DENSE_ORACLE_CAP`] columns.
pub fn build_dense_oracle(
    aperture: &CodedApertureSet,
    dims: (usize, usize, usize),
) -> Result<Matrix> {
    build_dense_oracle_with_cap(aperture, dims, DENSE_ORACLE_CAP)
}

/// Adds i.i.d. zero-mean Gaussian noise to the stacked measurements so the
/// realized signal-to-noise ratio is `snr_db`. Infinite SNR returns the
/// input unchanged. Deterministic given `seed`.
pub fn add_noise(m: &MeasurementSet, snr_db: f64, seed: u64) -> Result<MeasurementSet> {
    if snr_db == f64::INFINITY {
        return Ok(m.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::argument(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let energy: f64 = m.images.iter().map(Matrix::norm_sq).sum();
    if energy == 0.0 {
        return Err(Error::argument(
            "cannot set a finite SNR on zero-energy measurements",
        ));
    }
    let len = m.stacked_len() as f64;
    let sigma = (energy / (len * 10f64.powf(snr_db / 10.0))).sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = m
        .images
        .iter()
        .map(|im| {
            let data = im.data().iter().map(|v| v + normal.sample(&mut rng)).collect();
            Matrix::new(im.rows(), im.cols(), data).expect("extents preserved")
        })
        .collect();
    MeasurementSet::new(
        images,
        Provenance {
            seed,
            snr_db,
            kind: m.provenance.kind,
        },
    )
}
