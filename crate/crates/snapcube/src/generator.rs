//! Untrained convolutional generator and its reverse-mode engine.
//!
//! Two small architectures map a feature tensor to an image cube of the
//! same extents, treating the spectral dimension as 2-D convolution
//! channels:
//!
//! * `resnet` — four 3x3 convolutions with ReLU between them, a single skip
//!   connection adding the network input back in before a final sigmoid;
//! * `autoencoder` — six 3x3 convolutions with two average-pool
//!   downsamplings and two nearest-neighbor upsamplings, sigmoid output.
//!
//! [`GeneratorParams::forward`] records a [`Tape`] of intermediates;
//! [`GeneratorParams::backward`] consumes the tape (by value, so a tape can
//! never be replayed) and returns exact gradients for every kernel, bias,
//! and the input tensor.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Resnet,
    Autoencoder,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::Resnet => "resnet",
            Arch::Autoencoder => "autoencoder",
        }
    }
}

/// One step of the generator pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Stride-1, zero same-padded 2-D convolution with a square odd kernel.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        bias: bool,
    },
    Relu,
    Sigmoid,
    /// Adds the network input tensor (the resnet skip connection).
    SkipAdd,
    /// 2x2 average pooling, stride 2.
    Downsample2,
    /// Nearest-neighbor 2x upsampling.
    Upsample2,
}

/// Kernel and bias storage for one convolution. Weights are laid out as
/// `[out][in][ky][kx]`, lowest index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// The generator: an architecture id, its layer list, and the parameters of
/// each convolution in order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    arch: Arch,
    layers: Vec<LayerSpec>,
    convs: Vec<ConvParams>,
    channels: usize,
    width: usize,
    seed: u64,
}

/// Gradients for one convolution, same layout as [`ConvParams`].
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients for every convolution, in layer order.
#[derive(Debug, Clone)]
pub struct GeneratorGrads {
    pub convs: Vec<ConvGrads>,
}

/// Per-layer intermediates recorded by one forward pass. `backward` takes
/// the tape by value, so each forward pass supports exactly one reverse
/// pass — replay is a compile error, not a runtime one.
#[derive(Debug)]
pub struct Tape {
    records: Vec<Saved>,
    out_dims: (usize, usize, usize),
}

#[derive(Debug)]
enum Saved {
    Conv { input: Tensor3 },
    Relu { input: Tensor3 },
    Sigmoid { output: Tensor3 },
    SkipAdd,
    Down { rows: usize, cols: usize },
    Up { rows: usize, cols: usize },
}

/// Builds an initialized generator. Kernels are He-initialized
/// (`std = sqrt(2 / fan-in)`) from the seed; biases start at zero.
pub fn build(arch: Arch, channels: usize, width: usize, seed: u64) -> Result<GeneratorParams> {
    if width < 1 {
        return Err(Error::argument(format!(
            "generator width must be at least 1, got {width}"
        )));
    }
    if channels < 1 {
        return Err(Error::argument(format!(
            "channel count must be at least 1, got {channels}"
        )));
    }
    let conv = |i: usize, o: usize| LayerSpec::Conv2d {
        in_channels: i,
        out_channels: o,
        kernel: 3,
        bias: true,
    };
    let layers = match arch {
        Arch::Resnet => vec![
            conv(channels, width),
            LayerSpec::Relu,
            conv(width, width),
            LayerSpec::Relu,
            conv(width, width),
            LayerSpec::Relu,
            conv(width, channels),
            LayerSpec::SkipAdd,
            LayerSpec::Sigmoid,
        ],
        Arch::Autoencoder => vec![
            conv(channels, width),
            LayerSpec::Relu,
            LayerSpec::Downsample2,
            conv(width, 2 * width),
            LayerSpec::Relu,
            LayerSpec::Downsample2,
            conv(2 * width, 2 * width),
            LayerSpec::Relu,
            LayerSpec::Upsample2,
            conv(2 * width, width),
            LayerSpec::Relu,
            LayerSpec::Upsample2,
            conv(width, width),
            LayerSpec::Relu,
            conv(width, channels),
            LayerSpec::Sigmoid,
        ],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let convs = layers
        .iter()
        .filter_map(|l| match *l {
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
                bias,
            } => {
                let fan_in = (kernel * kernel * in_channels) as f64;
                let he = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("fan-in >= 1");
                let weights = (0..out_channels * in_channels * kernel * kernel)
                    .map(|_| he.sample(&mut rng))
                    .collect();
                let bias = vec![0.0; if bias { out_channels } else { 0 }];
                Some(ConvParams {
                    in_channels,
                    out_channels,
                    kernel,
                    weights,
                    bias,
                })
            }
            _ => None,
        })
        .collect();
    Ok(GeneratorParams {
        arch,
        layers,
        convs,
        channels,
        width,
        seed,
    })
}

impl GeneratorParams {
    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn convs(&self) -> &[ConvParams] {
        &self.convs
    }

    pub(crate) fn convs_mut(&mut self) -> &mut [ConvParams] {
        &mut self.convs
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total scalar parameter count over all kernels and biases.
    pub fn param_count(&self) -> usize {
        self.convs.iter().map(ConvParams::len).sum()
    }

    /// Runs the generator on `z`, returning the output and the tape for one
    /// reverse pass. The output has the extents of `z` with every entry in
    /// (0,1).
    pub fn forward(&self, z: &Tensor3) -> Result<(Tensor3, Tape)> {
        if z.bands() != self.channels {
            return Err(Error::shape(format!(
                "input has {} channels but the generator expects {}",
                z.bands(),
                self.channels
            )));
        }
        if self.arch == Arch::Autoencoder
            && (!z.rows().is_multiple_of(4) || !z.cols().is_multiple_of(4))
        {
            return Err(Error::argument(format!(
                "autoencoder input extents must be divisible by 4, got {}x{}",
                z.rows(),
                z.cols()
            )));
        }
        let mut records = Vec::with_capacity(self.layers.len());
        let mut cur = z.clone();
        let mut conv_idx = 0;
        for layer in &self.layers {
            cur = match layer {
                LayerSpec::Conv2d { .. } => {
                    let out = conv_forward(&cur, &self.convs[conv_idx])?;
                    records.push(Saved::Conv { input: cur });
                    conv_idx += 1;
                    out
                }
                LayerSpec::Relu => {
                    let out = cur.map(|v| v.max(0.0));
                    records.push(Saved::Relu { input: cur });
                    out
                }
                LayerSpec::Sigmoid => {
                    let out = cur.map(|v| 1.0 / (1.0 + (-v).exp()));
                    records.push(Saved::Sigmoid { output: out.clone() });
                    out
                }
                LayerSpec::SkipAdd => {
                    if cur.dims() != z.dims() {
                        return Err(Error::shape(format!(
                            "skip connection joins {:?} with input {:?}",
                            cur.dims(),
                            z.dims()
                        )));
                    }
                    records.push(Saved::SkipAdd);
                    let mut out = cur;
                    out.data_mut()
                        .iter_mut()
                        .zip(z.data())
                        .for_each(|(a, b)| *a += b);
                    out
                }
                LayerSpec::Downsample2 => {
                    let out = down2_forward(&cur)?;
                    records.push(Saved::Down {
                        rows: cur.rows(),
                        cols: cur.cols(),
                    });
                    out
                }
                LayerSpec::Upsample2 => {
                    let out = up2_forward(&cur);
                    records.push(Saved::Up {
                        rows: cur.rows(),
                        cols: cur.cols(),
                    });
                    out
                }
            };
        }
        let out_dims = cur.dims();
        Ok((cur, Tape { records, out_dims }))
    }

    /// Reverse pass: given the loss gradient at the output, returns the
    /// gradients for every convolution parameter and for the input tensor.
    pub fn backward(&self, tape: Tape, g_out: &Tensor3) -> Result<(GeneratorGrads, Tensor3)> {
        if g_out.dims() != tape.out_dims {
            return Err(Error::shape(format!(
                "output gradient dims {:?} differ from forward output {:?}",
                g_out.dims(),
                tape.out_dims
            )));
        }
        let mut conv_grads: Vec<Option<ConvGrads>> = (0..self.convs.len()).map(|_| None).collect();
        let mut conv_idx = self.convs.len();
        let mut g = g_out.clone();
        let mut g_skip: Option<Tensor3> = None;
        for saved in tape.records.into_iter().rev() {
            g = match saved {
                Saved::Conv { input } => {
                    conv_idx -= 1;
                    let cp = &self.convs[conv_idx];
                    conv_grads[conv_idx] = Some(conv_backward_params(&input, &g, cp));
                    conv_backward_input(&g, cp, input.dims())
                }
                Saved::Relu { input } => {
                    let mut out = g;
                    out.data_mut()
                        .iter_mut()
                        .zip(input.data())
                        .for_each(|(gv, x)| {
                            if *x <= 0.0 {
                                *gv = 0.0;
                            }
                        });
                    out
                }
                Saved::Sigmoid { output } => {
                    let mut out = g;
                    out.data_mut()
                        .iter_mut()
                        .zip(output.data())
                        .for_each(|(gv, y)| *gv *= y * (1.0 - y));
                    out
                }
                Saved::SkipAdd => {
                    // The addition forks the gradient: one copy continues
                    // down the conv path, one flows straight to the input.
                    match &mut g_skip {
                        Some(acc) => acc
                            .data_mut()
                            .iter_mut()
                            .zip(g.data())
                            .for_each(|(a, b)| *a += b),
                        None => g_skip = Some(g.clone()),
                    }
                    g
                }
                Saved::Down { rows, cols } => down2_backward(&g, rows, cols),
                Saved::Up { rows, cols } => up2_backward(&g, rows, cols),
            };
        }
        if let Some(acc) = g_skip {
            g.data_mut()
                .iter_mut()
                .zip(acc.data())
                .for_each(|(a, b)| *a += b);
        }
        let convs = conv_grads
            .into_iter()
            .map(|g| g.expect("one conv record per conv layer"))
            .collect();
        Ok((GeneratorGrads { convs }, g))
    }
}

/// Valid row/column window for a kernel offset: destination indices whose
/// padded source index stays in bounds.
fn span(extent: usize, offset: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(offset);
    let hi = (extent + pad).saturating_sub(offset).min(extent);
    (lo, hi.max(lo))
}

fn conv_forward(input: &Tensor3, cp: &ConvParams) -> Result<Tensor3> {
    let (rows, cols, in_c) = input.dims();
    if in_c != cp.in_channels {
        return Err(Error::shape(format!(
            "convolution expects {} input channels, got {in_c}",
            cp.in_channels
        )));
    }
    let k = cp.kernel;
    let p = k / 2;
    let mut out = Tensor3::zeros(rows, cols, cp.out_channels);
    for o in 0..cp.out_channels {
        let plane = out.band_mut(o);
        if !cp.bias.is_empty() {
            plane.fill(cp.bias[o]);
        }
        for i in 0..in_c {
            let src = input.band(i);
            for dy in 0..k {
                let (r_lo, r_hi) = span(rows, dy, p);
                for dx in 0..k {
                    let w = cp.weights[((o * in_c + i) * k + dy) * k + dx];
                    let (c_lo, c_hi) = span(cols, dx, p);
                    if c_lo >= c_hi {
                        continue;
                    }
                    for r in r_lo..r_hi {
                        let sr = r + dy - p;
                        let sc = c_lo + dx - p;
                        let dst = &mut plane[r * cols + c_lo..r * cols + c_hi];
                        let s = &src[sr * cols + sc..sr * cols + sc + (c_hi - c_lo)];
                        for (d, v) in dst.iter_mut().zip(s) {
                            *d += w * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradient w.r.t. the convolution input: full correlation of the output
/// gradient with the flipped kernel (the exact linear transpose).
fn conv_backward_input(g: &Tensor3, cp: &ConvParams, in_dims: (usize, usize, usize)) -> Tensor3 {
    let (rows, cols, in_c) = in_dims;
    let k = cp.kernel;
    let p = k / 2;
    let mut gin = Tensor3::zeros(rows, cols, in_c);
    for o in 0..cp.out_channels {
        let gsrc = g.band(o);
        for i in 0..in_c {
            let plane = gin.band_mut(i);
            for dy in 0..k {
                let (r_lo, r_hi) = span(rows, dy, p);
                for dx in 0..k {
                    let w = cp.weights[((o * in_c + i) * k + dy) * k + dx];
                    let (c_lo, c_hi) = span(cols, dx, p);
                    if c_lo >= c_hi {
                        continue;
                    }
                    for r in r_lo..r_hi {
                        let sr = r + dy - p;
                        let sc = c_lo + dx - p;
                        let dst = &mut plane[sr * cols + sc..sr * cols + sc + (c_hi - c_lo)];
                        let s = &gsrc[r * cols + c_lo..r * cols + c_hi];
                        for (d, v) in dst.iter_mut().zip(s) {
                            *d += w * v;
                        }
                    }
                }
            }
        }
    }
    gin
}

/// Gradients w.r.t. kernel weights and biases.
fn conv_backward_params(input: &Tensor3, g: &Tensor3, cp: &ConvParams) -> ConvGrads {
    let (rows, cols, in_c) = input.dims();
    let k = cp.kernel;
    let p = k / 2;
    let mut weights = vec![0.0; cp.weights.len()];
    let mut bias = vec![0.0; cp.bias.len()];
    for o in 0..cp.out_channels {
        let gsrc = g.band(o);
        if !bias.is_empty() {
            bias[o] = gsrc.iter().sum();
        }
        for i in 0..in_c {
            let src = input.band(i);
            for dy in 0..k {
                let (r_lo, r_hi) = span(rows, dy, p);
                for dx in 0..k {
                    let (c_lo, c_hi) = span(cols, dx, p);
                    if c_lo >= c_hi {
                        continue;
                    }
                    let mut acc = 0.0;
                    for r in r_lo..r_hi {
                        let sr = r + dy - p;
                        let sc = c_lo + dx - p;
                        let gs = &gsrc[r * cols + c_lo..r * cols + c_hi];
                        let xs = &src[sr * cols + sc..sr * cols + sc + (c_hi - c_lo)];
                        acc += gs.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                    }
                    weights[((o * in_c + i) * k + dy) * k + dx] = acc;
                }
            }
        }
    }
    ConvGrads { weights, bias }
}

fn down2_forward(input: &Tensor3) -> Result<Tensor3> {
    let (rows, cols, ch) = input.dims();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::argument(format!(
            "2x2 pooling needs extents divisible by 2, got {rows}x{cols}"
        )));
    }
    let (or, oc) = (rows / 2, cols / 2);
    let mut out = Tensor3::zeros(or, oc, ch);
    for b in 0..ch {
        let src = input.band(b);
        let dst = out.band_mut(b);
        for r in 0..or {
            let top = &src[(2 * r) * cols..(2 * r) * cols + cols];
            let bot = &src[(2 * r + 1) * cols..(2 * r + 1) * cols + cols];
            for c in 0..oc {
                dst[r * oc + c] =
                    0.25 * (top[2 * c] + top[2 * c + 1] + bot[2 * c] + bot[2 * c + 1]);
            }
        }
    }
    Ok(out)
}

fn down2_backward(g: &Tensor3, rows: usize, cols: usize) -> Tensor3 {
    let (or, oc, ch) = g.dims();
    let mut out = Tensor3::zeros(rows, cols, ch);
    for b in 0..ch {
        let src = g.band(b);
        let dst = out.band_mut(b);
        for r in 0..or {
            for c in 0..oc {
                let v = 0.25 * src[r * oc + c];
                dst[(2 * r) * cols + 2 * c] = v;
                dst[(2 * r) * cols + 2 * c + 1] = v;
                dst[(2 * r + 1) * cols + 2 * c] = v;
                dst[(2 * r + 1) * cols + 2 * c + 1] = v;
            }
        }
    }
    out
}

fn up2_forward(input: &Tensor3) -> Tensor3 {
    let (rows, cols, ch) = input.dims();
    let (or, oc) = (rows * 2, cols * 2);
    let mut out = Tensor3::zeros(or, oc, ch);
    for b in 0..ch {
        let src = input.band(b);
        let dst = out.band_mut(b);
        for r in 0..or {
            for c in 0..oc {
                dst[r * oc + c] = src[(r / 2) * cols + c / 2];
            }
        }
    }
    out
}

fn up2_backward(g: &Tensor3, rows: usize, cols: usize) -> Tensor3 {
    let ch = g.bands();
    let goc = g.cols();
    let mut out = Tensor3::zeros(rows, cols, ch);
    for b in 0..ch {
        let src = g.band(b);
        let dst = out.band_mut(b);
        for r in 0..rows {
            for c in 0..cols {
                dst[r * cols + c] = src[(2 * r) * goc + 2 * c]
                    + src[(2 * r) * goc + 2 * c + 1]
                    + src[(2 * r + 1) * goc + 2 * c]
                    + src[(2 * r + 1) * goc + 2 * c + 1];
            }
        }
    }
    out
}
