//! End-to-end fitting of the untrained generator to compressed measurements.
//!
//! The solver minimizes `0.5 * ||y - H vect(M_theta(Z))||^2` jointly over
//! the generator parameters and the Tucker latent (core and factors),
//! chaining the exact module gradients: sensing adjoint, generator reverse
//! pass, latent backprop. Restarts run independent seeded trajectories and
//! the best final loss wins. The reconstruction is the generator output of
//! the winning state — re-running the generator on the returned state
//! reproduces it bitwise.

use std::time::Instant;

use crate::cassi::{adjoint_stacked, forward, CodedApertureSet, MeasurementSet};
use crate::error::{Error, Result};
use crate::generator::{build, Arch, GeneratorGrads, GeneratorParams};
use crate::metrics::psnr;
use crate::tensor::Tensor3;
use crate::tucker::{TuckerGrads, TuckerLatent};
use crate::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Optimize generator parameters and the Tucker latent jointly.
    Full,
    /// Deep-image-prior ablation: the latent stays at its random
    /// initialization; only generator parameters move.
    DipFixedInput,
}

impl FitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMode::Full => "full",
            FitMode::DipFixedInput => "dip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Adaptive-moment gradient descent with bias correction (the default).
    Adam,
    /// Plain gradient descent, selectable for ablation.
    Sgd,
}

impl Optimizer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
        }
    }
}

/// Everything that defines one fit run.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub arch: Arch,
    pub width: usize,
    pub restarts: usize,
    pub seed: u64,
    pub mode: FitMode,
    pub optimizer: Optimizer,
    /// Residual trace stride: iteration 0, every `log_stride`-th iteration,
    /// and the final state are logged.
    pub log_stride: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            rho: 0.5,
            arch: Arch::Resnet,
            width: 7,
            restarts: 5,
            seed: 0,
            mode: FitMode::Full,
            optimizer: Optimizer::Adam,
            log_stride: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::argument("iteration count must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::argument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.restarts < 1 {
            return Err(Error::argument("restart count must be at least 1"));
        }
        if self.log_stride < 1 {
            return Err(Error::argument("log stride must be at least 1"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::argument(format!("{name} must lie in [0,1), got {b}")));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::argument("epsilon must be positive"));
        }
        Ok(())
    }
}

/// One optimization state: the latent and the generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    pub latent: TuckerLatent,
    pub params: GeneratorParams,
}

impl FitState {
    /// Fresh random state for one restart.
    pub fn init(
        dims: (usize, usize, usize),
        cfg: &FitConfig,
        restart_seed: u64,
    ) -> Result<Self> {
        let (m, n, l) = dims;
        let latent = TuckerLatent::init(m, n, l, cfg.rho, derive_seed(restart_seed, 1))?;
        let params = build(cfg.arch, l, cfg.width, derive_seed(restart_seed, 2))?;
        Ok(Self { latent, params })
    }

    /// The reconstruction this state currently encodes.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let z = self.latent.expand()?;
        Ok(self.params.forward(&z)?.0)
    }
}

/// Gradients for every learnable array of a [`FitState`].
#[derive(Debug, Clone)]
pub struct StateGrads {
    pub latent: TuckerGrads,
    pub generator: GeneratorGrads,
}

/// Data-fidelity loss and its exact gradients at `state`.
pub fn loss_and_grad(
    state: &FitState,
    measurements: &MeasurementSet,
    aperture: &CodedApertureSet,
) -> Result<(f64, StateGrads)> {
    let (loss, _, grads) = eval(state, &measurements.stacked(), aperture)?;
    Ok((loss, grads))
}

/// Shared evaluation path: loss, reconstruction, gradients.
fn eval(
    state: &FitState,
    y: &[f64],
    aperture: &CodedApertureSet,
) -> Result<(f64, Tensor3, StateGrads)> {
    let z = state.latent.expand()?;
    let (x, tape) = state.params.forward(&z)?;
    let hx = forward(&x, aperture)?.stacked();
    if hx.len() != y.len() {
        return Err(Error::shape(format!(
            "measurement vector has length {} but the operator produces {}",
            y.len(),
            hx.len()
        )));
    }
    let residual: Vec<f64> = hx.iter().zip(y).map(|(a, b)| a - b).collect();
    let loss = 0.5 * residual.iter().map(|v| v * v).sum::<f64>();
    let g_x = adjoint_stacked(&residual, aperture, x.dims())?;
    let (generator, g_z) = state.params.backward(tape, &g_x)?;
    let latent = state.latent.backprop(&g_z)?;
    Ok((loss, x, StateGrads { latent, generator }))
}

/// Data-fidelity loss and reconstruction only (no gradients).
fn eval_loss(
    state: &FitState,
    y: &[f64],
    aperture: &CodedApertureSet,
) -> Result<(f64, Tensor3)> {
    let x = state.reconstruct()?;
    let hx = forward(&x, aperture)?.stacked();
    let loss = 0.5 * hx.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    Ok((loss, x))
}

/// First/second moment accumulators for one parameter array.
#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// Optimizer state across iterations: one moment pair per parameter array
/// (latent core, U, V, W, then each convolution's weights and bias).
#[derive(Debug, Clone)]
pub struct OptState {
    blocks: Vec<Moments>,
    steps: usize,
}

impl OptState {
    pub fn new(state: &FitState) -> Self {
        let mut blocks = vec![
            Moments::new(state.latent.core().len()),
            Moments::new(state.latent.u().data().len()),
            Moments::new(state.latent.v().data().len()),
            Moments::new(state.latent.w().data().len()),
        ];
        for cp in state.params.convs() {
            blocks.push(Moments::new(cp.weights.len()));
            blocks.push(Moments::new(cp.bias.len()));
        }
        Self { blocks, steps: 0 }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

fn check_finite(grads: &StateGrads) -> Result<()> {
    let latent_ok = grads.latent.core.data().iter().all(|v| v.is_finite())
        && grads.latent.u.data().iter().all(|v| v.is_finite())
        && grads.latent.v.data().iter().all(|v| v.is_finite())
        && grads.latent.w.data().iter().all(|v| v.is_finite());
    let conv_ok = grads
        .generator
        .convs
        .iter()
        .all(|c| c.weights.iter().all(|v| v.is_finite()) && c.bias.iter().all(|v| v.is_finite()));
    if latent_ok && conv_ok {
        Ok(())
    } else {
        Err(Error::numerical("non-finite gradient encountered"))
    }
}

/// Applies one optimizer step to every learnable array. In
/// [`FitMode::DipFixedInput`] the four latent arrays are left untouched.
pub fn step(
    state: &mut FitState,
    grads: &StateGrads,
    opt: &mut OptState,
    cfg: &FitConfig,
) -> Result<()> {
    check_finite(grads)?;
    opt.steps += 1;
    let t = opt.steps;
    let update = |x: &mut [f64], g: &[f64], mom: &mut Moments| match cfg.optimizer {
        Optimizer::Adam => {
            let bc1 = 1.0 - cfg.beta1.powi(t as i32);
            let bc2 = 1.0 - cfg.beta2.powi(t as i32);
            for i in 0..x.len() {
                mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
                mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mhat = mom.m[i] / bc1;
                let vhat = mom.v[i] / bc2;
                x[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
            }
        }
        Optimizer::Sgd => {
            for i in 0..x.len() {
                x[i] -= cfg.learning_rate * g[i];
            }
        }
    };

    let mut blocks = opt.blocks.iter_mut();
    let latent_moms: Vec<&mut Moments> = blocks.by_ref().take(4).collect();
    if cfg.mode == FitMode::Full {
        let mut it = latent_moms.into_iter();
        update(
            state.latent.core_mut().data_mut(),
            grads.latent.core.data(),
            it.next().expect("four latent blocks"),
        );
        update(state.latent.u_mut().data_mut(), grads.latent.u.data(), it.next().unwrap());
        update(state.latent.v_mut().data_mut(), grads.latent.v.data(), it.next().unwrap());
        update(state.latent.w_mut().data_mut(), grads.latent.w.data(), it.next().unwrap());
    }
    for (cp, cg) in state.params.convs_mut().iter_mut().zip(&grads.generator.convs) {
        let wm = blocks.next().expect("weight moments per conv");
        update(&mut cp.weights, &cg.weights, wm);
        let bm = blocks.next().expect("bias moments per conv");
        update(&mut cp.bias, &cg.bias, bm);
    }
    Ok(())
}

/// One logged point of the residual trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Completed optimizer steps when the loss was measured (0 = initial).
    pub iteration: usize,
    pub loss: f64,
    /// Reconstruction quality against the reference, when one was supplied.
    pub psnr_db: Option<f64>,
}

/// Outcome of [`fit`]: best-restart reconstruction and state, per-restart
/// diagnostics, and the full residual traces.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub reconstruction: Tensor3,
    pub state: FitState,
    pub best_restart: usize,
    pub final_losses: Vec<f64>,
    pub traces: Vec<Vec<TracePoint>>,
    pub wall_seconds: f64,
    pub config: FitConfig,
}

/// Fits the generator to the measurements over `cfg.restarts` independent
/// trajectories. `reference` adds reconstruction PSNR to the trace; it never
/// influences the optimization.
pub fn fit(
    measurements: &MeasurementSet,
    aperture: &CodedApertureSet,
    dims: (usize, usize, usize),
    cfg: &FitConfig,
    reference: Option<&Tensor3>,
) -> Result<FitResult> {
    cfg.validate()?;
    aperture.check_scene_dims(dims)?;
    if measurements.shots() != aperture.shots() {
        return Err(Error::shape(format!(
            "measurement has {} shots but aperture has {}",
            measurements.shots(),
            aperture.shots()
        )));
    }
    let (m, n, l) = dims;
    if measurements.detector_rows() != m
        || measurements.detector_cols() != crate::cassi::detector_cols(n, l)
    {
        return Err(Error::shape(format!(
            "measurement images are {}x{} but a {m}x{n}x{l} scene needs {m}x{}",
            measurements.detector_rows(),
            measurements.detector_cols(),
            crate::cassi::detector_cols(n, l)
        )));
    }
    let y = measurements.stacked();
    let started = Instant::now();

    let mut best: Option<(usize, f64, f64, Tensor3, FitState)> = None;
    let mut final_losses = Vec::with_capacity(cfg.restarts);
    let mut traces = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let restart_seed = derive_seed(cfg.seed, restart as u64);
        let mut state = FitState::init(dims, cfg, restart_seed)?;
        let mut opt = OptState::new(&state);
        let mut trace = Vec::new();
        for it in 0..cfg.iterations {
            let (loss, x, grads) = eval(&state, &y, aperture).map_err(|e| {
                Error::numerical(format!("restart {restart}, iteration {it}: {e}"))
            })?;
            if !loss.is_finite() {
                return Err(Error::numerical(format!(
                    "restart {restart}: non-finite loss at iteration {it}"
                )));
            }
            if it % cfg.log_stride == 0 {
                trace.push(TracePoint {
                    iteration: it,
                    loss,
                    psnr_db: reference.map(|r| psnr(r, &x)).transpose()?,
                });
            }
            step(&mut state, &grads, &mut opt, cfg).map_err(|e| {
                Error::numerical(format!("restart {restart}, iteration {it}: {e}"))
            })?;
        }
        let (final_loss, x) = eval_loss(&state, &y, aperture)?;
        trace.push(TracePoint {
            iteration: cfg.iterations,
            loss: final_loss,
            psnr_db: reference.map(|r| psnr(r, &x)).transpose()?,
        });
        final_losses.push(final_loss);
        traces.push(trace);
        let better = match &best {
            Some((_, best_loss, _, _, _)) => final_loss < *best_loss,
            None => true,
        };
        if better {
            let quality = reference.map(|r| psnr(r, &x)).transpose()?.unwrap_or(f64::NAN);
            best = Some((restart, final_loss, quality, x, state));
        }
    }
    let (best_restart, _, _, reconstruction, state) = best.expect("at least one restart");
    Ok(FitResult {
        reconstruction,
        state,
        best_restart,
        final_losses,
        traces,
        wall_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
    })
}
