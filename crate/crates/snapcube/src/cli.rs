//! Command-line harness over the library: simulation, reconstruction,
//! baselines, metrics, and the sweep/grid experiment protocols.
//!
//! Every run writes a single-line JSON manifest next to its primary output
//! (override with `--manifest`) capturing the command, all resolved flags,
//! and SHA-256 digests of every file read and written — enough to re-run the
//! command and verify bit-identical artifacts. Data goes to the files named
//! by flags; progress notes go to stderr.
//!
//! Exit codes: 0 success, 2 argument/shape errors, 3 format/IO errors,
//! 4 numerical failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baseline::{back_projection, default_lambda, fista_dct};
use crate::cassi::{
    add_noise, forward, generate_aperture, ApertureKind, CodedApertureSet, MeasurementSet,
};
use crate::generator::Arch;
use crate::metrics::{psnr, sam, ssim};
use crate::phantom::make_phantom;
use crate::solver::{fit, FitConfig, FitMode, Optimizer, TracePoint};
use crate::tensor::Tensor3;
use crate::{derive_seed, io, Error, Result};

// Stream tags hung off the one user-facing seed; disjoint per role so no two
// draws in a run share a stream.
const TAG_APERTURE: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_SWEEP_FIT: u64 = 1_000;
const TAG_GRID_APERTURE: u64 = 100;
const TAG_GRID_NOISE: u64 = 1_000;
const TAG_GRID_FIT: u64 = 10_000;

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. `--help`/`--version` print to stdout and return 0; usage
/// errors print to stderr and return 2.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "snapcube",
    version,
    about = "Compressive spectral imaging: simulate coded-aperture measurements and \
             reconstruct cubes with an untrained deep prior"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coded-aperture measurements of a scene cube.
    Simulate(SimulateArgs),
    /// Fit the deep prior to measurements and write the reconstruction.
    Reconstruct(ReconstructArgs),
    /// Reconstruct with a classical method (back-projection or DCT sparsity).
    Baseline(BaselineArgs),
    /// Compare a reconstruction against a reference cube.
    Metrics(MetricsArgs),
    /// Reconstruction quality across latent compression ratios.
    SweepRho(SweepRhoArgs),
    /// Reconstruction quality across shot counts and noise levels.
    Grid(GridArgs),
    /// Generate a synthetic scene cube.
    Phantom(PhantomArgs),
    /// Export one spectral band as a 16-bit PGM image.
    ExportBand(ExportBandArgs),
    /// Build a cube file from flat CSV (one `m,n,l,value` row per voxel).
    Convert(ConvertArgs),
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Baseline(a) => baseline(a),
        Command::Metrics(a) => metrics(a),
        Command::SweepRho(a) => sweep_rho(a),
        Command::Grid(a) => grid(a),
        Command::Phantom(a) => phantom(a),
        Command::ExportBand(a) => export_band(a),
        Command::Convert(a) => convert(a),
    }
}

// ---------------------------------------------------------------------------
// flag parsing helpers

fn parse_snr(s: &str) -> std::result::Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a dB value or 'inf', got {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("SNR must be finite or 'inf', got {s:?}"));
    }
    Ok(v)
}

fn parse_kind(s: &str) -> std::result::Result<ApertureKind, String> {
    match s {
        "bernoulli" => Ok(ApertureKind::BinarySpatial),
        "colored" => Ok(ApertureKind::ColoredSpectral),
        _ => Err(format!("expected 'bernoulli' or 'colored', got {s:?}")),
    }
}

fn parse_arch(s: &str) -> std::result::Result<Arch, String> {
    match s {
        "resnet" => Ok(Arch::Resnet),
        "autoencoder" => Ok(Arch::Autoencoder),
        _ => Err(format!("expected 'resnet' or 'autoencoder', got {s:?}")),
    }
}

fn parse_mode(s: &str) -> std::result::Result<FitMode, String> {
    match s {
        "full" => Ok(FitMode::Full),
        "dip" => Ok(FitMode::DipFixedInput),
        _ => Err(format!("expected 'full' or 'dip', got {s:?}")),
    }
}

fn parse_optimizer(s: &str) -> std::result::Result<Optimizer, String> {
    match s {
        "adam" => Ok(Optimizer::Adam),
        "sgd" => Ok(Optimizer::Sgd),
        _ => Err(format!("expected 'adam' or 'sgd', got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy)]
enum BaselineMethod {
    Bp,
    FistaDct,
}

impl BaselineMethod {
    fn as_str(&self) -> &'static str {
        match self {
            BaselineMethod::Bp => "bp",
            BaselineMethod::FistaDct => "fista-dct",
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<BaselineMethod, String> {
    match s {
        "bp" => Ok(BaselineMethod::Bp),
        "fista-dct" => Ok(BaselineMethod::FistaDct),
        _ => Err(format!("expected 'bp' or 'fista-dct', got {s:?}")),
    }
}

/// `MxNxL` with positive extents.
fn parse_dims(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    let bad = || Error::argument(format!("expected dims as MxNxL, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0usize; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| bad())?;
        if *slot == 0 {
            return Err(Error::argument(format!(
                "dims must be positive, got {s:?}"
            )));
        }
    }
    Ok((out[0], out[1], out[2]))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let items: Result<Vec<f64>> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::argument(format!("bad {what} entry {:?} in {s:?}", p.trim())))
        })
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(Error::argument(format!("{what} list is empty")));
    }
    Ok(items)
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            let v: usize = p.trim().parse().map_err(|_| {
                Error::argument(format!("bad {what} entry {:?} in {s:?}", p.trim()))
            })?;
            if v == 0 {
                return Err(Error::argument(format!("{what} entries must be positive")));
            }
            Ok(v)
        })
        .collect()
}

fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| parse_snr(p.trim()).map_err(Error::argument))
        .collect()
}

fn format_snr(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

// ---------------------------------------------------------------------------
// run manifests

/// Accumulates one JSON line describing a run: resolved flags plus content
/// digests of every file touched. Written next to the primary output.
struct Manifest {
    command: &'static str,
    args: serde_json::Map<String, serde_json::Value>,
    inputs: serde_json::Map<String, serde_json::Value>,
    outputs: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest {
            command,
            args: serde_json::Map::new(),
            inputs: serde_json::Map::new(),
            outputs: serde_json::Map::new(),
        }
    }

    fn arg(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.args.insert(key.to_string(), value.into());
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = io::sha256_hex_file(path)?;
        self.inputs.insert(path.display().to_string(), digest.into());
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        let digest = io::sha256_hex_file(path)?;
        self.outputs.insert(path.display().to_string(), digest.into());
        Ok(())
    }

    fn write(self, path: &Path) -> Result<()> {
        let line = serde_json::json!({
            "command": self.command,
            "args": self.args,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        std::fs::write(path, format!("{line}\n"))?;
        Ok(())
    }
}

fn manifest_path(explicit: &Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| suffixed(out, ".manifest.jsonl"))
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

// ---------------------------------------------------------------------------
// shared pipeline pieces

/// Scene extents implied by a measurement/aperture file pair. The detector
/// width pins the band count: `cols = N + L − 1`.
fn scene_dims(m: &MeasurementSet, a: &CodedApertureSet) -> Result<(usize, usize, usize)> {
    let (rows, cols) = a.spatial_dims();
    if m.detector_rows() != rows {
        return Err(Error::shape(format!(
            "measurement has {} detector rows, aperture expects {rows}",
            m.detector_rows()
        )));
    }
    if m.shots() != a.shots() {
        return Err(Error::shape(format!(
            "measurement has {} shots, aperture has {}",
            m.shots(),
            a.shots()
        )));
    }
    let detector = m.detector_cols();
    if detector < cols {
        return Err(Error::shape(format!(
            "detector width {detector} is narrower than the {cols}-column aperture"
        )));
    }
    let bands = detector - cols + 1;
    if let Some(b) = a.code_bands() {
        if b != bands {
            return Err(Error::shape(format!(
                "aperture codes {b} bands but the detector width implies {bands}"
            )));
        }
    }
    if m.provenance().kind != a.kind() {
        eprintln!(
            "note: measurement provenance says '{}' aperture, file is '{}'",
            m.provenance().kind.as_str(),
            a.kind().as_str()
        );
    }
    Ok((rows, cols, bands))
}

/// Reads a scene and applies ingestion normalization, reporting the divisor.
fn ingest_scene(path: &Path, normalize: bool, man: &mut Manifest) -> Result<(Tensor3, f64)> {
    let raw = io::read_cube(path)?;
    man.input(path)?;
    if normalize {
        Ok(io::normalize_cube(&raw))
    } else {
        Ok((raw, 1.0))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn trace_csv(traces: &[Vec<TracePoint>]) -> String {
    let mut out = String::from("restart,iteration,loss,psnr_db\n");
    for (restart, trace) in traces.iter().enumerate() {
        for p in trace {
            let quality = p.psnr_db.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(out, "{restart},{},{:.9e},{quality}", p.iteration, p.loss)
                .expect("writing to a String cannot fail");
        }
    }
    out
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Args)]
struct SimulateArgs {
    /// Scene cube (SCB1).
    #[arg(long)]
    scene: PathBuf,
    /// Number of snapshots.
    #[arg(long, default_value_t = 1)]
    shots: usize,
    /// Measurement SNR in dB, or 'inf' for noiseless.
    #[arg(long, value_parser = parse_snr, default_value = "inf")]
    snr: f64,
    /// Aperture kind: 'bernoulli' (binary spatial) or 'colored' (per-band).
    #[arg(long, value_parser = parse_kind, default_value = "bernoulli")]
    ca: ApertureKind,
    /// Expected fraction of open aperture elements, strictly in (0,1).
    #[arg(long, default_value_t = 0.5)]
    transmittance: f64,
    /// Base seed; aperture and noise streams are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output measurement file (SME1).
    #[arg(long)]
    out: PathBuf,
    /// Output aperture file (SCA1).
    #[arg(long)]
    ca_out: PathBuf,
    /// Scale the scene so its maximum is 1 before sensing; the divisor is
    /// recorded in a `.scale` sidecar next to the measurement file.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    normalize: bool,
    /// Manifest path (default: `<out>.manifest.jsonl`).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut man = Manifest::new("simulate");
    let (scene, scale) = ingest_scene(&a.scene, a.normalize, &mut man)?;
    let (m, n, l) = scene.dims();
    let aperture = generate_aperture(
        a.ca,
        m,
        n,
        l,
        a.shots,
        a.transmittance,
        derive_seed(a.seed, TAG_APERTURE),
    )?;
    let clean = forward(&scene, &aperture)?;
    let meas = add_noise(&clean, a.snr, derive_seed(a.seed, TAG_NOISE))?;
    io::write_measurements(&a.out, &meas)?;
    io::write_aperture(&a.ca_out, &aperture)?;
    man.output(&a.out)?;
    man.output(&a.ca_out)?;
    if a.normalize {
        let sidecar = suffixed(&a.out, ".scale");
        io::write_scale_sidecar(&sidecar, scale)?;
        man.output(&sidecar)?;
    }
    man.arg("scene", path_str(&a.scene));
    man.arg("shots", a.shots as u64);
    man.arg("snr", format_snr(a.snr));
    man.arg("ca", a.ca.as_str());
    man.arg("transmittance", a.transmittance);
    man.arg("seed", a.seed);
    man.arg("normalize", a.normalize);
    man.arg("out", path_str(&a.out));
    man.arg("ca_out", path_str(&a.ca_out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    eprintln!(
        "simulated {} shot(s) of a {m}x{n}x{l} scene onto a {}x{} detector (snr {})",
        a.shots,
        meas.detector_rows(),
        meas.detector_cols(),
        format_snr(a.snr)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// reconstruct

#[derive(Args)]
struct ReconstructArgs {
    /// Measurement file (SME1).
    #[arg(long)]
    meas: PathBuf,
    /// Aperture file (SCA1) the measurements were sensed with.
    #[arg(long)]
    ca: PathBuf,
    /// Generator architecture: 'resnet' or 'autoencoder'.
    #[arg(long, value_parser = parse_arch, default_value = "resnet")]
    net: Arch,
    /// Latent compression ratio in (0,1]; Tucker ranks are `rho` times the
    /// scene extents.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Optimizer steps per restart.
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    /// Learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Independent restarts; the lowest final loss wins.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// 'full' learns the latent and the weights; 'dip' freezes the latent.
    #[arg(long, value_parser = parse_mode, default_value = "full")]
    mode: FitMode,
    /// 'adam' or 'sgd'.
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    optimizer: Optimizer,
    /// Hidden channel width of the generator.
    #[arg(long, default_value_t = 7)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output reconstruction (SCB1).
    #[arg(long)]
    out: PathBuf,
    /// Optional loss-trace CSV (per restart).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Optional reference cube; adds PSNR to the trace.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Iterations between trace points.
    #[arg(long, default_value_t = 10)]
    log_stride: usize,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let mut man = Manifest::new("reconstruct");
    let meas = io::read_measurements(&a.meas)?;
    man.input(&a.meas)?;
    let aperture = io::read_aperture(&a.ca)?;
    man.input(&a.ca)?;
    let dims = scene_dims(&meas, &aperture)?;
    let reference = match &a.reference {
        Some(path) => {
            let cube = io::read_cube(path)?;
            man.input(path)?;
            Some(cube)
        }
        None => None,
    };
    let cfg = FitConfig {
        iterations: a.iters,
        learning_rate: a.lr,
        rho: a.rho,
        arch: a.net,
        width: a.width,
        restarts: a.restarts,
        seed: a.seed,
        mode: a.mode,
        optimizer: a.optimizer,
        log_stride: a.log_stride,
        ..FitConfig::default()
    };
    let result = fit(&meas, &aperture, dims, &cfg, reference.as_ref())?;
    io::write_cube(&a.out, &result.reconstruction)?;
    man.output(&a.out)?;
    if let Some(trace) = &a.trace {
        write_text(trace, &trace_csv(&result.traces))?;
        man.output(trace)?;
    }
    man.arg("meas", path_str(&a.meas));
    man.arg("ca", path_str(&a.ca));
    man.arg("net", match a.net {
        Arch::Resnet => "resnet",
        Arch::Autoencoder => "autoencoder",
    });
    man.arg("rho", a.rho);
    man.arg("iters", a.iters as u64);
    man.arg("lr", a.lr);
    man.arg("restarts", a.restarts as u64);
    man.arg("mode", a.mode.as_str());
    man.arg("optimizer", a.optimizer.as_str());
    man.arg("width", a.width as u64);
    man.arg("seed", a.seed);
    man.arg("log_stride", a.log_stride as u64);
    man.arg("out", path_str(&a.out));
    if let Some(t) = &a.trace {
        man.arg("trace", path_str(t));
    }
    if let Some(r) = &a.reference {
        man.arg("ref", path_str(r));
    }
    man.write(&manifest_path(&a.manifest, &a.out))?;
    let loss = result.final_losses[result.best_restart];
    eprintln!(
        "fit {}x{}x{} cube in {:.1}s; best of {} restart(s) was #{} at loss {loss:.6e}",
        dims.0, dims.1, dims.2, result.wall_seconds, cfg.restarts, result.best_restart
    );
    if let Some(reference) = &reference {
        eprintln!("psnr vs reference: {:.2} dB", psnr(reference, &result.reconstruction)?);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// baseline

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    meas: PathBuf,
    #[arg(long)]
    ca: PathBuf,
    /// 'bp' (back-projection) or 'fista-dct' (DCT-sparsity proximal descent).
    #[arg(long, value_parser = parse_method, default_value = "fista-dct")]
    method: BaselineMethod,
    /// Sparsity weight for fista-dct; derived from the data when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Proximal-gradient iterations for fista-dct.
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let mut man = Manifest::new("baseline");
    let meas = io::read_measurements(&a.meas)?;
    man.input(&a.meas)?;
    let aperture = io::read_aperture(&a.ca)?;
    man.input(&a.ca)?;
    let dims = scene_dims(&meas, &aperture)?;
    man.arg("method", a.method.as_str());
    let rec = match a.method {
        BaselineMethod::Bp => back_projection(&meas, &aperture, dims)?,
        BaselineMethod::FistaDct => {
            let lambda = match a.lambda {
                Some(l) => l,
                None => default_lambda(&meas, &aperture, dims)?,
            };
            man.arg("lambda", lambda);
            man.arg("iters", a.iters as u64);
            eprintln!("fista-dct with lambda {lambda:.6e}, {} iterations", a.iters);
            fista_dct(&meas, &aperture, dims, lambda, a.iters)?
        }
    };
    io::write_cube(&a.out, &rec)?;
    man.output(&a.out)?;
    man.arg("meas", path_str(&a.meas));
    man.arg("ca", path_str(&a.ca));
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// metrics

#[derive(Args)]
struct MetricsArgs {
    /// Reference (ground-truth) cube.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Reconstruction under test.
    #[arg(long)]
    rec: PathBuf,
    /// Output CSV row.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let mut man = Manifest::new("metrics");
    let reference = io::read_cube(&a.reference)?;
    man.input(&a.reference)?;
    let rec = io::read_cube(&a.rec)?;
    man.input(&a.rec)?;
    let p = psnr(&reference, &rec)?;
    let s = ssim(&reference, &rec)?;
    let angle = sam(&reference, &rec)?;
    let name = a
        .rec
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_str(&a.rec));
    let csv = format!(
        "name,psnr_db,ssim,sam_rad\n{name},{p:.6},{s:.9},{:.9}\n",
        angle.radians
    );
    write_text(&a.out, &csv)?;
    man.output(&a.out)?;
    man.arg("ref", path_str(&a.reference));
    man.arg("rec", path_str(&a.rec));
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    println!(
        "psnr_db={p:.6} ssim={s:.9} sam_rad={:.9} sam_skipped={}",
        angle.radians, angle.skipped
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep-rho

#[derive(Args)]
struct SweepRhoArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Comma-separated compression ratios.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    rhos: String,
    /// Independently seeded fits per ratio.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    shots: usize,
    #[arg(long, value_parser = parse_snr, default_value = "inf")]
    snr: f64,
    #[arg(long, value_parser = parse_kind, default_value = "bernoulli")]
    ca: ApertureKind,
    #[arg(long, default_value_t = 0.5)]
    transmittance: f64,
    #[arg(long, value_parser = parse_arch, default_value = "resnet")]
    net: Arch,
    #[arg(long, default_value_t = 7)]
    width: usize,
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Restarts inside each trial (trials already vary the seed).
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, value_parser = parse_mode, default_value = "full")]
    mode: FitMode,
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    optimizer: Optimizer,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    normalize: bool,
    /// Output CSV: one row per (rho, trial).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn sweep_rho(a: SweepRhoArgs) -> Result<()> {
    let mut man = Manifest::new("sweep-rho");
    if a.trials == 0 {
        return Err(Error::argument("trial count must be at least 1"));
    }
    let rhos = parse_f64_list(&a.rhos, "rho")?;
    let (scene, _) = ingest_scene(&a.scene, a.normalize, &mut man)?;
    let (m, n, l) = scene.dims();
    let aperture = generate_aperture(
        a.ca,
        m,
        n,
        l,
        a.shots,
        a.transmittance,
        derive_seed(a.seed, TAG_APERTURE),
    )?;
    let meas = add_noise(
        &forward(&scene, &aperture)?,
        a.snr,
        derive_seed(a.seed, TAG_NOISE),
    )?;
    let mut csv = String::from("rho,trial,fit_seed,psnr_db,ssim,sam_rad,final_loss\n");
    for (ri, &rho) in rhos.iter().enumerate() {
        for trial in 0..a.trials {
            let cell = (ri * a.trials + trial) as u64;
            let fit_seed = derive_seed(a.seed, TAG_SWEEP_FIT + cell);
            let cfg = FitConfig {
                iterations: a.iters,
                learning_rate: a.lr,
                rho,
                arch: a.net,
                width: a.width,
                restarts: a.restarts,
                seed: fit_seed,
                mode: a.mode,
                optimizer: a.optimizer,
                ..FitConfig::default()
            };
            let result = fit(&meas, &aperture, (m, n, l), &cfg, None)?;
            let p = psnr(&scene, &result.reconstruction)?;
            let s = ssim(&scene, &result.reconstruction)?;
            let angle = sam(&scene, &result.reconstruction)?;
            let loss = result.final_losses[result.best_restart];
            writeln!(
                csv,
                "{rho},{trial},{fit_seed},{p:.6},{s:.9},{:.9},{loss:.9e}",
                angle.radians
            )
            .expect("writing to a String cannot fail");
            eprintln!("rho {rho} trial {trial}: psnr {p:.2} dB");
        }
    }
    write_text(&a.out, &csv)?;
    man.output(&a.out)?;
    man.arg("scene", path_str(&a.scene));
    man.arg("rhos", a.rhos.clone());
    man.arg("trials", a.trials as u64);
    man.arg("shots", a.shots as u64);
    man.arg("snr", format_snr(a.snr));
    man.arg("ca", a.ca.as_str());
    man.arg("transmittance", a.transmittance);
    man.arg("net", match a.net {
        Arch::Resnet => "resnet",
        Arch::Autoencoder => "autoencoder",
    });
    man.arg("width", a.width as u64);
    man.arg("iters", a.iters as u64);
    man.arg("lr", a.lr);
    man.arg("restarts", a.restarts as u64);
    man.arg("mode", a.mode.as_str());
    man.arg("optimizer", a.optimizer.as_str());
    man.arg("seed", a.seed);
    man.arg("normalize", a.normalize);
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// grid

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Comma-separated shot counts.
    #[arg(long, default_value = "1,2,3,4")]
    shots: String,
    /// Comma-separated SNR levels in dB ('inf' allowed).
    #[arg(long, default_value = "20,30,inf")]
    snrs: String,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, value_parser = parse_kind, default_value = "bernoulli")]
    ca: ApertureKind,
    #[arg(long, default_value_t = 0.5)]
    transmittance: f64,
    #[arg(long, value_parser = parse_arch, default_value = "resnet")]
    net: Arch,
    #[arg(long, default_value_t = 7)]
    width: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, value_parser = parse_mode, default_value = "full")]
    mode: FitMode,
    #[arg(long, value_parser = parse_optimizer, default_value = "adam")]
    optimizer: Optimizer,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    normalize: bool,
    /// Output CSV: one block of rows per (shots, snr) cell.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn grid(a: GridArgs) -> Result<()> {
    let mut man = Manifest::new("grid");
    if a.trials == 0 {
        return Err(Error::argument("trial count must be at least 1"));
    }
    let shots_list = parse_usize_list(&a.shots, "shots")?;
    let snr_list = parse_snr_list(&a.snrs)?;
    let (scene, _) = ingest_scene(&a.scene, a.normalize, &mut man)?;
    let (m, n, l) = scene.dims();
    let mut csv = String::from("shots,snr_db,trial,fit_seed,psnr_db,ssim,sam_rad,final_loss\n");
    for (si, &shots) in shots_list.iter().enumerate() {
        let aperture = generate_aperture(
            a.ca,
            m,
            n,
            l,
            shots,
            a.transmittance,
            derive_seed(a.seed, TAG_GRID_APERTURE + si as u64),
        )?;
        let clean = forward(&scene, &aperture)?;
        for (ni, &snr) in snr_list.iter().enumerate() {
            let cell = (si * snr_list.len() + ni) as u64;
            let meas = add_noise(&clean, snr, derive_seed(a.seed, TAG_GRID_NOISE + cell))?;
            for trial in 0..a.trials {
                let fit_seed =
                    derive_seed(a.seed, TAG_GRID_FIT + cell * a.trials as u64 + trial as u64);
                let cfg = FitConfig {
                    iterations: a.iters,
                    learning_rate: a.lr,
                    rho: a.rho,
                    arch: a.net,
                    width: a.width,
                    restarts: a.restarts,
                    seed: fit_seed,
                    mode: a.mode,
                    optimizer: a.optimizer,
                    ..FitConfig::default()
                };
                let result = fit(&meas, &aperture, (m, n, l), &cfg, None)?;
                let p = psnr(&scene, &result.reconstruction)?;
                let s = ssim(&scene, &result.reconstruction)?;
                let angle = sam(&scene, &result.reconstruction)?;
                let loss = result.final_losses[result.best_restart];
                writeln!(
                    csv,
                    "{shots},{},{trial},{fit_seed},{p:.6},{s:.9},{:.9},{loss:.9e}",
                    format_snr(snr),
                    angle.radians
                )
                .expect("writing to a String cannot fail");
                eprintln!(
                    "shots {shots} snr {} trial {trial}: psnr {p:.2} dB",
                    format_snr(snr)
                );
            }
        }
    }
    write_text(&a.out, &csv)?;
    man.output(&a.out)?;
    man.arg("scene", path_str(&a.scene));
    man.arg("shots", a.shots.clone());
    man.arg("snrs", a.snrs.clone());
    man.arg("trials", a.trials as u64);
    man.arg("ca", a.ca.as_str());
    man.arg("transmittance", a.transmittance);
    man.arg("net", match a.net {
        Arch::Resnet => "resnet",
        Arch::Autoencoder => "autoencoder",
    });
    man.arg("width", a.width as u64);
    man.arg("rho", a.rho);
    man.arg("iters", a.iters as u64);
    man.arg("lr", a.lr);
    man.arg("restarts", a.restarts as u64);
    man.arg("mode", a.mode.as_str());
    man.arg("optimizer", a.optimizer.as_str());
    man.arg("seed", a.seed);
    man.arg("normalize", a.normalize);
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// phantom / export-band / convert

#[derive(Args)]
struct PhantomArgs {
    /// Cube extents as MxNxL.
    #[arg(long)]
    dims: String,
    /// Number of Gaussian blobs.
    #[arg(long, default_value_t = 4)]
    blobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn phantom(a: PhantomArgs) -> Result<()> {
    let mut man = Manifest::new("phantom");
    let (m, n, l) = parse_dims(&a.dims)?;
    let cube = make_phantom(m, n, l, a.blobs, a.seed);
    io::write_cube(&a.out, &cube)?;
    man.output(&a.out)?;
    man.arg("dims", a.dims.clone());
    man.arg("blobs", a.blobs as u64);
    man.arg("seed", a.seed);
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    eprintln!("wrote {m}x{n}x{l} phantom with {} blob(s)", a.blobs);
    Ok(())
}

#[derive(Args)]
struct ExportBandArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Zero-based band index.
    #[arg(long)]
    band: usize,
    /// Output PGM (P5, 16-bit).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn export_band(a: ExportBandArgs) -> Result<()> {
    let mut man = Manifest::new("export-band");
    let cube = io::read_cube(&a.scene)?;
    man.input(&a.scene)?;
    io::write_band_pgm(&a.out, &cube, a.band)?;
    man.output(&a.out)?;
    man.arg("scene", path_str(&a.scene));
    man.arg("band", a.band as u64);
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    Ok(())
}

#[derive(Args)]
struct ConvertArgs {
    /// Input CSV with one `m,n,l,value` row per voxel (zero-based indices).
    #[arg(long)]
    csv: PathBuf,
    /// Cube extents as MxNxL.
    #[arg(long)]
    dims: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn convert(a: ConvertArgs) -> Result<()> {
    let mut man = Manifest::new("convert");
    let dims = parse_dims(&a.dims)?;
    let cube = io::read_cube_csv(&a.csv, dims)?;
    man.input(&a.csv)?;
    io::write_cube(&a.out, &cube)?;
    man.output(&a.out)?;
    man.arg("csv", path_str(&a.csv));
    man.arg("dims", a.dims.clone());
    man.arg("out", path_str(&a.out));
    man.write(&manifest_path(&a.manifest, &a.out))?;
    Ok(())
}
