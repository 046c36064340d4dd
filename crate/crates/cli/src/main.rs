//! `auralize` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 grid fingerprint
//! mismatch, 4 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use auralize_core::engine::{render_offline, write_stereo_wav, DEFAULT_BLOCK};
use auralize_core::error::ErrorCategory;
use auralize_core::fields::{load_node_signals, plane_wave_ir, save_node_signals, PlaneWaveSpec};
use auralize_core::geometry::{fibonacci_sphere, from_degrees};
use auralize_core::grids::{load_grid, make_grid, save_grid, GridFamily, SamplingGrid};
use auralize_core::groundtruth::{
    brir_from_sdm, default_field_length, field_from_sdm, load_sdm, sabine_absorption, save_sdm, synth_shoebox,
};
use auralize_core::hrtf::{load_hrtf, save_hrtf, sphere_hrtf, DEFAULT_EAR_AZIMUTHS, DEFAULT_HEAD_RADIUS};
use auralize_core::renderers::{
    build_ambisonic, build_direct, load_renderer, rotated_renderer, save_renderer,
    AmbisonicOptions, DirectOptions, RendererKind,
};
use auralize_core::sht::RegProfile;
use auralize_core::verify::verify_renderer;
use auralize_core::{Error, SPEED_OF_SOUND};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONSISTENCY: u8 = 3;
const EXIT_VERIFY: u8 = 4;

fn version_text() -> String {
    format!(
        "{}\ngrid format {}\nnode-signal format {}\nhrtf format {}\nrenderer format {}\nsdm format {}\nverify report {}",
        env!("CARGO_PKG_VERSION"),
        auralize_core::grids::GRID_FORMAT_VERSION,
        auralize_core::fields::NODE_SIGNALS_FORMAT_VERSION,
        auralize_core::hrtf::HRTF_FORMAT_VERSION,
        auralize_core::renderers::RENDERER_FORMAT_VERSION,
        auralize_core::groundtruth::SDM_FORMAT_VERSION,
        auralize_core::verify::REPORT_VERSION,
    )
}

#[derive(Parser)]
#[command(name = "auralize", about = "Binaural rendering of sampled sound fields", disable_version_flag = true)]
struct Cli {
    /// Print the tool and container format versions.
    #[arg(long, short = 'V', global = false)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Create a sampling grid file.
    Grid(GridArgs),
    /// Write a rigid-sphere HRTF set.
    HrtfSphere(HrtfSphereArgs),
    /// Synthesize node signals and reference data.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Design a renderer.
    Design(DesignArgs),
    /// Render node signals to a stereo WAV file.
    Render(RenderArgs),
    /// Compare rendered plane waves with the HRTF ground truth.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GridType {
    Cv,
    Cs,
    Ss,
}

impl GridType {
    fn family(self) -> GridFamily {
        match self {
            GridType::Cv => GridFamily::CubicalVolume,
            GridType::Cs => GridFamily::CubicalSurface,
            GridType::Ss => GridFamily::SphericalSurface,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "type", value_enum)]
    kind: GridType,
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 0.14)]
    size_m: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HrtfSphereArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of near-uniform directions.
    #[arg(long, default_value_t = 2702)]
    directions: usize,
    #[arg(long, default_value_t = DEFAULT_HEAD_RADIUS)]
    head_radius_m: f64,
    #[arg(long, default_value_t = 48000.0)]
    fs: f64,
    #[arg(long, default_value_t = 256)]
    length: usize,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Plane-wave impulse responses at the grid nodes.
    PlaneWave(PlaneWaveArgs),
    /// Image-source room response with one direction per sample.
    Shoebox(ShoeboxArgs),
    /// Node signals of a directional room response.
    Field(FieldArgs),
    /// Binaural reference of a directional room response.
    Brir(BrirArgs),
}

#[derive(Args)]
struct PlaneWaveArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    azimuth: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    elevation: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 48000.0)]
    fs: f64,
    #[arg(long, default_value_t = 2048)]
    length: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShoeboxArgs {
    /// Room dimensions x,y,z in metres.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [4.0, 5.0, 3.0])]
    room: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [1.3, 1.7, 1.4])]
    source: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [2.6, 3.4, 1.6])]
    receiver: Vec<f64>,
    /// Wall absorption; derived from `--t60` when omitted.
    #[arg(long)]
    absorption: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    t60: f64,
    #[arg(long, default_value_t = 10)]
    order: usize,
    #[arg(long, default_value_t = 48000.0)]
    fs: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    sdm: PathBuf,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BrirArgs {
    #[arg(long)]
    sdm: PathBuf,
    #[arg(long)]
    hrtf: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum DesignKind {
    Ambisonic,
    Direct,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(value_enum)]
    kind: DesignKind,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    hrtf: PathBuf,
    /// SH order of the ambisonic route; defaults to the grid's order.
    #[arg(long)]
    order: Option<usize>,
    /// Allow orders beyond the grid's capability.
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = 48000.0)]
    fs: f64,
    #[arg(long, default_value_t = 2048)]
    taps: usize,
    /// JSON file `{"points": [[freq_hz, range_db], ...]}`.
    #[arg(long)]
    reg_profile: Option<PathBuf>,
    /// MagLS transition frequency in Hz.
    #[arg(long)]
    transition_hz: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    renderer: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Grid file; defaults to the one named by the node-signal sidecar.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    yaw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pitch: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    roll: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BLOCK)]
    block: usize,
    /// Render despite a grid fingerprint mismatch.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    renderer: PathBuf,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    hrtf: PathBuf,
    /// Comma-separated azimuths in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    azimuths: Vec<f64>,
    /// Comma-separated elevations in degrees; one value applies to all.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    elevations: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    tol_db: f64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Core(Error),
    Usage(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.version {
        println!("auralize {}", version_text());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(EXIT_USAGE);
    };
    let result = match command {
        Command::Grid(a) => cmd_grid(a),
        Command::HrtfSphere(a) => cmd_hrtf_sphere(a),
        Command::Synth(s) => cmd_synth(s),
        Command::Design(a) => cmd_design(a),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see --help for usage");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => EXIT_USAGE,
                ErrorCategory::Data => EXIT_DATA,
                ErrorCategory::Consistency => EXIT_CONSISTENCY,
            })
        }
    }
}

fn cmd_grid(a: GridArgs) -> CmdResult {
    let grid = make_grid(a.kind.family(), a.nodes, a.size_m)?;
    save_grid(&grid, &a.out)?;
    println!(
        "{} grid: {} nodes, size {} m, max order {}",
        grid.family().code(),
        grid.len(),
        grid.size_m(),
        grid.max_order()
    );
    Ok(())
}

fn cmd_hrtf_sphere(a: HrtfSphereArgs) -> CmdResult {
    let dirs = fibonacci_sphere(a.directions);
    let set = sphere_hrtf(a.head_radius_m, DEFAULT_EAR_AZIMUTHS, &dirs, a.fs, a.length, SPEED_OF_SOUND)?;
    save_hrtf(&set, &a.out)?;
    println!("{} directions, {} samples, onset {} samples", set.len(), set.ir_length(), set.onset_delay_samples);
    Ok(())
}

/// Grid path as recorded in a node-signal sidecar written next to `out`.
fn relative_grid_name(grid: &Path, out: &Path) -> Option<String> {
    let abs = std::fs::canonicalize(grid).ok()?;
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let dir = std::fs::canonicalize(dir).ok()?;
    match abs.strip_prefix(&dir) {
        Ok(rel) => rel.to_str().map(str::to_string),
        Err(_) => abs.to_str().map(str::to_string),
    }
}

fn cmd_synth(s: SynthCommand) -> CmdResult {
    match s {
        SynthCommand::PlaneWave(a) => {
            let grid = load_grid(&a.grid)?;
            let spec = PlaneWaveSpec::new(from_degrees(a.azimuth, a.elevation), a.amplitude)?;
            let signals = plane_wave_ir(&spec, &grid, a.fs, a.length, SPEED_OF_SOUND)?;
            save_node_signals(&signals, &a.out, relative_grid_name(&a.grid, &a.out).as_deref())?;
        }
        SynthCommand::Shoebox(a) => {
            let v = |x: &[f64]| [x[0], x[1], x[2]];
            let room = v(&a.room);
            let absorption = a.absorption.unwrap_or_else(|| sabine_absorption(room, a.t60));
            let r = synth_shoebox(room, v(&a.source), v(&a.receiver), absorption, a.order, a.fs, SPEED_OF_SOUND)?;
            save_sdm(&r, &a.out)?;
            println!("{} samples, absorption {absorption:.4}", r.len());
        }
        SynthCommand::Field(a) => {
            let grid = load_grid(&a.grid)?;
            let r = load_sdm(&a.sdm)?;
            let length = default_field_length(&r, &grid, SPEED_OF_SOUND);
            let signals = field_from_sdm(&r, &grid, length, SPEED_OF_SOUND)?;
            save_node_signals(&signals, &a.out, relative_grid_name(&a.grid, &a.out).as_deref())?;
        }
        SynthCommand::Brir(a) => {
            let hrtf = load_hrtf(&a.hrtf)?;
            let r = load_sdm(&a.sdm)?;
            let out = brir_from_sdm(&r, &hrtf)?;
            write_stereo_wav(&a.out, &out, r.sample_rate)?;
        }
    }
    Ok(())
}

fn cmd_design(a: DesignArgs) -> CmdResult {
    let grid = load_grid(&a.grid)?;
    let hrtf = load_hrtf(&a.hrtf)?;
    if (hrtf.sample_rate - a.fs).abs() > 1e-9 {
        return Err(Error::InvalidData(format!(
            "HRTF sample rate {} differs from --fs {}; resampling is not supported",
            hrtf.sample_rate, a.fs
        ))
        .into());
    }
    let reg = match &a.reg_profile {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::InvalidData(format!("{}: {e}", p.display())))?;
            let reg: RegProfile = serde_json::from_str(&text).map_err(Error::from)?;
            reg.validate()?;
            reg
        }
        None => RegProfile::default(),
    };
    let mut r = match a.kind {
        DesignKind::Ambisonic => {
            let opts = AmbisonicOptions {
                order: a.order,
                force: a.force,
                taps: a.taps,
                reg,
                transition_hz: a.transition_hz,
                ..Default::default()
            };
            build_ambisonic(&grid, &hrtf, &opts)?
        }
        DesignKind::Direct => {
            if a.order.is_some() {
                return Err(Failure::Usage("--order applies to ambisonic designs only".into()));
            }
            let opts = DirectOptions {
                taps: a.taps,
                reg,
                transition_hz: a.transition_hz,
                ..Default::default()
            };
            build_direct(&grid, &hrtf, &opts)?
        }
    };
    r.meta.created = None;
    save_renderer(&r, &a.out)?;
    println!(
        "{:?} renderer: {} inputs, {} taps, latency {}, order {}, time aliasing {:.2e}",
        r.meta.kind,
        r.inputs(),
        r.meta.taps,
        r.latency(),
        r.meta.order.map_or("-".to_string(), |o| o.to_string()),
        r.meta.time_aliasing
    );
    Ok(())
}

fn cmd_render(a: RenderArgs) -> CmdResult {
    let renderer = load_renderer(&a.renderer)?;
    let (mut signals, header) = load_node_signals(&a.input)?;
    let angles = [a.yaw, a.pitch, a.roll];
    let rotating = angles.iter().any(|x| x.is_some());
    if rotating && renderer.meta.kind == RendererKind::Direct {
        return Err(Failure::Usage("direct renderers cannot be rotated; drop --yaw/--pitch/--roll".into()));
    }
    if signals.grid_fingerprint != renderer.meta.grid_fingerprint {
        if a.force {
            log::warn!("rendering despite a grid fingerprint mismatch");
            signals.grid_fingerprint = renderer.meta.grid_fingerprint.clone();
        } else {
            return Err(Error::FingerprintMismatch {
                expected: renderer.meta.grid_fingerprint.clone(),
                found: signals.grid_fingerprint.clone(),
            }
            .into());
        }
    }
    let [yaw, pitch, roll] = angles.map(|x| x.unwrap_or(0.0).to_radians());
    let renderer = if yaw != 0.0 || pitch != 0.0 || roll != 0.0 {
        let grid_path = a
            .grid
            .clone()
            .or_else(|| header.grid_path(&a.input))
            .ok_or_else(|| Failure::Usage("rotation needs the grid; pass --grid".into()))?;
        let grid: SamplingGrid = load_grid(&grid_path)?;
        rotated_renderer(&renderer, &grid, yaw, pitch, roll)?
    } else {
        renderer
    };
    let out = render_offline(&renderer, &signals, a.block)?;
    write_stereo_wav(&a.out, &out, signals.sample_rate)?;
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    if a.azimuths.is_empty() {
        return Err(Failure::Usage("--azimuths must list at least one direction".into()));
    }
    let elevations = match a.elevations.len() {
        0 => vec![0.0; a.azimuths.len()],
        1 => vec![a.elevations[0]; a.azimuths.len()],
        n if n == a.azimuths.len() => a.elevations.clone(),
        n => {
            return Err(Failure::Usage(format!(
                "{} azimuths but {n} elevations",
                a.azimuths.len()
            )))
        }
    };
    let dirs: Vec<(f64, f64)> = a.azimuths.iter().copied().zip(elevations).collect();
    let renderer = load_renderer(&a.renderer)?;
    let grid = load_grid(&a.grid)?;
    let fp = grid.fingerprint();
    if fp != renderer.meta.grid_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: renderer.meta.grid_fingerprint.clone(),
            found: fp,
        }
        .into());
    }
    let hrtf = load_hrtf(&a.hrtf)?;
    let report = verify_renderer(&renderer, &grid, &hrtf, &dirs)?;
    report.write_csv(&a.out)?;
    for s in report.summaries.iter().filter(|s| s.ipsilateral) {
        println!(
            "azimuth {:7.2} elevation {:6.2}: {} ear RMS {:.2} dB below {:.0} Hz, {:.2} dB above {:.0} Hz",
            s.azimuth_deg,
            s.elevation_deg,
            if s.ear == 0 { "left" } else { "right" },
            s.rms_below_db,
            0.8 * s.aliasing_hz,
            s.rms_above_db,
            s.aliasing_hz
        );
    }
    if report.passes(a.tol_db) {
        Ok(())
    } else {
        Err(Failure::Verify(format!("error above {} dB for at least one direction", a.tol_db)))
    }
}
