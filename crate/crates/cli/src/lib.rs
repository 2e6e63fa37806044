//! Front end for `chatterlobe`: parameter reduction, lobe diagrams, point
//! classification, root listings and simulation runs.

mod svg;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use chatterlobe::charroots::{locate_roots, verdict, CharParams, MARGIN_PROBE};
use chatterlobe::params::{reduce, spindle_gain, PhysicalParams, DEFAULT_Q};
use chatterlobe::simulate::{constant_history, integrate_linear, integrate_nonlinear_transformed, LinearizedSystem};
use chatterlobe::{sample_branches, BoundaryBranch, LobeIndex, Preset, Variant};
use clap::{Parser, ValueEnum};
use thiserror::Error;

pub use svg::write_svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] chatterlobe::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core(chatterlobe::Error::ContourTooClose { .. }) => 4,
            CliError::Usage(_) | CliError::Core(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Print the dimensionless groups of a parameter file.
    Reduce,
    /// Sample the stability boundaries into CSV (and optionally SVG).
    Lobes,
    /// Classify one (δ, h) point as stable or unstable.
    Classify,
    /// List characteristic roots nearest the imaginary axis.
    Roots,
    /// Integrate the transformed system and write the trajectory.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Delayed,
    Instant,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Delayed => Variant::Delayed,
            VariantArg::Instant => Variant::Instant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Fig4,
    Fig6,
    Fig7,
    Fig8,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Fig6 => Preset::Fig6,
            PresetArg::Fig7 => Preset::Fig7,
            PresetArg::Fig8 => Preset::Fig8,
        }
    }
}

/// Command-line arguments as typed by the user.
#[derive(Debug, Parser)]
#[command(name = "chatterlobe", version, about = "Stability lobes for turning with spindle-speed feedback")]
pub struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Feedback law; defaults to the preset's, else delayed.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,

    /// Figure-matching parameters and axes.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,

    /// Relative damping ξ.
    #[arg(long, conflicts_with = "params")]
    xi: Option<f64>,

    /// Cutting-force exponent.
    #[arg(long, conflicts_with = "params")]
    q: Option<f64>,

    /// Physical parameter file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    params: Option<PathBuf>,

    /// Dimensionless stiffness δ of the point to classify or simulate.
    #[arg(long, requires = "h", allow_negative_numbers = true)]
    delta: Option<f64>,

    /// h₁ (delayed) or h₂ (instant) of the point.
    #[arg(long, requires = "delta", allow_negative_numbers = true)]
    h: Option<f64>,

    /// Highest lobe index to sample.
    #[arg(long)]
    n_max: Option<u32>,

    /// Samples per boundary branch.
    #[arg(long, default_value_t = 200)]
    samples: usize,

    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also draw the lobes as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,

    #[arg(long)]
    delta_max: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    h_min: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    h_max: Option<f64>,

    /// Number of roots to list.
    #[arg(long, default_value_t = 6)]
    count: usize,

    /// Run length in delay units.
    #[arg(long, default_value_t = 60.0)]
    eta_end: f64,

    /// Integration steps per delay.
    #[arg(long, default_value_t = 16)]
    steps_per_delay: u32,

    /// Initial deviation of both displacements from the stationary state.
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    amplitude: f64,

    /// Integrate the nonlinear system instead of its linearisation.
    #[arg(long)]
    nonlinear: bool,
}

/// Where the model parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Pair { xi: f64, q: f64 },
    File(PhysicalParams),
}

/// Plot window ((0, δ_max), (h_min, h_max)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub delta_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub eta_end: f64,
    pub steps_per_delay: u32,
    pub amplitude: f64,
    pub nonlinear: bool,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub variant: Variant,
    pub source: Source,
    pub n_max: u32,
    pub samples: usize,
    /// (δ, h), explicit or reduced from the parameter file.
    pub point: Option<(f64, f64)>,
    pub axes: Axes,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub roots: usize,
    pub simulation: SimulationConfig,
}

fn read_params(path: &Path) -> Result<PhysicalParams, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.parse()?)
}

fn default_axes(variant: Variant, xi: f64, q: f64) -> Axes {
    let preset =
        Preset::ALL.into_iter().find(|p| p.variant() == variant && p.xi_q() == (xi, q)).unwrap_or(match variant {
            Variant::Delayed => Preset::Fig4,
            Variant::Instant => Preset::Fig7,
        });
    let ((_, delta_max), (h_min, h_max)) = preset.axes();
    Axes { delta_max, h_min, h_max }
}

impl RunConfig {
    pub fn from_args(a: Args) -> Result<Self, CliError> {
        let preset = a.preset.map(Preset::from);
        let variant = a.variant.map(Variant::from).or(preset.map(Preset::variant)).unwrap_or(Variant::Delayed);
        let explicit = a.delta.zip(a.h);
        let (source, xi, q, reduced) = match &a.params {
            Some(path) => {
                let phys = read_params(path)?;
                let d = reduce(&phys)?;
                let h = match variant {
                    Variant::Delayed => d.h1,
                    Variant::Instant => d.h2,
                };
                if explicit.is_some() {
                    return Err(CliError::Usage("--delta/--h cannot be combined with --params".into()));
                }
                (Source::File(phys), d.xi, d.q, Some((d.delta, h)))
            }
            None => {
                let xi =
                    a.xi.or(preset.map(|p| p.xi_q().0))
                        .ok_or_else(|| CliError::Usage("give --xi, --preset or --params".into()))?;
                let q = a.q.or(preset.map(|p| p.xi_q().1)).unwrap_or(DEFAULT_Q);
                (Source::Pair { xi, q }, xi, q, None)
            }
        };
        if a.command == Command::Reduce && a.params.is_none() {
            return Err(CliError::Usage("reduce needs --params".into()));
        }
        let point = explicit.or(reduced);
        if matches!(a.command, Command::Classify | Command::Roots | Command::Simulate) && point.is_none() {
            return Err(CliError::Usage(format!("{:?} needs a point: --delta and --h, or --params", a.command)));
        }
        let base = match preset {
            Some(p) => {
                let ((_, delta_max), (h_min, h_max)) = p.axes();
                Axes { delta_max, h_min, h_max }
            }
            None => default_axes(variant, xi, q),
        };
        let axes = Axes {
            delta_max: a.delta_max.unwrap_or(base.delta_max),
            h_min: a.h_min.unwrap_or(base.h_min),
            h_max: a.h_max.unwrap_or(base.h_max),
        };
        if !(axes.delta_max > 0.0 && axes.h_min < axes.h_max) {
            return Err(CliError::Usage(format!("empty plot window {axes:?}")));
        }
        let n_max = a.n_max.unwrap_or(preset.map_or(1, Preset::n_max));
        LobeIndex::new(n_max)?;
        Ok(Self {
            command: a.command,
            variant,
            source,
            n_max,
            samples: a.samples,
            point,
            axes,
            out: a.out,
            svg: a.svg,
            roots: a.count,
            simulation: SimulationConfig {
                eta_end: a.eta_end,
                steps_per_delay: a.steps_per_delay,
                amplitude: a.amplitude,
                nonlinear: a.nonlinear,
            },
        })
    }

    /// (ξ, q) of the model.
    pub fn xi_q(&self) -> Result<(f64, f64), CliError> {
        match &self.source {
            Source::Pair { xi, q } => Ok((*xi, *q)),
            Source::File(phys) => {
                let d = reduce(phys)?;
                Ok((d.xi, d.q))
            }
        }
    }

    fn char_params(&self) -> Result<CharParams, CliError> {
        let (delta, h) = self.point.expect("point presence is checked on construction");
        let (xi, q) = self.xi_q()?;
        Ok(CharParams::new(self.variant, xi, delta, h, q)?)
    }

    fn physical(&self) -> Result<PhysicalParams, CliError> {
        match &self.source {
            Source::File(phys) => Ok(*phys),
            Source::Pair { xi, q } => {
                let (delta, h) = self.point.expect("point presence is checked on construction");
                Ok(PhysicalParams::realize(self.variant, *xi, delta, h, *q)?)
            }
        }
    }
}

/// Result of a successful command, mapped to the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Stable,
    Unstable,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Done | Outcome::Stable => 0,
            Outcome::Unstable => 3,
        }
    }
}

/// Runs `cfg`, writing to its `out` path or to `stdout`.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut buf = Vec::new();
    let outcome = match cfg.command {
        Command::Reduce => cmd_reduce(cfg, &mut buf)?,
        Command::Lobes => cmd_lobes(cfg, &mut buf)?,
        Command::Classify => cmd_classify(cfg, &mut buf)?,
        Command::Roots => cmd_roots(cfg, &mut buf)?,
        Command::Simulate => cmd_simulate(cfg, &mut buf)?,
    };
    // classification verdicts always go to the terminal
    let target = cfg.out.as_deref().filter(|_| cfg.command != Command::Classify);
    match target {
        Some(path) => fs::write(path, &buf).map_err(io_err(path))?,
        None => stdout.write_all(&buf).map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(outcome)
}

pub fn cmd_reduce(cfg: &RunConfig, w: &mut dyn Write) -> Result<Outcome, CliError> {
    let Source::File(phys) = &cfg.source else {
        return Err(CliError::Usage("reduce needs --params".into()));
    };
    let d = reduce(phys)?;
    writeln!(w, "{d}").map_err(io_err(Path::new("<buffer>")))?;
    Ok(Outcome::Done)
}

/// All branches for n = 1..=n_max, sampled concurrently, in lobe order.
pub fn lobe_branches(cfg: &RunConfig) -> Result<Vec<BoundaryBranch>, CliError> {
    let (xi, q) = cfg.xi_q()?;
    let per_lobe: Vec<chatterlobe::Result<Vec<BoundaryBranch>>> = thread::scope(|s| {
        let handles: Vec<_> = (1..=cfg.n_max)
            .map(|n| s.spawn(move || sample_branches(cfg.variant, xi, q, LobeIndex::new(n)?, cfg.samples)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("branch sampling panicked")).collect()
    });
    let mut out = Vec::new();
    for r in per_lobe {
        out.extend(r?);
    }
    Ok(out)
}

/// CSV rows `variant,n,branch,beta,delta,h`; `branch` counts from 0 within
/// each lobe.
pub fn write_lobes_csv(branches: &[BoundaryBranch], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "variant,n,branch,beta,delta,h")?;
    let mut branch = 0;
    let mut last_n = None;
    for b in branches {
        if last_n != Some(b.n) {
            branch = 0;
            last_n = Some(b.n);
        }
        for p in &b.points {
            writeln!(w, "{},{},{},{:.16e},{:.16e},{:.16e}", b.variant, b.n, branch, p.beta, p.delta, p.h)?;
        }
        branch += 1;
    }
    Ok(())
}

pub fn cmd_lobes(cfg: &RunConfig, w: &mut dyn Write) -> Result<Outcome, CliError> {
    let branches = lobe_branches(cfg)?;
    write_lobes_csv(&branches, &mut *w).map_err(io_err(Path::new("<buffer>")))?;
    if let Some(path) = &cfg.svg {
        let file = File::create(path).map_err(io_err(path))?;
        let mut file = BufWriter::new(file);
        write_svg(&branches, cfg.axes, &mut file).and_then(|()| file.flush()).map_err(io_err(path))?;
    }
    Ok(Outcome::Done)
}

pub fn cmd_classify(cfg: &RunConfig, w: &mut dyn Write) -> Result<Outcome, CliError> {
    let v = verdict(&cfg.char_params()?)?;
    let word = if v.stable { "stable" } else { "unstable" };
    writeln!(w, "{word} unstable_count={} margin={:.6e}", v.unstable_count, v.margin)
        .map_err(io_err(Path::new("<buffer>")))?;
    Ok(if v.stable { Outcome::Stable } else { Outcome::Unstable })
}

pub fn cmd_roots(cfg: &RunConfig, w: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut roots: Vec<_> =
        locate_roots(&cfg.char_params()?, -MARGIN_PROBE)?.into_iter().filter(|z| z.im > -1e-9).collect();
    roots.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()));
    let mut text = String::from("re,im\n");
    for z in roots.iter().take(cfg.roots) {
        text.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
    }
    w.write_all(text.as_bytes()).map_err(io_err(Path::new("<buffer>")))?;
    Ok(Outcome::Done)
}

pub fn cmd_simulate(cfg: &RunConfig, w: &mut dyn Write) -> Result<Outcome, CliError> {
    let sim = cfg.simulation;
    if sim.steps_per_delay < 2 {
        return Err(CliError::Usage("--steps-per-delay must be at least 2".into()));
    }
    let phys = cfg.physical()?;
    let step = 1.0 / f64::from(sim.steps_per_delay);
    let dev = [sim.amplitude, sim.amplitude, 0.0, 0.0];
    let run = if sim.nonlinear {
        let c = spindle_gain(&phys)?;
        integrate_nonlinear_transformed(cfg.variant, &phys, c, constant_history(dev), sim.eta_end, step)?
    } else {
        let sys = LinearizedSystem::new(cfg.variant, &phys)?;
        integrate_linear(&sys, constant_history(dev), sim.eta_end, step)?
    };
    run.write_csv(&mut *w).map_err(io_err(Path::new("<buffer>")))?;
    Ok(Outcome::Done)
}

/// Parses `argv`, runs the command and returns the process exit code,
/// reporting errors on `stderr`.
pub fn run_from<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::from_args(args).and_then(|cfg| execute(&cfg, stdout));
    match result {
        Ok(o) => o.exit_code(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let CliError::Core(chatterlobe::Error::ContourTooClose { .. }) = e {
                let _ = writeln!(stderr, "hint: a root sits on the counting contour; perturb delta or h slightly");
            }
            e.exit_code()
        }
    }
}
