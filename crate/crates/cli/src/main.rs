use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cor_cli::{cmd_batch, cmd_measure, cmd_phantom, cmd_validate, PhantomRequest};
use cor_core::config::{self, Overrides};
use cor_core::phantom::{PhantomSpec, SweepSpec};
use cor_core::PosteriorSide;

#[derive(Parser)]
#[command(
    name = "cor",
    version,
    about = "Condylar offset ratios from lateral knee radiographs"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// INI file with pipeline parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// k-means seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batch and phantom generation.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
    #[arg(long, global = true)]
    canny_low: Option<f64>,
    #[arg(long, global = true)]
    canny_high: Option<f64>,
    /// Condylar ROI as x0,x1,y0,y1.
    #[arg(long, global = true, value_parser = config::parse_roi_flag)]
    roi: Option<cor_core::CropRect>,
    /// Cortex scan rows within the shaft patch, as r1,r2.
    #[arg(long, global = true, value_parser = config::parse_cortex_rows)]
    cortex_rows: Option<[usize; 2]>,
}

#[derive(Subcommand)]
enum Command {
    /// Measure one radiograph; prints the measurement as JSON.
    Measure { image: PathBuf },
    /// Measure every PNG/JPEG in a directory into results.csv.
    Batch { dir: PathBuf },
    /// Generate synthetic radiographs with known offsets.
    Phantom(PhantomArgs),
    /// Agreement statistics of predicted against true ratios.
    Validate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Left,
    Right,
}

#[derive(Args)]
struct PhantomArgs {
    /// Generate the default 20x10 (pcor, acor) grid instead of one image.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value_t = 100.0)]
    fd: f64,
    #[arg(long, default_value_t = 1.0)]
    pcor: f64,
    #[arg(long, default_value_t = 0.1)]
    acor: f64,
    /// Shaft tilt in degrees.
    #[arg(long, default_value_t = 0.0)]
    tilt: f64,
    /// Image side of the posterior condyle.
    #[arg(long, value_enum, default_value_t = Side::Left)]
    side: Side,
    /// Gaussian noise sigma in gray levels.
    #[arg(long)]
    noise: Option<f64>,
    /// Image and anatomy scale relative to 1378x672.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

/// Writes a line to stdout; a closed pipe (`cor measure x | head`) is not an error.
fn emit(line: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let overrides = Overrides {
        seed: g.seed,
        canny_low: g.canny_low,
        canny_high: g.canny_high,
        roi: g.roi,
        cortex_rows: g.cortex_rows,
        out_dir: g.out.clone(),
    };
    let file_text = match &g.config {
        Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let cfg = config::resolve(file_text.as_deref(), &overrides)?;
    let out = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(cor_cli::DEFAULT_OUT));
    if g.parallel == 0 {
        bail!("--parallel must be at least 1");
    }

    match cli.command {
        Command::Measure { image } => {
            let r = cmd_measure(&image, &cfg)?;
            emit(&serde_json::to_string_pretty(&r.output.measurement)?)?;
            eprintln!("overlay: {}", r.overlay_path.display());
        }
        Command::Batch { dir } => {
            let r = cmd_batch(&dir, &cfg, g.parallel)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            for it in &r.items {
                if let Some(e) = &it.error {
                    eprintln!("{}: failed at {}", it.filename, e);
                }
            }
            eprintln!("{} ok, {} failed -> {}", r.ok, r.failed, r.csv_path.display());
        }
        Command::Phantom(a) => {
            let req = if a.sweep {
                let mut s = SweepSpec {
                    seed: g.seed.unwrap_or(0),
                    ..SweepSpec::default()
                };
                if let Some(n) = a.noise {
                    s.noise_sigma = n;
                }
                s.base = s.base.scaled(a.scale);
                s.fd_px = cor_core::phantom::Range::new(s.fd_px.lo * a.scale, s.fd_px.hi * a.scale);
                PhantomRequest::Sweep(s)
            } else {
                let spec = PhantomSpec {
                    fd_px: a.fd,
                    pcor: a.pcor,
                    acor: a.acor,
                    shaft_tilt_deg: a.tilt,
                    posterior_side: match a.side {
                        Side::Left => PosteriorSide::ImageLeft,
                        Side::Right => PosteriorSide::ImageRight,
                    },
                    noise_sigma: a.noise.unwrap_or(0.0),
                    seed: g.seed.unwrap_or(0),
                    ..PhantomSpec::default()
                };
                PhantomRequest::Single(spec.scaled(a.scale))
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(g.parallel).build()?;
            let paths = pool.install(|| cmd_phantom(&req, &out))?;
            eprintln!("{} phantoms -> {}", paths.len(), out.display());
        }
        Command::Validate { pred, truth } => {
            let r = cmd_validate(&pred, &truth, &out)?;
            for (name, rep) in [("ACOR", &r.acor), ("PCOR", &r.pcor)] {
                let c = &rep.correlation;
                emit(&format!(
                    "{name}: n={} {:?} r={:.4} p={:.3e} bias={:.4} LoA=[{:.4}, {:.4}]",
                    rep.model.n,
                    c.method,
                    c.coefficient,
                    c.p_value,
                    rep.bland_altman.mean_diff,
                    rep.bland_altman.loa_low,
                    rep.bland_altman.loa_high
                ))?;
            }
            if !r.excluded.is_empty() {
                eprintln!("excluded {} failed rows", r.excluded.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
