//! `pansharp`: synthesize, degrade, fuse, evaluate and score pansharpening runs.

mod loss;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pansharp::fusion::{FusionInput, LowResPanMode};
use pansharp::metrics::{build_report, to_json, write_csv};
use pansharp::raster::{patchify, read_raster, synth_scene, write_raster};
use pansharp::resample::wald_degrade;
use pansharp::{ErrorKind, FusionMethod, Raster};

#[derive(Parser, Debug)]
#[command(name = "pansharp", version, about = "Pansharpening toolkit")]
struct Cli {
    /// Output directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LrPan {
    WeightedMean,
    BlurDecimate,
    Mmse,
}

impl From<LrPan> for LowResPanMode {
    fn from(m: LrPan) -> Self {
        match m {
            LrPan::WeightedMean => LowResPanMode::WeightedMean,
            LrPan::BlurDecimate => LowResPanMode::BlurDecimate,
            LrPan::Mmse => LowResPanMode::Mmse,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic scene as hrms.msr and pan.msr.
    Simulate {
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        bands: usize,
        /// Comma-separated PAN band weights; equal weights by default.
        #[arg(long, value_delimiter = ',')]
        pan_weights: Option<Vec<f64>>,
    },
    /// Reduced-resolution degradation: writes lrms.msr, lrpan.msr, reference.msr.
    Degrade {
        #[arg(long)]
        hrms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
    },
    /// Cut an MS/PAN pair into non-overlapping patches.
    Patchify {
        #[arg(long)]
        ms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        #[arg(long, default_value_t = 256)]
        patch: usize,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
        /// Also degrade each patch and write its reference tile.
        #[arg(long)]
        wald: bool,
    },
    /// Fuse LRMS with PAN using a classical method.
    Fuse {
        #[arg(long)]
        lrms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        /// gihs, brovey, pca, gs, gs-mmse, gs-blur or hpf.
        #[arg(long)]
        method: FusionMethod,
        /// Low-resolution PAN surrogate for gs.
        #[arg(long, value_enum)]
        lrpan: Option<LrPan>,
        /// Resolution ratio; inferred from the input sizes when omitted.
        #[arg(long)]
        ratio: Option<usize>,
        /// Output file name inside --out.
        #[arg(long, default_value = "fused.msr")]
        output: String,
    },
    /// Score fused images against a reference; one report row per input.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        fused: Vec<PathBuf>,
        /// Row labels, in --fused order; file stems by default.
        #[arg(long, num_args = 1..)]
        label: Vec<String>,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        lrms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
    },
    /// Evaluate a named loss, optionally with a gradient check.
    Loss(loss::LossArgs),
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure {
            code: 5,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<pansharp::Error> for Failure {
    fn from(e: pansharp::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Shape => 3,
            ErrorKind::Degenerate => 4,
            ErrorKind::Io => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Simulate {
            size,
            bands,
            pan_weights,
        } => simulate(cli, *size, *bands, pan_weights.as_deref()),
        Command::Degrade { hrms, pan, ratio } => degrade(cli, hrms, pan, *ratio),
        Command::Patchify {
            ms,
            pan,
            patch,
            ratio,
            wald,
        } => cmd_patchify(cli, ms, pan, *patch, *ratio, *wald),
        Command::Fuse {
            lrms,
            pan,
            method,
            lrpan,
            ratio,
            output,
        } => fuse(cli, lrms, pan, *method, *lrpan, *ratio, output),
        Command::Eval {
            fused,
            label,
            reference,
            lrms,
            pan,
            ratio,
        } => eval(cli, fused, label, reference, lrms, pan, *ratio),
        Command::Loss(args) => loss::run(args, cli.format),
    }
}

fn out_dir(cli: &Cli) -> CmdResult<&Path> {
    fs::create_dir_all(&cli.out).map_err(|e| Failure::io(&cli.out, e))?;
    Ok(&cli.out)
}

fn save(dir: &Path, name: &str, r: &Raster) -> CmdResult {
    let path = dir.join(name);
    write_raster(r, &path)?;
    println!("wrote {} ({})", path.display(), r.shape_string());
    Ok(())
}

fn simulate(cli: &Cli, size: usize, bands: usize, weights: Option<&[f64]>) -> CmdResult {
    if bands == 0 {
        return Err(Failure::usage("--bands must be at least 1"));
    }
    let weights = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0 / bands as f64; bands],
    };
    let (hrms, pan) = synth_scene(size, size, bands, cli.seed, &weights)?;
    let dir = out_dir(cli)?;
    save(dir, "hrms.msr", &hrms)?;
    save(dir, "pan.msr", &pan)
}

fn degrade(cli: &Cli, hrms: &Path, pan: &Path, ratio: usize) -> CmdResult {
    if ratio < 2 {
        return Err(Failure::usage("--ratio must be at least 2"));
    }
    let t = wald_degrade(&read_raster(hrms)?, &read_raster(pan)?, ratio)?;
    let dir = out_dir(cli)?;
    save(dir, "lrms.msr", &t.lrms)?;
    save(dir, "lrpan.msr", &t.lrpan)?;
    save(dir, "reference.msr", &t.reference)
}

fn cmd_patchify(
    cli: &Cli,
    ms: &Path,
    pan: &Path,
    patch: usize,
    ratio: usize,
    wald: bool,
) -> CmdResult {
    let mut set = patchify(&read_raster(ms)?, &read_raster(pan)?, patch, ratio)?;
    if wald {
        set = set.wald_degrade()?;
    }
    let dir = out_dir(cli)?;
    for (i, p) in set.patches.iter().enumerate() {
        save(dir, &format!("patch{i:03}_ms.msr"), &p.lrms)?;
        save(dir, &format!("patch{i:03}_pan.msr"), &p.pan)?;
        if let Some(r) = &p.reference {
            save(dir, &format!("patch{i:03}_ref.msr"), r)?;
        }
    }
    println!("{} patches", set.len());
    Ok(())
}

fn fuse(
    cli: &Cli,
    lrms: &Path,
    pan: &Path,
    method: FusionMethod,
    lrpan: Option<LrPan>,
    ratio: Option<usize>,
    output: &str,
) -> CmdResult {
    let method = match (method, lrpan) {
        (FusionMethod::Gs(_), Some(mode)) => FusionMethod::Gs(mode.into()),
        (_, Some(_)) => return Err(Failure::usage("--lrpan only applies to gs")),
        (m, None) => m,
    };
    let (lrms, pan) = (read_raster(lrms)?, read_raster(pan)?);
    let input = match ratio {
        Some(r) => FusionInput::new(lrms, pan, r)?,
        None => FusionInput::infer(lrms, pan)?,
    };
    let fused = method.fuse(&input).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{method}: {}", f.message);
        f
    })?;
    save(out_dir(cli)?, output, &fused)
}

fn eval(
    cli: &Cli,
    fused: &[PathBuf],
    labels: &[String],
    reference: &Path,
    lrms: &Path,
    pan: &Path,
    ratio: usize,
) -> CmdResult {
    if !labels.is_empty() && labels.len() != fused.len() {
        return Err(Failure::usage(format!(
            "{} labels for {} fused inputs",
            labels.len(),
            fused.len()
        )));
    }
    let (reference, lrms, pan) = (
        read_raster(reference)?,
        read_raster(lrms)?,
        read_raster(pan)?,
    );
    let mut rows = Vec::with_capacity(fused.len());
    for (i, path) in fused.iter().enumerate() {
        let label = match labels.get(i) {
            Some(l) => l.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("input{i}")),
        };
        let f = read_raster(path)?;
        rows.push(build_report(&label, &f, &reference, &lrms, &pan, ratio)?);
    }
    let (name, text) = match cli.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows).expect("writing to memory");
            ("report.csv", String::from_utf8(buf).expect("csv is utf-8"))
        }
        Format::Json => ("report.json", to_json(&rows) + "\n"),
    };
    let path = out_dir(cli)?.join(name);
    fs::write(&path, &text).map_err(|e| Failure::io(&path, e))?;
    print!("{text}");
    Ok(())
}
