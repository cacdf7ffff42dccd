use std::path::PathBuf;
use std::process::ExitCode;

use changechip::config::{HistogramDirection, Modality, PipelineConfig, Roi};
use changechip::dump::FeatureDump;
use changechip::error::{Error, Result};
use changechip::{eval, io, pipeline, synth};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "changechip", version, about = "Unsupervised change detection for PCB image pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect changes between one reference / target pair.
    Run {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the feature matrix and labels in the binary dump layout.
        #[arg(long)]
        dump_features: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Evaluate every pair listed in a manifest.
    Eval {
        /// One pair per line: `reference target ground_truth modality [eps]`.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Generate a planted-defect pair from a base image and a JSON spec.
    Synth {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 5)]
    h: usize,
    #[arg(long, default_value_t = 16)]
    classes: usize,
    #[arg(long, default_value_t = 9)]
    s_rgb: usize,
    #[arg(long, default_value_t = 3)]
    s_gray: usize,
    /// DBSCAN radius; defaults to the modality's value (0.02 optical).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Crop rectangle `x,y,w,h` applied to both images.
    #[arg(long)]
    roi: Option<String>,
    #[arg(long, default_value = "optical")]
    modality: String,
    #[arg(long)]
    skip_registration: bool,
    #[arg(long)]
    skip_histogram: bool,
    /// Remap the reference toward the target instead of the reverse.
    #[arg(long)]
    match_reference: bool,
    #[arg(long, default_value_t = 3.0)]
    ransac_threshold: f64,
    #[arg(long, default_value_t = 2000)]
    ransac_iters: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

impl Opts {
    fn config(&self) -> Result<PipelineConfig> {
        let modality: Modality = self.modality.parse()?;
        let roi = self.roi.as_deref().map(str::parse::<Roi>).transpose()?;
        let cfg = PipelineConfig {
            h: self.h,
            classes: self.classes,
            s_rgb: self.s_rgb,
            s_gray: self.s_gray,
            eps: self.eps.unwrap_or(modality.default_eps()),
            ratio: self.ratio,
            seed: self.seed,
            roi,
            skip_registration: self.skip_registration,
            skip_histogram: self.skip_histogram,
            histogram_direction: if self.match_reference {
                HistogramDirection::ReferenceToTarget
            } else {
                HistogramDirection::TargetToReference
            },
            modality,
            ransac_threshold_px: self.ransac_threshold,
            ransac_iters: self.ransac_iters,
            kmeans_restarts: self.restarts,
            ..PipelineConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { reference, target, out, dump_features, opts } => {
            let cfg = opts.config()?;
            let (run, report) = pipeline::run_pipeline(&reference, &target, &cfg, &out)?;
            if let (Some(path), Some(det)) = (dump_features, run.detection.as_ref()) {
                FeatureDump::from_detection(det).save(&path)?;
            }
            println!(
                "{} changed pixels in {} selected classes ({:.0} ms); artifacts in {}",
                report.changed_pixels,
                report.selected_count,
                report.timings.total_ms,
                out.display()
            );
        }
        Command::Eval { manifest, out, opts } => {
            let cfg = opts.config()?;
            let report = eval::run_dataset(&manifest, &cfg, Some(&out))?;
            print!("{}", report.table());
            if report.pairs_failed > 0 {
                return Err(Error::PairsFailed(report.pairs_failed));
            }
        }
        Command::Synth { base, spec, out, seed } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec: synth::DefectSpec =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            let base = io::load_image(&base)?;
            let pair = synth::generate_defect_pair(&base, &spec, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            io::save_image(&pair.reference, out.join("reference.png"))?;
            io::save_image(&pair.target, out.join("target.png"))?;
            io::save_mask(&pair.ground_truth, out.join("gt.png"))?;
            pipeline::write_json(&out.join("transform.json"), &pair.transform.matrix)?;
            println!(
                "{} ground-truth pixels; pair written to {}",
                pair.ground_truth.count(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
