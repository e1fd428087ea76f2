pub mod commands;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use simraw::lccm::{FitConfig, Init, Optimizer, DEFAULT_BATCH, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE};
use simraw::BayerPattern;

use crate::commands::*;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "simraw",
    version,
    about = "Simulated inverse ISP and learnable color correction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FitFlags {
    #[arg(long, default_value = "adam")]
    pub optimizer: Optimizer,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "identity")]
    pub init: Init,
    /// Keep the manifest order instead of shuffling each epoch.
    #[arg(long)]
    pub no_shuffle: bool,
}

impl FitFlags {
    pub fn config(&self) -> FitConfig<f64> {
        FitConfig {
            optimizer: self.optimizer,
            learning_rate: self.lr,
            epochs: self.epochs,
            batch: self.batch,
            seed: self.seed,
            init: self.init,
            shuffle: !self.no_shuffle,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic sRGB images with teacher RAW targets.
    Synthesize {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
    /// Fit the 12-parameter color matrix to a manifest of pairs.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        fit: FitFlags,
        #[arg(long)]
        out_matrix: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Convert sRGB images to Bayer RAW with a fitted matrix.
    Convert {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "rggb")]
        pattern: BayerPattern,
        #[arg(long, default_value_t = 12)]
        bit_depth: u8,
    },
    /// Score predictions against same-named targets.
    Eval {
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        target_dir: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Test-set quality as a function of training-set size.
    Ablate {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ABLATION_COUNTS)]
        sample_counts: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        test_count: usize,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Per-channel 256-bin histogram of an sRGB image.
    Histogram {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
    },
}

/// Runs one parsed command, writing progress to stderr.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize {
            count,
            params,
            out_dir,
            seed,
            width,
            height,
        } => {
            let entries = synthesize(&SynthesizeOptions {
                count,
                params,
                out_dir: out_dir.clone(),
                seed,
                width,
                height,
            })?;
            eprintln!("wrote {} pairs to {}", entries.len(), out_dir.display());
        }
        Command::Fit {
            manifest,
            fit,
            out_matrix,
            report,
        } => {
            let r = fit_command(&FitOptions {
                manifest,
                config: fit.config(),
                out_matrix,
                report_csv: report,
            })?;
            eprintln!(
                "{} epochs over {} pairs, final loss {:.6e}",
                r.loss_per_epoch.len(),
                r.samples_used,
                r.final_loss()
            );
        }
        Command::Convert {
            matrix,
            inputs,
            out_dir,
            pattern,
            bit_depth,
        } => {
            let opts = ConvertOptions {
                matrix,
                inputs,
                out_dir,
                pattern,
                bit_depth,
            };
            let s = convert(&opts)?;
            eprintln!(
                "converted {} images in {:.3} s ({:.1} images/s)",
                s.outputs.len(),
                s.seconds,
                s.images_per_second()
            );
            if let Some(&(w, h)) = s.sizes.first() {
                eprintln!("{}", accounting_line(&read_matrix(&opts.matrix)?, w, h));
            }
        }
        Command::Eval {
            pred_dir,
            target_dir,
            report,
        } => {
            let s = eval(&EvalOptions {
                pred_dir,
                target_dir,
                report_csv: report,
            })?;
            eprintln!(
                "{} images: mean PSNR {:.3} dB, mean SSIM {:.4}",
                s.rows.len(),
                s.mean.psnr_db,
                s.mean.ssim
            );
        }
        Command::Ablate {
            sample_counts,
            trials,
            report,
            params,
            size,
            test_count,
            fit,
        } => {
            let points = ablate(&AblateOptions {
                sample_counts,
                trials,
                report_csv: report,
                params,
                seed: fit.seed,
                size,
                test_count,
                config: fit.config(),
            })?;
            for p in points {
                eprintln!(
                    "{:>5} samples: PSNR {:.3} dB, SSIM {:.4}",
                    p.samples,
                    p.psnr_mean(),
                    p.ssim_mean()
                );
            }
        }
        Command::Histogram { image, out, compare } => {
            if let Some(d) = histogram_command(&HistogramOptions {
                image,
                out_csv: out,
                compare,
            })? {
                eprintln!("L1 histogram distance R {:.6} G {:.6} B {:.6}", d[0], d[1], d[2]);
            }
        }
    }
    Ok(())
}
