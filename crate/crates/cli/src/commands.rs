//! The six subcommands as plain functions over option structs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use simraw::imaging::io::{load_any, load_rgb, save_raw, save_rgb, Image, ImageFormat};
use simraw::imaging::{histogram, BayerPattern, Channel};
use simraw::isp::{isp_inverse, isp_inverse_rgb, mosaic};
use simraw::lccm::{apply, fit, flop_estimate, param_count, FitConfig, FitReport, FlopConvention, ImagePair};
use simraw::metrics::{
    histogram_distance, psnr, quality_report, quality_report_raw, ssim, write_histogram_csv, QualityReport,
};
use simraw::synth::{synthetic_srgb, teacher_dataset};
use simraw::{ColorMatrix, IspParams, RgbImage};

use crate::error::{CliError, Result};
use crate::manifest::{read_manifest, write_manifest, ManifestEntry};

pub const MANIFEST_NAME: &str = "manifest.tsv";
pub const TEACHER_PARAMS_NAME: &str = "teacher_params.txt";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("no such file: {}", path.display())))
    }
}

fn load_params(path: Option<&Path>) -> Result<IspParams<f64>> {
    match path {
        Some(p) => {
            require_file(p)?;
            Ok(IspParams::load(p)?)
        }
        None => Ok(IspParams::default()),
    }
}

#[derive(Clone, Debug)]
pub struct SynthesizeOptions {
    pub count: usize,
    pub params: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
}

/// Writes `count` procedural sRGB images with their teacher targets and a manifest.
///
/// Sources are stored as 16-bit PPM and the targets are computed from the stored (quantized)
/// source, so re-running the teacher on a loaded source reproduces the stored targets.
pub fn synthesize(opts: &SynthesizeOptions) -> Result<Vec<ManifestEntry>> {
    let params = load_params(opts.params.as_deref())?;
    let dirs = ["srgb", "target_rgb", "target_raw"].map(|d| opts.out_dir.join(d));
    for d in std::iter::once(&opts.out_dir).chain(&dirs) {
        create_dir(d)?;
    }
    params.save(opts.out_dir.join(TEACHER_PARAMS_NAME))?;
    let mut entries = Vec::with_capacity(opts.count);
    for i in 0..opts.count {
        let name = format!("{i:06}");
        let srgb = synthetic_srgb::<f64>(opts.width, opts.height, opts.seed, i as u64)?.quantized(16);
        let target = isp_inverse_rgb(&srgb, &params)?;
        let raw = isp_inverse(&srgb, &params)?;
        let entry = ManifestEntry {
            source: PathBuf::from("srgb").join(format!("{name}.ppm")),
            target_rgb: PathBuf::from("target_rgb").join(format!("{name}.ppm")),
            target_raw: PathBuf::from("target_raw").join(format!("{name}.raw")),
        };
        save_rgb(&srgb, opts.out_dir.join(&entry.source), ImageFormat::Ppm16)?;
        save_rgb(
            &target.clamped(),
            opts.out_dir.join(&entry.target_rgb),
            ImageFormat::Ppm16,
        )?;
        save_raw(&raw, opts.out_dir.join(&entry.target_raw))?;
        entries.push(entry);
    }
    write_manifest(&opts.out_dir.join(MANIFEST_NAME), &entries)?;
    Ok(entries)
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub manifest: PathBuf,
    pub config: FitConfig<f64>,
    pub out_matrix: PathBuf,
    pub report_csv: PathBuf,
}

pub fn load_pairs(manifest: &Path) -> Result<Vec<ImagePair<f64>>> {
    let entries = read_manifest(manifest)?;
    entries
        .iter()
        .map(|e| {
            let src = load_rgb::<f64>(&e.source)?;
            let tgt = load_rgb::<f64>(&e.target_rgb)?;
            Ok(ImagePair::new(src, tgt)?)
        })
        .collect()
}

pub fn fit_command(opts: &FitOptions) -> Result<FitReport<f64>> {
    require_file(&opts.manifest)?;
    opts.config.validate()?;
    let pairs = load_pairs(&opts.manifest)?;
    if pairs.is_empty() {
        return Err(CliError::Data(format!("{} lists no pairs", opts.manifest.display())));
    }
    let report = fit(&pairs, &opts.config)?;
    write_file(&opts.out_matrix, report.final_matrix.to_text().as_bytes())?;
    let mut csv = Vec::new();
    report
        .write_csv(&mut csv)
        .map_err(|e| CliError::io(&opts.report_csv, e))?;
    write_file(&opts.report_csv, &csv)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ConvertOptions {
    pub matrix: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub pattern: BayerPattern,
    pub bit_depth: u8,
}

#[derive(Clone, Debug)]
pub struct ConvertSummary {
    pub outputs: Vec<PathBuf>,
    pub seconds: f64,
    /// Width and height of each converted image.
    pub sizes: Vec<(usize, usize)>,
}

impl ConvertSummary {
    pub fn images_per_second(&self) -> f64 {
        if self.seconds > 0.0 {
            self.outputs.len() as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("ppm")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            require_file(p)?;
            files.push(p.clone());
        }
    }
    Ok(files)
}

pub fn read_matrix(path: &Path) -> Result<ColorMatrix<f64>> {
    require_file(path)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ColorMatrix::from_text(&text)?)
}

/// Applies the matrix to every input, clamps, mosaics and writes `<stem>.raw`.
pub fn convert(opts: &ConvertOptions) -> Result<ConvertSummary> {
    let matrix = read_matrix(&opts.matrix)?;
    if !(simraw::imaging::MIN_BIT_DEPTH..=simraw::imaging::MAX_BIT_DEPTH).contains(&opts.bit_depth) {
        return Err(CliError::Args(format!(
            "--bit-depth {} outside [8, 24]",
            opts.bit_depth
        )));
    }
    let files = expand_inputs(&opts.inputs)?;
    create_dir(&opts.out_dir)?;
    let start = Instant::now();
    let results: Vec<Result<(PathBuf, (usize, usize))>> = files
        .par_iter()
        .map(|input| {
            let img = load_rgb::<f64>(input)?;
            let converted = apply(&img, &matrix)?.clamped();
            let raw = mosaic(&converted, opts.pattern, opts.bit_depth)?;
            let stem = input
                .file_stem()
                .ok_or_else(|| CliError::Data(format!("{} has no file name", input.display())))?;
            let out = opts.out_dir.join(Path::new(stem).with_extension("raw"));
            save_raw(&raw, &out)?;
            Ok((out, (img.width(), img.height())))
        })
        .collect();
    let seconds = start.elapsed().as_secs_f64();
    let mut outputs = Vec::with_capacity(results.len());
    let mut sizes = Vec::with_capacity(results.len());
    for r in results {
        let (out, size) = r?;
        outputs.push(out);
        sizes.push(size);
    }
    Ok(ConvertSummary {
        outputs,
        seconds,
        sizes,
    })
}

pub fn accounting_line(matrix: &ColorMatrix<f64>, width: usize, height: usize) -> String {
    let convention = FlopConvention::default();
    let flops = flop_estimate(width, height, convention);
    format!(
        "params: {} ({:.2e} M); {}x{} image: {} FLOP = {:.3e} GFLOP [{}]",
        param_count(matrix),
        param_count(matrix) as f64 / 1e6,
        width,
        height,
        flops,
        flops as f64 / 1e9,
        convention.describe()
    )
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub pred_dir: PathBuf,
    pub target_dir: PathBuf,
    pub report_csv: PathBuf,
}

#[derive(Clone, Debug)]
pub struct EvalSummary {
    pub rows: Vec<(String, QualityReport<f64>)>,
    pub mean: QualityReport<f64>,
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!("not a directory: {}", dir.display())));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|x| x.eq_ignore_ascii_case("ppm") || x.eq_ignore_ascii_case("raw"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Compares every image in `pred_dir` with the same-named file in `target_dir`.
/// RGB pairs (PPM) and Bayer pairs (raw-bin) are both accepted.
pub fn eval(opts: &EvalOptions) -> Result<EvalSummary> {
    let preds = list_images(&opts.pred_dir)?;
    if !opts.target_dir.is_dir() {
        return Err(CliError::Data(format!(
            "not a directory: {}",
            opts.target_dir.display()
        )));
    }
    let mut jobs = Vec::with_capacity(preds.len());
    for p in preds {
        let name = p.file_name().unwrap().to_owned();
        let t = opts.target_dir.join(&name);
        require_file(&t)?;
        jobs.push((name.to_string_lossy().into_owned(), p, t));
    }
    if jobs.is_empty() {
        return Err(CliError::Data(format!("no images in {}", opts.pred_dir.display())));
    }
    let results: Vec<Result<(String, QualityReport<f64>)>> = jobs
        .par_iter()
        .map(|(name, p, t)| {
            let report = match (load_any::<f64>(p)?, load_any::<f64>(t)?) {
                (Image::Rgb(a), Image::Rgb(b)) => quality_report(&a, &b)?,
                (Image::Raw(a), Image::Raw(b)) => quality_report_raw(&a, &b)?,
                _ => return Err(CliError::Data(format!("{name}: prediction and target differ in kind"))),
            };
            Ok((name.clone(), report))
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let reports: Vec<_> = rows.iter().map(|(_, r)| *r).collect();
    let mean = QualityReport::mean(&reports).expect("non-empty");
    let mut out = String::new();
    out.push_str(QualityReport::<f64>::CSV_HEADER);
    out.push('\n');
    for (name, r) in &rows {
        out.push_str(&r.csv_row(name));
        out.push('\n');
    }
    out.push_str(&mean.csv_row("mean"));
    out.push('\n');
    write_file(&opts.report_csv, out.as_bytes())?;
    Ok(EvalSummary { rows, mean })
}

pub const DEFAULT_ABLATION_COUNTS: [usize; 6] = [10, 25, 50, 100, 250, 500];

#[derive(Clone, Debug)]
pub struct AblateOptions {
    pub sample_counts: Vec<usize>,
    pub trials: usize,
    pub report_csv: PathBuf,
    pub params: Option<PathBuf>,
    pub seed: u64,
    pub size: usize,
    pub test_count: usize,
    pub config: FitConfig<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationPoint {
    pub samples: usize,
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl AblationPoint {
    pub fn psnr_mean(&self) -> f64 {
        mean_std(&self.psnr).0
    }
    pub fn ssim_mean(&self) -> f64 {
        mean_std(&self.ssim).0
    }
}

// splitmix64 finalizer, to derive independent data seeds
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean test-set PSNR and SSIM of `m` against clamped teacher targets, after clamping.
pub fn test_quality(m: &ColorMatrix<f64>, test: &[ImagePair<f64>]) -> Result<(f64, f64)> {
    let mut p = 0.0;
    let mut s = 0.0;
    for pair in test {
        let pred = apply(&pair.source, m)?.clamped();
        let target: RgbImage<f64> = pair.target.clamped();
        p += psnr(&pred, &target)?;
        s += ssim(&pred, &target)?;
    }
    let n = test.len() as f64;
    Ok((p / n, s / n))
}

/// Trains on fresh teacher subsets of each size and scores a fixed held-out set.
pub fn ablate(opts: &AblateOptions) -> Result<Vec<AblationPoint>> {
    if opts.trials == 0 || opts.sample_counts.is_empty() || opts.sample_counts.contains(&0) {
        return Err(CliError::Args(
            "ablation needs positive sample counts and trials".into(),
        ));
    }
    if opts.size < simraw::metrics::SSIM_WINDOW || !opts.size.is_multiple_of(2) {
        return Err(CliError::Args(format!(
            "--size must be even and at least {}, got {}",
            simraw::metrics::SSIM_WINDOW,
            opts.size
        )));
    }
    if opts.test_count == 0 {
        return Err(CliError::Args("--test-count must be positive".into()));
    }
    opts.config.validate()?;
    let params = load_params(opts.params.as_deref())?;
    let test = teacher_dataset(
        &params,
        opts.test_count,
        opts.size,
        opts.size,
        mix(opts.seed ^ 0x7E57),
        0,
    )?;
    let jobs: Vec<(usize, usize)> = opts
        .sample_counts
        .iter()
        .flat_map(|&c| (0..opts.trials).map(move |t| (c, t)))
        .collect();
    let scores: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(count, trial)| {
            let data_seed = mix(mix(opts.seed).wrapping_add(count as u64) ^ mix(trial as u64 + 1));
            let train = teacher_dataset(&params, count, opts.size, opts.size, data_seed, 0)?;
            let cfg = FitConfig {
                seed: data_seed,
                ..opts.config.clone()
            };
            let report = fit(&train, &cfg)?;
            test_quality(&report.final_matrix, &test)
        })
        .collect();
    let mut points: Vec<AblationPoint> = opts
        .sample_counts
        .iter()
        .map(|&samples| AblationPoint {
            samples,
            psnr: Vec::new(),
            ssim: Vec::new(),
        })
        .collect();
    for ((count, _), score) in jobs.iter().zip(scores) {
        let (p, s) = score?;
        let point = points.iter_mut().find(|pt| pt.samples == *count).unwrap();
        point.psnr.push(p);
        point.ssim.push(s);
    }
    let mut out = String::from("samples,trials,psnr_mean,psnr_std,ssim_mean,ssim_std\n");
    for pt in &points {
        let (pm, ps) = mean_std(&pt.psnr);
        let (sm, ss) = mean_std(&pt.ssim);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            pt.samples,
            pt.psnr.len(),
            pm,
            ps,
            sm,
            ss
        ));
    }
    write_file(&opts.report_csv, out.as_bytes())?;
    Ok(points)
}

#[derive(Clone, Debug)]
pub struct HistogramOptions {
    pub image: PathBuf,
    pub out_csv: PathBuf,
    pub compare: Option<PathBuf>,
}

/// Writes the per-channel frequency table. With `compare`, the second image's channels are
/// appended as extra columns and the per-channel L1 distances are returned.
pub fn histogram_command(opts: &HistogramOptions) -> Result<Option<[f64; 3]>> {
    require_file(&opts.image)?;
    if let Some(c) = &opts.compare {
        require_file(c)?;
    }
    let img = load_rgb::<f64>(&opts.image)?;
    let hs = Channel::ALL.map(|c| histogram(&img, c));
    let other = match &opts.compare {
        Some(p) => {
            let o = load_rgb::<f64>(p)?;
            Some(Channel::ALL.map(|c| histogram(&o, c)))
        }
        None => None,
    };
    let mut columns = vec![("R", &hs[0]), ("G", &hs[1]), ("B", &hs[2])];
    if let Some(o) = &other {
        columns.extend([("R_compare", &o[0]), ("G_compare", &o[1]), ("B_compare", &o[2])]);
    }
    let mut buf = Vec::new();
    write_histogram_csv(&mut buf, &columns).map_err(|e| CliError::io(&opts.out_csv, e))?;
    let mut file = fs::File::create(&opts.out_csv).map_err(|e| CliError::io(&opts.out_csv, e))?;
    file.write_all(&buf).map_err(|e| CliError::io(&opts.out_csv, e))?;
    Ok(other.map(|o| [0, 1, 2].map(|c| histogram_distance(&hs[c], &o[c]))))
}
