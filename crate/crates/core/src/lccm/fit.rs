use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{dataset_loss, loss_and_gradients, ImagePair};
use super::lstsq::solve_least_squares;
use super::matrix::{ColorMatrix, PARAM_COUNT};
use crate::error::{Error, Result};
use crate::metrics::psnr_from_mse;
use crate::scalar::Scalar;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_BATCH: usize = 1;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Optimizer {
    #[default]
    Adam,
    Sgd,
    ClosedForm,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
            Optimizer::ClosedForm => "closed-form",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            "closed-form" | "closed" | "lstsq" => Ok(Optimizer::ClosedForm),
            other => Err(Error::Parameter(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Init {
    #[default]
    Identity,
    Zeros,
    /// Uniform in `±1/√3` for every weight and bias, the usual default for a
    /// 1x1 convolution with three input channels.
    SeededRandom,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Identity => "identity",
            Init::Zeros => "zeros",
            Init::SeededRandom => "seeded-random",
        })
    }
}

impl FromStr for Init {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Init::Identity),
            "zeros" => Ok(Init::Zeros),
            "seeded-random" | "random" => Ok(Init::SeededRandom),
            other => Err(Error::Parameter(format!("unknown init `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig<T> {
    pub optimizer: Optimizer,
    pub learning_rate: T,
    pub epochs: usize,
    /// Image pairs per optimizer step.
    pub batch: usize,
    pub seed: u64,
    pub init: Init,
    /// Visit pairs in a seeded random order each epoch.
    pub shuffle: bool,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: T::lit(DEFAULT_LEARNING_RATE),
            epochs: DEFAULT_EPOCHS,
            batch: DEFAULT_BATCH,
            seed: 0,
            init: Init::Identity,
            shuffle: true,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Parameter("batch must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport<T> {
    pub final_matrix: ColorMatrix<T>,
    /// Dataset MSE measured after each full pass. Closed-form fits record one entry.
    pub loss_per_epoch: Vec<T>,
    pub psnr_per_epoch: Vec<T>,
    pub samples_used: usize,
}

impl<T: Scalar> FitReport<T> {
    pub fn final_loss(&self) -> T {
        *self.loss_per_epoch.last().expect("a report holds at least one epoch")
    }

    /// `epoch,loss,psnr` with a header row; epochs count from 1.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "epoch,loss,psnr")?;
        for (i, (l, p)) in self.loss_per_epoch.iter().zip(&self.psnr_per_epoch).enumerate() {
            writeln!(w, "{},{},{}", i + 1, l, p)?;
        }
        Ok(())
    }
}

struct Adam<T> {
    m: [T; PARAM_COUNT],
    v: [T; PARAM_COUNT],
    beta1_t: T,
    beta2_t: T,
}

impl<T: Scalar> Adam<T> {
    fn new() -> Self {
        Self {
            m: [T::zero(); PARAM_COUNT],
            v: [T::zero(); PARAM_COUNT],
            beta1_t: T::one(),
            beta2_t: T::one(),
        }
    }

    fn step(&mut self, params: &mut [T; PARAM_COUNT], grad: &[T; PARAM_COUNT], lr: T) {
        let (b1, b2, eps) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2), T::lit(ADAM_EPSILON));
        self.beta1_t = self.beta1_t * b1;
        self.beta2_t = self.beta2_t * b2;
        for i in 0..PARAM_COUNT {
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * grad[i] * grad[i];
            let m_hat = self.m[i] / (T::one() - self.beta1_t);
            let v_hat = self.v[i] / (T::one() - self.beta2_t);
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

fn initial_matrix<T: Scalar>(init: Init, rng: &mut ChaCha8Rng) -> ColorMatrix<T> {
    match init {
        Init::Identity => ColorMatrix::identity(),
        Init::Zeros => ColorMatrix::zeros(),
        Init::SeededRandom => {
            let bound = 1.0 / 3f64.sqrt();
            let mut p = [T::zero(); PARAM_COUNT];
            for v in p.iter_mut() {
                *v = T::lit(rng.gen_range(-bound..bound));
            }
            ColorMatrix::from_params(p)
        }
    }
}

/// Loss growth over `max(initial loss, 1)` treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn check_finite<T: Scalar>(epoch: usize, loss: T, m: &ColorMatrix<T>) -> Result<()> {
    check_diverged(epoch, loss, m, T::infinity())
}

fn check_diverged<T: Scalar>(epoch: usize, loss: T, m: &ColorMatrix<T>, limit: T) -> Result<()> {
    if loss.is_finite() && m.is_finite() && loss <= limit {
        Ok(())
    } else {
        Err(Error::Divergence {
            epoch,
            loss: loss.as_f64(),
        })
    }
}

/// Fits the 12-parameter color matrix to the pairs.
///
/// Gradient modes run `cfg.epochs` passes of mini-batch updates and record the full-dataset
/// loss after each pass. Closed-form mode ignores epochs and solves the normal equations once.
pub fn fit<T: Scalar>(pairs: &[ImagePair<T>], cfg: &FitConfig<T>) -> Result<FitReport<T>> {
    if pairs.is_empty() {
        return Err(Error::Input("fit needs at least one image pair".into()));
    }
    cfg.validate()?;
    for (i, p) in pairs.iter().enumerate() {
        if p.source.width() != p.target.width() || p.source.height() != p.target.height() {
            return Err(Error::Shape(format!("pair {i}: source and target sizes differ")));
        }
    }

    if cfg.optimizer == Optimizer::ClosedForm {
        let m = solve_least_squares(pairs)?;
        let loss = dataset_loss(pairs, &m)?;
        check_finite(1, loss, &m)?;
        return Ok(FitReport {
            final_matrix: m,
            loss_per_epoch: vec![loss],
            psnr_per_epoch: vec![psnr_from_mse(loss)],
            samples_used: pairs.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = initial_matrix::<T>(cfg.init, &mut rng).params();
    let start_loss = dataset_loss(pairs, &ColorMatrix::from_params(params))?;
    let limit = T::lit(DIVERGENCE_FACTOR) * start_loss.max(T::one());
    let mut adam = Adam::new();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_per_epoch = Vec::with_capacity(cfg.epochs);
    let mut psnr_per_epoch = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(cfg.batch) {
            let m = ColorMatrix::from_params(params);
            let (_, g) = loss_and_gradients(chunk.iter().map(|&i| &pairs[i]), &m)?;
            let g = g.params();
            match cfg.optimizer {
                Optimizer::Adam => adam.step(&mut params, &g, cfg.learning_rate),
                Optimizer::Sgd => {
                    for (p, gi) in params.iter_mut().zip(g) {
                        *p = *p - cfg.learning_rate * gi;
                    }
                }
                Optimizer::ClosedForm => unreachable!(),
            }
        }
        let m = ColorMatrix::from_params(params);
        let loss = dataset_loss(pairs, &m)?;
        check_diverged(epoch, loss, &m, limit)?;
        loss_per_epoch.push(loss);
        psnr_per_epoch.push(psnr_from_mse(loss));
    }

    Ok(FitReport {
        final_matrix: ColorMatrix::from_params(params),
        loss_per_epoch,
        psnr_per_epoch,
        samples_used: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::RgbImage;

    fn ramp_pairs() -> Vec<ImagePair<f64>> {
        (0..3)
            .map(|k| {
                let img = RgbImage::from_fn(4, 4, |x, y| {
                    let k = k as f64;
                    [
                        x as f64 / 4.0,
                        (y as f64 + k) / 8.0,
                        ((x + y) % 3) as f64 / 3.0 + 0.1 * k,
                    ]
                })
                .unwrap();
                ImagePair::new(img.clone(), img).unwrap()
            })
            .collect()
    }

    #[test]
    fn identity_teacher_stays_at_identity() {
        let pairs = ramp_pairs();
        let report = fit(&pairs, &FitConfig::<f64>::default()).unwrap();
        assert_eq!(report.final_matrix, ColorMatrix::identity());
        assert!(report.loss_per_epoch.iter().all(|&l| l == 0.0));
        assert_eq!(report.loss_per_epoch.len(), DEFAULT_EPOCHS);
        assert_eq!(report.samples_used, 3);
    }

    #[test]
    fn empty_and_invalid_configs_fail() {
        assert!(matches!(fit::<f64>(&[], &FitConfig::default()), Err(Error::Input(_))));
        let pairs = ramp_pairs();
        let bad_lr = FitConfig {
            learning_rate: 0.0,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&pairs, &bad_lr), Err(Error::Parameter(_))));
        let no_epochs = FitConfig::<f64> {
            epochs: 0,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&pairs, &no_epochs), Err(Error::Parameter(_))));
    }

    #[test]
    fn huge_sgd_step_reports_divergence_epoch() {
        let mut pairs = ramp_pairs();
        for p in pairs.iter_mut() {
            p.target = p.target.map_samples(|s| 3.0 * s + 1.0);
        }
        let cfg = FitConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 1e6,
            epochs: 50,
            ..FitConfig::default()
        };
        match fit(&pairs, &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!((1..=50).contains(&epoch)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_epoch() {
        let pairs = ramp_pairs();
        let cfg = FitConfig::<f64> {
            epochs: 3,
            ..FitConfig::default()
        };
        let report = fit(&pairs, &cfg).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "epoch,loss,psnr");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("3,"));
    }

    #[test]
    fn option_strings_parse() {
        assert_eq!("adam".parse::<Optimizer>().unwrap(), Optimizer::Adam);
        assert_eq!("closed-form".parse::<Optimizer>().unwrap(), Optimizer::ClosedForm);
        assert_eq!("seeded-random".parse::<Init>().unwrap(), Init::SeededRandom);
        assert!("rmsprop".parse::<Optimizer>().is_err());
    }
}
