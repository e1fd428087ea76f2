//! PSNR, SSIM and histogram comparison.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::imaging::{BayerRaw, Channel, Histogram, ImageBuffer, RgbImage, HISTOGRAM_BINS};
use crate::scalar::{pairwise_sum, Scalar};

/// Reported in place of +∞ when two images are identical.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `10·log10(1 / mse)` with peak 1.0; zero error maps to [`PSNR_CAP_DB`].
pub fn psnr_from_mse<T: Scalar>(mse: T) -> T {
    if mse == T::zero() {
        T::lit(PSNR_CAP_DB)
    } else {
        T::lit(10.0) * (T::one() / mse).log10()
    }
}

fn mse_slices<T: Scalar>(a: impl Iterator<Item = T>, b: impl Iterator<Item = T>) -> T {
    let sq: Vec<T> = a.zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    if sq.is_empty() {
        return T::zero();
    }
    pairwise_sum(&sq) / T::from_usize_lossy(sq.len())
}

/// PSNR over every sample of two images of the same kind and layout.
pub fn psnr<T: Scalar, I: ImageBuffer<T>>(a: &I, b: &I) -> Result<T> {
    a.ensure_same_layout(b)?;
    Ok(psnr_from_mse(mse_slices(
        a.samples().iter().copied(),
        b.samples().iter().copied(),
    )))
}

pub fn psnr_per_channel<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<[T; 3]> {
    a.ensure_same_layout(b)?;
    Ok(Channel::ALL.map(|c| psnr_from_mse(mse_slices(a.plane(c).iter().copied(), b.plane(c).iter().copied()))))
}

/// PSNR restricted to the sites of each color of the mosaic.
pub fn psnr_per_cfa_channel<T: Scalar>(a: &BayerRaw<T>, b: &BayerRaw<T>) -> Result<[T; 3]> {
    a.ensure_same_layout(b)?;
    let w = a.width();
    let pattern = a.pattern();
    Ok(Channel::ALL.map(|c| {
        let sites = |img: &BayerRaw<T>| {
            img.data()
                .iter()
                .enumerate()
                .filter(move |(i, _)| pattern.channel_at(i % w, i / w) == c)
                .map(|(_, &s)| s)
                .collect::<Vec<_>>()
        };
        let (sa, sb) = (sites(a), sites(b));
        psnr_from_mse(mse_slices(sa.into_iter(), sb.into_iter()))
    }))
}

fn gaussian_kernel<T: Scalar>() -> [T; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0f64; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.map(|v| T::lit(v / total))
}

/// Separable "valid" Gaussian filtering: output is `(w - 10) x (h - 10)`.
fn filter_valid<T: Scalar>(plane: &[T], w: usize, h: usize, k: &[T; SSIM_WINDOW]) -> Vec<T> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![T::zero(); ow * h];
    for y in 0..h {
        let line = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            let mut s = T::zero();
            for (j, &kj) in k.iter().enumerate() {
                s = s + kj * line[x + j];
            }
            rows[y * ow + x] = s;
        }
    }
    let mut out = vec![T::zero(); ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = T::zero();
            for (j, &kj) in k.iter().enumerate() {
                s = s + kj * rows[(y + j) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    out
}

/// Mean SSIM of one plane over all 11x11 Gaussian windows that fit inside the frame.
pub fn ssim_plane<T: Scalar>(a: &[T], b: &[T], width: usize, height: usize) -> Result<T> {
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "SSIM needs both sides >= {SSIM_WINDOW}, got {width}x{height}"
        )));
    }
    if a.len() != width * height || b.len() != width * height {
        return Err(Error::Shape("plane length does not match dimensions".into()));
    }
    let k = gaussian_kernel::<T>();
    let c1 = T::lit(SSIM_K1 * SSIM_K1);
    let c2 = T::lit(SSIM_K2 * SSIM_K2);
    let two = T::lit(2.0);
    let sq = |p: &[T]| p.iter().map(|&v| v * v).collect::<Vec<_>>();
    let ab: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    let mu_a = filter_valid(a, width, height, &k);
    let mu_b = filter_valid(b, width, height, &k);
    let e_aa = filter_valid(&sq(a), width, height, &k);
    let e_bb = filter_valid(&sq(b), width, height, &k);
    let e_ab = filter_valid(&ab, width, height, &k);
    let map: Vec<T> = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (two * ma * mb + c1) * (two * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            num / den
        })
        .collect();
    Ok(pairwise_sum(&map) / T::from_usize_lossy(map.len()))
}

/// Mean SSIM averaged over the three channels. Constants assume a peak of 1.0.
pub fn ssim<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<T> {
    a.ensure_same_layout(b)?;
    let mut total = T::zero();
    for c in Channel::ALL {
        total = total + ssim_plane(a.plane(c), b.plane(c), a.width(), a.height())?;
    }
    Ok(total / T::lit(3.0))
}

/// SSIM of the mosaic treated as one plane.
pub fn ssim_raw<T: Scalar>(a: &BayerRaw<T>, b: &BayerRaw<T>) -> Result<T> {
    a.ensure_same_layout(b)?;
    ssim_plane(a.data(), b.data(), a.width(), a.height())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport<T> {
    pub psnr_db: T,
    pub ssim: T,
    pub per_channel_psnr: [T; 3],
}

impl<T: Scalar> QualityReport<T> {
    pub const CSV_HEADER: &'static str = "name,psnr_db,ssim,psnr_r,psnr_g,psnr_b";

    pub fn csv_row(&self, name: &str) -> String {
        let p = &self.per_channel_psnr;
        format!("{name},{},{},{},{},{}", self.psnr_db, self.ssim, p[0], p[1], p[2])
    }

    /// Field-wise mean of several reports.
    pub fn mean(reports: &[Self]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = T::from_usize_lossy(reports.len());
        let avg = |f: &dyn Fn(&Self) -> T| pairwise_sum(&reports.iter().map(f).collect::<Vec<_>>()) / n;
        Some(Self {
            psnr_db: avg(&|r| r.psnr_db),
            ssim: avg(&|r| r.ssim),
            per_channel_psnr: [
                avg(&|r| r.per_channel_psnr[0]),
                avg(&|r| r.per_channel_psnr[1]),
                avg(&|r| r.per_channel_psnr[2]),
            ],
        })
    }
}

pub fn quality_report<T: Scalar>(pred: &RgbImage<T>, target: &RgbImage<T>) -> Result<QualityReport<T>> {
    Ok(QualityReport {
        psnr_db: psnr(pred, target)?,
        ssim: ssim(pred, target)?,
        per_channel_psnr: psnr_per_channel(pred, target)?,
    })
}

pub fn quality_report_raw<T: Scalar>(pred: &BayerRaw<T>, target: &BayerRaw<T>) -> Result<QualityReport<T>> {
    Ok(QualityReport {
        psnr_db: psnr(pred, target)?,
        ssim: ssim_raw(pred, target)?,
        per_channel_psnr: psnr_per_cfa_channel(pred, target)?,
    })
}

/// L1 distance between the normalized frequencies of two histograms, in `[0, 2]`.
pub fn histogram_distance(h1: &Histogram, h2: &Histogram) -> f64 {
    let (f1, f2) = (h1.frequencies(), h2.frequencies());
    let d: f64 = f1.iter().zip(&f2).map(|(a, b)| (a - b).abs()).sum();
    // rounding in the normalization can overshoot by an ulp
    d.min(2.0)
}

/// One row per bin: `bin,<name1>,<name2>,...` with normalized frequencies.
pub fn write_histogram_csv(mut w: impl Write, columns: &[(&str, &Histogram)]) -> io::Result<()> {
    write!(w, "bin")?;
    for (name, _) in columns {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    let freqs: Vec<_> = columns.iter().map(|(_, h)| h.frequencies()).collect();
    for bin in 0..HISTOGRAM_BINS {
        write!(w, "{bin}")?;
        for f in &freqs {
            write!(w, ",{}", f[bin])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
