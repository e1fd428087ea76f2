//! Forward camera pipeline (demosaic → white balance → brightness → color correction →
//! gamma) and its stage-by-stage analytic inverse.
//!
//! Intermediate values are never clamped; only the two pipeline ends clamp to `[0, 1]`.

mod params;

pub use params::{DemosaicMethod, IspParams, TEACHER_CCM};

use crate::error::{Error, Result};
use crate::imaging::{BayerPattern, BayerRaw, Channel, RgbImage};
use crate::lccm::ColorMatrix;
use crate::scalar::Scalar;

/// Bilinear demosaic. Sampled sites are copied; each missing channel is the mean of the
/// two or four same-color sites in the 3x3 neighborhood. Out-of-frame neighbors are
/// mirrored about the border pixel (`-1 → 1`, `w → w - 2`), which keeps the Bayer phase.
pub fn demosaic<T: Scalar>(raw: &BayerRaw<T>, method: DemosaicMethod) -> Result<RgbImage<T>> {
    let DemosaicMethod::Bilinear = method;
    let (w, h) = (raw.width(), raw.height());
    if w % 2 != 0 || h % 2 != 0 || w < 2 || h < 2 {
        return Err(Error::Dimension(format!("{w}x{h} raw frame has odd dimensions")));
    }
    let pattern = raw.pattern();
    let reflect = |i: isize, n: usize| -> usize {
        if i < 0 {
            1
        } else if i as usize >= n {
            n - 2
        } else {
            i as usize
        }
    };
    RgbImage::from_fn(w, h, |x, y| {
        let here = pattern.channel_at(x, y);
        let mut found = [[T::zero(); 4]; 3];
        let mut counts = [0usize; 3];
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let xx = reflect(x as isize + dx, w);
                let yy = reflect(y as isize + dy, h);
                let c = pattern.channel_at(xx, yy).index();
                if counts[c] < 4 {
                    found[c][counts[c]] = raw.get(xx, yy);
                    counts[c] += 1;
                }
            }
        }
        let mut out = [T::zero(); 3];
        for c in Channel::ALL {
            let i = c.index();
            let v = &found[i];
            out[i] = if c == here {
                raw.get(x, y)
            } else if counts[i] == 4 {
                ((v[0] + v[1]) + (v[2] + v[3])) * T::lit(0.25)
            } else {
                (v[0] + v[1]) * T::lit(0.5)
            };
        }
        out
    })
}

/// Samples each pixel's pattern channel. No filtering.
pub fn mosaic<T: Scalar>(img: &RgbImage<T>, pattern: BayerPattern, bit_depth: u8) -> Result<BayerRaw<T>> {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(img.get(pattern.channel_at(x, y), x, y));
        }
    }
    BayerRaw::new(w, h, pattern, bit_depth, data)
}

fn check_gains<T: Scalar>(gains: &[T]) -> Result<()> {
    match gains.iter().find(|g| !(**g > T::zero() && g.is_finite())) {
        Some(g) => Err(Error::Parameter(format!("gain must be positive and finite, got {g}"))),
        None => Ok(()),
    }
}

pub fn white_balance<T: Scalar>(img: &RgbImage<T>, gains: [T; 3]) -> Result<RgbImage<T>> {
    check_gains(&gains)?;
    Ok(img.map_pixels(|p| [p[0] * gains[0], p[1] * gains[1], p[2] * gains[2]]))
}

pub fn white_balance_inverse<T: Scalar>(img: &RgbImage<T>, gains: [T; 3]) -> Result<RgbImage<T>> {
    check_gains(&gains)?;
    Ok(img.map_pixels(|p| [p[0] / gains[0], p[1] / gains[1], p[2] / gains[2]]))
}

pub fn brightness<T: Scalar>(img: &RgbImage<T>, gain: T) -> Result<RgbImage<T>> {
    check_gains(&[gain])?;
    Ok(img.map_samples(|s| s * gain))
}

pub fn brightness_inverse<T: Scalar>(img: &RgbImage<T>, gain: T) -> Result<RgbImage<T>> {
    check_gains(&[gain])?;
    Ok(img.map_samples(|s| s / gain))
}

/// Per-pixel `M · in + b`.
pub fn color_correct<T: Scalar>(img: &RgbImage<T>, ccm: &ColorMatrix<T>) -> Result<RgbImage<T>> {
    ccm.ensure_finite()?;
    Ok(img.map_pixels(|p| ccm.transform(p)))
}

pub fn color_correct_inverse<T: Scalar>(img: &RgbImage<T>, ccm: &ColorMatrix<T>) -> Result<RgbImage<T>> {
    let inv = ccm.inverse()?;
    Ok(img.map_pixels(|p| inv.transform(p)))
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "gamma must be positive and finite, got {gamma}"
        )))
    }
}

/// `s ↦ max(s, 0)^(1/gamma)`.
pub fn gamma_encode<T: Scalar>(img: &RgbImage<T>, gamma: T) -> Result<RgbImage<T>> {
    check_gamma(gamma)?;
    let e = T::one() / gamma;
    Ok(img.map_samples(|s| s.max(T::zero()).powf(e)))
}

/// `s ↦ max(s, 0)^gamma`.
pub fn gamma_decode<T: Scalar>(img: &RgbImage<T>, gamma: T) -> Result<RgbImage<T>> {
    check_gamma(gamma)?;
    Ok(img.map_samples(|s| s.max(T::zero()).powf(gamma)))
}

/// RAW → sRGB. The raw frame's own Bayer pattern drives the demosaic.
pub fn isp_forward<T: Scalar>(raw: &BayerRaw<T>, p: &IspParams<T>) -> Result<RgbImage<T>> {
    p.validate()?;
    let rgb = demosaic(raw, p.demosaic)?;
    let rgb = white_balance(&rgb, p.wb_gains)?;
    let rgb = brightness(&rgb, p.brightness_gain)?;
    let rgb = color_correct(&rgb, &p.ccm)?;
    let rgb = gamma_encode(&rgb, p.gamma)?;
    Ok(rgb.clamped())
}

/// sRGB → RGB-domain simRAW: gamma decode, inverse color correction, inverse brightness,
/// inverse white balance. Unclamped; this is the fitting target before mosaicing.
pub fn isp_inverse_rgb<T: Scalar>(srgb: &RgbImage<T>, p: &IspParams<T>) -> Result<RgbImage<T>> {
    p.validate()?;
    let rgb = gamma_decode(srgb, p.gamma)?;
    let rgb = color_correct_inverse(&rgb, &p.ccm)?;
    let rgb = brightness_inverse(&rgb, p.brightness_gain)?;
    white_balance_inverse(&rgb, p.wb_gains)
}

/// sRGB → Bayer RAW: [`isp_inverse_rgb`], mosaic with `p.pattern`, clamp to `[0, 1]`.
pub fn isp_inverse<T: Scalar>(srgb: &RgbImage<T>, p: &IspParams<T>) -> Result<BayerRaw<T>> {
    let rgb = isp_inverse_rgb(srgb, p)?;
    Ok(mosaic(&rgb, p.pattern, p.bit_depth)?.clamped())
}
