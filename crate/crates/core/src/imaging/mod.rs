//! Image containers shared by the ISP simulation, the color-matrix fitter and the metrics.
//!
//! Samples are floating point and nominally in `[0, 1]`. Integer code values only
//! appear at file boundaries (see [`io`]).

mod histogram;
pub mod io;

use std::fmt;
use std::str::FromStr;

pub use histogram::{histogram, Histogram, HISTOGRAM_BINS};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        })
    }
}

/// The 2x2 color filter array tiling. The name lists the top-left, top-right,
/// bottom-left and bottom-right sites in that order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BayerPattern {
    #[default]
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [
        BayerPattern::Rggb,
        BayerPattern::Bggr,
        BayerPattern::Grbg,
        BayerPattern::Gbrg,
    ];

    fn tile(self) -> [Channel; 4] {
        use Channel::*;
        match self {
            BayerPattern::Rggb => [R, G, G, B],
            BayerPattern::Bggr => [B, G, G, R],
            BayerPattern::Grbg => [G, R, B, G],
            BayerPattern::Gbrg => [G, B, R, G],
        }
    }

    /// Channel recorded by the sensor site at column `x`, row `y`.
    #[inline]
    pub fn channel_at(self, x: usize, y: usize) -> Channel {
        self.tile()[(y & 1) * 2 + (x & 1)]
    }

    /// Stable one-byte code used by the raw-bin container.
    pub fn code(self) -> u8 {
        match self {
            BayerPattern::Rggb => 0,
            BayerPattern::Bggr => 1,
            BayerPattern::Grbg => 2,
            BayerPattern::Gbrg => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.code() == code)
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BayerPattern::Rggb => "RGGB",
            BayerPattern::Bggr => "BGGR",
            BayerPattern::Grbg => "GRBG",
            BayerPattern::Gbrg => "GBRG",
        })
    }
}

impl FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RGGB" => Ok(BayerPattern::Rggb),
            "BGGR" => Ok(BayerPattern::Bggr),
            "GRBG" => Ok(BayerPattern::Grbg),
            "GBRG" => Ok(BayerPattern::Gbrg),
            other => Err(Error::Parameter(format!("unknown Bayer pattern `{other}`"))),
        }
    }
}

pub const MIN_BIT_DEPTH: u8 = 8;
pub const MAX_BIT_DEPTH: u8 = 24;

/// Largest code value at `bit_depth`, i.e. `2^bit_depth - 1`.
#[inline]
pub fn max_code(bit_depth: u8) -> u32 {
    ((1u64 << bit_depth) - 1) as u32
}

/// Maps a sample to its integer code: clamp to `[0, 1]`, scale, round half away from zero.
/// NaN maps to code 0.
#[inline]
pub fn quantize_sample<T: Scalar>(s: T, bit_depth: u8) -> u32 {
    let max = max_code(bit_depth);
    let s = s.as_f64();
    if s.is_nan() {
        return 0;
    }
    (s.clamp(0.0, 1.0) * max as f64).round() as u32
}

#[inline]
pub fn dequantize_sample<T: Scalar>(code: u32, bit_depth: u8) -> T {
    T::lit(code as f64 / max_code(bit_depth) as f64)
}

fn check_bit_depth(bit_depth: u8) -> Result<()> {
    if (MIN_BIT_DEPTH..=MAX_BIT_DEPTH).contains(&bit_depth) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "bit depth {bit_depth} outside [{MIN_BIT_DEPTH}, {MAX_BIT_DEPTH}]"
        )))
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "{width}x{height}: width and height must be even and at least 2"
        )));
    }
    Ok(())
}

/// Read access shared by [`RgbImage`] and [`BayerRaw`] so metrics can treat both uniformly.
pub trait ImageBuffer<T: Scalar> {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    fn samples(&self) -> &[T];

    /// Errors unless `other` has the same layout, so sample `i` of both refers to the same site.
    fn ensure_same_layout(&self, other: &Self) -> Result<()>;
}

/// Planar three-channel image: all R samples row-major, then G, then B.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> RgbImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = 3 * width * height;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "{width}x{height} RGB image needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Result<Self> {
        let n = width * height;
        let mut data = Vec::with_capacity(3 * n);
        for v in rgb {
            data.extend(std::iter::repeat_n(v, n));
        }
        Self::new(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        let mut data = vec![T::zero(); 3 * n];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                let i = y * width + x;
                data[i] = px[0];
                data[n + i] = px[1];
                data[2 * n + i] = px[2];
            }
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn plane(&self, c: Channel) -> &[T] {
        let n = self.pixel_count();
        &self.data[c.index() * n..(c.index() + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: Channel, x: usize, y: usize) -> T {
        self.data[c.index() * self.pixel_count() + y * self.width + x]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        self.pixel_at(y * self.width + x)
    }

    /// Pixel by linear (row-major) index.
    #[inline]
    pub fn pixel_at(&self, i: usize) -> [T; 3] {
        let n = self.pixel_count();
        [self.data[i], self.data[n + i], self.data[2 * n + i]]
    }

    /// Applies `f` to every pixel's RGB triple.
    pub fn map_pixels(&self, mut f: impl FnMut([T; 3]) -> [T; 3]) -> Self {
        let n = self.pixel_count();
        let mut data = vec![T::zero(); 3 * n];
        for i in 0..n {
            let out = f(self.pixel_at(i));
            data[i] = out[0];
            data[n + i] = out[1];
            data[2 * n + i] = out[2];
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Applies `f` to every sample independently of its channel.
    pub fn map_samples(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Every sample clamped to `[0, 1]`; NaN becomes 0.
    pub fn clamped(&self) -> Self {
        self.map_samples(clamp_unit)
    }

    /// The image as it would read back from a file at `bit_depth`.
    pub fn quantized(&self, bit_depth: u8) -> Self {
        self.map_samples(|s| dequantize_sample(quantize_sample(s, bit_depth), bit_depth))
    }

    pub fn cast<U: Scalar>(&self) -> RgbImage<U> {
        RgbImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&s| U::lit(s.as_f64())).collect(),
        }
    }
}

impl<T: Scalar> ImageBuffer<T> for RgbImage<T> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        3
    }
    fn samples(&self) -> &[T] {
        &self.data
    }
    fn ensure_same_layout(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn clamp_unit<T: Scalar>(s: T) -> T {
    if s.is_nan() {
        T::zero()
    } else {
        s.max(T::zero()).min(T::one())
    }
}

/// Single-channel mosaiced sensor frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BayerRaw<T> {
    width: usize,
    height: usize,
    pattern: BayerPattern,
    bit_depth: u8,
    data: Vec<T>,
}

impl<T: Scalar> BayerRaw<T> {
    pub fn new(width: usize, height: usize, pattern: BayerPattern, bit_depth: u8, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        check_bit_depth(bit_depth)?;
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} raw frame needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pattern,
            bit_depth,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, pattern: BayerPattern, bit_depth: u8, value: T) -> Result<Self> {
        Self::new(width, height, pattern, bit_depth, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pattern(&self) -> BayerPattern {
        self.pattern
    }

    #[inline]
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn channel_at(&self, x: usize, y: usize) -> Channel {
        self.pattern.channel_at(x, y)
    }

    pub fn with_bit_depth(mut self, bit_depth: u8) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        self.bit_depth = bit_depth;
        Ok(self)
    }

    pub fn clamped(&self) -> Self {
        Self {
            data: self.data.iter().map(|&s| clamp_unit(s)).collect(),
            ..self.clone()
        }
    }

    /// Integer code values at the frame's own bit depth.
    pub fn codes(&self) -> Vec<u32> {
        self.data.iter().map(|&s| quantize_sample(s, self.bit_depth)).collect()
    }

    /// Snaps every sample to the nearest representable code at the frame's bit depth.
    pub fn quantized(&self) -> Self {
        let bd = self.bit_depth;
        Self {
            data: self
                .data
                .iter()
                .map(|&s| dequantize_sample(quantize_sample(s, bd), bd))
                .collect(),
            ..self.clone()
        }
    }
}

impl<T: Scalar> ImageBuffer<T> for BayerRaw<T> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        1
    }
    fn samples(&self) -> &[T] {
        &self.data
    }
    fn ensure_same_layout(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        if self.pattern != other.pattern {
            return Err(Error::Shape(format!(
                "Bayer pattern {} vs {}",
                self.pattern, other.pattern
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_sites() {
        assert_eq!(BayerPattern::Rggb.channel_at(0, 0), Channel::R);
        assert_eq!(BayerPattern::Rggb.channel_at(1, 0), Channel::G);
        assert_eq!(BayerPattern::Rggb.channel_at(0, 1), Channel::G);
        assert_eq!(BayerPattern::Rggb.channel_at(1, 1), Channel::B);
        assert_eq!(BayerPattern::Gbrg.channel_at(2, 3), Channel::R);
        for p in BayerPattern::ALL {
            assert_eq!(BayerPattern::from_code(p.code()), Some(p));
            assert_eq!(p.to_string().parse::<BayerPattern>().unwrap(), p);
        }
        assert!("RGBG".parse::<BayerPattern>().is_err());
    }

    #[test]
    fn rejects_odd_or_tiny_dimensions() {
        assert!(RgbImage::<f64>::filled(3, 2, [0.0; 3]).is_err());
        assert!(RgbImage::<f64>::filled(0, 0, [0.0; 3]).is_err());
        assert!(RgbImage::<f64>::new(2, 2, vec![0.0; 11]).is_err());
        assert!(BayerRaw::<f64>::filled(4, 5, BayerPattern::Rggb, 12, 0.0).is_err());
        assert!(BayerRaw::<f64>::filled(4, 4, BayerPattern::Rggb, 7, 0.0).is_err());
        assert!(BayerRaw::<f64>::filled(4, 4, BayerPattern::Rggb, 25, 0.0).is_err());
    }

    #[test]
    fn planar_layout() {
        let img = RgbImage::<f64>::from_fn(2, 2, |x, y| [x as f64, y as f64, 7.0]).unwrap();
        assert_eq!(
            img.data(),
            &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 7.0, 7.0, 7.0, 7.0]
        );
        assert_eq!(img.pixel(1, 1), [1.0, 1.0, 7.0]);
        assert_eq!(img.get(Channel::G, 0, 1), 1.0);
    }

    #[test]
    fn clamp_handles_nan_and_range() {
        let img = RgbImage::<f64>::new(
            2,
            2,
            vec![-1.0, 2.0, f64::NAN, 0.5, 0.0, 1.0, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let c = img.clamped();
        assert_eq!(&c.data()[..4], &[0.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn quantization_is_idempotent_at_every_depth() {
        for bd in MIN_BIT_DEPTH..=MAX_BIT_DEPTH {
            for &s in &[0.0, 1e-7, 0.1, 1.0 / 3.0, 0.5, 0.999_999, 1.0] {
                let code = quantize_sample(s, bd);
                let back: f64 = dequantize_sample(code, bd);
                assert_eq!(quantize_sample(back, bd), code);
                let back32: f32 = dequantize_sample(code, bd);
                assert_eq!(quantize_sample(back32, bd), code, "f32 at {bd} bits");
            }
        }
        assert_eq!(quantize_sample(4.0, 12), 4095);
        assert_eq!(quantize_sample(-4.0, 12), 0);
        assert_eq!(quantize_sample(f64::NAN, 12), 0);
    }
}
