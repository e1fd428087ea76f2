use super::{Channel, RgbImage};
use crate::scalar::Scalar;

pub const HISTOGRAM_BINS: usize = 256;

/// Slightly under 256 so that a sample of exactly 1.0 lands in the last bin.
const BIN_SCALE: f64 = 255.999_999;

/// 256-bin intensity histogram of one channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub channel: Channel,
    pub bins: [u64; HISTOGRAM_BINS],
    pub total: u64,
}

impl Histogram {
    /// Bin index for one sample; out-of-range samples land in the end bins, NaN in bin 0.
    #[inline]
    pub fn bin_index<T: Scalar>(s: T) -> usize {
        let v = (s.as_f64() * BIN_SCALE).floor();
        if v.is_nan() || v < 0.0 {
            0
        } else {
            (v as usize).min(HISTOGRAM_BINS - 1)
        }
    }

    /// Occurrence rate per bin. An empty histogram yields all zeros.
    pub fn frequencies(&self) -> [f64; HISTOGRAM_BINS] {
        let mut out = [0.0; HISTOGRAM_BINS];
        if self.total == 0 {
            return out;
        }
        let total = self.total as f64;
        for (o, &b) in out.iter_mut().zip(&self.bins) {
            *o = b as f64 / total;
        }
        out
    }
}

pub fn histogram<T: Scalar>(img: &RgbImage<T>, channel: Channel) -> Histogram {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for &s in img.plane(channel) {
        bins[Histogram::bin_index(s)] += 1;
    }
    Histogram {
        channel,
        bins,
        total: img.pixel_count() as u64,
    }
}
