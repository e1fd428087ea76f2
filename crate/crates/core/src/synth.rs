//! Procedural sRGB content and teacher-generated training pairs.
//!
//! Three image families keep fitting designs full rank: linear gradients, random color
//! patches and band-limited noise. Every image is a pure function of `(seed, index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imaging::{BayerRaw, RgbImage};
use crate::isp::{isp_inverse, isp_inverse_rgb, IspParams};
use crate::lccm::ImagePair;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Gradient,
    Patches,
    Noise,
}

impl Family {
    pub fn for_index(index: u64) -> Self {
        match index % 3 {
            0 => Family::Gradient,
            1 => Family::Patches,
            _ => Family::Noise,
        }
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gradient<T: Scalar>(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Result<RgbImage<T>> {
    let mut ramps = [(0.0, 0.0, 0.0, 0.0); 3];
    for r in ramps.iter_mut() {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        *r = (
            theta.cos(),
            theta.sin(),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
    }
    RgbImage::from_fn(w, h, |x, y| {
        let u = x as f64 / (w - 1) as f64;
        let v = y as f64 / (h - 1) as f64;
        ramps.map(|(cx, cy, lo, hi)| {
            // projection onto the ramp direction, rescaled to [0, 1] over the frame
            let span = cx.abs() + cy.abs();
            let t = (cx * u + cy * v - cx.min(0.0) - cy.min(0.0)) / span;
            T::lit(lo + (hi - lo) * t)
        })
    })
}

fn patches<T: Scalar>(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Result<RgbImage<T>> {
    let cells_x = rng.gen_range(2..=4usize);
    let cells_y = rng.gen_range(2..=4usize);
    let colors: Vec<[f64; 3]> = (0..cells_x * cells_y)
        .map(|_| {
            [
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
            ]
        })
        .collect();
    RgbImage::from_fn(w, h, |x, y| {
        let cx = (x * cells_x / w).min(cells_x - 1);
        let cy = (y * cells_y / h).min(cells_y - 1);
        colors[cy * cells_x + cx].map(T::lit)
    })
}

fn noise<T: Scalar>(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Result<RgbImage<T>> {
    const GRID: usize = 5;
    let lattice: Vec<[f64; 3]> = (0..GRID * GRID)
        .map(|_| {
            [
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.0..=1.0),
            ]
        })
        .collect();
    RgbImage::from_fn(w, h, |x, y| {
        let gx = x as f64 / (w - 1) as f64 * (GRID - 1) as f64;
        let gy = y as f64 / (h - 1) as f64 * (GRID - 1) as f64;
        let (x0, y0) = ((gx.floor() as usize).min(GRID - 2), (gy.floor() as usize).min(GRID - 2));
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        let at = |i: usize, j: usize| lattice[j * GRID + i];
        let mut out = [T::zero(); 3];
        for c in 0..3 {
            let top = at(x0, y0)[c] * (1.0 - fx) + at(x0 + 1, y0)[c] * fx;
            let bottom = at(x0, y0 + 1)[c] * (1.0 - fx) + at(x0 + 1, y0 + 1)[c] * fx;
            out[c] = T::lit(top * (1.0 - fy) + bottom * fy);
        }
        out
    })
}

pub fn synthetic_image<T: Scalar>(
    family: Family,
    width: usize,
    height: usize,
    seed: u64,
    index: u64,
) -> Result<RgbImage<T>> {
    let mut rng = rng_for(seed, index);
    match family {
        Family::Gradient => gradient(width, height, &mut rng),
        Family::Patches => patches(width, height, &mut rng),
        Family::Noise => noise(width, height, &mut rng),
    }
}

/// The `index`-th procedural sRGB image for `seed`, cycling through the three families.
pub fn synthetic_srgb<T: Scalar>(width: usize, height: usize, seed: u64, index: u64) -> Result<RgbImage<T>> {
    synthetic_image(Family::for_index(index), width, height, seed, index)
}

/// Source image paired with the teacher's unclamped RGB-domain inverse.
pub fn teacher_pair<T: Scalar>(srgb: RgbImage<T>, params: &IspParams<T>) -> Result<ImagePair<T>> {
    let target = isp_inverse_rgb(&srgb, params)?;
    ImagePair::new(srgb, target)
}

/// `count` teacher pairs for images `first_index..first_index + count`.
pub fn teacher_dataset<T: Scalar>(
    params: &IspParams<T>,
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
    first_index: u64,
) -> Result<Vec<ImagePair<T>>> {
    (0..count as u64)
        .map(|k| teacher_pair(synthetic_srgb(width, height, seed, first_index + k)?, params))
        .collect()
}

/// A band-limited, low-saturation scene pushed through the teacher's inverse: a raw frame
/// that `isp_forward` maps back into `[0, 1]` without clipping.
pub fn smooth_raw<T: Scalar>(params: &IspParams<T>, width: usize, height: usize, seed: u64) -> Result<BayerRaw<T>> {
    let base: RgbImage<T> = synthetic_image(Family::Noise, width, height, seed, 0)?;
    let (lo, span, chroma) = (T::lit(0.15), T::lit(0.7), T::lit(0.1));
    let third = T::lit(1.0 / 3.0);
    let scene = base.map_pixels(|p| {
        let luma = (p[0] + p[1] + p[2]) * third;
        p.map(|c| lo + span * luma + chroma * (c - luma))
    });
    isp_inverse(&scene, params)
}
