#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simraw::{BayerPattern, BayerRaw, ColorMatrix, RgbImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> RgbImage<f64> {
    RgbImage::new(w, h, (0..3 * w * h).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
}

pub fn random_raw(rng: &mut impl Rng, w: usize, h: usize, pattern: BayerPattern, bd: u8) -> BayerRaw<f64> {
    BayerRaw::new(
        w,
        h,
        pattern,
        bd,
        (0..w * h).map(|_| rng.gen_range(0.0..=1.0)).collect(),
    )
    .unwrap()
}

/// Diagonally dominant, so comfortably invertible.
pub fn random_matrix(rng: &mut impl Rng) -> ColorMatrix<f64> {
    let mut p = [0.0; 12];
    for v in p.iter_mut() {
        *v = rng.gen_range(-0.3..0.3);
    }
    p[0] += 1.0;
    p[4] += 1.0;
    p[8] += 1.0;
    ColorMatrix::from_params(p)
}
