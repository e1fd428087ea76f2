use super::matrix::ColorMatrix;
use crate::error::{Error, Result};
use crate::imaging::{ImageBuffer, RgbImage};
use crate::scalar::{pairwise_reduce, pairwise_sum, Scalar};

/// An sRGB input and the RGB-domain simRAW it should map to.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePair<T> {
    pub source: RgbImage<T>,
    pub target: RgbImage<T>,
}

impl<T: Scalar> ImagePair<T> {
    pub fn new(source: RgbImage<T>, target: RgbImage<T>) -> Result<Self> {
        source.ensure_same_layout(&target)?;
        Ok(Self { source, target })
    }

    /// Scalar samples contributed to the loss: 3 × pixels.
    pub fn sample_count(&self) -> usize {
        self.source.data().len()
    }
}

/// Mean squared error over every scalar sample (3 × W × H).
pub fn mse_loss<T: Scalar>(pred: &RgbImage<T>, target: &RgbImage<T>) -> Result<T> {
    pred.ensure_same_layout(target)?;
    Ok(mse_samples(pred.data(), target.data()))
}

pub(crate) fn mse_samples<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return T::zero();
    }
    let sq: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).collect();
    pairwise_sum(&sq) / T::from_usize_lossy(a.len())
}

/// `∂L/∂W` and `∂L/∂b` of the batch MSE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gradients<T> {
    pub weights: [[T; 3]; 3],
    pub bias: [T; 3],
}

impl<T: Scalar> Gradients<T> {
    /// Same ordering as [`ColorMatrix::params`].
    pub fn params(&self) -> [T; 12] {
        ColorMatrix::new(self.weights, self.bias).params()
    }
}

// per-row accumulator: 9 weight terms, 3 bias terms, 1 squared error
const ACC: usize = 13;

fn row_partials<T: Scalar>(pair: &ImagePair<T>, m: &ColorMatrix<T>, out: &mut Vec<[T; ACC]>) {
    let w = pair.source.width();
    for y in 0..pair.source.height() {
        let mut acc = [T::zero(); ACC];
        for x in 0..w {
            let i = y * w + x;
            let input = pair.source.pixel_at(i);
            let target = pair.target.pixel_at(i);
            let pred = m.transform(input);
            for r in 0..3 {
                let e = pred[r] - target[r];
                acc[3 * r] = acc[3 * r] + e * input[0];
                acc[3 * r + 1] = acc[3 * r + 1] + e * input[1];
                acc[3 * r + 2] = acc[3 * r + 2] + e * input[2];
                acc[9 + r] = acc[9 + r] + e;
                acc[12] = acc[12] + e * e;
            }
        }
        out.push(acc);
    }
}

/// Batch MSE and its gradient with respect to the 12 parameters. The loss averages
/// over every scalar sample of every pair in the batch.
pub fn loss_and_gradients<'a, T: Scalar>(
    batch: impl IntoIterator<Item = &'a ImagePair<T>>,
    m: &ColorMatrix<T>,
) -> Result<(T, Gradients<T>)> {
    let mut partials = Vec::new();
    let mut n = 0usize;
    for pair in batch {
        pair.source.ensure_same_layout(&pair.target)?;
        n += pair.sample_count();
        row_partials(pair, m, &mut partials);
    }
    if n == 0 {
        return Err(Error::Input("gradient of an empty batch".into()));
    }
    let total = pairwise_reduce(&partials);
    let n = T::from_usize_lossy(n);
    let scale = T::lit(2.0) / n;
    let mut weights = [[T::zero(); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            weights[r][c] = total[3 * r + c] * scale;
        }
    }
    let bias = [total[9] * scale, total[10] * scale, total[11] * scale];
    Ok((total[12] / n, Gradients { weights, bias }))
}

pub fn gradients<'a, T: Scalar>(
    batch: impl IntoIterator<Item = &'a ImagePair<T>>,
    m: &ColorMatrix<T>,
) -> Result<Gradients<T>> {
    loss_and_gradients(batch, m).map(|(_, g)| g)
}

/// MSE of `m` over a whole dataset, averaged over all samples of all pairs.
pub fn dataset_loss<T: Scalar>(pairs: &[ImagePair<T>], m: &ColorMatrix<T>) -> Result<T> {
    let mut partials = Vec::new();
    let mut n = 0usize;
    for pair in pairs {
        n += pair.sample_count();
        let w = pair.source.width();
        for y in 0..pair.source.height() {
            let mut acc = T::zero();
            for x in 0..w {
                let i = y * w + x;
                let pred = m.transform(pair.source.pixel_at(i));
                let target = pair.target.pixel_at(i);
                for r in 0..3 {
                    let e = pred[r] - target[r];
                    acc = acc + e * e;
                }
            }
            partials.push(acc);
        }
    }
    if n == 0 {
        return Err(Error::Input("loss of an empty dataset".into()));
    }
    Ok(pairwise_sum(&partials) / T::from_usize_lossy(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lccm::apply;

    fn img(seed: u64) -> RgbImage<f64> {
        // small deterministic pattern, no RNG needed
        let s = seed as f64;
        RgbImage::from_fn(4, 4, |x, y| {
            let t = (x * 7 + y * 3) as f64 + s;
            [
                (t * 0.37).sin().abs(),
                (t * 0.71).cos().abs(),
                ((t + 1.0) * 0.13).fract(),
            ]
        })
        .unwrap()
    }

    #[test]
    fn mse_closed_forms() {
        let a = img(1);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        let ones = RgbImage::<f64>::filled(4, 2, [1.0; 3]).unwrap();
        let zeros = RgbImage::<f64>::filled(4, 2, [0.0; 3]).unwrap();
        assert_eq!(mse_loss(&ones, &zeros).unwrap(), 1.0);
        assert!(matches!(mse_loss(&a, &ones), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let m = ColorMatrix::new([[0.9, 0.1, 0.0], [0.0, 1.1, -0.1], [0.2, 0.0, 0.8]], [0.01, 0.0, -0.02]);
        let src = img(2);
        let pair = ImagePair::new(src.clone(), apply(&src, &m).unwrap()).unwrap();
        let (loss, g) = loss_and_gradients([&pair], &m).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.params().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_hand_derived() {
        // One 2x2 image whose four pixels are identical reduces to the single-pixel case.
        // input x = (0.5, 0.25, 1.0), target t = (0.1, 0.2, 0.3), identity matrix:
        // e = x - t = (0.4, 0.05, 0.7), n = 12 samples over 4 identical pixels,
        // dL/dW[r][c] = (2/12) * 4 * e_r * x_c = (2/3) e_r x_c, dL/db[r] = (2/3) e_r.
        let src = RgbImage::<f64>::filled(2, 2, [0.5, 0.25, 1.0]).unwrap();
        let tgt = RgbImage::<f64>::filled(2, 2, [0.1, 0.2, 0.3]).unwrap();
        let pair = ImagePair::new(src, tgt).unwrap();
        let (loss, g) = loss_and_gradients([&pair], &ColorMatrix::identity()).unwrap();
        let e = [0.4, 0.05, 0.7];
        let x = [0.5, 0.25, 1.0];
        assert!((loss - (0.16 + 0.0025 + 0.49) / 3.0).abs() < 1e-15);
        for r in 0..3 {
            for c in 0..3 {
                assert!((g.weights[r][c] - 2.0 / 3.0 * e[r] * x[c]).abs() < 1e-15);
            }
            assert!((g.bias[r] - 2.0 / 3.0 * e[r]).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_batch_is_an_input_error() {
        let empty: [&ImagePair<f64>; 0] = [];
        assert!(matches!(
            gradients(empty, &ColorMatrix::identity()),
            Err(Error::Input(_))
        ));
    }
}
