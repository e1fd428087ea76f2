use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::RgbImage;
use crate::scalar::Scalar;

/// Number of learnable scalars: 9 weights and 3 biases.
pub const PARAM_COUNT: usize = 12;

/// Affine color transform `out = weights · in + bias`, equivalent to a 3-in/3-out 1x1 convolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorMatrix<T> {
    /// `weights[row][col]`: contribution of input channel `col` to output channel `row`.
    pub weights: [[T; 3]; 3],
    pub bias: [T; 3],
}

impl<T: Scalar> Default for ColorMatrix<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Scalar> ColorMatrix<T> {
    pub fn new(weights: [[T; 3]; 3], bias: [T; 3]) -> Self {
        Self { weights, bias }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::new([[o, z, z], [z, o, z], [z, z, o]], [z; 3])
    }

    pub fn zeros() -> Self {
        Self::new([[T::zero(); 3]; 3], [T::zero(); 3])
    }

    pub fn diagonal(d: [T; 3]) -> Self {
        let z = T::zero();
        Self::new([[d[0], z, z], [z, d[1], z], [z, z, d[2]]], [z; 3])
    }

    /// Row-major weights followed by the bias.
    pub fn from_params(p: [T; PARAM_COUNT]) -> Self {
        Self::new(
            [[p[0], p[1], p[2]], [p[3], p[4], p[5]], [p[6], p[7], p[8]]],
            [p[9], p[10], p[11]],
        )
    }

    pub fn params(&self) -> [T; PARAM_COUNT] {
        let w = &self.weights;
        let b = &self.bias;
        [
            w[0][0], w[0][1], w[0][2], w[1][0], w[1][1], w[1][2], w[2][0], w[2][1], w[2][2], b[0], b[1], b[2],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter("color matrix has non-finite entries".into()))
        }
    }

    #[inline]
    pub fn transform(&self, px: [T; 3]) -> [T; 3] {
        let w = &self.weights;
        let mut out = [T::zero(); 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = w[r][0] * px[0] + w[r][1] * px[1] + w[r][2] * px[2] + self.bias[r];
        }
        out
    }

    pub fn determinant(&self) -> T {
        let m = &self.weights;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse affine map: `in = W⁻¹ · (out − b)`. Fails when `|det W| <= 1e-9`.
    pub fn inverse(&self) -> Result<Self> {
        self.ensure_finite()?;
        let det = self.determinant();
        if !(det.abs() > T::lit(1e-9)) {
            return Err(Error::Singular { det: det.as_f64() });
        }
        let m = &self.weights;
        // adjugate / det
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut inv = [[T::zero(); 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = adj[r][c] / det;
            }
        }
        let lin = Self::new(inv, [T::zero(); 3]);
        let shifted = lin.transform(self.bias);
        Ok(Self::new(inv, [-shifted[0], -shifted[1], -shifted[2]]))
    }

    /// The affine map `outer ∘ self`: applies `self` first.
    pub fn then(&self, outer: &Self) -> Self {
        let mut w = [[T::zero(); 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                w[r][c] = (0..3).map(|k| outer.weights[r][k] * self.weights[k][c]).sum();
            }
        }
        let lin = Self::new(outer.weights, outer.bias);
        Self::new(w, lin.transform(self.bias))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.params()
            .iter()
            .zip(other.params())
            .map(|(&a, b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Scalar>(&self) -> ColorMatrix<U> {
        ColorMatrix::from_params(self.params().map(|p| U::lit(p.as_f64())))
    }

    /// Plain-text form: three weight rows then the bias row, shortest round-trip decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.weights.iter().chain(std::iter::once(&self.bias)) {
            let _ = writeln!(s, "{} {} {}", row[0], row[1], row[2]);
        }
        s
    }

    /// Parses 12 whitespace-separated decimals; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(PARAM_COUNT);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Format(format!("`{tok}` is not a number")))?;
                if !v.is_finite() {
                    return Err(Error::Format(format!("non-finite matrix entry `{tok}`")));
                }
                values.push(T::lit(v));
            }
        }
        let params: [T; PARAM_COUNT] = values
            .try_into()
            .map_err(|v: Vec<T>| Error::Format(format!("expected {PARAM_COUNT} values, found {}", v.len())))?;
        Ok(Self::from_params(params))
    }
}

/// Runs the matrix over every pixel. No clamping.
pub fn apply<T: Scalar>(img: &RgbImage<T>, m: &ColorMatrix<T>) -> Result<RgbImage<T>> {
    m.ensure_finite()?;
    Ok(img.map_pixels(|px| m.transform(px)))
}

pub fn param_count<T>(_m: &ColorMatrix<T>) -> usize {
    PARAM_COUNT
}

/// How arithmetic operations are counted per pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlopConvention {
    /// 9 multiplies, 9 accumulating adds, 3 bias adds: 21 per pixel.
    #[default]
    MulAdd,
    /// One per weight multiply-accumulate plus one per bias add: 12 per pixel.
    MultiplyAccumulate,
}

impl FlopConvention {
    pub fn per_pixel(self) -> u64 {
        match self {
            FlopConvention::MulAdd => 21,
            FlopConvention::MultiplyAccumulate => 12,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            FlopConvention::MulAdd => "9 multiplies + 9 adds + 3 bias adds = 21 FLOP/pixel",
            FlopConvention::MultiplyAccumulate => "9 multiply-accumulates + 3 bias adds = 12 FLOP/pixel",
        }
    }
}

pub fn flop_estimate(width: usize, height: usize, convention: FlopConvention) -> u64 {
    convention.per_pixel() * width as u64 * height as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ColorMatrix<f64> {
        ColorMatrix::new(
            [[1.2, -0.1, 0.05], [0.3, 0.9, -0.2], [-0.05, 0.15, 1.1]],
            [0.01, -0.02, 0.03],
        )
    }

    #[test]
    fn identity_and_bias_only() {
        let img = RgbImage::<f64>::from_fn(4, 4, |x, y| [x as f64 * 0.1, y as f64 * 0.2, 0.3]).unwrap();
        assert_eq!(apply(&img, &ColorMatrix::identity()).unwrap(), img);
        let c = ColorMatrix::new([[0.0; 3]; 3], [0.5; 3]);
        let out = apply(&img, &c).unwrap();
        assert!(out.data().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn non_finite_matrix_rejected() {
        let img = RgbImage::<f64>::filled(2, 2, [0.1; 3]).unwrap();
        let mut m = ColorMatrix::<f64>::identity();
        m.bias[1] = f64::NAN;
        assert!(matches!(apply(&img, &m), Err(Error::Parameter(_))));
    }

    #[test]
    fn inverse_round_trip() {
        let m = sample();
        let inv = m.inverse().unwrap();
        let id = m.then(&inv);
        assert!(id.max_abs_diff(&ColorMatrix::identity()) < 1e-14);
        let px = [0.2, 0.4, 0.7];
        let back = inv.transform(m.transform(px));
        for c in 0..3 {
            assert!((back[c] - px[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_fails_to_invert() {
        let m = ColorMatrix::<f64>::new([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 0.0]], [0.0; 3]);
        assert!(matches!(m.inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn composition_order() {
        let a = sample();
        let b = ColorMatrix::new([[0.5, 0.0, 0.1], [0.0, 2.0, 0.0], [0.3, 0.0, 1.0]], [0.1, 0.2, 0.3]);
        let px = [0.3, 0.6, 0.9];
        let lhs = a.then(&b).transform(px);
        let rhs = b.transform(a.transform(px));
        for c in 0..3 {
            assert!((lhs[c] - rhs[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = sample();
        let text = m.to_text();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(ColorMatrix::<f64>::from_text(&text).unwrap(), m);
        assert!(ColorMatrix::<f64>::from_text("1 2 3").is_err());
        assert!(ColorMatrix::<f64>::from_text("1 0 0 0 1 0 0 0 1 0 0 inf").is_err());
        assert!(ColorMatrix::<f64>::from_text("# header\n1 0 0\n0 1 0\n0 0 1\n0 0 0 # bias\n").is_ok());
    }

    #[test]
    fn accounting() {
        assert_eq!(param_count(&ColorMatrix::<f32>::identity()), 12);
        assert_eq!(flop_estimate(1, 1, FlopConvention::default()), 21);
        assert_eq!(flop_estimate(1280, 720, FlopConvention::MulAdd), 21 * 921_600);
        assert_eq!(flop_estimate(2, 3, FlopConvention::MultiplyAccumulate), 72);
    }
}
