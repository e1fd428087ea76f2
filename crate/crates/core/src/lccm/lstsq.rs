//! Closed-form affine least squares through the normal equations.

use super::loss::ImagePair;
use super::matrix::ColorMatrix;
use crate::error::{Error, Result};
use crate::scalar::{pairwise_reduce, Scalar};

// 10 unique entries of the symmetric 4x4 Gram matrix of (r, g, b, 1), then the 4x3 cross term.
const GRAM: usize = 10;
const ACC: usize = GRAM + 12;

#[inline]
fn gram_slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle of a 4x4
    [0, 4, 7, 9][i] + (j - i)
}

/// Solves `A X = B` for square `A` with partial pivoting. Returns the rank error
/// when a pivot falls below `tol`.
fn solve<T: Scalar, const N: usize, const M: usize>(
    mut a: [[T; N]; N],
    mut b: [[T; M]; N],
    tol: T,
) -> Result<[[T; M]; N]> {
    for col in 0..N {
        let pivot_row = (col..N)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let pivot = a[pivot_row][col];
        if !(pivot.abs() > tol) {
            return Err(Error::Rank(format!(
                "pivot {} in column {col} below tolerance {}",
                pivot.abs(),
                tol
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..N {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            for k in 0..M {
                b[row][k] = b[row][k] - f * b[col][k];
            }
        }
    }
    let mut x = [[T::zero(); M]; N];
    for row in (0..N).rev() {
        for k in 0..M {
            let mut s = b[row][k];
            for j in row + 1..N {
                s = s - a[row][j] * x[j][k];
            }
            x[row][k] = s / a[row][row];
        }
    }
    Ok(x)
}

/// The affine map minimizing the MSE between `apply(source)` and `target` over all pairs.
///
/// Builds the Gram matrix of the augmented input `(r, g, b, 1)` and solves the 4x4 normal
/// equations once per output channel. Designs without four linearly independent pixel
/// samples (constant images, gray-only images) are reported as rank errors.
pub fn solve_least_squares<T: Scalar>(pairs: &[ImagePair<T>]) -> Result<ColorMatrix<T>> {
    if pairs.is_empty() {
        return Err(Error::Input("least squares needs at least one pair".into()));
    }
    let mut partials: Vec<[T; ACC]> = Vec::new();
    for pair in pairs {
        let w = pair.source.width();
        for y in 0..pair.source.height() {
            let mut acc = [T::zero(); ACC];
            for x in 0..w {
                let i = y * w + x;
                let s = pair.source.pixel_at(i);
                let a = [s[0], s[1], s[2], T::one()];
                let t = pair.target.pixel_at(i);
                for p in 0..4 {
                    for q in p..4 {
                        let k = gram_slot(p, q);
                        acc[k] = acc[k] + a[p] * a[q];
                    }
                    for (c, &tc) in t.iter().enumerate() {
                        let k = GRAM + 3 * p + c;
                        acc[k] = acc[k] + a[p] * tc;
                    }
                }
            }
            partials.push(acc);
        }
    }
    let sums = pairwise_reduce(&partials);

    let mut gram = [[T::zero(); 4]; 4];
    let mut rhs = [[T::zero(); 3]; 4];
    for p in 0..4 {
        for q in 0..4 {
            gram[p][q] = sums[gram_slot(p, q)];
        }
        for c in 0..3 {
            rhs[p][c] = sums[GRAM + 3 * p + c];
        }
    }
    let scale = (0..4).map(|i| gram[i][i]).fold(T::zero(), T::max);
    let tol = scale * T::epsilon() * T::lit(4096.0);
    let x = solve(gram, rhs, tol)?;

    // x[p][c]: coefficient of augmented input p for output channel c
    let mut weights = [[T::zero(); 3]; 3];
    for (r, row) in weights.iter_mut().enumerate() {
        for (c, w) in row.iter_mut().enumerate() {
            *w = x[c][r];
        }
    }
    let m = ColorMatrix::new(weights, [x[3][0], x[3][1], x[3][2]]);
    if !m.is_finite() {
        return Err(Error::Rank("normal equations produced non-finite coefficients".into()));
    }
    Ok(m)
}
