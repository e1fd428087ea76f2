//! Learnable color correction matrix: a single affine 3x3 + bias transform fitted to map
//! sRGB images onto RGB-domain simRAW targets.

mod fit;
mod loss;
mod lstsq;
mod matrix;

pub use fit::{
    fit, FitConfig, FitReport, Init, Optimizer, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, DEFAULT_BATCH, DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE, DIVERGENCE_FACTOR,
};
pub use loss::{dataset_loss, gradients, loss_and_gradients, mse_loss, Gradients, ImagePair};
pub use lstsq::solve_least_squares;
pub use matrix::{apply, flop_estimate, param_count, ColorMatrix, FlopConvention, PARAM_COUNT};
