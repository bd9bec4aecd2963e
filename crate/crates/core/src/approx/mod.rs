//! Small function approximators with hand-written backpropagation.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gaussian::{GaussianPolicy, MAX_LOG_STD, MIN_LOG_STD};
pub use mlp::{Mlp, Workspace};

/// Global L2 norm clip; returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
