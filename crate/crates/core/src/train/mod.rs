//! Optimisation: loss, Adam, schedule, gradient checking and the training loop.

mod adam;
mod config;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use config::{lr_at, TrainConfig};
pub use gradcheck::{
    analytic_gradients, compare_gradients, find_probe, grad_check, grad_check_with, random_probe, rel_error, GradCheck,
    GradCheckOptions, REL_ERROR_FLOOR,
};
pub use loss::mse_loss;
pub use trainer::{checkpoint_name, train, EvalPoint, TrainOutcome, Trainer};
