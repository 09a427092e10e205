//! Dense linear algebra with analytic backward passes, Adam, and a
//! central-difference gradient oracle.

pub mod adam;
pub mod conv;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod lstm;
pub mod matrix;
pub mod param;
pub mod rng;

pub use adam::{adam_step, AdamConfig};
pub use conv::{Conv1d, ConvBank};
pub use gradcheck::{grad_check, Differentiable, GradCheckReport};
pub use layers::{
    affine_backward, affine_forward, dropout, sigmoid, softmax, softmax_cross_entropy, Activation,
    DropoutMask,
};
pub use lstm::{Lstm, LstmCache};
pub use matrix::Matrix;
pub use param::Param;
pub use rng::RngStream;
