//! Fully connected classifier with batch normalization.
//!
//! Every hidden block is `dense -> batch norm -> ReLU`; the output block is a
//! plain dense layer producing one logit per class. Training minimizes
//! softmax cross-entropy with Adam. The network is generic over the float
//! type: training runs in `f32`, gradient verification in `f64`.

mod adam;
mod gradcheck;
mod matrix;
mod model_io;
mod network;
mod train;

pub use adam::{adam_step, OptimizerState};
pub use gradcheck::{
    compare_gradients, gradcheck_network, gradient_check, numeric_gradients, GRADCHECK_STEP,
    KINK_MARGIN,
};
pub use matrix::{Matrix, Scalar};
pub use model_io::{
    load_model, read_model, save_model, write_model, ModelFile, MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{
    argmax_label, init_network, predict, softmax_rows, BatchNorm, Dense, Gradients, HiddenBlock,
    Mode, Network, NetworkSpec,
};
pub use train::{train, TrainConfig, TrainReport};
