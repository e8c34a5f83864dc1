pub mod activation;
pub mod conv;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod network;
pub mod tensor;
pub mod train;
pub mod upscale;

pub use activation::ActivationKind;
pub use conv::ConvParams;
pub use error::{Error, Result};
pub use network::{Mode, Network, NetworkSpec, Output, Preset};
pub use tensor::Tensor4;
