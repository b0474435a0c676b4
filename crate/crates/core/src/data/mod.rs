//! Dataset ingestion and spike encoding for the Split-MNIST benchmark.

mod encode;
mod idx;
mod image;
mod stream;

pub use encode::{encode_poisson, SampleKey};
pub use idx::{load_idx_images, load_idx_labels, load_mnist, Mnist, MnistSplit};
pub use image::{rescale, rescale_16};
pub use stream::{build_stream, Task, TaskStream, TASK_PAIRS};
