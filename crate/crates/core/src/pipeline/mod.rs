//! End-to-end workflow behind the command-line front end.

mod evaluate;
mod fit;
mod generate;
mod layout;

pub use evaluate::{evaluate, EvalReport};
pub use fit::{all_case_inputs, load_or_build_dataset, source_digest, train, TrainReport};
pub use generate::{case_digest, generate, GenerateReport};
pub use layout::Layout;
