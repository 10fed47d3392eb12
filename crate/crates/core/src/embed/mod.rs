//! Embeddings into `L_p` spaces.

pub mod bourgain;
pub mod gauss;
pub mod pipeline;
pub mod poincare;
pub mod pstable;
pub mod star_lp;
pub mod vector;

pub use vector::{EmbedMode, VectorEmbedding};
