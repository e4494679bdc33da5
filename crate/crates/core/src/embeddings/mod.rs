//! Bilinear embedding model, its trainer, embedding similarities and the
//! time-dependent reusability built on them.

mod io;
mod model;
mod reuse;
mod split;
mod train;

pub use io::{
    load_model, read_embeddings, save_model, write_embeddings, ITEM_EMBEDDINGS_FILE, MODEL_PARAMS_FILE,
    USER_EMBEDDINGS_FILE,
};
pub use model::{embed_sim, EmbeddingModel, EMBEDDING_DIM};
pub use reuse::{neuknn_reusability, neuknn_reusability_row, ItemEmbeddingSimilarity, UserEmbeddingSimilarity};
pub use split::{embedding_eval_splits, EmbeddingEvalSplit, NUM_SUBSETS};
pub use train::{batch_gradient, batch_loss, init_model, train, train_with_report, Gradient, TrainConfig, TrainReport};
