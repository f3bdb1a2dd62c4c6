//! Self-contained learning primitives used by the digital twins: a gated
//! recurrent sequence predictor, a linear autoencoder, tabular double
//! Q-learning, and k-means++ clustering.

pub mod autoencoder;
pub mod kmeans;
pub mod predictor;
pub mod qagent;
pub mod snapshot;

pub use autoencoder::{Autoencoder, AutoencoderHyper};
pub use kmeans::{adjusted_rand_index, kmeans_cluster, kmeanspp_seed, Clustering};
pub use predictor::{PredictorHyper, SequencePredictor};
pub use qagent::QAgent;
