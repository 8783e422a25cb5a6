//! Ensemble PCA toolkit: bootstrap-aggregated PCA with uncertainty bands,
//! plus classical PCA and a Robust PCA baseline, noise injection, dataset
//! I/O and an evaluation harness for method comparison.

pub mod dataio;
pub mod epca;
pub mod error;
pub mod eval;
pub mod kmeans;
pub mod linalg;
pub mod noise;
pub mod pca;
pub mod rpca;
pub mod seed;

pub use crate::epca::{fit_epca, EpcaConfig, EpcaDiagnostics, EpcaModel};
pub use crate::error::{Error, Result};
pub use crate::linalg::DataMatrix;
pub use crate::noise::{NoiseKind, NoiseSpec};
pub use crate::pca::{fit_pca, PcaModel};
pub use crate::rpca::{rpca_ialm, RpcaConfig, RpcaResult};
