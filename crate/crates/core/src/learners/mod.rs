//! Supervised learners: linear models, tree ensembles and an MLP.

pub mod dataset;
pub mod ensemble;
pub mod linear;
pub mod mlp;
pub mod model;
pub mod tree;

pub use dataset::{encode, Dataset, Labels, OneHotEncoding, Standardizer};
pub use ensemble::{GbtModel, TreeEnsemble, TreeKind, TreeParams};
pub use linear::{ridge_solve, LinearOptions, LinearTask, LogisticModel, LogisticObjective, RidgeModel};
pub use mlp::{init_mlp, MlpModel, MlpParams};
pub use model::{
    argmax, predict_linear, predict_tree_ensemble, train_linear, train_linear_with, train_mlp, train_tree_ensemble,
    ModelKind, ModelParams, TrainedModel,
};
pub use tree::{Node, SplitTest, Tree};
