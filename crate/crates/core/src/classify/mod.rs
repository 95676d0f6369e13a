//! Attribute-based classifiers: binary and multinomial logistic regression
//! with L1/L2 penalties, fit by proximal gradient descent, plus
//! grid search over penalty, strength and feature count.

mod grid;
mod logistic;
pub mod optimizer;

pub use grid::{
    default_grid, grid, grid_search, rank_features, separation_scores, train_validation_split, GridEvaluation,
    GridPoint, GridResult,
};
pub use logistic::{
    argmax, binary_smooth_objective, multinomial_smooth_objective, predict, softmax, train_logistic,
    train_logistic_with, train_multinomial, train_multinomial_with, ClassifierModel, ModelKind, Penalty,
    PredictionSet, RegConfig, Trained,
};
pub use optimizer::{FitReport, OptimizerOptions};
