//! Observational statistics over labeled users: bootstrap distributions of
//! means, Tukey HSD across age groups, gender calling probabilities and
//! age-homophily matrices.

mod bootstrap;
mod gender;
mod homophily;
pub mod studentized;
mod tukey;

pub use bootstrap::{bootstrap_means, percentile_range};
pub use gender::{gender_conditionals, GenderConditionals};
pub use homophily::{
    default_log_floor, homophily_matrices, homophily_matrices_with, log_difference, write_delta_csv,
    write_matrix_csv, AgeRegression, HomophilyReport, SquareMatrix,
};
pub use studentized::{ptukey, qtukey};
pub use tukey::{tukey_hsd, TukeyPair, TukeyResult};
