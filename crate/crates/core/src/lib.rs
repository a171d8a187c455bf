//! Finite-volume simulator for a doubly degenerate nutrient-taxis system
//! with logistic source on rectangles, together with checks of the
//! a-priori estimates its solutions satisfy.

pub mod cli;
pub mod error;
pub mod grid;
pub mod inequalities;
pub mod model;
pub mod monitors;
pub mod ode_lemmas;
pub mod plot;
pub mod scenarios;
pub mod series;
pub mod stepper;
pub mod weakform;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D};
pub use model::{ModelParams, State};
