//! Quadrature and dense linear-algebra substrate.

pub mod cauchy;
pub mod fit;
pub mod grid;
pub mod nystrom;
pub mod quad;

pub use cauchy::{cauchy_transform, cauchy_transform_with};
pub use grid::{Contour, Grid, LegendreRule, Panel, SampledFunction};
pub use nystrom::{fredholm_det, nystrom_extend, nystrom_solve, NystromOperator};
