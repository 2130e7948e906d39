// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the grid math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod belief;
pub mod cli;
pub mod contour;
pub mod error;
pub mod grid;
pub mod human;
pub mod joint;
pub mod nav;
pub mod predict;
pub mod scenario;
pub mod solver;
