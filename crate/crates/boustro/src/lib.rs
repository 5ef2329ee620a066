//! Boustrophedon (lawnmower) survey-path scoring and optimization over convex
//! polygons.
//!
//! The crate provides two scoring systems over the same transect geometry:
//!
//! * [`discrete_oracle`]: exact chord clipping and exact fitness. Ground truth.
//! * [`diffable`]: a temperature-controlled sigmoid relaxation of the same
//!   fitness, smooth in the transect angle and x-offset, with machine-precision
//!   derivatives via forward-mode dual numbers.
//!
//! On top of those sit [`optimize`] (grid search, momentum gradient ascent,
//! hybrid refinement, temperature schedules) and [`experiments`] (random
//! polygon corpus, discrete-vs-soft parity tables, score-surface sampling,
//! grid-vs-gradient-descent comparisons).
//!
//! All computation happens in a normalized "unit frame": the polygon's minimum
//! enclosing circle is scaled to radius 0.5 and centered on the origin, and
//! transects are vertical lines spanning y in [-0.5, 0.5]. [`geometry`] owns
//! the normalization and the mapping back to user coordinates.

pub mod autodiff;
pub mod diffable;
pub mod discrete_oracle;
pub mod experiments;
pub mod geometry;
pub mod optimize;
