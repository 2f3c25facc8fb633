//! Core library for primitive-assembly shape abstraction.
//!
//! Shapes are approximated by ordered lists of transformed primitives
//! (cuboids, elliptical cylinders, ellipsoids). This crate holds everything
//! that does not need a neural network: the primitive geometry and its
//! symmetry-aware canonical form, attribute discretization, the procedural
//! dataset generator with its on-disk format, and the evaluation metrics.

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod synthetic;
pub mod tokenization;

pub use error::{Error, Result};
pub use geometry::{Assembly, PointCloud, Primitive, PrimitiveClass};
pub use tokenization::{AttributeKind, Discretizer, SequenceSample, TokenizedPrimitive};
