//! Fracture simulation stack.
//!
//! * [`grid`], [`geometry`], [`material`], [`rng`]: shared domain types.
//! * [`rulebased`]: the cheap tip-propagation surrogate with percolation failure.
//! * [`initcond`]: random initial fracture configurations.
//! * [`phasefield`]: the dynamic phase-field fracture solver.
//! * [`deck`]: textual input decks describing a simulation.
//! * [`dataset`]: sample records, shard container and unstructured ingestion.

pub mod deck;
pub mod dataset;
pub mod geometry;
pub mod grid;
pub mod initcond;
pub mod linalg;
pub mod material;
pub mod phasefield;
pub mod rng;
pub mod rulebased;

pub use geometry::{rasterize_config, FractureConfig, FractureSegment, Orientation};
pub use grid::{CartesianGrid, FieldKind, ScalarField, VectorField2};
pub use material::{MaterialRegistry, MaterialSpec};
pub use rng::SeededRng;
