//! Skillscape: simulate students with latent skill-set profiles under
//! prerequisite hierarchies, convert their item responses to capability
//! scores, and recover the profile partition with several clustering
//! methods.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`hierarchy`] — prerequisite DAGs over skills and the profiles they
//!    admit.
//! 2. [`sim`] — Q-matrices, DINA/NIDA response models, response sampling.
//! 3. [`capability`] — per-skill sum scores and normalized capability
//!    scores in the unit hypercube.
//! 4. [`cluster`] — hierarchical clustering, k-means, empty k-means with
//!    several seeding schemes, and constrained (LCVQE-style) clustering.
//! 5. [`eval`] — adjusted Rand index and profile labeling.
//! 6. [`experiment`] — the full simulation grid, CSV results and SVG
//!    figures.

pub mod capability;
pub mod cluster;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod hierarchy;
pub mod seeds;
pub mod sim;

pub use error::{Error, Result};
pub use hierarchy::{Hierarchy, HierarchyKind, OrderTag, Profile, ProfileSet, SubsetMode};
pub use sim::{Cdm, DinaParams, ModelKind, NidaParams, QMatrix, ResponseMatrix};
