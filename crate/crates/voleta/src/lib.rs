//! Deterministic core of a food-volume estimation pipeline built around
//! RGBD captures, externally reconstructed meshes, and a reference object
//! of known size.
//!
//! The crate covers four concerns:
//!
//! 1. **Keyframe curation** ([`frames`]): reject near-duplicate frames via a
//!    64-bit DCT perceptual hash with Hamming thresholding, and defocused
//!    frames via FFT high-frequency energy differencing against Gaussian
//!    blurred variants.
//! 2. **Mesh processing** ([`meshkit`]): OBJ/PLY ingestion, connected-component
//!    cleanup of isolated pieces, divergence-theorem volume, uniform scaling.
//! 3. **Metric scale recovery** ([`metrology`]): scaling factor from measured
//!    reference-block lengths, pixel-per-unit ratio, depth-derived food height
//!    and potential volume, tolerance-gated scale fine-tuning.
//! 4. **Evaluation** ([`evalreg`]): area-weighted surface sampling, exact
//!    nearest-neighbor queries through a k-d tree, point-to-point ICP
//!    registration, symmetric Chamfer distance, and MAPE.
//!
//! [`sceneio`] ingests scene directories (RGB frames, depth maps, masks,
//! metadata, mesh files) into typed records, and [`pipeline`] orchestrates the
//! per-scene flow and emits CSV/JSON reports. The `voleta` binary exposes each
//! stage as a CLI subcommand.

// negated float comparisons like `!(x > 0.0)` are deliberate: they treat
// NaN as invalid input instead of letting it slip through `x <= 0.0`
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod evalreg;
pub mod frames;
pub mod meshkit;
pub mod metrology;
pub mod pipeline;
pub mod sceneio;
