//! Segmentation evaluation built around Boundary IoU.
//!
//! The crate covers pairwise mask measures ([`measures`]), COCO-style
//! instance evaluation with Mask AP and Boundary AP ([`detection`]), panoptic
//! quality with Mask PQ and Boundary PQ ([`panoptic`]), seeded error
//! generators for pseudo-predictions ([`errorsim`]), and sensitivity sweeps
//! over those generators ([`sensitivity`]).

pub mod detection;
pub mod error;
pub mod errorsim;
pub mod mask;
pub mod measures;
pub mod panoptic;
pub mod rng;
pub mod sensitivity;
pub mod synthetic;

pub use error::{Error, Result};
pub use mask::{BinaryMask, PixelSet, Polygon, RleMask};
pub use measures::{MeasureConfig, MeasureKind, MeasureReport};
