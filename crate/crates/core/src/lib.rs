//! Day/night vehicle type recognition toolkit.
//!
//! A two-stage classifier: an intensity-histogram gate decides whether a
//! vehicle crop was captured by day or by night, then a per-regime
//! one-vs-rest linear SVM assigns a vehicle type from CENTROG descriptors
//! (HOG computed over the census transform of an edge map). Supporting
//! pieces cover Gaussian mixture background subtraction for isolating
//! moving vehicles and ROC/AUC evaluation.

pub mod bgseg;
pub mod census;
pub mod error;
pub mod eval;
pub mod features;
pub mod hog;
pub mod image;
pub mod par;
pub mod pipeline;
pub mod pnm;
pub mod svm;

pub use error::{Error, Result};
pub use image::{Descriptor, DescriptorKind, GrayImage, RgbImage};
pub use par::Parallelism;
