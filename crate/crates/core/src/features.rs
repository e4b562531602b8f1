//! Descriptor extraction specs: which descriptor, and the geometry and
//! parameters it is computed with.

use std::fmt;

use crate::census::centrist_of;
use crate::error::{Error, Result};
use crate::hog::{centrog, EdgeParams, HogLayout, HogParams};
use crate::image::{intensity_histogram, resize_bilinear, Descriptor, DescriptorKind, GrayImage};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureSpec {
    /// Normalized intensity histogram of the whole crop.
    Histogram { bins: usize },
    /// Normalized CENTRIST of the crop resized to `width`x`height`.
    Centrist { width: usize, height: usize },
    /// CENTROG of the crop resized to `width`x`height`.
    Centrog {
        width: usize,
        height: usize,
        edge: EdgeParams,
        hog: HogParams,
    },
}

impl FeatureSpec {
    pub fn histogram() -> Self {
        FeatureSpec::Histogram { bins: 256 }
    }

    /// CENTRIST on a 64x64 crop.
    pub fn centrist() -> Self {
        FeatureSpec::Centrist {
            width: 64,
            height: 64,
        }
    }

    /// CENTROG on a 68x68 crop, so HOG sees exactly 64x64 after the edge
    /// and census ring trims.
    pub fn centrog() -> Self {
        FeatureSpec::Centrog {
            width: 68,
            height: 68,
            edge: EdgeParams::default(),
            hog: HogParams::default(),
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        match self {
            FeatureSpec::Histogram { .. } => DescriptorKind::IntensityHistogram,
            FeatureSpec::Centrist { .. } => DescriptorKind::Centrist,
            FeatureSpec::Centrog { .. } => DescriptorKind::Centrog,
        }
    }

    /// Fails when the spec cannot produce a descriptor.
    pub fn validate(&self) -> Result<()> {
        self.descriptor_len().map(|_| ())
    }

    pub fn descriptor_len(&self) -> Result<usize> {
        match *self {
            FeatureSpec::Histogram { bins } => {
                if bins == 0 || bins > 256 || 256 % bins != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "histogram bins must divide 256, got {bins}"
                    )));
                }
                Ok(bins)
            }
            FeatureSpec::Centrist { width, height } => {
                if width < 3 || height < 3 {
                    return Err(Error::TooSmall(format!(
                        "CENTRIST crop {width}x{height} is under 3x3"
                    )));
                }
                Ok(256)
            }
            FeatureSpec::Centrog {
                width,
                height,
                edge,
                hog,
            } => {
                edge.validate()?;
                if width < 5 || height < 5 {
                    return Err(Error::TooSmall(format!(
                        "CENTROG crop {width}x{height} is under 5x5"
                    )));
                }
                Ok(HogLayout::new(width - 4, height - 4, &hog)?.descriptor_len())
            }
        }
    }

    pub fn extract(&self, img: &GrayImage) -> Result<Descriptor> {
        match self {
            FeatureSpec::Histogram { bins } => intensity_histogram(img, *bins, true),
            FeatureSpec::Centrist { width, height } => {
                centrist_of(&resize_bilinear(img, *width, *height)?, true)
            }
            FeatureSpec::Centrog {
                width,
                height,
                edge,
                hog,
            } => centrog(&resize_bilinear(img, *width, *height)?, edge, hog),
        }
    }

    /// Extracts descriptors for every image, in input order.
    pub fn extract_batch(&self, images: &[&GrayImage], mode: Parallelism) -> Result<Vec<Descriptor>> {
        par::map(mode, images, |img| self.extract(img))
            .into_iter()
            .collect()
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSpec::Histogram { bins } => write!(f, "histogram(bins={bins})"),
            FeatureSpec::Centrist { width, height } => write!(f, "centrist({width}x{height})"),
            FeatureSpec::Centrog {
                width,
                height,
                edge,
                hog,
            } => write!(
                f,
                "centrog({width}x{height}, edge>={}, cell={}, block={}, stride={}, bins={}{})",
                edge.threshold,
                hog.cell_size,
                hog.block_size,
                hog.block_stride,
                hog.orientation_bins,
                if hog.signed_gradients { ", signed" } else { "" }
            ),
        }
    }
}
