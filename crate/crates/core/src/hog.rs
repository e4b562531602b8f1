//! Gradients, histograms of oriented gradients, the Sobel edge map and the
//! CENTROG composition (HOG over the census transform of an edge map).

use crate::census::census_transform;
use crate::error::{Error, Result};
use crate::image::{quantize, Descriptor, DescriptorKind, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogParams {
    /// Pixels per cell side.
    pub cell_size: usize,
    /// Cells per block side.
    pub block_size: usize,
    /// Block step, in cells.
    pub block_stride: usize,
    pub orientation_bins: usize,
    /// Bins span [0, 360) when set, [0, 180) otherwise.
    pub signed_gradients: bool,
    pub l2_epsilon: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams {
            cell_size: 8,
            block_size: 2,
            block_stride: 1,
            orientation_bins: 9,
            signed_gradients: false,
            l2_epsilon: 1e-5,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.cell_size < 2 {
            return bad(format!("cell_size must be >= 2, got {}", self.cell_size));
        }
        if self.orientation_bins < 2 {
            return bad(format!(
                "orientation_bins must be >= 2, got {}",
                self.orientation_bins
            ));
        }
        if self.block_size < 1 || self.block_stride < 1 {
            return bad("block_size and block_stride must be >= 1".into());
        }
        if !(self.l2_epsilon > 0.0 && self.l2_epsilon.is_finite()) {
            return bad(format!("l2_epsilon must be positive, got {}", self.l2_epsilon));
        }
        Ok(())
    }

    fn orientation_range(&self) -> f64 {
        if self.signed_gradients {
            360.0
        } else {
            180.0
        }
    }
}

/// Cell and block counts of a HOG layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HogLayout {
    pub cells_x: usize,
    pub cells_y: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_len: usize,
}

impl HogLayout {
    pub fn new(width: usize, height: usize, p: &HogParams) -> Result<Self> {
        p.validate()?;
        let cells_x = width / p.cell_size;
        let cells_y = height / p.cell_size;
        if cells_x < p.block_size || cells_y < p.block_size {
            return Err(Error::TooSmall(format!(
                "{width}x{height} image holds no full {0}x{0} block of {1}px cells",
                p.block_size, p.cell_size
            )));
        }
        Ok(HogLayout {
            cells_x,
            cells_y,
            blocks_x: (cells_x - p.block_size) / p.block_stride + 1,
            blocks_y: (cells_y - p.block_size) / p.block_stride + 1,
            block_len: p.block_size * p.block_size * p.orientation_bins,
        })
    }

    pub fn descriptor_len(&self) -> usize {
        self.blocks_x * self.blocks_y * self.block_len
    }
}

/// Central-difference gradients over the interior of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    /// Degrees, in [0, 180) for unsigned fields or [0, 360) for signed.
    pub orientation: Vec<f64>,
    pub signed: bool,
}

impl GradientField {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.magnitude[i], self.orientation[i])
    }
}

fn fold_angle(deg: f64, range: f64) -> f64 {
    let a = deg.rem_euclid(range);
    if a >= range {
        0.0
    } else {
        a
    }
}

/// `[-1, 0, 1]` gradients; the outer ring of the source is excluded.
pub fn gradient_field(img: &GrayImage, signed: bool) -> Result<GradientField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!(
            "gradient needs at least 3x3, got {w}x{h}"
        )));
    }
    let range = if signed { 360.0 } else { 180.0 };
    let n = (w - 2) * (h - 2);
    let mut magnitude = Vec::with_capacity(n);
    let mut orientation = Vec::with_capacity(n);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = img.get(x + 1, y) as f64 - img.get(x - 1, y) as f64;
            let gy = img.get(x, y + 1) as f64 - img.get(x, y - 1) as f64;
            magnitude.push(gx.hypot(gy));
            orientation.push(if gx == 0.0 && gy == 0.0 {
                0.0
            } else {
                fold_angle(gy.atan2(gx).to_degrees(), range)
            });
        }
    }
    Ok(GradientField {
        width: w - 2,
        height: h - 2,
        magnitude,
        orientation,
        signed,
    })
}

/// Magnitude-weighted orientation histograms per cell, with trilinear
/// interpolation over (x, y, orientation). Returned row-major by cell, each
/// cell holding `orientation_bins` values. Bin k is centred on
/// `k * range / bins`, and orientation weights wrap around the range.
pub fn cell_histograms(img: &GrayImage, p: &HogParams) -> Result<(HogLayout, Vec<f64>)> {
    let layout = HogLayout::new(img.width(), img.height(), p)?;
    let field = gradient_field(img, p.signed_gradients)?;
    let bins = p.orientation_bins;
    let bin_width = p.orientation_range() / bins as f64;
    let cs = p.cell_size as f64;
    let (ncx, ncy) = (layout.cells_x as isize, layout.cells_y as isize);
    let mut hist = vec![0.0; layout.cells_x * layout.cells_y * bins];

    for iy in 0..field.height {
        // field pixel (ix, iy) is source pixel (ix + 1, iy + 1)
        let fy = (iy as f64 + 1.5) / cs - 0.5;
        let cy0 = fy.floor();
        let ty = fy - cy0;
        let cy0 = cy0 as isize;
        for ix in 0..field.width {
            let (mag, angle) = field.at(ix, iy);
            if mag == 0.0 {
                continue;
            }
            let fx = (ix as f64 + 1.5) / cs - 0.5;
            let cx0 = fx.floor();
            let tx = fx - cx0;
            let cx0 = cx0 as isize;

            let fo = angle / bin_width;
            let b0f = fo.floor();
            let to = fo - b0f;
            let b0 = (b0f as usize) % bins;
            let b1 = (b0 + 1) % bins;

            for (cy, wy) in [(cy0, 1.0 - ty), (cy0 + 1, ty)] {
                if cy < 0 || cy >= ncy || wy == 0.0 {
                    continue;
                }
                for (cx, wx) in [(cx0, 1.0 - tx), (cx0 + 1, tx)] {
                    if cx < 0 || cx >= ncx || wx == 0.0 {
                        continue;
                    }
                    let base = (cy as usize * layout.cells_x + cx as usize) * bins;
                    let v = mag * wx * wy;
                    hist[base + b0] += v * (1.0 - to);
                    hist[base + b1] += v * to;
                }
            }
        }
    }
    Ok((layout, hist))
}

/// HOG descriptor: block-concatenated cell histograms, each block scaled by
/// `1 / sqrt(|v|^2 + eps^2)`, blocks in row-major order.
pub fn hog_descriptor(img: &GrayImage, p: &HogParams) -> Result<Descriptor> {
    let (layout, cells) = cell_histograms(img, p)?;
    let bins = p.orientation_bins;
    let mut out = Vec::with_capacity(layout.descriptor_len());
    let mut block = Vec::with_capacity(layout.block_len);
    for by in 0..layout.blocks_y {
        for bx in 0..layout.blocks_x {
            block.clear();
            for j in 0..p.block_size {
                for i in 0..p.block_size {
                    let cy = by * p.block_stride + j;
                    let cx = bx * p.block_stride + i;
                    let base = (cy * layout.cells_x + cx) * bins;
                    block.extend_from_slice(&cells[base..base + bins]);
                }
            }
            let norm_sq: f64 = block.iter().map(|v| v * v).sum();
            let scale = 1.0 / (norm_sq + p.l2_epsilon * p.l2_epsilon).sqrt();
            out.extend(block.iter().map(|v| v * scale));
        }
    }
    debug_assert_eq!(out.len(), layout.descriptor_len());
    Ok(Descriptor::new(out, DescriptorKind::Hog))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMethod {
    SobelMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeParams {
    /// Responses below this are zeroed. Must be in [0, 255].
    pub threshold: u16,
    pub method: EdgeMethod,
}

impl Default for EdgeParams {
    fn default() -> Self {
        EdgeParams {
            threshold: 40,
            method: EdgeMethod::SobelMagnitude,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        if self.threshold > 255 {
            return Err(Error::InvalidParameter(format!(
                "edge threshold must be in [0, 255], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Thresholded Sobel magnitude over the interior of `img`.
pub fn edge_map(img: &GrayImage, p: &EdgeParams) -> Result<GrayImage> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!(
            "edge map needs at least 3x3, got {w}x{h}"
        )));
    }
    let threshold = p.threshold as u8;
    GrayImage::from_fn(w - 2, h - 2, |ox, oy| {
        let (x, y) = (ox + 1, oy + 1);
        let v = |dx: isize, dy: isize| {
            img.get((x as isize + dx) as usize, (y as isize + dy) as usize) as f64
        };
        let gx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
        let gy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
        let m = quantize(gx.hypot(gy));
        if m < threshold {
            0
        } else {
            m
        }
    })
}

/// HOG of the census transform of the edge map.
pub fn centrog(img: &GrayImage, ep: &EdgeParams, hp: &HogParams) -> Result<Descriptor> {
    let edges = edge_map(img, ep)?;
    let ct = census_transform(&edges)?;
    let mut d = hog_descriptor(&ct.to_gray(), hp)?;
    d.kind = DescriptorKind::Centrog;
    Ok(d)
}
