//! Raster containers, grayscale conversion, resizing and the intensity
//! histogram used by the day/night gate.

use crate::error::{Error, Result};

/// Round half up, then clamp to the 8-bit range.
///
/// Every intensity quantization in the crate goes through here so results
/// are reproducible bit for bit.
#[inline]
pub fn quantize(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Single-channel 8-bit raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single intensity.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
            .expect("transpose preserves a valid geometry")
    }

    /// Applies a per-intensity lookup table.
    pub fn map_lut(&self, lut: &[u8; 256]) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| lut[p as usize]).collect(),
        }
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<GrayImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop ({x},{y},{w},{h}) outside {}x{} image",
                self.width, self.height
            )));
        }
        GrayImage::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }
}

/// Three-channel 8-bit raster, row-major `(r, g, b)` triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// A decoded image of either channel layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Image {
    pub fn into_gray(self) -> GrayImage {
        match self {
            Image::Gray(g) => g,
            Image::Rgb(c) => to_grayscale(&c),
        }
    }
}

/// BT.601 luma, rounded half up.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| quantize(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64))
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    IntensityHistogram,
    Centrist,
    Hog,
    Centrog,
}

impl DescriptorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::IntensityHistogram => "histogram",
            DescriptorKind::Centrist => "centrist",
            DescriptorKind::Hog => "hog",
            DescriptorKind::Centrog => "centrog",
        }
    }
}

impl std::str::FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "histogram" => Ok(DescriptorKind::IntensityHistogram),
            "centrist" => Ok(DescriptorKind::Centrist),
            "hog" => Ok(DescriptorKind::Hog),
            "centrog" => Ok(DescriptorKind::Centrog),
            other => Err(Error::InvalidParameter(format!(
                "unknown descriptor kind '{other}'"
            ))),
        }
    }
}

/// Fixed-length, non-negative feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f64>,
    pub kind: DescriptorKind,
}

impl Descriptor {
    pub fn new(values: Vec<f64>, kind: DescriptorKind) -> Self {
        debug_assert!(values.iter().all(|&v| v >= 0.0));
        Descriptor { values, kind }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scales `counts` so they sum to one. A zero total is left untouched.
pub(crate) fn normalize_l1(counts: &mut [f64]) {
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        counts.iter_mut().for_each(|c| *c /= total);
    }
}

/// Intensity histogram with `bins` equal-width buckets over `[0, 256)`.
pub fn intensity_histogram(img: &GrayImage, bins: usize, normalize: bool) -> Result<Descriptor> {
    if bins == 0 || bins > 256 || 256 % bins != 0 {
        return Err(Error::InvalidParameter(format!(
            "histogram bins must divide 256, got {bins}"
        )));
    }
    let width = 256 / bins;
    let mut counts = vec![0.0; bins];
    for &p in &img.pixels {
        counts[p as usize / width] += 1.0;
    }
    if normalize {
        normalize_l1(&mut counts);
    }
    Ok(Descriptor::new(counts, DescriptorKind::IntensityHistogram))
}

/// Bilinear resize with corner-aligned sampling: output corners land exactly
/// on input corners.
pub fn resize_bilinear(img: &GrayImage, w: usize, h: usize) -> Result<GrayImage> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target must be positive, got {w}x{h}"
        )));
    }
    if w == img.width && h == img.height {
        return Ok(img.clone());
    }
    let scale = |dst: usize, src: usize| -> f64 {
        if dst > 1 {
            (src - 1) as f64 / (dst - 1) as f64
        } else {
            0.0
        }
    };
    let offset = |dst: usize, src: usize| -> f64 {
        if dst > 1 {
            0.0
        } else {
            (src - 1) as f64 / 2.0
        }
    };
    let (sx, ox) = (scale(w, img.width), offset(w, img.width));
    let (sy, oy) = (scale(h, img.height), offset(h, img.height));
    GrayImage::from_fn(w, h, |x, y| {
        let fx = x as f64 * sx + ox;
        let fy = y as f64 * sy + oy;
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(img.width - 1);
        let y1 = (y0 + 1).min(img.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let p = |x: usize, y: usize| img.get(x, y) as f64;
        let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
        let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
        quantize(top * (1.0 - ty) + bottom * ty)
    })
}
