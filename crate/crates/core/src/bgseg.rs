//! Per-pixel Gaussian mixture background subtraction and blob extraction.
//!
//! Each pixel keeps `K` one-dimensional Gaussians over its intensity
//! history. A new sample matches the first component (in descending
//! weight/sigma order) within `match_sigma` standard deviations. Matched
//! components gain weight and drift toward the sample; with no match the
//! weakest component is replaced by a wide one centred on the sample. The
//! heaviest components whose cumulative weight first exceeds `T` form the
//! background; a pixel matching one of them is background.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmParams {
    pub k: usize,
    pub alpha: f64,
    pub match_sigma: f64,
    pub bg_weight_threshold: f64,
    pub initial_variance: f64,
    pub min_variance: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            k: 5,
            alpha: 0.005,
            match_sigma: 2.5,
            bg_weight_threshold: 0.7,
            initial_variance: 225.0,
            min_variance: 4.0,
        }
    }
}

impl GmmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.k < 1 {
            return bad("K must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.match_sigma.is_nan() || self.match_sigma <= 0.0 {
            return bad("match_sigma must be positive");
        }
        if !(self.bg_weight_threshold > 0.0 && self.bg_weight_threshold < 1.0) {
            return bad("background weight threshold must lie in (0, 1)");
        }
        if !(self.initial_variance > 0.0 && self.min_variance > 0.0) {
            return bad("variances must be positive");
        }
        Ok(())
    }

    /// Frames of repetition after which a new persistent intensity is
    /// absorbed into the background: `ceil(log T / log(1 - alpha))`.
    pub fn absorption_frames(&self) -> usize {
        (self.bg_weight_threshold.ln() / (1.0 - self.alpha).ln()).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Component {
    #[inline]
    fn fitness(&self) -> f64 {
        self.weight / self.variance.sqrt()
    }
}

/// One-dimensional normal density.
pub fn gaussian_pdf(x: f64, mu: f64, var: f64) -> Result<f64> {
    if var.is_nan() || var <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive, got {var}"
        )));
    }
    let d = x - mu;
    Ok((-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// Weighted sum of component densities at `x`.
pub fn mixture_probability(components: &[Component], x: f64) -> Result<f64> {
    components.iter().try_fold(0.0, |acc, c| {
        Ok(acc + c.weight * gaussian_pdf(x, c.mean, c.variance)?)
    })
}

/// Binary mask: 0 background, 255 foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask(pub GrayImage);

impl ForegroundMask {
    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) != 0
    }

    pub fn foreground_count(&self) -> usize {
        self.0.pixels().iter().filter(|&&p| p != 0).count()
    }

    pub fn image(&self) -> &GrayImage {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    width: usize,
    height: usize,
    params: GmmParams,
    components: Vec<Component>,
    frame_count: u64,
}

impl GmmModel {
    /// One live component per pixel (weight 1, mean 0) plus `K - 1`
    /// zero-weight placeholders.
    pub fn new(width: usize, height: usize, params: GmmParams) -> Result<Self> {
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "model dimensions must be positive, got {width}x{height}"
            )));
        }
        let mut pixel = vec![
            Component {
                weight: 0.0,
                mean: 0.0,
                variance: params.initial_variance,
            };
            params.k
        ];
        pixel[0].weight = 1.0;
        let components = pixel
            .iter()
            .copied()
            .cycle()
            .take(width * height * params.k)
            .collect();
        Ok(GmmModel {
            width,
            height,
            params,
            components,
            frame_count: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn params(&self) -> &GmmParams {
        &self.params
    }

    pub fn frame_count(&self) -> u64 {
        self.frame_count
    }

    /// Components of one pixel, sorted by descending weight/sigma.
    pub fn pixel(&self, x: usize, y: usize) -> &[Component] {
        let k = self.params.k;
        let i = (y * self.width + x) * k;
        &self.components[i..i + k]
    }

    pub fn update(&mut self, frame: &GrayImage) -> Result<ForegroundMask> {
        self.update_with(frame, Parallelism::default())
    }

    /// Applies one frame and returns its foreground mask. Pixels are
    /// independent, so the result does not depend on `mode`.
    pub fn update_with(&mut self, frame: &GrayImage, mode: Parallelism) -> Result<ForegroundMask> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::Dimension(format!(
                "frame is {}x{}, model is {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        let (w, k) = (self.width, self.params.k);
        let p = self.params;
        let src = frame.pixels();
        let mut mask = vec![0u8; w * self.height];
        par::for_each_chunk_pair(
            mode,
            &mut self.components,
            w * k,
            &mut mask,
            w,
            |row, comps, out| {
                let xs = &src[row * w..(row + 1) * w];
                for (x, (px, m)) in comps.chunks_mut(k).zip(out.iter_mut()).enumerate() {
                    if update_pixel(px, xs[x] as f64, &p) {
                        *m = 255;
                    }
                }
            },
        );
        self.frame_count += 1;
        Ok(ForegroundMask(GrayImage::new(w, self.height, mask)?))
    }
}

/// Creates a model with [`GmmModel::new`].
pub fn gmm_init(width: usize, height: usize, params: GmmParams) -> Result<GmmModel> {
    GmmModel::new(width, height, params)
}

/// Applies a frame to `model` with [`GmmModel::update`].
pub fn gmm_update(model: &mut GmmModel, frame: &GrayImage) -> Result<ForegroundMask> {
    model.update(frame)
}

/// Updates one pixel's mixture in place. Returns true for foreground.
fn update_pixel(comps: &mut [Component], x: f64, p: &GmmParams) -> bool {
    let a = p.alpha;
    let matched = comps.iter().position(|c| {
        c.weight > 0.0 && (x - c.mean).abs() <= p.match_sigma * c.variance.sqrt()
    });
    let mut tracked = match matched {
        Some(i) => {
            for (j, c) in comps.iter_mut().enumerate() {
                c.weight *= 1.0 - a;
                if j == i {
                    c.weight += a;
                }
            }
            let c = &mut comps[i];
            c.mean = (1.0 - a) * c.mean + a * x;
            let d = x - c.mean;
            c.variance = ((1.0 - a) * c.variance + a * d * d).max(p.min_variance);
            Some(i)
        }
        None => {
            let last = comps.len() - 1;
            comps[last] = Component {
                weight: a,
                mean: x,
                variance: p.initial_variance,
            };
            None
        }
    };

    let total: f64 = comps.iter().map(|c| c.weight).sum();
    comps.iter_mut().for_each(|c| c.weight /= total);

    // insertion sort by descending fitness; stable, follows the match
    for i in 1..comps.len() {
        let mut j = i;
        while j > 0 && comps[j - 1].fitness() < comps[j].fitness() {
            comps.swap(j - 1, j);
            tracked = match tracked {
                Some(t) if t == j => Some(j - 1),
                Some(t) if t == j - 1 => Some(j),
                t => t,
            };
            j -= 1;
        }
    }

    let Some(t) = tracked else {
        return true;
    };
    let mut cumulative = 0.0;
    for (i, c) in comps.iter().enumerate() {
        cumulative += c.weight;
        if cumulative > p.bg_weight_threshold {
            return t > i;
        }
    }
    // rounding left the total at or under T: every component is background
    false
}

/// Tight bounds of a connected foreground region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub area: usize,
}

impl BoundingBox {
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let inter = ((x1 - x0) * (y1 - y0)) as f64;
        let union = (self.w * self.h + other.w * other.h) as f64 - inter;
        inter / union
    }
}

/// 8-connected foreground components of at least `min_area` pixels, largest
/// first, ties ordered by top-left corner (y, then x).
pub fn extract_blobs(mask: &ForegroundMask, min_area: usize) -> Vec<BoundingBox> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut blobs = Vec::new();
    for start in 0..w * h {
        if seen[start] || mask.0.pixels()[start] == 0 {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && mask.0.pixels()[j] != 0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if area >= min_area {
            blobs.push(BoundingBox {
                x: x0,
                y: y0,
                w: x1 - x0 + 1,
                h: y1 - y0 + 1,
                area,
            });
        }
    }
    blobs.sort_by(|a, b| b.area.cmp(&a.area).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    blobs
}

fn morph(mask: &ForegroundMask, dilate: bool) -> ForegroundMask {
    let img = &mask.0;
    let (w, h) = (img.width(), img.height());
    let out = GrayImage::from_fn(w, h, |x, y| {
        let mut any = false;
        let mut all = true;
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                let on = img.get(nx, ny) != 0;
                any |= on;
                all &= on;
            }
        }
        if (dilate && any) || (!dilate && all) {
            255
        } else {
            0
        }
    })
    .expect("same geometry");
    ForegroundMask(out)
}

/// 3x3 opening (erode, then dilate); removes isolated specks.
pub fn open(mask: &ForegroundMask) -> ForegroundMask {
    morph(&morph(mask, false), true)
}

/// 3x3 closing (dilate, then erode); fills pinholes.
pub fn close(mask: &ForegroundMask) -> ForegroundMask {
    morph(&morph(mask, true), false)
}
