use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::dataset::image_files;
use crate::bgseg::{self, BoundingBox, ForegroundMask, GmmModel, GmmParams};
use crate::error::{Error, Result};
use crate::image::{resize_bilinear, GrayImage};
use crate::pnm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    pub gmm: GmmParams,
    pub min_area: usize,
    /// Apply a 3x3 opening then closing to each mask before blob extraction.
    pub morphology: bool,
    /// Export every blob resized to this geometry.
    pub crop: Option<(usize, usize)>,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            gmm: GmmParams::default(),
            min_area: 100,
            morphology: false,
            crop: None,
        }
    }
}

/// Sequential frame-by-frame background subtraction.
pub struct Segmenter {
    model: GmmModel,
    opts: SegmentOptions,
}

impl Segmenter {
    pub fn new(width: usize, height: usize, opts: SegmentOptions) -> Result<Self> {
        Ok(Segmenter {
            model: GmmModel::new(width, height, opts.gmm)?,
            opts,
        })
    }

    pub fn model(&self) -> &GmmModel {
        &self.model
    }

    pub fn push(&mut self, frame: &GrayImage) -> Result<(ForegroundMask, Vec<BoundingBox>)> {
        let mut mask = self.model.update(frame)?;
        if self.opts.morphology {
            mask = bgseg::close(&bgseg::open(&mask));
        }
        let blobs = bgseg::extract_blobs(&mask, self.opts.min_area);
        Ok((mask, blobs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSummary {
    pub frames: usize,
    /// `(frame index, blob)` in frame order, largest blob first per frame.
    pub blobs: Vec<(usize, BoundingBox)>,
}

/// Runs the background model over the lexicographically sorted frames of
/// `frames_dir`, writing `masks/mask_NNNNN.pgm`, `blobs.csv` and, when a
/// crop geometry is set, `crops/fNNNNN_bNN.pgm` into `out_dir`.
pub fn run_segmentation(frames_dir: &Path, opts: &SegmentOptions, out_dir: &Path) -> Result<SegmentSummary> {
    let files = image_files(frames_dir)?;
    if files.len() < 2 {
        return Err(Error::Data(format!(
            "segmentation needs at least 2 frames, found {} in {}",
            files.len(),
            frames_dir.display()
        )));
    }
    let masks_dir = out_dir.join("masks");
    fs::create_dir_all(&masks_dir).map_err(|e| Error::io(&masks_dir, e))?;
    let crops_dir = out_dir.join("crops");
    if opts.crop.is_some() {
        fs::create_dir_all(&crops_dir).map_err(|e| Error::io(&crops_dir, e))?;
    }

    let mut csv = String::from("frame_index,x,y,w,h,area\n");
    let mut summary = SegmentSummary {
        frames: 0,
        blobs: Vec::new(),
    };
    let mut seg: Option<Segmenter> = None;
    for (i, path) in files.iter().enumerate() {
        let frame = pnm::read_gray(path)?;
        let s = match &mut seg {
            Some(s) => {
                if (frame.width(), frame.height()) != (s.model().width(), s.model().height()) {
                    return Err(Error::Data(format!(
                        "frame {} is {}x{}, earlier frames are {}x{}",
                        path.display(),
                        frame.width(),
                        frame.height(),
                        s.model().width(),
                        s.model().height()
                    )));
                }
                s
            }
            None => seg.insert(Segmenter::new(frame.width(), frame.height(), *opts)?),
        };
        let (mask, blobs) = s.push(&frame)?;
        pnm::write_p5(mask.image(), masks_dir.join(format!("mask_{i:05}.pgm")))?;
        for (b_i, b) in blobs.iter().enumerate() {
            writeln!(csv, "{i},{},{},{},{},{}", b.x, b.y, b.w, b.h, b.area).unwrap();
            if let Some((cw, ch)) = opts.crop {
                let crop = resize_bilinear(&frame.crop(b.x, b.y, b.w, b.h)?, cw, ch)?;
                pnm::write_p5(&crop, crops_dir.join(format!("f{i:05}_b{b_i:02}.pgm")))?;
            }
            summary.blobs.push((i, *b));
        }
        summary.frames += 1;
    }
    let csv_path = out_dir.join("blobs.csv");
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    Ok(summary)
}
