//! Run configuration as flat `key = value` text.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bgseg::GmmParams;
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::hog::{EdgeMethod, EdgeParams, HogParams};
use crate::svm::TrainParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage2Feature {
    Centrog,
    Centrist,
}

impl Stage2Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage2Feature::Centrog => "centrog",
            Stage2Feature::Centrist => "centrist",
        }
    }
}

impl FromStr for Stage2Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centrog" => Ok(Stage2Feature::Centrog),
            "centrist" => Ok(Stage2Feature::Centrist),
            other => Err(Error::Config(format!(
                "stage2_feature must be centrog or centrist, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub split_ratio: f64,
    pub seed: u64,
    pub histogram_bins: usize,
    pub stage2_feature: Stage2Feature,
    pub centrog_size: (usize, usize),
    pub centrist_size: (usize, usize),
    pub train: TrainParams,
    pub scale_features: bool,
    pub gmm: GmmParams,
    pub edge: EdgeParams,
    pub hog: HogParams,
    pub min_blob_area: usize,
    pub morphology: bool,
    pub gnuplot: bool,
    pub report_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            split_ratio: 0.75,
            seed: 0,
            histogram_bins: 256,
            stage2_feature: Stage2Feature::Centrog,
            centrog_size: (68, 68),
            centrist_size: (64, 64),
            train: TrainParams::default(),
            scale_features: false,
            gmm: GmmParams::default(),
            edge: EdgeParams::default(),
            hog: HogParams::default(),
            min_blob_area: 100,
            morphology: false,
            gnuplot: false,
            report_dir: None,
        }
    }
}

impl RunConfig {
    pub fn stage1_spec(&self) -> FeatureSpec {
        FeatureSpec::Histogram {
            bins: self.histogram_bins,
        }
    }

    pub fn stage2_spec(&self) -> FeatureSpec {
        match self.stage2_feature {
            Stage2Feature::Centrog => FeatureSpec::Centrog {
                width: self.centrog_size.0,
                height: self.centrog_size.1,
                edge: self.edge,
                hog: self.hog,
            },
            Stage2Feature::Centrist => FeatureSpec::Centrist {
                width: self.centrist_size.0,
                height: self.centrist_size.1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.train.validate().map_err(wrap)?;
        self.gmm.validate().map_err(wrap)?;
        self.stage1_spec().validate().map_err(wrap)?;
        self.stage2_spec().validate().map_err(wrap)?;
        Ok(())
    }

    /// Every key, one per line, in a fixed order.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(s, "{k} = {v}").unwrap();
        };
        kv("split_ratio", &self.split_ratio);
        kv("seed", &self.seed);
        kv("histogram_bins", &self.histogram_bins);
        kv("stage2_feature", &self.stage2_feature.as_str());
        kv("centrog_width", &self.centrog_size.0);
        kv("centrog_height", &self.centrog_size.1);
        kv("centrist_width", &self.centrist_size.0);
        kv("centrist_height", &self.centrist_size.1);
        kv("c", &self.train.c);
        kv("tol", &self.train.tol);
        kv("max_iter", &self.train.max_iter);
        kv("scale_features", &self.scale_features);
        kv("gmm_k", &self.gmm.k);
        kv("gmm_alpha", &self.gmm.alpha);
        kv("gmm_match_sigma", &self.gmm.match_sigma);
        kv("gmm_bg_threshold", &self.gmm.bg_weight_threshold);
        kv("gmm_initial_variance", &self.gmm.initial_variance);
        kv("gmm_min_variance", &self.gmm.min_variance);
        kv("edge_threshold", &self.edge.threshold);
        kv("edge_method", &"sobel");
        kv("hog_cell_size", &self.hog.cell_size);
        kv("hog_block_size", &self.hog.block_size);
        kv("hog_block_stride", &self.hog.block_stride);
        kv("hog_orientation_bins", &self.hog.orientation_bins);
        kv("hog_signed", &self.hog.signed_gradients);
        kv("hog_l2_epsilon", &self.hog.l2_epsilon);
        kv("min_blob_area", &self.min_blob_area);
        kv("morphology", &self.morphology);
        kv("gnuplot", &self.gnuplot);
        if let Some(p) = &self.report_dir {
            kv("report_dir", &p.display());
        }
        s
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid value '{v}' for {key}"))
        }
        match key {
            "split_ratio" => self.split_ratio = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "histogram_bins" => self.histogram_bins = num(key, value)?,
            "stage2_feature" => {
                self.stage2_feature = value.parse().map_err(|e: Error| e.to_string())?
            }
            "centrog_width" => self.centrog_size.0 = num(key, value)?,
            "centrog_height" => self.centrog_size.1 = num(key, value)?,
            "centrist_width" => self.centrist_size.0 = num(key, value)?,
            "centrist_height" => self.centrist_size.1 = num(key, value)?,
            "c" => self.train.c = num(key, value)?,
            "tol" => self.train.tol = num(key, value)?,
            "max_iter" => self.train.max_iter = num(key, value)?,
            "scale_features" => self.scale_features = num(key, value)?,
            "gmm_k" => self.gmm.k = num(key, value)?,
            "gmm_alpha" => self.gmm.alpha = num(key, value)?,
            "gmm_match_sigma" => self.gmm.match_sigma = num(key, value)?,
            "gmm_bg_threshold" => self.gmm.bg_weight_threshold = num(key, value)?,
            "gmm_initial_variance" => self.gmm.initial_variance = num(key, value)?,
            "gmm_min_variance" => self.gmm.min_variance = num(key, value)?,
            "edge_threshold" => self.edge.threshold = num(key, value)?,
            "edge_method" => {
                if value != "sobel" {
                    return Err(format!("edge_method must be sobel, got '{value}'"));
                }
                self.edge.method = EdgeMethod::SobelMagnitude;
            }
            "hog_cell_size" => self.hog.cell_size = num(key, value)?,
            "hog_block_size" => self.hog.block_size = num(key, value)?,
            "hog_block_stride" => self.hog.block_stride = num(key, value)?,
            "hog_orientation_bins" => self.hog.orientation_bins = num(key, value)?,
            "hog_signed" => self.hog.signed_gradients = num(key, value)?,
            "hog_l2_epsilon" => self.hog.l2_epsilon = num(key, value)?,
            "min_blob_area" => self.min_blob_area = num(key, value)?,
            "morphology" => self.morphology = num(key, value)?,
            "gnuplot" => self.gnuplot = num(key, value)?,
            "report_dir" => self.report_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }
}
