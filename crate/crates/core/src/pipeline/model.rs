use std::fs;
use std::path::Path;

use super::config::RunConfig;
use super::dataset::{Dataset, Item, Regime};
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::image::{Descriptor, GrayImage};
use crate::par::{self, Parallelism};
use crate::svm::{self, ByteReader, ByteWriter, LabeledSet, MulticlassModel};

pub const PIPELINE_MAGIC: &[u8; 8] = b"CTGPIPEL";
pub const PIPELINE_VERSION: u32 = 1;

/// Day/night gate plus one vehicle-type classifier per regime.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub stage1: MulticlassModel,
    pub day: MulticlassModel,
    pub night: MulticlassModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub regime: Regime,
    pub label: i32,
    /// Decision values of the gate, in `stage1.classes` order.
    pub stage1_scores: Vec<f64>,
    /// Decision values of the chosen regime's classifier.
    pub stage2_scores: Vec<f64>,
}

impl Classification {
    pub fn class_name(&self) -> &'static str {
        self.regime.class_name(self.label).unwrap_or("?")
    }
}

impl PipelineModel {
    pub fn stage2(&self, regime: Regime) -> &MulticlassModel {
        match regime {
            Regime::Day => &self.day,
            Regime::Night => &self.night,
        }
    }

    /// Retrains one regime's classifier, leaving the other stages untouched.
    pub fn retrain_stage2(&mut self, regime: Regime, train: &Dataset, cfg: &RunConfig) -> Result<()> {
        let m = train_stage2(train, regime, cfg, Parallelism::default())?;
        match regime {
            Regime::Day => self.day = m,
            Regime::Night => self.night = m,
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter(Vec::new());
        w.bytes(PIPELINE_MAGIC);
        w.u32(PIPELINE_VERSION);
        for m in [&self.stage1, &self.day, &self.night] {
            let blob = svm::model_to_bytes(m);
            w.u64(blob.len() as u64);
            w.bytes(&blob);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PipelineModel> {
        let mut r = ByteReader::new(bytes);
        r.header(PIPELINE_MAGIC, PIPELINE_VERSION)?;
        let mut stage = |what: &str| -> Result<MulticlassModel> {
            let n = r.u64(what)? as usize;
            svm::model_from_bytes(r.take(n, what)?)
        };
        let stage1 = stage("stage-1 model")?;
        let day = stage("day model")?;
        let night = stage("night model")?;
        r.finish()?;
        Ok(PipelineModel { stage1, day, night })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PipelineModel> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        PipelineModel::from_bytes(&bytes)
    }
}

fn descriptors(items: &[&Item], spec: FeatureSpec, mode: Parallelism) -> Result<Vec<Descriptor>> {
    let imgs: Vec<&GrayImage> = items.iter().map(|i| &i.image).collect();
    spec.extract_batch(&imgs, mode)
}

fn train_stage1(train: &Dataset, cfg: &RunConfig, mode: Parallelism) -> Result<MulticlassModel> {
    let items: Vec<&Item> = train.items.iter().collect();
    let spec = cfg.stage1_spec();
    let x = descriptors(&items, spec, mode)?;
    let y = items.iter().map(|i| i.regime.code()).collect();
    svm::train_multiclass(&LabeledSet::new(x, y)?, spec, &cfg.train, cfg.scale_features, mode)
}

fn train_stage2(
    train: &Dataset,
    regime: Regime,
    cfg: &RunConfig,
    mode: Parallelism,
) -> Result<MulticlassModel> {
    let items: Vec<&Item> = train.regime(regime).collect();
    for code in regime.class_codes() {
        if !items.iter().any(|i| i.label == code) {
            return Err(Error::Data(format!(
                "training set has no {regime} {} samples",
                regime.class_name(code).unwrap_or("?")
            )));
        }
    }
    let spec = cfg.stage2_spec();
    let x = descriptors(&items, spec, mode)?;
    let y = items.iter().map(|i| i.label).collect();
    svm::train_multiclass(&LabeledSet::new(x, y)?, spec, &cfg.train, cfg.scale_features, mode)
}

/// Trains the gate on intensity histograms over all items, then each
/// regime's type classifier on its own items.
pub fn train_pipeline(train: &Dataset, cfg: &RunConfig) -> Result<PipelineModel> {
    train_pipeline_with(train, cfg, Parallelism::default())
}

pub fn train_pipeline_with(train: &Dataset, cfg: &RunConfig, mode: Parallelism) -> Result<PipelineModel> {
    cfg.validate()?;
    for regime in Regime::ALL {
        if !train.has_regime(regime) {
            return Err(Error::Data(format!("training set has no {regime} items")));
        }
    }
    let stages = par::map_range(mode, 3, |s| match s {
        0 => train_stage1(train, cfg, mode),
        1 => train_stage2(train, Regime::Day, cfg, mode),
        _ => train_stage2(train, Regime::Night, cfg, mode),
    });
    let mut stages = stages.into_iter();
    let mut next = || stages.next().expect("three stages");
    Ok(PipelineModel {
        stage1: next()?,
        day: next()?,
        night: next()?,
    })
}

/// Gate, then the chosen regime's type classifier, each extracting the
/// descriptor its model was trained on.
pub fn classify_image(m: &PipelineModel, img: &GrayImage) -> Result<Classification> {
    let h = m.stage1.feature.extract(img)?;
    let stage1_scores = m.stage1.decision_values(&h)?;
    let regime = Regime::from_code(m.stage1.classes[svm::argmax(&stage1_scores)])?;
    let stage2 = m.stage2(regime);
    let d = stage2.feature.extract(img)?;
    let stage2_scores = stage2.decision_values(&d)?;
    let label = stage2.classes[svm::argmax(&stage2_scores)];
    Ok(Classification {
        regime,
        label,
        stage1_scores,
        stage2_scores,
    })
}
