use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::dataset::{Dataset, Item, Regime};
use super::model::PipelineModel;
use crate::error::{Error, Result};
use crate::eval::{confusion_matrix, grade, multiclass_roc, ConfusionMatrix, Grade, MulticlassRoc};
use crate::features::FeatureSpec;
use crate::image::GrayImage;
use crate::par::{self, Parallelism};
use crate::svm::MulticlassModel;

/// Results of one classifier on its share of the test set.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub name: String,
    pub feature: FeatureSpec,
    pub truth: Vec<i32>,
    pub predicted: Vec<i32>,
    pub scores: Vec<Vec<f64>>,
    pub confusion: ConfusionMatrix,
    /// `None` when fewer than two classes occur in the truth.
    pub roc: Option<MulticlassRoc>,
    pub accuracy: f64,
    pub grade: Option<Grade>,
}

impl StageReport {
    pub fn macro_auc(&self) -> Option<f64> {
        self.roc.as_ref().and_then(|r| r.macro_auc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub stage1: StageReport,
    /// Type classifiers scored on the test items of their true regime.
    pub day: Option<StageReport>,
    pub night: Option<StageReport>,
    /// Fraction with both regime and type right when routed through the gate.
    pub end_to_end_accuracy: f64,
}

fn stage_report(
    name: &str,
    model: &MulticlassModel,
    items: &[&Item],
    truth: Vec<i32>,
    mode: Parallelism,
) -> Result<StageReport> {
    let imgs: Vec<&GrayImage> = items.iter().map(|i| &i.image).collect();
    let scores = par::map(mode, &imgs, |img| {
        model.feature.extract(img).and_then(|d| model.decision_values(&d))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<i32> = scores
        .iter()
        .map(|s| model.classes[crate::svm::argmax(s)])
        .collect();
    let confusion = confusion_matrix(&truth, &predicted, &model.classes)?;
    let accuracy = confusion.accuracy().unwrap_or(0.0);
    let present = model.classes.iter().filter(|c| truth.contains(c)).count();
    let roc = if present >= 2 {
        Some(multiclass_roc(&scores, &truth, &model.classes)?)
    } else {
        None
    };
    let grade = match roc.as_ref().and_then(|r| r.macro_auc) {
        Some(a) => Some(grade(a)?),
        None => None,
    };
    Ok(StageReport {
        name: name.to_string(),
        feature: model.feature,
        truth,
        predicted,
        scores,
        confusion,
        roc,
        accuracy,
        grade,
    })
}

pub fn evaluate(m: &PipelineModel, test: &Dataset) -> Result<EvalReport> {
    evaluate_with(m, test, Parallelism::default())
}

pub fn evaluate_with(m: &PipelineModel, test: &Dataset, mode: Parallelism) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Data("empty test set".into()));
    }
    let all: Vec<&Item> = test.items.iter().collect();
    let stage1 = stage_report(
        "stage1",
        &m.stage1,
        &all,
        all.iter().map(|i| i.regime.code()).collect(),
        mode,
    )?;
    let mut per_regime = Vec::new();
    for regime in Regime::ALL {
        let items: Vec<&Item> = test.regime(regime).collect();
        per_regime.push(if items.is_empty() {
            None
        } else {
            let truth = items.iter().map(|i| i.label).collect();
            Some(stage_report(regime.name(), m.stage2(regime), &items, truth, mode)?)
        });
    }
    let night = per_regime.pop().flatten();
    let day = per_regime.pop().flatten();

    // end to end: route by the gate's decision
    let mut correct = 0;
    let mut day_i = 0;
    let mut night_i = 0;
    for (k, item) in test.items.iter().enumerate() {
        let (report, idx) = match item.regime {
            Regime::Day => (&day, &mut day_i),
            Regime::Night => (&night, &mut night_i),
        };
        let regime_ok = stage1.predicted[k] == item.regime.code();
        let type_ok = report.as_ref().map(|r| r.predicted[*idx] == item.label).unwrap_or(false);
        *idx += 1;
        if regime_ok && type_ok {
            correct += 1;
        }
    }
    Ok(EvalReport {
        samples: test.len(),
        end_to_end_accuracy: correct as f64 / test.len() as f64,
        stage1,
        day,
        night,
    })
}

impl EvalReport {
    pub fn stages(&self) -> impl Iterator<Item = &StageReport> {
        std::iter::once(&self.stage1)
            .chain(self.day.as_ref())
            .chain(self.night.as_ref())
    }

    /// Plain-text summary; contains nothing run-dependent beyond the data.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "samples: {}", self.samples).unwrap();
        writeln!(s, "end_to_end_accuracy: {:.6}", self.end_to_end_accuracy).unwrap();
        for st in self.stages() {
            writeln!(s).unwrap();
            writeln!(s, "[{}] feature: {}", st.name, st.feature).unwrap();
            writeln!(s, "samples: {}", st.truth.len()).unwrap();
            writeln!(s, "accuracy: {:.6}", st.accuracy).unwrap();
            match st.macro_auc() {
                Some(a) => writeln!(s, "macro_auc: {a:.6}").unwrap(),
                None => writeln!(s, "macro_auc: undefined").unwrap(),
            }
            if let Some(g) = st.grade {
                writeln!(s, "grade: {g} ({})", g.description()).unwrap();
            }
            if let Some(roc) = &st.roc {
                for (c, a) in roc.classes.iter().zip(&roc.aucs) {
                    match a {
                        Some(a) => writeln!(s, "auc[{c}]: {a:.6}").unwrap(),
                        None => writeln!(s, "auc[{c}]: undefined (class absent)").unwrap(),
                    }
                }
                if roc.warning {
                    writeln!(s, "warning: some classes absent from truth; excluded from macro AUC").unwrap();
                }
            }
            writeln!(s, "confusion:").unwrap();
            for line in st.confusion.to_csv().lines() {
                writeln!(s, "  {line}").unwrap();
            }
        }
        s
    }

    /// Writes `summary.txt` and per-stage CSVs (and gnuplot data files when
    /// asked) into `dir`.
    pub fn write(&self, dir: &Path, gnuplot: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: String, body: String| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("summary.txt".into(), self.summary())?;
        for st in self.stages() {
            put(format!("{}_confusion.csv", st.name), st.confusion.to_csv())?;
            if let Some(roc) = &st.roc {
                for (c, curve) in roc.classes.iter().zip(&roc.curves) {
                    if let Some(curve) = curve {
                        put(format!("{}_roc_class{c}.csv", st.name), curve.to_csv())?;
                        if gnuplot {
                            put(format!("{}_roc_class{c}.dat", st.name), curve.to_gnuplot())?;
                        }
                    }
                }
            }
            let mut scores = String::from("truth,predicted");
            if let Some(first) = st.scores.first() {
                for k in 0..first.len() {
                    write!(scores, ",score{k}").unwrap();
                }
            }
            scores.push('\n');
            for ((t, p), row) in st.truth.iter().zip(&st.predicted).zip(&st.scores) {
                write!(scores, "{t},{p}").unwrap();
                for v in row {
                    write!(scores, ",{v}").unwrap();
                }
                scores.push('\n');
            }
            put(format!("{}_scores.csv", st.name), scores)?;
        }
        Ok(())
    }
}
