//! Confusion matrices, rates, ROC curves, AUC and letter grades.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<i32>,
    /// `counts[i][j]`: samples of true class `i` predicted as class `j`.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction on the diagonal; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// One-vs-rest counts `(tp, fp, tn, fn)` for the class at `index`.
    pub fn one_vs_rest(&self, index: usize) -> (u64, u64, u64, u64) {
        let n = self.classes.len();
        let tp = self.counts[index][index];
        let fn_: u64 = (0..n).filter(|&j| j != index).map(|j| self.counts[index][j]).sum();
        let fp: u64 = (0..n).filter(|&i| i != index).map(|i| self.counts[i][index]).sum();
        let tn = self.total() - tp - fn_ - fp;
        (tp, fp, tn, fn_)
    }

    /// `true\pred` header row, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for c in &self.classes {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            write!(s, "{c}").unwrap();
            for v in row {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion_matrix(truth: &[i32], pred: &[i32], classes: &[i32]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Dimension(format!(
            "{} true labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let index = |l: i32| {
        classes
            .iter()
            .position(|&c| c == l)
            .ok_or_else(|| Error::Data(format!("label {l} is not one of {classes:?}")))
    };
    let n = classes.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (&t, &p) in truth.iter().zip(pred) {
        counts[index(t)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// `tp / (tp + fn)`.
pub fn true_positive_rate(tp: u64, fn_: u64) -> Result<f64> {
    ratio(tp, tp + fn_, "true positive rate")
}

/// `fp / (fp + tn)`.
pub fn false_positive_rate(fp: u64, tn: u64) -> Result<f64> {
    ratio(fp, fp + tn, "false positive rate")
}

/// `(tp + tn) / (tp + tn + fp + fn)`.
pub fn accuracy(tp: u64, fp: u64, tn: u64, fn_: u64) -> Result<f64> {
    ratio(tp + tn, tp + tn + fp + fn_, "accuracy")
}

fn ratio(num: u64, den: u64, what: &'static str) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedRate(what))
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Rates of a binary outcome; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryRates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub accuracy: Option<f64>,
}

pub fn binary_rates(tp: u64, fp: u64, tn: u64, fn_: u64) -> BinaryRates {
    BinaryRates {
        tpr: true_positive_rate(tp, fn_).ok(),
        fpr: false_positive_rate(fp, tn).ok(),
        accuracy: accuracy(tp, fp, tn, fn_).ok(),
    }
}

/// `(fpr, tpr)` points from `(0, 0)` to `(1, 1)`, non-decreasing in both.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            writeln!(s, "{f},{t}").unwrap();
        }
        s
    }

    /// Whitespace-separated columns for gnuplot.
    pub fn to_gnuplot(&self) -> String {
        let mut s = String::from("# fpr tpr\n");
        for (f, t) in &self.points {
            writeln!(s, "{f} {t}").unwrap();
        }
        s
    }
}

/// Threshold sweep over distinct scores, highest first; a sample is called
/// positive when its score is at least the threshold. Tied scores move
/// together in one step.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("ROC needs both positive and negative samples".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Grade {
    A,
    B,
    C,
    D,
    F,
}

impl Grade {
    pub fn description(self) -> &'static str {
        match self {
            Grade::A => "excellent",
            Grade::B => "good",
            Grade::C => "fair",
            Grade::D => "poor",
            Grade::F => "fail",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self {
            Grade::A => "A",
            Grade::B => "B",
            Grade::C => "C",
            Grade::D => "D",
            Grade::F => "F",
        };
        f.write_str(letter)
    }
}

/// Academic point scale for AUC; each band includes its lower edge and
/// anything under 0.6 fails.
pub fn grade(auc: f64) -> Result<Grade> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(Error::InvalidParameter(format!("AUC {auc} outside [0, 1]")));
    }
    Ok(match auc {
        a if a >= 0.90 => Grade::A,
        a if a >= 0.80 => Grade::B,
        a if a >= 0.70 => Grade::C,
        a if a >= 0.60 => Grade::D,
        _ => Grade::F,
    })
}

/// One-vs-rest ROC analysis over several classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassRoc {
    pub classes: Vec<i32>,
    /// `None` where the class is absent from the truth (or is all of it).
    pub curves: Vec<Option<RocCurve>>,
    pub aucs: Vec<Option<f64>>,
    /// Unweighted mean over classes with a defined curve.
    pub macro_auc: Option<f64>,
    /// Set when any class was excluded from the macro mean.
    pub warning: bool,
}

/// `scores[s][c]` is sample `s`'s score for `classes[c]`.
pub fn multiclass_roc(scores: &[Vec<f64>], truth: &[i32], classes: &[i32]) -> Result<MulticlassRoc> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} score rows but {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != classes.len()) {
        return Err(Error::Dimension(format!(
            "score row has {} entries for {} classes",
            row.len(),
            classes.len()
        )));
    }
    if let Some(bad) = truth.iter().find(|t| !classes.contains(t)) {
        return Err(Error::Data(format!("label {bad} is not one of {classes:?}")));
    }
    let present = classes.iter().filter(|c| truth.contains(c)).count();
    if present < 2 {
        return Err(Error::Data(format!(
            "multiclass ROC needs at least 2 classes present, found {present}"
        )));
    }
    let mut curves = Vec::with_capacity(classes.len());
    let mut aucs = Vec::with_capacity(classes.len());
    for (ci, &c) in classes.iter().enumerate() {
        let col: Vec<f64> = scores.iter().map(|r| r[ci]).collect();
        let lab: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        match roc_curve(&col, &lab) {
            Ok(curve) => {
                aucs.push(Some(auc(&curve)));
                curves.push(Some(curve));
            }
            Err(Error::Data(_)) => {
                aucs.push(None);
                curves.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    let macro_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(MulticlassRoc {
        classes: classes.to_vec(),
        warning: defined.len() < classes.len(),
        curves,
        aucs,
        macro_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut num, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / pairs
    }

    #[test]
    fn confusion_examples() {
        let t = [1, 2, 1, 2, 1, 2, 1, 2, 1, 1];
        let m = confusion_matrix(&t, &t, &[1, 2]).unwrap();
        assert_eq!(m.counts, vec![vec![6, 0], vec![0, 4]]);
        assert_eq!(m.total(), 10);
        assert_eq!(m.accuracy(), Some(1.0));

        let m = confusion_matrix(&[1; 5], &[2; 5], &[1, 2]).unwrap();
        assert_eq!(m.counts, vec![vec![0, 5], vec![0, 0]]);
        assert_eq!(m.to_csv(), "true\\pred,1,2\n1,0,5\n2,0,0\n");

        assert!(confusion_matrix(&[1], &[1, 2], &[1, 2]).is_err());
        assert!(confusion_matrix(&[3], &[1], &[1, 2]).is_err());
    }

    #[test]
    fn confusion_matches_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t: Vec<i32> = (0..100).map(|_| rng.random_range(1..=3)).collect();
        let p: Vec<i32> = (0..100).map(|_| rng.random_range(1..=3)).collect();
        let m = confusion_matrix(&t, &p, &[1, 2, 3]).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                let n = t.iter().zip(&p).filter(|(a, b)| **a == i && **b == j).count() as u64;
                assert_eq!(m.counts[i as usize - 1][j as usize - 1], n);
            }
        }
        assert_eq!(m.total(), 100);
        let (tp, fp, tn, fn_) = m.one_vs_rest(0);
        assert_eq!(tp + fp + tn + fn_, 100);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(accuracy(45, 5, 45, 5).unwrap(), 0.9);
        assert_eq!(true_positive_rate(10, 0).unwrap(), 1.0);
        let r = binary_rates(30, 10, 40, 20);
        assert_eq!(r.tpr, Some(0.6));
        assert_eq!(r.fpr, Some(0.2));
        assert_eq!(r.accuracy, Some(0.7));
        let r = binary_rates(10, 0, 0, 0);
        assert_eq!((r.tpr, r.fpr), (Some(1.0), None));
        assert!(matches!(false_positive_rate(0, 0), Err(Error::UndefinedRate(_))));
        assert!(accuracy(0, 0, 0, 0).is_err());
    }

    #[test]
    fn roc_examples() {
        let labels = [true, true, false, false];
        let c = roc_curve(&[0.9, 0.8, 0.4, 0.3], &labels).unwrap();
        assert_eq!(
            c.points,
            vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_eq!(auc(&c), 1.0);

        let rev = roc_curve(&[0.3, 0.4, 0.8, 0.9], &labels).unwrap();
        assert_eq!(auc(&rev), 0.0);

        let flat = roc_curve(&[0.5; 4], &labels).unwrap();
        assert_eq!(flat.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&flat), 0.5);

        assert!(roc_curve(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_curve(&[f64::NAN, 0.2], &[true, false]).is_err());
        assert!(c.to_csv().starts_with("fpr,tpr\n0,0\n"));
    }

    #[test]
    fn auc_matches_pairwise_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let scores: Vec<f64> = (0..200).map(|_| rng.random_range(0..20) as f64 / 4.0).collect();
            let mut labels: Vec<bool> = (0..200).map(|_| rng.random()).collect();
            labels[0] = true;
            labels[1] = false;
            let a = auc(&roc_curve(&scores, &labels).unwrap());
            assert!((a - mann_whitney(&scores, &labels)).abs() <= 1e-12);
        }
    }

    #[test]
    fn grades() {
        assert_eq!(grade(0.95).unwrap(), Grade::A);
        assert_eq!(grade(0.90).unwrap(), Grade::A);
        assert_eq!(grade(1.0).unwrap(), Grade::A);
        assert_eq!(grade(0.85).unwrap(), Grade::B);
        assert_eq!(grade(0.80).unwrap(), Grade::B);
        assert_eq!(grade(0.75).unwrap(), Grade::C);
        assert_eq!(grade(0.65).unwrap(), Grade::D);
        assert_eq!(grade(0.55).unwrap(), Grade::F);
        assert_eq!(grade(0.2).unwrap(), Grade::F);
        assert!(grade(1.01).is_err());
        assert!(grade(-0.1).is_err());
        assert!(grade(f64::NAN).is_err());
    }

    #[test]
    fn multiclass_examples() {
        let classes = [1, 2, 3];
        let truth = [1, 2, 3, 1, 2, 3];
        let scores: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| classes.iter().map(|&c| if c == t { 1.0 } else { -1.0 }).collect())
            .collect();
        let r = multiclass_roc(&scores, &truth, &classes).unwrap();
        assert_eq!(r.aucs, vec![Some(1.0); 3]);
        assert_eq!(r.macro_auc, Some(1.0));
        assert!(!r.warning);

        let truth = [1, 2, 1, 2];
        let scores = vec![vec![0.9, 0.1, 0.3], vec![0.2, 0.8, 0.1], vec![0.7, 0.3, 0.5], vec![0.6, 0.4, 0.2]];
        let r = multiclass_roc(&scores, &truth, &classes).unwrap();
        assert!(r.warning);
        assert_eq!(r.aucs[2], None);
        assert_eq!(r.macro_auc, Some(1.0));

        assert!(multiclass_roc(&scores, &[1, 1, 1, 1], &classes).is_err());
    }

    #[test]
    fn multiclass_matches_pairwise_per_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let classes = [1, 2, 3];
        let truth: Vec<i32> = (0..300).map(|i| classes[i % 3]).collect();
        let scores: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let r = multiclass_roc(&scores, &truth, &classes).unwrap();
        for (ci, c) in classes.iter().enumerate() {
            let col: Vec<f64> = scores.iter().map(|s| s[ci]).collect();
            let lab: Vec<bool> = truth.iter().map(|t| t == c).collect();
            assert!((r.aucs[ci].unwrap() - mann_whitney(&col, &lab)).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn curve_shape_and_antisymmetry(
            raw in proptest::collection::vec((0i32..30, any::<bool>()), 2..120)
        ) {
            let mut scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64).collect();
            let mut labels: Vec<bool> = raw.iter().map(|(_, l)| *l).collect();
            labels[0] = true;
            labels[1] = false;
            scores.push(0.0);
            labels.push(true);
            let c = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(c.points[0], (0.0, 0.0));
            prop_assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
            for w in c.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let a = auc(&c);
            let b = auc(&roc_curve(&neg, &labels).unwrap());
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn rates_are_exact_rationals(tp in 0u64..1000, fp in 0u64..1000, tn in 0u64..1000, fn_ in 1u64..1000) {
            // cross-multiplied comparison avoids trusting float division
            let r = binary_rates(tp, fp, tn, fn_);
            let tpr = r.tpr.unwrap();
            prop_assert_eq!(tpr, tp as f64 / (tp + fn_) as f64);
            let acc = r.accuracy.unwrap();
            let total = tp + tn + fp + fn_;
            prop_assert!((acc * total as f64 - (tp + tn) as f64).abs() < 1e-9);
            let m = ConfusionMatrix { classes: vec![1, 2], counts: vec![vec![tp, fn_], vec![fp, tn]] };
            prop_assert_eq!(m.accuracy().unwrap(), acc);
        }
    }
}
