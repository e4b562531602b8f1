//! Linear soft-margin SVM and its one-vs-rest multiclass extension.
//!
//! The binary trainer solves the dual of
//! `min 1/2 |w|^2 + C * sum max(0, 1 - y (w.x + b))` with sequential minimal
//! optimization using second-order working-set selection. It stops when the
//! maximal KKT violation of the dual drops below `tol`; the final check is
//! made on gradients recomputed from scratch so accumulated rounding cannot
//! certify a point that is not optimal.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::hog::{EdgeMethod, EdgeParams, HogParams};
use crate::image::Descriptor;
use crate::par::{self, Parallelism};

const TAU: f64 = 1e-12;
/// Above this many samples the Gram matrix is not cached.
const GRAM_CACHE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Descriptors with integer label codes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledSet {
    pub samples: Vec<Descriptor>,
    pub labels: Vec<i32>,
}

impl LabeledSet {
    pub fn new(samples: Vec<Descriptor>, labels: Vec<i32>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
                return Err(Error::Dimension(format!(
                    "descriptor lengths differ: {} vs {}",
                    first.len(),
                    bad.len()
                )));
            }
        }
        Ok(LabeledSet { samples, labels })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct labels, ascending.
    pub fn classes(&self) -> Vec<i32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn rows(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|d| d.values.as_slice()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub iterations: u64,
    /// Primal objective at the returned (w, b).
    pub objective: f64,
}

impl SvmModel {
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// `w.x + b`.
pub fn decision_value(m: &SvmModel, x: &Descriptor) -> Result<f64> {
    if x.len() != m.weights.len() {
        return Err(Error::Dimension(format!(
            "descriptor has {} values, model expects {}",
            x.len(),
            m.weights.len()
        )));
    }
    Ok(m.score(&x.values))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Primal soft-margin objective of `(w, b)` on `(x, y)`.
pub fn primal_objective(w: &[f64], b: f64, c: f64, x: &[&[f64]], y: &[f64]) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

/// Kernel rows, cached as a full Gram matrix when it fits.
struct Gram<'a> {
    x: Vec<&'a [f64]>,
    cache: Option<Vec<f64>>,
    diag: Vec<f64>,
}

impl<'a> Gram<'a> {
    fn new(x: Vec<&'a [f64]>, mode: Parallelism) -> Self {
        let n = x.len();
        let diag = x.iter().map(|r| dot(r, r)).collect();
        let cache = (n <= GRAM_CACHE_LIMIT).then(|| {
            let rows = par::map_range(mode, n, |i| {
                (0..n).map(|j| dot(x[i], x[j])).collect::<Vec<_>>()
            });
            rows.concat()
        });
        Gram { x, cache, diag }
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    fn row_into(&self, i: usize, out: &mut Vec<f64>) {
        out.clear();
        match &self.cache {
            Some(k) => {
                let n = self.len();
                out.extend_from_slice(&k[i * n..(i + 1) * n]);
            }
            None => out.extend(self.x.iter().map(|r| dot(self.x[i], r))),
        }
    }
}

/// Result of a binary training run, with the dual solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub model: SvmModel,
    pub alpha: Vec<f64>,
    pub kkt_residual: f64,
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal KKT violation `max_{I_up} -y G - min_{I_low} -y G` of a dual point,
/// with gradients computed directly from the data.
pub fn dual_kkt_residual(x: &[&[f64]], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let w = reconstruct_weights(x, y, alpha);
    let grad: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi * dot(&w, xi) - 1.0).collect();
    violation(&grad, y, alpha, c).0
}

fn violation(grad: &[f64], y: &[f64], alpha: &[f64], c: f64) -> (f64, f64, f64) {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    for t in 0..grad.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) {
            gmax = gmax.max(v);
        }
        if in_low(alpha[t], y[t], c) {
            gmin = gmin.min(v);
        }
    }
    (gmax - gmin, gmax, gmin)
}

fn reconstruct_weights(x: &[&[f64]], y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let d = x.first().map_or(0, |r| r.len());
    let mut w = vec![0.0; d];
    for ((xi, yi), ai) in x.iter().zip(y).zip(alpha) {
        if *ai != 0.0 {
            let s = ai * yi;
            w.iter_mut().zip(xi.iter()).for_each(|(wk, xk)| *wk += s * xk);
        }
    }
    w
}

/// Bias from the dual: the mean of `y G` over free vectors, else the middle
/// of the feasible interval.
fn dual_bias(grad: &[f64], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..grad.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Bias minimizing the primal hinge sum for a fixed `w`. The sum is
/// piecewise linear and convex in `b`, so the optimum sits at a breakpoint.
fn best_bias(scores: &[f64], y: &[f64], c: f64, start: f64) -> f64 {
    let hinge = |b: f64| -> f64 {
        scores
            .iter()
            .zip(y)
            .map(|(s, yi)| (1.0 - yi * (s + b)).max(0.0))
            .sum::<f64>()
            * c
    };
    let mut best = (hinge(start), start);
    for (s, yi) in scores.iter().zip(y) {
        let b = yi - s;
        let h = hinge(b);
        if h < best.0 {
            best = (h, b);
        }
    }
    best.1
}

fn smo(gram: &Gram, y: &[f64], p: &TrainParams) -> Result<(Vec<f64>, u64, f64)> {
    let n = gram.len();
    let c = p.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut ki = Vec::with_capacity(n);
    let mut kj = Vec::with_capacity(n);
    let mut iter = 0u64;
    let mut recomputed = false;
    loop {
        let (gap, gmax, _) = violation(&grad, y, &alpha, c);
        if gap < p.tol {
            if recomputed {
                return Ok((alpha, iter, gap));
            }
            // confirm on fresh gradients before accepting
            let w = reconstruct_weights(&gram.x, y, &alpha);
            for t in 0..n {
                grad[t] = y[t] * dot(&w, gram.x[t]) - 1.0;
            }
            recomputed = true;
            continue;
        }
        recomputed = false;
        if iter >= p.max_iter {
            return Err(Error::Convergence {
                iterations: iter,
                residual: gap,
            });
        }
        iter += 1;

        let i = (0..n)
            .filter(|&t| in_up(alpha[t], y[t], c))
            .find(|&t| -y[t] * grad[t] == gmax)
            .expect("gap is finite, so I_up is non-empty");
        gram.row_into(i, &mut ki);

        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t], c) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let a = (gram.diag[i] + gram.diag[t] - 2.0 * ki[t]).max(TAU);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            // no feasible descent pair; the gap is pure rounding
            return Ok((alpha, iter, gap));
        }
        gram.row_into(j, &mut kj);

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let (yi, yj) = (y[i], y[j]);
        let quad = (gram.diag[i] + gram.diag[j] - 2.0 * ki[j]).max(TAU);
        let (mut ai, mut aj) = (ai_old, aj_old);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - ai_old, aj - aj_old);
        for t in 0..n {
            grad[t] += y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        }
    }
}

fn fit(gram: &Gram, y: &[f64], p: &TrainParams) -> Result<BinaryFit> {
    let (alpha, iterations, _) = smo(gram, y, p)?;
    let w = reconstruct_weights(&gram.x, y, &alpha);
    let scores: Vec<f64> = gram.x.iter().map(|xi| dot(&w, xi)).collect();
    let grad: Vec<f64> = scores.iter().zip(y).map(|(s, yi)| yi * s - 1.0).collect();
    let kkt_residual = violation(&grad, y, &alpha, p.c).0;
    let mut w = w;
    let mut b = best_bias(&scores, y, p.c, dual_bias(&grad, y, &alpha, p.c));
    let mut objective = primal_objective(&w, b, p.c, &gram.x, y);
    // rounding can leave margins a hair under 1; try the rescaled plane that
    // clears them all
    let m = scores
        .iter()
        .zip(y)
        .map(|(s, yi)| yi * (s + b))
        .fold(f64::INFINITY, f64::min);
    if m > 0.0 && m < 1.0 {
        let ws: Vec<f64> = w.iter().map(|v| v / m).collect();
        let bs = b / m;
        let o = primal_objective(&ws, bs, p.c, &gram.x, y);
        if o < objective {
            (w, b, objective) = (ws, bs, o);
        }
    }
    Ok(BinaryFit {
        model: SvmModel {
            weights: w,
            bias: b,
            c: p.c,
            iterations,
            objective,
        },
        alpha,
        kkt_residual,
    })
}

fn check_binary(x: &[&[f64]], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} samples but {} labels", x.len(), y.len())));
    }
    if let Some(bad) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::InvalidParameter(format!("binary labels must be +1/-1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Data("binary training needs both classes".into()));
    }
    if let Some(first) = x.first() {
        if x.iter().any(|r| r.len() != first.len()) {
            return Err(Error::Dimension("descriptor lengths differ".into()));
        }
    }
    Ok(())
}

/// Trains on raw rows with labels in {-1, +1}.
pub fn train_binary_rows(
    x: &[&[f64]],
    y: &[f64],
    p: &TrainParams,
    mode: Parallelism,
) -> Result<BinaryFit> {
    p.validate()?;
    check_binary(x, y)?;
    fit(&Gram::new(x.to_vec(), mode), y, p)
}

/// Trains a binary model; labels must be -1 or +1.
pub fn train_binary(data: &LabeledSet, p: &TrainParams) -> Result<SvmModel> {
    let y: Vec<f64> = data.labels.iter().map(|&l| l as f64).collect();
    train_binary_rows(&data.rows(), &y, p, Parallelism::default()).map(|f| f.model)
}

/// Per-dimension min-max scaling fitted on training descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(samples: &[Descriptor]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Data("cannot fit a scaler on no samples".into()))?;
        let mut min = first.values.clone();
        let mut max = first.values.clone();
        for s in &samples[1..] {
            for (k, v) in s.values.iter().enumerate() {
                min[k] = min[k].min(*v);
                max[k] = max[k].max(*v);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    /// Ascending label codes.
    pub classes: Vec<i32>,
    pub models: Vec<SvmModel>,
    pub feature: FeatureSpec,
    pub scaler: Option<MinMaxScaler>,
}

impl MulticlassModel {
    pub fn descriptor_len(&self) -> usize {
        self.models.first().map_or(0, |m| m.weights.len())
    }

    fn check(&self, x: &Descriptor) -> Result<()> {
        if x.kind != self.feature.kind() {
            return Err(Error::Dimension(format!(
                "model expects {} descriptors, got {}",
                self.feature.kind().as_str(),
                x.kind.as_str()
            )));
        }
        if x.len() != self.descriptor_len() {
            return Err(Error::Dimension(format!(
                "descriptor has {} values, model expects {} ({})",
                x.len(),
                self.descriptor_len(),
                self.feature
            )));
        }
        Ok(())
    }

    /// One decision value per class, in `classes` order.
    pub fn decision_values(&self, x: &Descriptor) -> Result<Vec<f64>> {
        self.check(x)?;
        let scaled;
        let v = match &self.scaler {
            Some(s) => {
                scaled = s.transform(&x.values);
                scaled.as_slice()
            }
            None => x.values.as_slice(),
        };
        Ok(self.models.iter().map(|m| m.score(v)).collect())
    }

    pub fn predict(&self, x: &Descriptor) -> Result<i32> {
        let scores = self.decision_values(x)?;
        Ok(self.classes[argmax(&scores)])
    }
}

/// Index of the largest value; the first wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn predict(m: &MulticlassModel, x: &Descriptor) -> Result<i32> {
    m.predict(x)
}

/// One-vs-rest training, one binary problem per class, sharing a single
/// Gram matrix. Descriptors must match `feature`.
pub fn train_multiclass(
    data: &LabeledSet,
    feature: FeatureSpec,
    p: &TrainParams,
    scale: bool,
    mode: Parallelism,
) -> Result<MulticlassModel> {
    p.validate()?;
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "multiclass training needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    let expected = feature.descriptor_len()?;
    if let Some(bad) = data
        .samples
        .iter()
        .find(|d| d.kind != feature.kind() || d.len() != expected)
    {
        return Err(Error::Dimension(format!(
            "training descriptor ({}, {} values) does not match {feature}",
            bad.kind.as_str(),
            bad.len()
        )));
    }
    let scaler = if scale {
        Some(MinMaxScaler::fit(&data.samples)?)
    } else {
        None
    };
    let scaled: Vec<Vec<f64>>;
    let rows: Vec<&[f64]> = match &scaler {
        Some(s) => {
            scaled = data.samples.iter().map(|d| s.transform(&d.values)).collect();
            scaled.iter().map(Vec::as_slice).collect()
        }
        None => data.rows(),
    };
    let gram = Gram::new(rows, mode);
    let fits = par::map(mode, &classes, |&class| {
        let y: Vec<f64> = data
            .labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        fit(&gram, &y, p)
    });
    let models = fits
        .into_iter()
        .map(|f| f.map(|f| f.model))
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel {
        classes,
        models,
        feature,
        scaler,
    })
}

// ---- persistence ----

pub const MODEL_MAGIC: &[u8; 8] = b"CTGMODEL";
pub const MODEL_VERSION: u32 = 1;

pub(crate) struct ByteWriter(pub Vec<u8>);

impl ByteWriter {
    pub(crate) fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    pub(crate) fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn bytes(&mut self, v: &[u8]) {
        self.0.extend_from_slice(v);
    }
    pub(crate) fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.0);
        self.u32(crc);
        self.0
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| {
            Error::Truncated(format!("{what} needs {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        self.array(what).map(u16::from_le_bytes)
    }
    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        self.array(what).map(u32::from_le_bytes)
    }
    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        self.array(what).map(u64::from_le_bytes)
    }
    pub(crate) fn i32(&mut self, what: &str) -> Result<i32> {
        self.array(what).map(i32::from_le_bytes)
    }
    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        self.array(what).map(f64::from_le_bytes)
    }

    /// Checks the magic and version tag at the start of a container.
    pub(crate) fn header(&mut self, magic: &[u8; 8], version: u32) -> Result<()> {
        let found = self.take(8, "magic")?;
        if found != magic {
            return Err(Error::Magic(format!(
                "expected {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(found)
            )));
        }
        let v = self.u32("version")?;
        if v != version {
            return Err(Error::Version {
                found: v,
                expected: version,
            });
        }
        Ok(())
    }

    /// Verifies that exactly the trailing CRC32 remains and matches.
    pub(crate) fn finish(mut self) -> Result<()> {
        let body_end = self.pos;
        let stored = self.u32("checksum")?;
        if self.pos != self.buf.len() {
            return Err(Error::Data(format!(
                "{} unexpected trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        let computed = crc32fast::hash(&self.buf[..body_end]);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        Ok(())
    }
}

fn to_u32(v: usize, what: &str) -> u32 {
    u32::try_from(v).unwrap_or_else(|_| panic!("{what} {v} exceeds the model format"))
}

fn write_feature(w: &mut ByteWriter, f: &FeatureSpec) {
    match *f {
        FeatureSpec::Histogram { bins } => {
            w.u8(0);
            w.u32(to_u32(bins, "bins"));
        }
        FeatureSpec::Centrist { width, height } => {
            w.u8(1);
            w.u32(to_u32(width, "width"));
            w.u32(to_u32(height, "height"));
        }
        FeatureSpec::Centrog {
            width,
            height,
            edge,
            hog,
        } => {
            w.u8(2);
            w.u32(to_u32(width, "width"));
            w.u32(to_u32(height, "height"));
            w.u16(edge.threshold);
            w.u8(match edge.method {
                EdgeMethod::SobelMagnitude => 0,
            });
            w.u32(to_u32(hog.cell_size, "cell_size"));
            w.u32(to_u32(hog.block_size, "block_size"));
            w.u32(to_u32(hog.block_stride, "block_stride"));
            w.u32(to_u32(hog.orientation_bins, "orientation_bins"));
            w.u8(hog.signed_gradients as u8);
            w.f64(hog.l2_epsilon);
        }
    }
}

fn read_feature(r: &mut ByteReader) -> Result<FeatureSpec> {
    let spec = match r.u8("feature kind")? {
        0 => FeatureSpec::Histogram {
            bins: r.u32("bins")? as usize,
        },
        1 => FeatureSpec::Centrist {
            width: r.u32("width")? as usize,
            height: r.u32("height")? as usize,
        },
        2 => {
            let width = r.u32("width")? as usize;
            let height = r.u32("height")? as usize;
            let threshold = r.u16("edge threshold")?;
            let method = match r.u8("edge method")? {
                0 => EdgeMethod::SobelMagnitude,
                m => return Err(Error::Data(format!("unknown edge method {m}"))),
            };
            let hog = HogParams {
                cell_size: r.u32("cell_size")? as usize,
                block_size: r.u32("block_size")? as usize,
                block_stride: r.u32("block_stride")? as usize,
                orientation_bins: r.u32("orientation_bins")? as usize,
                signed_gradients: r.u8("signed")? != 0,
                l2_epsilon: r.f64("l2_epsilon")?,
            };
            FeatureSpec::Centrog {
                width,
                height,
                edge: EdgeParams { threshold, method },
                hog,
            }
        }
        k => return Err(Error::Data(format!("unknown feature kind {k}"))),
    };
    Ok(spec)
}

pub(crate) fn write_model_body(w: &mut ByteWriter, m: &MulticlassModel) {
    write_feature(w, &m.feature);
    let len = m.descriptor_len();
    w.u32(to_u32(len, "descriptor length"));
    match &m.scaler {
        Some(s) => {
            w.u8(1);
            s.min.iter().for_each(|v| w.f64(*v));
            s.max.iter().for_each(|v| w.f64(*v));
        }
        None => w.u8(0),
    }
    w.u32(to_u32(m.classes.len(), "class count"));
    for (label, model) in m.classes.iter().zip(&m.models) {
        w.i32(*label);
        w.f64(model.bias);
        w.f64(model.c);
        w.u64(model.iterations);
        w.f64(model.objective);
        w.u32(to_u32(model.weights.len(), "weight length"));
        model.weights.iter().for_each(|v| w.f64(*v));
    }
}

fn read_f64s(r: &mut ByteReader, n: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = r.take(n.saturating_mul(8), what)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn read_model_body(r: &mut ByteReader) -> Result<MulticlassModel> {
    let feature = read_feature(r)?;
    let len = r.u32("descriptor length")? as usize;
    let scaler = match r.u8("scaler flag")? {
        0 => None,
        1 => Some(MinMaxScaler {
            min: read_f64s(r, len, "scaler minima")?,
            max: read_f64s(r, len, "scaler maxima")?,
        }),
        f => return Err(Error::Data(format!("bad scaler flag {f}"))),
    };
    let count = r.u32("class count")? as usize;
    let mut classes = Vec::new();
    let mut models = Vec::new();
    for _ in 0..count {
        classes.push(r.i32("label")?);
        let bias = r.f64("bias")?;
        let c = r.f64("C")?;
        let iterations = r.u64("iterations")?;
        let objective = r.f64("objective")?;
        let n = r.u32("weight length")? as usize;
        if n != len {
            return Err(Error::Data(format!(
                "weight length {n} disagrees with descriptor length {len}"
            )));
        }
        let weights = read_f64s(r, n, "weights")?;
        models.push(SvmModel {
            weights,
            bias,
            c,
            iterations,
            objective,
        });
    }
    Ok(MulticlassModel {
        classes,
        models,
        feature,
        scaler,
    })
}

pub fn model_to_bytes(m: &MulticlassModel) -> Vec<u8> {
    let mut w = ByteWriter(Vec::new());
    w.bytes(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    write_model_body(&mut w, m);
    w.finish()
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<MulticlassModel> {
    let mut r = ByteReader::new(bytes);
    r.header(MODEL_MAGIC, MODEL_VERSION)?;
    let m = read_model_body(&mut r)?;
    r.finish()?;
    Ok(m)
}

pub fn save_model(m: &MulticlassModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_bytes(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MulticlassModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
