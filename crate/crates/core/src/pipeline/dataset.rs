use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::pnm;

/// Capture condition; the code is the stage-1 label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    Day,
    Night,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Day, Regime::Night];

    pub fn code(self) -> i32 {
        match self {
            Regime::Day => 1,
            Regime::Night => 2,
        }
    }

    pub fn from_code(code: i32) -> Result<Regime> {
        match code {
            1 => Ok(Regime::Day),
            2 => Ok(Regime::Night),
            c => Err(Error::Data(format!("unknown regime code {c}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Day => "day",
            Regime::Night => "night",
        }
    }

    /// Vehicle types recognised in this regime, as `(folder name, code)`.
    pub fn classes(self) -> &'static [(&'static str, i32)] {
        match self {
            Regime::Day => &[("car", 1), ("jeep", 2), ("truck", 3)],
            Regime::Night => &[("car", 1), ("truck", 2)],
        }
    }

    pub fn class_codes(self) -> Vec<i32> {
        self.classes().iter().map(|(_, c)| *c).collect()
    }

    pub fn class_name(self, code: i32) -> Option<&'static str> {
        self.classes().iter().find(|(_, c)| *c == code).map(|(n, _)| *n)
    }

    pub fn class_code(self, name: &str) -> Option<i32> {
        self.classes().iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    /// File path, or a synthetic identifier.
    pub source: String,
    pub regime: Regime,
    /// Vehicle type code within the regime.
    pub label: i32,
    pub image: GrayImage,
}

impl Item {
    pub fn class_name(&self) -> String {
        format!(
            "{}/{}",
            self.regime,
            self.regime.class_name(self.label).unwrap_or("?")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub items: Vec<Item>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn regime(&self, regime: Regime) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |i| i.regime == regime)
    }

    pub fn has_regime(&self, regime: Regime) -> bool {
        self.items.iter().any(|i| i.regime == regime)
    }

    /// Per-class counts keyed by (regime, label).
    pub fn class_counts(&self) -> BTreeMap<(Regime, i32), usize> {
        let mut m = BTreeMap::new();
        for it in &self.items {
            *m.entry((it.regime, it.label)).or_insert(0) += 1;
        }
        m
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for e in rd {
        out.push(e.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("pgm" | "ppm" | "PGM" | "PPM")
    )
}

/// Lists `*.pgm` / `*.ppm` files of a directory in lexicographic order.
pub fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_file() && is_image(p))
        .collect())
}

/// Loads `root/{day,night}/{class}/*.pgm|ppm`. Items come out in path order.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let mut items = Vec::new();
    for regime_dir in sorted_entries(root)? {
        if !regime_dir.is_dir() {
            continue;
        }
        let name = regime_dir.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let regime = match name {
            "day" => Regime::Day,
            "night" => Regime::Night,
            other => {
                return Err(Error::Data(format!(
                    "unknown regime folder '{other}' in {}",
                    root.display()
                )))
            }
        };
        for class_dir in sorted_entries(&regime_dir)? {
            if !class_dir.is_dir() {
                continue;
            }
            let cname = class_dir.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let label = regime.class_code(cname).ok_or_else(|| {
                Error::Data(format!("unknown {regime} class folder '{cname}'"))
            })?;
            let files = image_files(&class_dir)?;
            if files.is_empty() {
                return Err(Error::Data(format!(
                    "class folder {regime}/{cname} contains no images"
                )));
            }
            for f in files {
                let image = pnm::read_gray(&f)?;
                items.push(Item {
                    source: f.display().to_string(),
                    regime,
                    label,
                    image,
                });
            }
        }
    }
    if items.is_empty() {
        return Err(Error::Data(format!("no images under {}", root.display())));
    }
    Ok(Dataset { items })
}

/// Stratified split: each (regime, type) class is shuffled with a generator
/// seeded from `seed` and its first `floor(ratio * n)` members (at least one,
/// at most `n - 1`) go to training. Both halves keep dataset order.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut groups: BTreeMap<(Regime, i32), Vec<usize>> = BTreeMap::new();
    for (i, it) in ds.items.iter().enumerate() {
        groups.entry((it.regime, it.label)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; ds.items.len()];
    for ((regime, label), mut idx) in groups {
        let n = idx.len();
        if n < 2 {
            return Err(Error::Data(format!(
                "class {regime}/{} has {n} item(s); stratified split needs 2",
                regime.class_name(label).unwrap_or("?")
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = ((ratio * n as f64).floor() as usize).clamp(1, n - 1);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Dataset::default(), Dataset::default());
    for (it, t) in ds.items.iter().zip(in_train) {
        if t {
            train.items.push(it.clone());
        } else {
            test.items.push(it.clone());
        }
    }
    Ok((train, test))
}
