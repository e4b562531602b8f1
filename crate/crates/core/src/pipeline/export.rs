use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::dataset::{Dataset, Item};
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::census::census_transform;
use crate::hog::edge_map;
use crate::image::{resize_bilinear, DescriptorKind, GrayImage};
use crate::par::Parallelism;

/// Feature CSV: a header `label,code,v1,...,vD`, then one row per item.
/// `label` is `regime/type`; `code` is the regime code for histograms and
/// the type code otherwise. Values print in shortest round-trip form.
pub fn feature_csv(ds: &Dataset, spec: FeatureSpec, mode: Parallelism) -> Result<String> {
    let imgs: Vec<&GrayImage> = ds.items.iter().map(|i| &i.image).collect();
    let descs = spec.extract_batch(&imgs, mode)?;
    let dim = spec.descriptor_len()?;
    let mut s = String::from("label,code");
    for k in 1..=dim {
        write!(s, ",v{k}").unwrap();
    }
    s.push('\n');
    for (item, d) in ds.items.iter().zip(&descs) {
        write!(s, "{},{}", item.class_name(), code(item, spec)).unwrap();
        for v in &d.values {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

fn code(item: &Item, spec: FeatureSpec) -> i32 {
    match spec.kind() {
        DescriptorKind::IntensityHistogram => item.regime.code(),
        _ => item.label,
    }
}

pub fn write_feature_csv(ds: &Dataset, spec: FeatureSpec, path: &Path) -> Result<()> {
    let body = feature_csv(ds, spec, Parallelism::default())?;
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// The rasters a descriptor is computed from, named by step: `resized`,
/// then `edge` (CENTROG only) and `census`. Empty for histograms.
pub fn intermediate_rasters(spec: FeatureSpec, img: &GrayImage) -> Result<Vec<(&'static str, GrayImage)>> {
    let mut out = Vec::new();
    let ct_input = match spec {
        FeatureSpec::Histogram { .. } => return Ok(out),
        FeatureSpec::Centrist { width, height } => {
            let r = resize_bilinear(img, width, height)?;
            out.push(("resized", r.clone()));
            r
        }
        FeatureSpec::Centrog { width, height, edge, .. } => {
            let r = resize_bilinear(img, width, height)?;
            let e = edge_map(&r, &edge)?;
            out.push(("resized", r));
            out.push(("edge", e.clone()));
            e
        }
    };
    out.push(("census", census_transform(&ct_input)?.to_gray()));
    Ok(out)
}
