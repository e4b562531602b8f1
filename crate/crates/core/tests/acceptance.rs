//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use centrog::bgseg::{extract_blobs, GmmModel, GmmParams};
use centrog::census::{census_transform, centrist_of};
use centrog::eval::{auc, grade, roc_curve, Grade};
use centrog::hog::{hog_descriptor, HogParams};
use centrog::pipeline::synth::{moving_square_frames, synth_dataset};
use centrog::pipeline::{evaluate, split, train_pipeline, Dataset, RunConfig, Stage2Feature};
use centrog::svm::{primal_objective, train_binary_rows, TrainParams};
use centrog::{image::quantize, GrayImage, Parallelism};
use common::{census_codes, dual_qp, mann_whitney, random_image, rng, separable_problem, RefHog};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type RunFiles = (Vec<u8>, BTreeMap<String, Vec<u8>>);
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn census_oracle() -> Outcome {
    let worked = GrayImage::new(3, 3, vec![26, 75, 65, 26, 46, 22, 26, 40, 65]).unwrap();
    let code = census_transform(&worked).unwrap().codes()[0];
    ensure(code == 158, || format!("worked example gave {code}"))?;
    let mut r = rng(1);
    for i in 0..1000 {
        let img = random_image(&mut r, 8, 8, 255);
        let got = census_transform(&img).unwrap();
        ensure(got.codes() == census_codes(&img).as_slice(), || format!("image {i} differs"))?;
    }
    Ok("1000 images bitwise equal, worked example = 158".into())
}

fn centrist_invariance() -> Outcome {
    let mut r = rng(2);
    for i in 0..100 {
        let (w, h) = (r.random_range(8..40), r.random_range(8..40));
        let img = random_image(&mut r, w, h, 127);
        let base = centrist_of(&img, false).unwrap();
        for _ in 0..10 {
            let mut picks = sample(&mut r, 256, 128).into_vec();
            picks.sort_unstable();
            let mut lut = [255u8; 256];
            for (k, &v) in picks.iter().enumerate() {
                lut[k] = v as u8;
            }
            let mapped = centrist_of(&img.map_lut(&lut), false).unwrap();
            ensure(mapped == base, || format!("image {i} changed under a monotone map"))?;
        }
    }
    Ok("100 images x 10 strictly increasing maps, identical".into())
}

fn hog_reference() -> Outcome {
    let p = HogParams::default();
    let oracle = RefHog::default();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let img = random_image(&mut r, 64, 64, 255);
        let got = hog_descriptor(&img, &p).unwrap().values;
        let want = oracle.descriptor(&img);
        ensure(got.len() == want.len() && got.len() == 1764, || format!("image {i}: length {}", got.len()))?;
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;

    // vertical edge: horizontal gradient, 0 degrees; its transpose: 90 degrees
    let step = GrayImage::from_fn(16, 16, |x, _| if x < 8 { 0 } else { 255 }).unwrap();
    let flat = RefHog {
        block: 1,
        ..RefHog::default()
    };
    let mass = |img: &GrayImage| {
        let (_, _, h) = flat.cells(img);
        let mut m = [0.0; 9];
        for (i, v) in h.iter().enumerate() {
            m[i % 9] += v;
        }
        m
    };
    let single = HogParams {
        block_size: 1,
        ..p
    };
    let lib_mass = |img: &GrayImage| {
        let d = hog_descriptor(img, &single).unwrap().values;
        let mut m = [0.0; 9];
        for (i, v) in d.iter().enumerate() {
            m[i % 9] += v;
        }
        m
    };
    let v = lib_mass(&step);
    ensure(v[0] > 0.0 && v[1..].iter().all(|&x| x == 0.0), || format!("0 degree step: {v:?}"))?;
    let t = lib_mass(&step.transpose());
    let mid = t[4] + t[5];
    ensure(
        mid > 0.0 && t.iter().enumerate().all(|(k, &x)| k == 4 || k == 5 || x == 0.0),
        || format!("90 degree step: {t:?}"),
    )?;
    let (rv, rt) = (mass(&step), mass(&step.transpose()));
    ensure(rv[0] > 0.0 && rt[4] + rt[5] > 0.0, || "reference disagrees on steps".into())?;
    Ok(format!("50 images, max deviation {worst:.1e}; step pair dominant bins 0 and 90 degrees"))
}

fn check_weights(m: &GmmModel, frame: usize) -> Result<(), String> {
    for y in 0..m.height() {
        for x in 0..m.width() {
            let s: f64 = m.pixel(x, y).iter().map(|c| c.weight).sum();
            ensure((s - 1.0).abs() <= 1e-9, || format!("frame {frame} pixel ({x},{y}) weights sum {s}"))?;
        }
    }
    Ok(())
}

fn gmm_behaviour() -> Outcome {
    let mut r = rng(4);
    let noise = Normal::new(100.0, 5.0).unwrap();
    let mut m = GmmModel::new(64, 64, GmmParams::default()).unwrap();
    let (mut fg, mut px) = (0usize, 0usize);
    for t in 0..200 {
        let frame = GrayImage::from_fn(64, 64, |_, _| quantize(noise.sample(&mut r))).unwrap();
        let mask = m.update(&frame).unwrap();
        check_weights(&m, t)?;
        if t >= 150 {
            fg += mask.foreground_count();
            px += 64 * 64;
        }
    }
    let rate = fg as f64 / px as f64;
    ensure(rate < 0.01, || format!("noise foreground rate {rate}"))?;

    let (frames, truth) = moving_square_frames(64, 48, 200, 100, 12, 4);
    let mut m = GmmModel::new(64, 48, GmmParams::default()).unwrap();
    let mut ious = Vec::new();
    for (t, (f, tr)) in frames.iter().zip(&truth).enumerate() {
        let mask = m.update(f).unwrap();
        check_weights(&m, t)?;
        if let Some(tr) = tr {
            let blobs = extract_blobs(&mask, 20);
            ious.push(blobs.first().map(|b| b.iou(tr)).unwrap_or(0.0));
        }
    }
    let mean = ious.iter().sum::<f64>() / ious.len() as f64;
    ensure(mean >= 0.7, || format!("mean IoU {mean}"))?;
    Ok(format!("noise foreground {:.3}%, square mean IoU {mean:.3}", rate * 100.0))
}

fn svm_optimality() -> Outcome {
    let p = TrainParams {
        c: 1e6,
        tol: 1e-10,
        ..TrainParams::default()
    };
    let xs = [[-1.0, 0.0], [1.0, 0.0]];
    let rows: Vec<&[f64]> = xs.iter().map(|r| r.as_slice()).collect();
    let fit = train_binary_rows(&rows, &[-1.0, 1.0], &p, Parallelism::Sequential).map_err(|e| e.to_string())?;
    let (w, b) = (&fit.model.weights, fit.model.bias);
    ensure(
        (w[0] - 1.0).abs() <= 1e-3 && w[1].abs() <= 1e-3 && b.abs() <= 1e-3,
        || format!("2-point problem gave w={w:?} b={b}"),
    )?;

    let mut r = rng(5);
    let mut worst = 0.0f64;
    for k in 0..25 {
        let (x, y) = separable_problem(&mut r, 10, 0.05);
        let rows: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
        let fit = train_binary_rows(&rows, &y, &p, Parallelism::Sequential).map_err(|e| e.to_string())?;
        let ours = primal_objective(&fit.model.weights, fit.model.bias, p.c, &rows, &y);
        let (best, _) = dual_qp(&x, &y, p.c);
        let rel = (ours - best).abs() / best.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("problem {k}: objective {ours} vs oracle {best}"))?;
    }
    Ok(format!("25 problems, worst relative gap {worst:.1e}; 2-point w=(1,0) b=0"))
}

fn auc_oracle() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let mut labels: Vec<bool> = (0..200).map(|_| r.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        // coarse scores so ties occur
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| ((r.random_range(0.0f64..1.0) + if l { 0.3 } else { 0.0 }) * 20.0).round() / 20.0)
            .collect();
        let a = auc(&roc_curve(&scores, &labels).unwrap());
        let want = mann_whitney(&scores, &labels);
        worst = worst.max((a - want).abs());
        ensure((a - want).abs() <= 1e-12, || format!("set {k}: {a} vs {want}"))?;
    }
    let bands = [(0.95, Grade::A), (0.85, Grade::B), (0.75, Grade::C), (0.65, Grade::D), (0.55, Grade::F)];
    for (a, g) in bands {
        let got = grade(a).unwrap();
        ensure(got == g, || format!("grade({a}) = {got}"))?;
    }
    Ok(format!("100 sets, worst deviation {worst:.1e}; bands A..F reproduce"))
}

fn stage1_gate() -> Outcome {
    let ds = synth_dataset(300, 7, Parallelism::default());
    ensure(ds.len() == 1500, || format!("{} crops", ds.len()))?;
    let cfg = RunConfig {
        seed: 7,
        ..RunConfig::default()
    };
    let (train, test) = split(&ds, cfg.split_ratio, cfg.seed).unwrap();
    let m = train_pipeline(&train, &cfg).map_err(|e| e.to_string())?;
    let r = evaluate(&m, &test).map_err(|e| e.to_string())?;
    let acc = r.stage1.accuracy;
    let a = r.stage1.macro_auc().unwrap_or(0.0);
    ensure(acc == 1.0 && a == 1.0, || format!("accuracy {acc}, AUC {a}"))?;
    Ok(format!("{} test crops, accuracy {acc}, AUC {a}", test.len()))
}

fn type_accuracy(train: &Dataset, test: &Dataset, feature: Stage2Feature, seed: u64) -> Result<[f64; 2], String> {
    let cfg = RunConfig {
        seed,
        stage2_feature: feature,
        ..RunConfig::default()
    };
    let m = train_pipeline(train, &cfg).map_err(|e| e.to_string())?;
    let r = evaluate(&m, test).map_err(|e| e.to_string())?;
    Ok([r.day.unwrap().accuracy, r.night.unwrap().accuracy])
}

fn centrog_vs_centrist() -> Outcome {
    let mut wins = [0; 2];
    let mut rows = Vec::new();
    for seed in 0..5u64 {
        let ds = synth_dataset(240, 100 + seed, Parallelism::default());
        let (train, test) = split(&ds, 0.75, seed).unwrap();
        let g = type_accuracy(&train, &test, Stage2Feature::Centrog, seed)?;
        let c = type_accuracy(&train, &test, Stage2Feature::Centrist, seed)?;
        for k in 0..2 {
            if g[k] >= c[k] {
                wins[k] += 1;
            }
        }
        rows.push(format!("day {:.3}/{:.3} night {:.3}/{:.3}", g[0], c[0], g[1], c[1]));
    }
    ensure(wins[0] >= 3 && wins[1] >= 3, || format!("wins {wins:?}: {}", rows.join("; ")))?;
    Ok(format!("CENTROG >= CENTRIST on {}/5 day and {}/5 night seeds [{}]", wins[0], wins[1], rows.join("; ")))
}

fn run_once(dir: &std::path::Path) -> Result<RunFiles, String> {
    let ds = synth_dataset(60, 11, Parallelism::default());
    let cfg = RunConfig {
        seed: 11,
        ..RunConfig::default()
    };
    let (train, test) = split(&ds, cfg.split_ratio, cfg.seed).map_err(|e| e.to_string())?;
    let m = train_pipeline(&train, &cfg).map_err(|e| e.to_string())?;
    let model_path = dir.join("model.bin");
    m.save(&model_path).map_err(|e| e.to_string())?;
    let report = evaluate(&m, &test).map_err(|e| e.to_string())?;
    report.write(&dir.join("report"), true).map_err(|e| e.to_string())?;
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir.join("report")).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        files.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&p).map_err(|e| e.to_string())?,
        );
    }
    Ok((std::fs::read(&model_path).map_err(|e| e.to_string())?, files))
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ma, ra) = run_once(a.path())?;
    let (mb, rb) = run_once(b.path())?;
    ensure(ma == mb, || "model bytes differ".into())?;
    ensure(ra == rb, || "report files differ".into())?;
    Ok(format!("model ({} bytes) and {} report files byte-identical", ma.len(), ra.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("census transform oracle", Duration::from_secs(1), census_oracle),
        ("CENTRIST monotone invariance", Duration::from_secs(5), centrist_invariance),
        ("HOG reference equivalence", Duration::from_secs(10), hog_reference),
        ("GMM behaviour", Duration::from_secs(30), gmm_behaviour),
        ("SVM optimality", Duration::from_secs(10), svm_optimality),
        ("AUC oracle and grades", Duration::from_secs(5), auc_oracle),
        ("day/night gate", Duration::from_secs(60), stage1_gate),
        ("CENTROG vs CENTRIST", Duration::from_secs(180), centrog_vs_centrist),
        ("end-to-end determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let out = match out {
            Ok(msg) if took > *limit => Err(format!("{msg}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match out {
            Ok(msg) => println!("PASS {} {name} ({took:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
