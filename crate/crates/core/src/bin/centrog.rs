use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use centrog::pipeline::{
    classify_image, evaluate_with, feature_csv, intermediate_rasters, load_dataset, run_segmentation, split,
    synth::write_synth_dataset, train_pipeline_with, PipelineModel, RunConfig, SegmentOptions, Stage2Feature,
};
use centrog::{pnm, Error, Parallelism, Result};

#[derive(Parser)]
#[command(name = "centrog", version, about = "Two-stage day/night vehicle type recognition")]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the gate and both type classifiers on the training split of a dataset tree.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one image.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Evaluate a model and write the report files.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Evaluate only the held-out split produced by this config's ratio and seed.
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Also write gnuplot data files.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Background subtraction over a directory of ordered frames.
    Segment {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// GMM, blob and morphology settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Export every blob resized to WxH, e.g. 96x64.
        #[arg(long, value_parser = parse_geometry)]
        crop: Option<(usize, usize)>,
    },
    /// Write descriptors of every dataset image as CSV.
    Extract {
        #[arg(long, value_enum)]
        feature: FeatureArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Descriptor geometry and parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write each image's intermediate edge and census rasters as PGM here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Generate a synthetic dataset tree with N crops per class.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureArg {
    Histogram,
    Centrist,
    Centrog,
}

fn parse_geometry(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    let w: usize = w.parse().map_err(|_| "bad width")?;
    let h: usize = h.parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("geometry must be positive".into());
    }
    Ok((w, h))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mode = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    };
    match cli.command {
        Command::Train { data, config, out } => {
            let cfg = load_config(config.as_deref())?;
            cfg.validate()?;
            let ds = load_dataset(&data)?;
            let (train, test) = split(&ds, cfg.split_ratio, cfg.seed)?;
            let model = train_pipeline_with(&train, &cfg, mode)?;
            model.save(&out)?;
            println!("trained on {} of {} images; model written to {}", train.len(), ds.len(), out.display());
            if let Some(dir) = &cfg.report_dir {
                let report = evaluate_with(&model, &test, mode)?;
                report.write(dir, cfg.gnuplot)?;
                println!("held-out report ({} images) written to {}", test.len(), dir.display());
            }
        }
        Command::Classify { model, image } => {
            let m = PipelineModel::load(&model)?;
            let img = pnm::read_gray(&image)?;
            let c = classify_image(&m, &img)?;
            println!("regime={} class={} label={}", c.regime, c.class_name(), c.label);
            println!("stage1_scores={}", join(&c.stage1_scores));
            println!("stage2_scores={}", join(&c.stage2_scores));
        }
        Command::Evaluate {
            model,
            data,
            report,
            holdout,
            gnuplot,
        } => {
            let m = PipelineModel::load(&model)?;
            let mut ds = load_dataset(&data)?;
            if let Some(cfg) = holdout {
                let cfg = RunConfig::load(cfg)?;
                ds = split(&ds, cfg.split_ratio, cfg.seed)?.1;
            }
            let r = evaluate_with(&m, &ds, mode)?;
            r.write(&report, gnuplot)?;
            print!("{}", r.summary());
        }
        Command::Segment {
            frames,
            out,
            config,
            crop,
        } => {
            let cfg = load_config(config.as_deref())?;
            cfg.validate()?;
            let opts = SegmentOptions {
                gmm: cfg.gmm,
                min_area: cfg.min_blob_area,
                morphology: cfg.morphology,
                crop,
            };
            let s = run_segmentation(&frames, &opts, &out)?;
            println!("{} frames, {} blobs", s.frames, s.blobs.len());
        }
        Command::Extract {
            feature,
            data,
            out,
            config,
            dump,
        } => {
            let cfg = load_config(config.as_deref())?;
            cfg.validate()?;
            let spec = match feature {
                FeatureArg::Histogram => cfg.stage1_spec(),
                FeatureArg::Centrist => RunConfig {
                    stage2_feature: Stage2Feature::Centrist,
                    ..cfg.clone()
                }
                .stage2_spec(),
                FeatureArg::Centrog => RunConfig {
                    stage2_feature: Stage2Feature::Centrog,
                    ..cfg.clone()
                }
                .stage2_spec(),
            };
            let ds = load_dataset(&data)?;
            let csv = feature_csv(&ds, spec, mode)?;
            fs::write(&out, csv).map_err(|e| Error::io(&out, e))?;
            if let Some(dir) = dump {
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                for (i, item) in ds.items.iter().enumerate() {
                    for (step, img) in intermediate_rasters(spec, &item.image)? {
                        pnm::write_p5(&img, dir.join(format!("{i:05}_{step}.pgm")))?;
                    }
                }
            }
            println!("{} rows of {} written to {}", ds.len(), spec, out.display());
        }
        Command::Synth { out, n, seed } => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("--n must be at least 2, got {n}")));
            }
            let written = write_synth_dataset(&out, n, seed)?;
            println!("{written} images written to {}", out.display());
        }
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
