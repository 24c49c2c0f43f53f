use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use noisy_rnn::data::{
    load_idx, mnist_paths, read_strokes, stroke_length_histogram, to_row_sequences,
    to_stroke_dataset, write_strokes, SequenceDataset,
};
use noisy_rnn::eval::{
    default_axis, evaluate, grid_evaluate, state_histograms, weight_histogram, GridRow,
    GRID_CSV_HEADER,
};
use noisy_rnn::train::{
    load_checkpoint, save_checkpoint, train, Checkpoint, TrainConfig, LOG_CSV_HEADER,
};
use noisy_rnn::{Arch, Model};
use serde_json::json;

use crate::settings::Settings;

pub fn axis_string() -> String {
    default_axis()
        .iter()
        .map(|s| sigma_label(*s))
        .collect::<Vec<_>>()
        .join(",")
}

/// `1` → `1.0`, `0.25` → `0.25`.
pub fn sigma_label(sigma: f64) -> String {
    let s = format!("{sigma}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

pub fn checkpoint_name(arch: Arch, sigma: f64) -> String {
    format!("ckpt_{arch}_s{}.bin", sigma_label(sigma))
}

pub fn run(name: &str, s: &Settings) -> Result<()> {
    let out = s.path("out")?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    match name {
        "convert" => convert(s, &out)?,
        "train" => train_cmd(s, &out)?,
        "grid" => grid(s, &out)?,
        "eval" => eval(s, &out)?,
        "hist" => hist(s, &out)?,
        other => bail!("unknown command `{other}`"),
    }
    write(&out.join(format!("{name}.manifest")), s.to_manifest(name))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn set_jobs(s: &Settings) -> Result<()> {
    let jobs: usize = s.get("jobs")?;
    // Later calls fail harmlessly if the pool already exists.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global();
    Ok(())
}

fn split_name(train: bool) -> &'static str {
    if train {
        "train"
    } else {
        "test"
    }
}

fn strokes_file(dir: &Path, train: bool) -> PathBuf {
    dir.join(format!("strokes_{}.strk", split_name(train)))
}

/// Loads one split in the layout expected by `arch`, keeping the first
/// `limit` samples.
fn load_split(s: &Settings, arch: Arch, train: bool) -> Result<SequenceDataset> {
    let limit: Option<usize> = s.opt("limit")?;
    let data = if arch.uses_strokes() {
        let dir = match s.raw("strokes") {
            Some(d) => PathBuf::from(d),
            None => {
                bail!("--strokes <dir> is required for {arch}; create it with `noisy-rnn convert`")
            }
        };
        let path = strokes_file(&dir, train);
        read_strokes(&path)
            .with_context(|| format!("loading strokes {}", path.display()))?
            .sequences
    } else {
        let (images, labels) = mnist_paths(s.path("data")?, train);
        let mut raw = load_idx(&images, &labels)?;
        if let Some(n) = limit {
            raw = raw.truncated(n);
        }
        to_row_sequences(&raw)?
    };
    Ok(match limit {
        Some(n) => data.truncated(n),
        None => data,
    })
}

fn convert(s: &Settings, out: &Path) -> Result<()> {
    let splits: &[bool] = match s.get::<String>("split")?.as_str() {
        "train" => &[true],
        "test" => &[false],
        "both" => &[true, false],
        other => bail!("--split must be train, test or both, got `{other}`"),
    };
    let limit: Option<usize> = s.opt("limit")?;
    for &train in splits {
        let (images, labels) = mnist_paths(s.path("data")?, train);
        let mut raw = load_idx(&images, &labels)?;
        if let Some(n) = limit {
            raw = raw.truncated(n);
        }
        let strokes = to_stroke_dataset(&raw)?;
        let path = strokes_file(out, train);
        write_strokes(&path, &strokes)?;

        let lengths = strokes.raw_lengths.as_deref().unwrap_or_default();
        let hist = stroke_length_histogram(lengths)?;
        let mut csv = String::from("length,count\n");
        for (len, count) in &hist {
            writeln!(csv, "{len},{count}")?;
        }
        write(
            &out.join(format!("stroke_lengths_{}.csv", split_name(train))),
            csv,
        )?;
        let in_band: usize = hist.range(20..=60).map(|(_, c)| c).sum();
        eprintln!(
            "{}: {} sequences, {:.1}% of lengths in [20, 60]",
            path.display(),
            strokes.sequences.len(),
            100.0 * in_band as f64 / lengths.len() as f64
        );
    }
    Ok(())
}

fn train_cmd(s: &Settings, out: &Path) -> Result<()> {
    let arch: Arch = s.get("arch")?;
    let config = TrainConfig {
        epochs: s.get("epochs")?,
        batch_size: s.get("batch-size")?,
        learning_rate: s.get("learning-rate")?,
        beta1: s.get("beta1")?,
        beta2: s.get("beta2")?,
        epsilon: s.get("epsilon")?,
        clip_norm: s.get("clip-norm")?,
        ..TrainConfig::new(arch, s.get("sigma-train")?, s.get("seed")?)
    };
    config.validate()?;
    let train_set = load_split(s, arch, true)?;
    let val_set = load_split(s, arch, false)?;
    eprintln!(
        "training {arch} sigma_train={} on {} samples, validating on {}",
        config.sigma_train,
        train_set.len(),
        val_set.len()
    );

    let stem = format!("{arch}_s{}", sigma_label(config.sigma_train));
    let log_path = out.join(format!("log_{stem}.csv"));
    let mut log_csv = format!("{LOG_CSV_HEADER}\n");
    let start = Instant::now();
    let (ckpt, _) = train(
        &config,
        &train_set,
        &val_set,
        |row| {
            eprintln!(
                "epoch {:>3}  step {:>6}  loss {:.5}  val_acc {:.4}  ({:.0}s)",
                row.epoch,
                row.step,
                row.loss,
                row.val_acc,
                start.elapsed().as_secs_f64()
            );
            log_csv.push_str(&row.csv_line());
            log_csv.push('\n');
            // Keep a partial log on disk for long runs.
            let _ = fs::write(&log_path, &log_csv);
        },
        |_| {},
    )?;
    write(&log_path, &log_csv)?;
    let path = out.join(checkpoint_name(arch, config.sigma_train));
    save_checkpoint(&ckpt, &path)?;
    // Read back so a zero exit code means the file is valid.
    let back = load_checkpoint(&path)?;
    if back.model.to_flat() != ckpt.model.to_flat() {
        bail!(
            "{}: checkpoint did not read back identically",
            path.display()
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_for(path: &Path, arch: Arch) -> Result<Checkpoint> {
    let ckpt =
        load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if ckpt.arch != Some(arch) {
        bail!("{}: checkpoint is not a {arch} model", path.display());
    }
    Ok(ckpt)
}

fn grid(s: &Settings, out: &Path) -> Result<()> {
    set_jobs(s)?;
    let arch: Arch = s.get("arch")?;
    let dir = s.path("checkpoints")?;
    let sigma_trains = s.list("sigma-trains")?;
    let sigma_vals = s.list("sigma-vals")?;
    let mut models: Vec<Model<f32>> = Vec::with_capacity(sigma_trains.len());
    for &st in &sigma_trains {
        let path = dir.join(checkpoint_name(arch, st));
        if !path.exists() {
            bail!(
                "missing checkpoint for sigma_train = {st}: {}",
                path.display()
            );
        }
        models.push(load_for(&path, arch)?.model);
    }
    let data = load_split(s, arch, false)?;
    let rows: Vec<GridRow<'_, f32>> = sigma_trains
        .iter()
        .zip(&models)
        .map(|(&sigma_train, model)| GridRow { sigma_train, model })
        .collect();
    let start = Instant::now();
    let grid = grid_evaluate(&rows, &sigma_vals, s.get("trials")?, s.get("seed")?, &data)?;
    let path = out.join(format!("grid_{arch}.csv"));
    write(&path, grid.to_csv())?;
    write(
        &out.join(format!("grid_{arch}_trials.csv")),
        grid.trials_to_csv(),
    )?;
    eprintln!(
        "wrote {} ({:.0}s)",
        path.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn eval(s: &Settings, out: &Path) -> Result<()> {
    set_jobs(s)?;
    let path = s.path("checkpoint")?;
    let ckpt =
        load_checkpoint(&path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let Some(arch) = ckpt.arch else {
        bail!("{}: checkpoint has no preset architecture", path.display());
    };
    let data = load_split(s, arch, false)?;
    let sigma_val: f64 = s.get("sigma-val")?;
    let trials: usize = s.get("trials")?;
    let stats = evaluate(&ckpt.model, &data, sigma_val, trials, s.get("seed")?)?;
    let mut csv = format!("{GRID_CSV_HEADER}\n");
    writeln!(
        csv,
        "{},{},{},{},{}",
        ckpt.sigma_train, sigma_val, stats.mean, stats.std, trials
    )?;
    print!("{csv}");
    let name = format!(
        "eval_{arch}_s{}_v{}.csv",
        sigma_label(ckpt.sigma_train as f64),
        sigma_label(sigma_val)
    );
    write(&out.join(name), csv)
}

fn hist(s: &Settings, out: &Path) -> Result<()> {
    let paths: Vec<PathBuf> = s
        .get::<String>("checkpoints")?
        .split(',')
        .map(|p| PathBuf::from(p.trim()))
        .collect();
    let mut ckpts = Vec::with_capacity(paths.len());
    for p in &paths {
        ckpts.push(
            load_checkpoint(p).with_context(|| format!("loading checkpoint {}", p.display()))?,
        );
    }
    let Some(arch) = ckpts[0].arch else {
        bail!(
            "{}: checkpoint has no preset architecture",
            paths[0].display()
        );
    };
    if ckpts.iter().any(|c| c.arch != Some(arch)) {
        bail!("histogram checkpoints must share one architecture");
    }
    let bins: usize = s.get("bins")?;
    let samples: usize = s.get("samples")?;
    let sigma_val: f64 = s.get("sigma-val")?;
    let seed: u64 = s.get("seed")?;
    let data = load_split(s, arch, false)?;

    let names: Vec<String> = ckpts
        .iter()
        .map(|c| format!("weights_s{}", sigma_label(c.sigma_train as f64)))
        .collect();
    let models: Vec<&Model<f32>> = ckpts.iter().map(|c| &c.model).collect();
    let weights = weight_histogram(&models, bins)?;
    let weight_file = format!("weights_{arch}.csv");
    write(&out.join(&weight_file), weights.to_csv(&names))?;

    let mut entries = Vec::new();
    for (i, (ckpt, path)) in ckpts.iter().zip(&paths).enumerate() {
        let states = state_histograms(&ckpt.model, &data, samples, sigma_val, bins, seed)?;
        let file = format!(
            "states_{arch}_s{}_v{}.csv",
            sigma_label(ckpt.sigma_train as f64),
            sigma_label(sigma_val)
        );
        write(&out.join(&file), states.to_csv())?;
        entries.push(json!({
            "model_path": path.display().to_string(),
            "sigma_train": ckpt.sigma_train,
            "weight_series": names[i],
            "weight_power": weights.power[i],
            "weight_std": weights.std[i],
            "state_csv": file,
            "output_variance": states.output_variance,
            "internal_variance": states.internal_variance,
        }));
    }
    let manifest = json!({
        "arch": arch.name(),
        "sigma_val": sigma_val,
        "sample_size": samples.min(data.len()),
        "bins": bins,
        "seed": seed,
        "weights_csv": weight_file,
        "models": entries,
    });
    write(
        &out.join(format!("hist_{arch}.json")),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
}
