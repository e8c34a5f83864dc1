use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use maxsr::imaging::{load_image, make_pair, save_image, Dataset, Method};
use maxsr::metrics::{self, EvalReport};
use maxsr::network::checkpoint;
use maxsr::train::{self, GradCheckOptions};
use maxsr::upscale::super_resolve;
use maxsr::{ActivationKind, Network, NetworkSpec, Preset};

use crate::config::{RunConfig, Settings};
use crate::CliError;

/// Gradient checks pass below this relative error.
const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Minimum distance from any activation kink for toy probes.
const MIN_KINK_MARGIN: f64 = 1e-3;

fn resolve(s: &Settings) -> Result<RunConfig, CliError> {
    let rc = RunConfig::from_settings(s)?;
    if let Some(n) = rc.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {n} threads: {e}")))?;
    }
    Ok(rc)
}

fn require_path(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    let p = p.clone().ok_or_else(|| CliError::Usage(format!("{flag} is required")))?;
    if !p.exists() {
        return Err(CliError::Usage(format!("{flag} {} does not exist", p.display())));
    }
    Ok(p)
}

fn require_file(p: &Path, flag: &str) -> Result<(), CliError> {
    if !p.is_file() {
        return Err(CliError::Usage(format!("{flag} {} is not a file", p.display())));
    }
    Ok(())
}

fn set_name(p: &Path) -> String {
    let stem = if p.is_dir() { p.file_name() } else { p.file_stem() };
    stem.and_then(|s| s.to_str()).unwrap_or("test").to_string()
}

fn ensure_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| CliError::Runtime(maxsr::Error::Io {
        path: p.to_path_buf(),
        source: e,
    }))
}

fn write_file(p: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(p, contents).map_err(|e| CliError::Runtime(maxsr::Error::Io {
        path: p.to_path_buf(),
        source: e,
    }))
}

fn write_report(dir: &Path, stem: &str, rep: &EvalReport) -> Result<(), CliError> {
    write_file(&dir.join(format!("{stem}.txt")), &rep.to_text())?;
    write_file(&dir.join(format!("{stem}.csv")), &rep.to_csv())
}

/// Writes every line to both stdout and the log file.
struct Tee {
    file: fs::File,
}

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        std::io::stdout().write_all(buf)?;
        self.file.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        std::io::stdout().flush()?;
        self.file.flush()
    }
}

pub fn train(s: &Settings) -> Result<(), CliError> {
    let rc = resolve(s)?;
    let t = &rc.train;
    let train_dir = require_path(&t.train_dir, "--train-dir")?;
    let test_dir = match &t.test_dir {
        Some(_) => Some(require_path(&t.test_dir, "--test-dir")?),
        None => None,
    };
    let data = Dataset::load(&train_dir, t.scale, t.degradation)?;
    t.sample_config().validate(&data)?;
    let tests = match &test_dir {
        Some(p) => vec![(set_name(p), Dataset::load(p, t.scale, t.degradation)?)],
        None => Vec::new(),
    };

    let (ckpt_dir, logs, reports) = (rc.out.join("checkpoints"), rc.out.join("logs"), rc.out.join("reports"));
    for d in [&ckpt_dir, &logs, &reports] {
        ensure_dir(d)?;
    }
    write_file(&reports.join("run-config.txt"), &rc.describe())?;
    let log_path = logs.join("train.log");
    let file = fs::File::create(&log_path).map_err(|e| maxsr::Error::Io {
        path: log_path.clone(),
        source: e,
    })?;
    let mut log = Tee { file };
    let out = train::train(t, &data, &tests, &mut log, Some(&ckpt_dir))?;
    for (name, set) in &tests {
        let rep = metrics::evaluate(out.trainer.network(), set, name)?;
        print!("{}", rep.to_text());
        write_report(&reports, &format!("eval-{name}-iter-{:08}", out.trainer.iteration()), &rep)?;
    }
    if let Some(last) = out.checkpoints.last() {
        println!("saved {}", last.display());
    }
    Ok(())
}

pub fn eval(
    s: &Settings,
    ckpt: Option<PathBuf>,
    baseline: Option<String>,
    name: Option<String>,
) -> Result<(), CliError> {
    let rc = resolve(s)?;
    let test_dir = require_path(&rc.train.test_dir, "--test-dir")?;
    let name = name.unwrap_or_else(|| set_name(&test_dir));
    let reports = rc.out.join("reports");
    let rep = match (ckpt, baseline) {
        (Some(c), None) => {
            require_file(&c, "--checkpoint")?;
            let net = checkpoint::load(&c)?.network;
            ensure_dir(&reports)?;
            metrics::evaluate_path(&net, &test_dir, rc.train.degradation, &name)?
        }
        (None, Some(b)) => {
            let method = match b.as_str() {
                "bicubic" => Method::Bicubic,
                "nearest" => Method::Nearest,
                other => return Err(CliError::Usage(format!("unknown baseline '{other}' (bicubic, nearest)"))),
            };
            let data = Dataset::load(&test_dir, rc.train.scale, rc.train.degradation)?;
            ensure_dir(&reports)?;
            metrics::baseline(&data, method, &name)?
        }
        _ => return Err(CliError::Usage("eval needs either --checkpoint or --baseline".into())),
    };
    print!("{}", rep.to_text());
    let stem = format!("eval-{name}-x{}-{}", rep.scale, rep.method.replace([' ', '(', ')', ','], ""));
    write_report(&reports, &stem, &rep)?;
    if rep.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(maxsr::Error::Data(format!(
            "{} image(s) could not be scored",
            rep.failures.len()
        ))))
    }
}

pub fn upscale(s: &Settings, ckpt: &Path, input: &Path, output: &Path) -> Result<(), CliError> {
    resolve(s)?;
    require_file(ckpt, "--checkpoint")?;
    require_file(input, "--input")?;
    let mut net = checkpoint::load(ckpt)?.network;
    let img = load_image(input)?;
    let sr = super_resolve(&mut net, &img)?;
    save_image(&sr, output)?;
    println!(
        "{}x{} -> {}x{} written to {}",
        img.width(),
        img.height(),
        sr.width(),
        sr.height(),
        output.display()
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| CliError::Usage(format!("bad {what} '{p}': {e}"))))
        .collect()
}

pub fn sweep(s: &Settings, kinds: &str, widths: &str, seeds: &str) -> Result<(), CliError> {
    let rc = resolve(s)?;
    let kinds: Vec<ActivationKind> = parse_list(kinds, "activation")?;
    let widths: Vec<usize> = parse_list(widths, "width")?;
    let seeds: Vec<u64> = parse_list(seeds, "seed")?;
    if seeds.is_empty() {
        return Err(CliError::Usage("--seeds is empty".into()));
    }
    let t = &rc.train;
    let train_dir = require_path(&t.train_dir, "--train-dir")?;
    let test_dir = require_path(&t.test_dir, "--test-dir")?;
    let train_set = Dataset::load(&train_dir, t.scale, t.degradation)?;
    t.sample_config().validate(&train_set)?;
    let test_set = Dataset::load(&test_dir, t.scale, t.degradation)?;
    let reports = rc.out.join("reports");
    ensure_dir(&reports)?;
    let rows = metrics::sweep(&kinds, &widths, &seeds, t, &train_set, &test_set)?;
    let csv = metrics::sweep_csv(&rows);
    print!("{csv}");
    write_file(&reports.join("sweep.csv"), &csv)?;
    write_file(&reports.join("sweep.dat"), &metrics::sweep_plot_data(&rows))
}

fn report_check(label: &str, r: &train::GradCheck) -> bool {
    let ok = r.max_rel_error < GRADCHECK_TOLERANCE;
    println!(
        "gradcheck {label:<28} max_rel_error {:.3e} checked {:>6} kink_margin {:.2e} worst {} {}",
        r.max_rel_error,
        r.checked,
        r.kink_margin,
        r.worst,
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn check_toy(preset: Preset, scale: usize, seed: u64, eps: f64) -> Result<bool, CliError> {
    let mut net = Network::build(preset, scale, seed)?;
    let found = train::find_probe(&mut net, 2, 2, seed, MIN_KINK_MARGIN, 1000)?;
    let Some((probe, _, _)) = found else {
        println!("gradcheck {preset}: no probe within margin {MIN_KINK_MARGIN} found");
        return Ok(false);
    };
    let r = train::grad_check_with(
        &mut net,
        &probe,
        &GradCheckOptions {
            eps,
            max_params: None,
            seed,
        },
    )?;
    Ok(report_check(&preset.to_string(), &r))
}

pub fn gradcheck(s: &Settings, all: bool, eps: f64, samples: usize) -> Result<(), CliError> {
    let rc = resolve(s)?;
    if !(eps > 0.0) {
        return Err(CliError::Usage("--eps must be positive".into()));
    }
    let (scale, seed) = (rc.train.scale, rc.train.seed);
    let mut ok = true;
    if !all {
        ok &= match rc.train.preset {
            p @ Preset::Toy { .. } => check_toy(p, scale, seed, eps)?,
            p => check_full(p, scale, seed, eps, samples)?,
        };
    } else {
        for kind in ActivationKind::all() {
            ok &= check_toy(Preset::toy(kind, Preset::toy_default_width(kind)), scale, seed, eps)?;
        }
        for p in [Preset::EspcnMu, Preset::VdsrMu, Preset::Dnsr] {
            ok &= check_full(p, scale, seed, eps, samples)?;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime(maxsr::Error::Data(format!(
            "gradient check exceeded {GRADCHECK_TOLERANCE}"
        ))))
    }
}

fn check_full(preset: Preset, scale: usize, seed: u64, eps: f64, samples: usize) -> Result<bool, CliError> {
    let mut net = Network::build(preset, scale, seed)?;
    let probe = train::random_probe(3, 3, seed);
    let r = train::grad_check_with(
        &mut net,
        &probe,
        &GradCheckOptions {
            eps,
            max_params: Some(samples),
            seed,
        },
    )?;
    Ok(report_check(&format!("{preset} (sampled)"), &r))
}

pub fn sparsity(s: &Settings, ckpt: Option<PathBuf>, inputs: &[PathBuf], cell: usize) -> Result<(), CliError> {
    let rc = resolve(s)?;
    if cell == 0 {
        return Err(CliError::Usage("--cell must be at least 1".into()));
    }
    for p in inputs {
        require_file(p, "--input")?;
    }
    let mut net = match &ckpt {
        Some(c) => {
            require_file(c, "--checkpoint")?;
            checkpoint::load(c)?.network
        }
        None => Network::build(rc.train.preset, rc.train.scale, rc.train.seed)?,
    };
    let reports = rc.out.join("reports");
    ensure_dir(&reports)?;
    for p in inputs {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let pair = make_pair(&load_image(p)?, net.scale(), rc.train.degradation)?;
        let map = metrics::sparsity_map(&mut net, &pair)?;
        println!("# {stem}");
        print!("{}", map.to_text());
        write_file(&reports.join(format!("sparsity-{stem}.txt")), &map.to_text())?;
        save_image(&map.to_image(cell)?, reports.join(format!("sparsity-{stem}.pgm")))?;
    }
    Ok(())
}

pub fn params(s: &Settings) -> Result<(), CliError> {
    let rc = resolve(s)?;
    let spec = NetworkSpec::for_preset(rc.train.preset, rc.train.scale)?;
    println!("{}", spec.param_count());
    Ok(())
}
