//! Subcommand implementations. Each returns the process exit code on its
//! success path, so a command can finish cleanly yet still deliver a negative
//! verdict (the gradient audit does exactly that).

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use serde::Deserialize;

use revsup_core::acoustics::{
    load_scene_dir, simulate_scene, write_scene_dir, RenderedScene, SCENE_CONFIG_FILE,
};
use revsup_core::experiments::{make_init, write_trace_csv, AblationAxis};
use revsup_core::selection::select_from_manifest;
use revsup_core::wav::read_wav;
use revsup_core::{
    metrics, optimize_ras, run_ablation, run_grad_check, run_oracle, AblationConfig, Error,
    FilterSpec, InitKind, OptimizeConfig, Result, SceneConfig, SceneSampler, ScoreDirection,
    SourceKind,
};

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON batch description: length, kinds, and either seed+count or scenes.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory that receives one scene_NNN subdirectory per scene.
    #[arg(long)]
    pub out: PathBuf,
}

/// On-disk shape of the simulate config.
///
/// `length` is the dry-source length in samples and `kinds` lists one dry
/// material per source. Scenes come either from the built-in sampler
/// (`seed` plus `count`) or from an explicit `scenes` list.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSpec {
    length: usize,
    kinds: Vec<SourceKind>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    count: Option<usize>,
    #[serde(default)]
    scenes: Vec<SceneConfig>,
}

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let spec: SimulateSpec = serde_json::from_reader(BufReader::new(File::open(&args.config)?))?;
    let configs: Vec<SceneConfig> = match (spec.seed, spec.count, spec.scenes.is_empty()) {
        (Some(seed), Some(count), true) => {
            let mut sampler = SceneSampler::new(seed);
            (0..count).map(|_| sampler.sample()).collect()
        }
        (None, None, false) => spec.scenes,
        _ => {
            return Err(Error::InvalidArgument(
                "give either seed and count for sampled scenes, or an explicit scenes list".into(),
            ))
        }
    };
    if configs.is_empty() {
        return Err(Error::InvalidArgument("no scenes to render".into()));
    }

    fs::create_dir_all(&args.out)?;
    for (k, config) in configs.iter().enumerate() {
        let scene = simulate_scene(config, &spec.kinds, spec.length)?;
        write_scene_dir(&args.out.join(format!("scene_{k:03}")), config, &scene)?;
    }
    println!("wrote {} scenes to {}", configs.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct OracleArgs {
    /// Directory of scene_NNN subdirectories from `simulate`.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Causal filter taps per fitted Wiener filter.
    #[arg(long, default_value_t = 412)]
    pub taps: usize,
    /// Non-causal (lookahead) taps per fitted filter.
    #[arg(long, default_value_t = 100)]
    pub nc_taps: usize,
    /// Output JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn oracle(args: &OracleArgs) -> Result<ExitCode> {
    let scenes = load_scene_batch(&args.scenes)?;
    let spec = FilterSpec::new(args.nc_taps, args.taps)?;
    let report = run_oracle(&scenes, &spec)?;
    serde_json::to_writer_pretty(File::create(&args.out)?, &report)?;
    for row in &report.rows {
        println!("{:>18}  {:+7.2} dB", row.input_kind.name(), row.mean_sdr_db);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SelectArgs {
    /// JSON list of {id, path_L, path_R} stereo pairs.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Keep pairs scoring strictly below this many dB.
    #[arg(long)]
    pub threshold_db: f64,
    /// Fit direction: left_to_right or min_both.
    #[arg(long, default_value = "left_to_right")]
    pub direction: String,
    /// Output JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn select(args: &SelectArgs) -> Result<ExitCode> {
    let direction: ScoreDirection = args.direction.parse()?;
    let report =
        select_from_manifest(&args.manifest, args.threshold_db, &FilterSpec::default(), direction)?;
    serde_json::to_writer_pretty(File::create(&args.out)?, &report)?;
    let kept = report.items.iter().filter(|item| item.keep).count();
    println!(
        "kept {kept}/{} pairs below {} dB ({} failed to score)",
        report.items.len(),
        report.threshold_db,
        report.failures.len()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct GradCheckArgs {
    /// Base seed for the audited estimate draws.
    #[arg(long)]
    pub seed: u64,
    /// Random starts audited per (mode, criterion) combination.
    #[arg(long, default_value_t = 20)]
    pub seeds_per_combo: usize,
    /// Output JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn grad_check(args: &GradCheckArgs) -> Result<ExitCode> {
    let report = run_grad_check(args.seed, args.seeds_per_combo)?;
    serde_json::to_writer_pretty(File::create(&args.out)?, &report)?;
    if report.passed {
        println!(
            "gradient audit passed: max rel L2 {:.3e} over {} cases",
            report.max_relative_l2,
            report.cases.len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "gradient audit FAILED: max rel L2 {:.3e} exceeds {:.0e}",
            report.max_relative_l2, report.tolerance
        );
        Ok(ExitCode::FAILURE)
    }
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// One scene directory from `simulate`.
    #[arg(long)]
    pub scene: PathBuf,
    /// Starting point: leaky, mixture-half, or true-images.
    #[arg(long)]
    pub init: String,
    /// Maximum accepted descent steps.
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Supervised anchor weight; 0 disables the anchor.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Output CSV trace path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn optimize(args: &OptimizeArgs) -> Result<ExitCode> {
    let init_kind: InitKind = args.init.parse()?;
    let (_, scene) = load_scene_dir(&args.scene)?;
    let init = make_init(&scene, init_kind)?;
    let references = [scene.images[0][0].clone(), scene.images[1][0].clone()];
    let optimizer = OptimizeConfig {
        max_iters: args.iters,
        anchor_weight: args.lambda,
        ..OptimizeConfig::default()
    };
    let (trace, _) = optimize_ras(&scene.mixtures[0], &init, &references, &optimizer)?;
    write_trace_csv(&trace, &args.out)?;
    println!(
        "{} accepted steps, loss {:.2} dB, mean si-sdr {:.2} -> {:.2} dB",
        trace.rows.len().saturating_sub(1),
        trace.final_loss_db(),
        trace.initial_mean_si_sdr_db(),
        trace.final_mean_si_sdr_db()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct AblateArgs {
    /// Directory of scene_NNN subdirectories from `simulate`.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Comma-separated ingredients to flip: filter, criterion, threshold.
    #[arg(long)]
    pub axes: String,
    /// Descent steps per run.
    #[arg(long, default_value_t = 40)]
    pub iters: usize,
    /// Baseline informativeness screen in dB.
    #[arg(long, default_value_t = 10.0)]
    pub threshold_db: f64,
    /// Output JSON report path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_axes(list: &str) -> Result<Vec<AblationAxis>> {
    let mut axes = Vec::new();
    for token in list.split(',') {
        let token = token.trim();
        let axis = AblationAxis::ALL
            .into_iter()
            .find(|axis| axis.name() == token)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown axis {token:?}, expected filter, criterion or threshold"
                ))
            })?;
        if axes.contains(&axis) {
            return Err(Error::InvalidArgument(format!("duplicate axis {token:?}")));
        }
        axes.push(axis);
    }
    Ok(axes)
}

pub fn ablate(args: &AblateArgs) -> Result<ExitCode> {
    let axes = parse_axes(&args.axes)?;
    let scenes = load_scene_batch(&args.scenes)?;
    let config = AblationConfig {
        optimizer: OptimizeConfig {
            max_iters: args.iters,
            ..OptimizeConfig::default()
        },
        init: InitKind::Leaky,
        screen_threshold_db: args.threshold_db,
        screen_filter: FilterSpec::default(),
        axes,
    };
    let report = run_ablation(&scenes, &config)?;
    serde_json::to_writer_pretty(File::create(&args.out)?, &report)?;
    for row in &report.rows {
        println!(
            "{:<16} {:+7.2} dB final mean si-sdr over {} scenes",
            row.name, row.mean_final_si_sdr_db, row.n_scenes
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Reference WAV file.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Estimate WAV file.
    #[arg(long)]
    pub est: PathBuf,
    /// Metric: si_sdr, snr, or projection_sdr.
    #[arg(long)]
    pub kind: String,
}

pub fn metrics(args: &MetricsArgs) -> Result<ExitCode> {
    let reference = read_wav(&args.reference)?;
    let estimate = read_wav(&args.est)?;
    let value = match args.kind.as_str() {
        "si_sdr" => metrics::si_sdr(&reference, &estimate)?,
        "snr" => metrics::snr(&reference, &estimate)?,
        "projection_sdr" => {
            metrics::projection_sdr(&reference, &estimate, &FilterSpec::default())?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown metric {other:?}, expected si_sdr, snr or projection_sdr"
            )))
        }
    };
    println!("{value:.6}");
    Ok(ExitCode::SUCCESS)
}

/// Loads every scene_NNN subdirectory of `dir`, sorted by name.
fn load_scene_batch(dir: &Path) -> Result<Vec<RenderedScene>> {
    let mut scene_dirs: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|path| path.is_dir() && path.join(SCENE_CONFIG_FILE).is_file())
        .collect();
    scene_dirs.sort();
    if scene_dirs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no scene directories under {}",
            dir.display()
        )));
    }
    scene_dirs
        .iter()
        .map(|path| load_scene_dir(path).map(|(_, scene)| scene))
        .collect()
}
