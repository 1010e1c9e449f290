//! Batch front end behind the `gbs-taylor` binary.
//!
//! A run is described by a JSON config file whose fields can be overridden
//! by flags. Every command writes a CSV with a header row and, when `--out`
//! is given, a `<out>.meta.json` sidecar with the resolved configuration and
//! derived constants.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{cosine_similarity, loglog_slope, median};
use crate::estimator::{estimate_distribution_with_plan, integrand_values, Estimate, SamplingPlan};
use crate::model::ModelParams;
use crate::oracle::{enumerate_patterns, exact_probability};
use crate::pattern::OutputPattern;
use crate::precompute::{Contractions, PrecomputeTables};
use crate::trace::{CrossPairWeight, Order};
use crate::unitary::{check_unitary, haar_random, UnitaryMatrix, UNITARITY_TOLERANCE};

/// Environment variable that overrides the RNG seed (flag > env > config file).
pub const SEED_ENV: &str = "GBS_TAYLOR_SEED";

/// ε above which the expansion converges slowly.
pub const EPSILON_WARNING: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(
    name = "gbs-taylor",
    version,
    about = "Taylor/Wick estimator for lossy Gaussian boson sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo probability estimates, one row per pattern.
    Estimate(RunArgs),
    /// Estimates next to exact oracle values, plus cosine similarity.
    Compare(RunArgs),
    /// Similarity of the distribution after K and K+10 samples per pattern.
    Convergence(RunArgs),
    /// Precomputation and per-sample timings over a grid of mode counts.
    Bench(RunArgs),
    /// Writes a Haar-random unitary to `--out`.
    GenUnitary(RunArgs),
    /// Exact probabilities by Wick summation (at most 6 photons).
    Oracle(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossWeightArg {
    Half,
    Doubled,
}

impl From<CrossWeightArg> for CrossPairWeight {
    fn from(w: CrossWeightArg) -> Self {
        match w {
            CrossWeightArg::Half => CrossPairWeight::Half,
            CrossWeightArg::Doubled => CrossPairWeight::Doubled,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long = "loss-s2", allow_negative_numbers = true)]
    pub loss_s2: Option<f64>,
    /// Expansion order: 0, 2 or 4.
    #[arg(long)]
    pub order: Option<u32>,
    /// Samples per pattern.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Unitary file in the `{"n", "entries"}` JSON format.
    #[arg(long, conflicts_with = "haar_seed")]
    pub unitary: Option<PathBuf>,
    /// Seed of a Haar-random unitary on `--modes` modes.
    #[arg(long = "haar-seed")]
    pub haar_seed: Option<u64>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// Explicit pattern such as `1,0,1`; repeatable.
    #[arg(long = "pattern", conflicts_with = "photons")]
    pub patterns: Vec<String>,
    /// Use every pattern with this total photon number.
    #[arg(long)]
    pub photons: Option<usize>,
    #[arg(long = "cross-weight", value_enum)]
    pub cross_weight: Option<CrossWeightArg>,
    /// Sample counts K for `convergence`, e.g. `10,20,30`.
    #[arg(long, value_delimiter = ',')]
    pub schedule: Vec<usize>,
    /// Mode counts for `convergence` and `bench`, e.g. `5,10,20,40`.
    #[arg(long = "modes-list", value_delimiter = ',')]
    pub modes_list: Vec<usize>,
    /// Photon numbers for `bench`, e.g. `2,4`.
    #[arg(long = "photons-list", value_delimiter = ',')]
    pub photons_list: Vec<usize>,
    /// Timing repetitions for `bench` (at least 5).
    #[arg(long)]
    pub reps: Option<usize>,
}

/// Source of the interferometer matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitarySource {
    Path(PathBuf),
    Haar { seed: u64, n: usize },
}

/// Source of the target patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSource {
    List(Vec<Vec<u32>>),
    TotalPhotons(usize),
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: Option<f64>,
    pub loss_s2: Option<f64>,
    pub unitary: Option<UnitarySource>,
    pub patterns: Option<PatternSource>,
    pub order: Option<u32>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub cross_weight: Option<CrossWeightArg>,
    pub schedule: Option<Vec<usize>>,
    pub modes_list: Option<Vec<usize>>,
    pub photons_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved configuration shared by the sampling commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub loss_s2: f64,
    pub unitary: UnitarySource,
    pub patterns: PatternSource,
    pub order: u32,
    pub samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub workers: usize,
    pub cross_weight: CrossWeightArg,
    pub schedule: Vec<usize>,
    pub modes_list: Vec<usize>,
    pub photons_list: Vec<usize>,
    pub reps: usize,
}

/// Merged view of flags over file fields, before validation.
struct Merged {
    args: RunArgs,
    file: ConfigFile,
}

impl Merged {
    fn new(args: &RunArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        Ok(Self {
            args: args.clone(),
            file,
        })
    }

    fn alpha(&self) -> Option<f64> {
        self.args.alpha.or(self.file.alpha)
    }

    fn loss_s2(&self) -> Option<f64> {
        self.args.loss_s2.or(self.file.loss_s2)
    }

    fn unitary(&self) -> anyhow::Result<Option<UnitarySource>> {
        let a = &self.args;
        if a.unitary.is_some() && a.haar_seed.is_some() {
            bail!("config field `unitary`: give either --unitary or --haar-seed, not both");
        }
        if let Some(path) = &a.unitary {
            return Ok(Some(UnitarySource::Path(path.clone())));
        }
        match (a.haar_seed, a.modes, &self.file.unitary) {
            (Some(seed), Some(n), _) => Ok(Some(UnitarySource::Haar { seed, n })),
            (Some(seed), None, Some(UnitarySource::Haar { n, .. })) => Ok(Some(UnitarySource::Haar { seed, n: *n })),
            (Some(seed), None, _) if self.has_modes_list() => Ok(Some(UnitarySource::Haar { seed, n: 0 })),
            (Some(_), None, _) => bail!("config field `unitary`: --haar-seed needs --modes"),
            (None, Some(n), Some(UnitarySource::Haar { seed, .. })) => Ok(Some(UnitarySource::Haar { seed: *seed, n })),
            (None, _, file) => Ok(file.clone()),
        }
    }

    fn has_modes_list(&self) -> bool {
        !self.args.modes_list.is_empty() || self.file.modes_list.is_some()
    }

    fn patterns(&self) -> anyhow::Result<Option<PatternSource>> {
        let a = &self.args;
        if !a.patterns.is_empty() && a.photons.is_some() {
            bail!("config field `patterns`: give either --pattern or --photons, not both");
        }
        if !a.patterns.is_empty() {
            let list = a
                .patterns
                .iter()
                .map(|s| s.parse::<OutputPattern>().map(|p| p.counts().to_vec()))
                .collect::<crate::Result<Vec<_>>>()
                .context("config field `patterns`")?;
            return Ok(Some(PatternSource::List(list)));
        }
        if let Some(m) = a.photons {
            return Ok(Some(PatternSource::TotalPhotons(m)));
        }
        Ok(self.file.patterns.clone())
    }

    fn resolve(&self, defaults: &Defaults) -> anyhow::Result<RunConfig> {
        let a = &self.args;
        let f = &self.file;
        let alpha = self
            .alpha()
            .or(defaults.alpha)
            .ok_or_else(|| anyhow!("config field `alpha` is required"))?;
        let loss_s2 = self
            .loss_s2()
            .or(defaults.loss_s2)
            .ok_or_else(|| anyhow!("config field `loss_s2` is required"))?;
        let unitary = match self.unitary()? {
            Some(u) => u,
            None if defaults.unitary_optional => UnitarySource::Haar { seed: 0, n: 0 },
            None => bail!("config field `unitary` is required (--unitary or --haar-seed with --modes)"),
        };
        let patterns = match self.patterns()? {
            Some(p) => p,
            None => PatternSource::TotalPhotons(defaults.photons),
        };
        let order = a.order.or(f.order).unwrap_or(4);
        Order::try_from(order).map_err(|e| anyhow!("config field `order`: {e}"))?;
        let samples = a.samples.or(f.samples).unwrap_or(defaults.samples);
        let workers = a
            .workers
            .or(f.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let reps = a.reps.or(f.reps).unwrap_or(5);
        let pick = |flag: &Vec<usize>, file: &Option<Vec<usize>>| {
            if flag.is_empty() {
                file.clone().unwrap_or_default()
            } else {
                flag.clone()
            }
        };
        let cfg = RunConfig {
            alpha,
            loss_s2,
            unitary,
            patterns,
            order,
            samples,
            seed: a.seed.or(f.seed).unwrap_or(0),
            output: a.out.clone().or_else(|| f.output.clone()),
            workers,
            cross_weight: a.cross_weight.or(f.cross_weight).unwrap_or(CrossWeightArg::Half),
            schedule: pick(&a.schedule, &f.schedule),
            modes_list: pick(&a.modes_list, &f.modes_list),
            photons_list: pick(&a.photons_list, &f.photons_list),
            reps,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Defaults {
    alpha: Option<f64>,
    loss_s2: Option<f64>,
    samples: usize,
    photons: usize,
    unitary_optional: bool,
}

impl Defaults {
    fn sampling() -> Self {
        Self {
            alpha: None,
            loss_s2: None,
            samples: 4096,
            photons: 2,
            unitary_optional: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            bail!("config field `alpha` must satisfy 0 <= alpha < 1 (got {})", self.alpha);
        }
        if !(0.0..=1.0).contains(&self.loss_s2) {
            bail!(
                "config field `loss_s2` must satisfy 0 <= loss_s2 <= 1 (got {})",
                self.loss_s2
            );
        }
        if self.samples < 2 {
            bail!("config field `samples` must be at least 2 (got {})", self.samples);
        }
        if self.workers == 0 {
            bail!("config field `workers` must be positive");
        }
        if self.reps < 5 {
            bail!("config field `reps` must be at least 5 (got {})", self.reps);
        }
        if let PatternSource::List(list) = &self.patterns {
            if list.is_empty() {
                bail!("config field `patterns` is empty");
            }
        }
        if self.schedule.iter().any(|&k| k < 2) {
            bail!("config field `schedule` entries must be at least 2");
        }
        Ok(())
    }

    pub fn order(&self) -> Order {
        Order::try_from(self.order).expect("validated order")
    }

    pub fn params(&self) -> crate::Result<ModelParams> {
        ModelParams::new(self.alpha, self.loss_s2)
    }

    pub fn plan(&self, samples: usize) -> SamplingPlan {
        SamplingPlan {
            order: self.order(),
            samples,
            seed: self.seed,
            cross_weight: self.cross_weight.into(),
        }
    }

    pub fn load_unitary(&self) -> anyhow::Result<UnitaryMatrix> {
        let u = match &self.unitary {
            UnitarySource::Path(path) => {
                UnitaryMatrix::load(path).with_context(|| format!("config field `unitary` ({})", path.display()))?
            }
            UnitarySource::Haar { seed, n } => haar_random(*n, *seed).context("config field `unitary`")?,
        };
        let residual = check_unitary(&u);
        if residual > UNITARITY_TOLERANCE {
            bail!("config field `unitary`: matrix is not unitary (residual {residual:e})");
        }
        Ok(u)
    }

    pub fn patterns_for(&self, modes: usize) -> anyhow::Result<Vec<OutputPattern>> {
        match &self.patterns {
            PatternSource::TotalPhotons(m) => Ok(enumerate_patterns(modes, *m)),
            PatternSource::List(list) => list
                .iter()
                .map(|counts| {
                    if counts.len() != modes {
                        bail!(
                            "config field `patterns`: pattern {:?} has {} modes, unitary has {modes}",
                            counts,
                            counts.len()
                        );
                    }
                    Ok(OutputPattern::new(counts.clone()))
                })
                .collect(),
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(&Merged::new(&args)?.resolve(&Defaults::sampling())?),
        Command::Compare(args) => cmd_compare(&Merged::new(&args)?.resolve(&Defaults::sampling())?),
        Command::Convergence(args) => {
            let merged = Merged::new(&args)?;
            let defaults = Defaults {
                unitary_optional: merged.has_modes_list(),
                ..Defaults::sampling()
            };
            cmd_convergence(&merged.resolve(&defaults)?)
        }
        Command::Bench(args) => {
            let defaults = Defaults {
                alpha: Some(0.9),
                loss_s2: Some(0.5),
                samples: 256,
                photons: 2,
                unitary_optional: true,
            };
            cmd_bench(&Merged::new(&args)?.resolve(&defaults)?)
        }
        Command::GenUnitary(args) => cmd_gen_unitary(&args),
        Command::Oracle(args) => cmd_oracle(&Merged::new(&args)?.resolve(&Defaults::sampling())?),
    }
}

fn announce(cfg: &RunConfig, params: &ModelParams) {
    eprintln!(
        "epsilon = {:.6} (alpha = {}, loss_s2 = {}, var_chi = {:.6}, var_xi0 = {:.6})",
        params.epsilon(),
        cfg.alpha,
        cfg.loss_s2,
        params.var_chi(),
        params.var_xi0()
    );
    if params.epsilon() > EPSILON_WARNING {
        eprintln!(
            "warning: epsilon = {:.4} exceeds {EPSILON_WARNING}; the expansion converges slowly",
            params.epsilon()
        );
    }
}

fn with_workers<T: Send>(cfg: &RunConfig, job: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(job))
}

fn csv_writer(cfg: &RunConfig) -> anyhow::Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

/// Path of the metadata sidecar for a CSV output path.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_sidecar(cfg: &RunConfig, command: &str, extra: serde_json::Value) -> anyhow::Result<()> {
    let Some(out) = &cfg.output else {
        return Ok(());
    };
    let mut doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    });
    if let Ok(params) = cfg.params() {
        doc["derived"] = json!({
            "epsilon": params.epsilon(),
            "var_xi0": params.var_xi0(),
            "var_chi": params.var_chi(),
            "h": params.h(),
            "sigma": params.sigma(),
            "prefactor_per_mode": params.prefactor_per_mode(),
            "norm_per_mode": params.norm_per_mode(),
        });
    }
    doc["results"] = extra;
    let path = sidecar_path(out);
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn estimates(
    cfg: &RunConfig,
    u: &UnitaryMatrix,
    params: &ModelParams,
    patterns: &[OutputPattern],
    samples: usize,
) -> anyhow::Result<Vec<Estimate>> {
    let plan = cfg.plan(samples);
    Ok(with_workers(cfg, || {
        estimate_distribution_with_plan(u, params, patterns, &plan)
    })??)
}

pub fn cmd_estimate(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.params()?;
    announce(cfg, &params);
    let u = cfg.load_unitary()?;
    let patterns = cfg.patterns_for(u.n())?;
    let est = estimates(cfg, &u, &params, &patterns, cfg.samples)?;

    let mut w = csv_writer(cfg)?;
    w.write_record([
        "pattern",
        "mean",
        "stderr",
        "std_dev",
        "order",
        "samples",
        "seed",
        "negative_flag",
    ])?;
    let mut negatives = 0;
    for (p, e) in patterns.iter().zip(&est) {
        negatives += usize::from(e.is_negative());
        w.write_record([
            p.to_string(),
            e.mean.to_string(),
            e.stderr.to_string(),
            e.std_dev().to_string(),
            e.order.to_string(),
            e.samples.to_string(),
            e.seed.to_string(),
            u8::from(e.is_negative()).to_string(),
        ])?;
    }
    w.flush()?;
    write_sidecar(
        cfg,
        "estimate",
        json!({ "rows": est.len(), "negative_estimates": negatives }),
    )
}

pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.params()?;
    announce(cfg, &params);
    let u = cfg.load_unitary()?;
    let patterns = cfg.patterns_for(u.n())?;
    let exact = patterns
        .iter()
        .map(|p| exact_probability(&u, &params, p))
        .collect::<crate::Result<Vec<f64>>>()?;
    let est = estimates(cfg, &u, &params, &patterns, cfg.samples)?;
    let means: Vec<f64> = est.iter().map(|e| e.mean).collect();
    let similarity = cosine_similarity(&means, &exact);

    let mut w = csv_writer(cfg)?;
    w.write_record(["pattern", "estimate", "stderr", "oracle", "abs_error"])?;
    for ((p, e), x) in patterns.iter().zip(&est).zip(&exact) {
        w.write_record([
            p.to_string(),
            e.mean.to_string(),
            e.stderr.to_string(),
            x.to_string(),
            (e.mean - x).abs().to_string(),
        ])?;
    }
    w.write_record(["cosine_similarity", &similarity.to_string(), "", "", ""])?;
    w.flush()?;
    write_sidecar(cfg, "compare", json!({ "cosine_similarity": similarity }))
}

pub fn cmd_convergence(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.params()?;
    announce(cfg, &params);
    let schedule = if cfg.schedule.is_empty() {
        vec![10, 20, 50, 100, 200, 500, 1000]
    } else {
        cfg.schedule.clone()
    };
    let unitaries: Vec<UnitaryMatrix> = if cfg.modes_list.is_empty() {
        vec![cfg.load_unitary()?]
    } else {
        let haar_seed = match cfg.unitary {
            UnitarySource::Haar { seed, .. } => seed,
            UnitarySource::Path(_) => bail!("config field `modes_list` cannot be combined with a unitary file"),
        };
        cfg.modes_list
            .iter()
            .map(|&n| haar_random(n, haar_seed).context("config field `modes_list`"))
            .collect::<anyhow::Result<_>>()?
    };

    let mut w = csv_writer(cfg)?;
    w.write_record(["n_modes", "samples", "similarity"])?;
    let mut finals = Vec::new();
    for u in &unitaries {
        let patterns = cfg.patterns_for(u.n())?;
        let mut last = f64::NAN;
        for &k in &schedule {
            let a: Vec<f64> = estimates(cfg, u, &params, &patterns, k)?
                .iter()
                .map(|e| e.mean)
                .collect();
            let b: Vec<f64> = estimates(cfg, u, &params, &patterns, k + 10)?
                .iter()
                .map(|e| e.mean)
                .collect();
            last = cosine_similarity(&a, &b);
            w.write_record([u.n().to_string(), k.to_string(), last.to_string()])?;
        }
        finals.push(json!({ "n_modes": u.n(), "final_similarity": last }));
    }
    w.flush()?;
    write_sidecar(cfg, "convergence", json!({ "schedule": schedule, "curves": finals }))
}

/// Target pattern for the benchmark: one photon in each of the first `M`
/// modes, wrapping around when `M > N`.
pub fn bench_pattern(modes: usize, photons: usize) -> OutputPattern {
    let mut counts = vec![0u32; modes];
    for k in 0..photons {
        counts[k % modes] += 1;
    }
    OutputPattern::new(counts)
}

/// One benchmark cell: median precomputation time and median per-sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub n_modes: usize,
    pub photons: usize,
    pub precompute_ms: f64,
    pub per_sample_us: f64,
}

/// Times precomputation and single-threaded sampling for every `(N, M)`.
pub fn run_bench(
    params: &ModelParams,
    modes_list: &[usize],
    photons_list: &[usize],
    plan: &SamplingPlan,
    haar_seed: u64,
    reps: usize,
) -> crate::Result<Vec<BenchPoint>> {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    let mut points = Vec::new();
    for &n in modes_list {
        let u = haar_random(n, haar_seed)?;
        for &m in photons_list {
            let pattern = bench_pattern(n, m);
            let mut pre = Vec::with_capacity(reps);
            let mut per = Vec::with_capacity(reps);
            for _ in 0..reps {
                let t0 = Instant::now();
                let tables = PrecomputeTables::with_contractions(Arc::new(Contractions::new(&u)), &pattern);
                pre.push(t0.elapsed().as_secs_f64() * 1e3);

                let t1 = Instant::now();
                let values = single.install(|| integrand_values(&tables, &u, params, &pattern, plan))?;
                per.push(t1.elapsed().as_secs_f64() * 1e6 / values.len() as f64);
            }
            points.push(BenchPoint {
                n_modes: n,
                photons: m,
                precompute_ms: median(&pre),
                per_sample_us: median(&per),
            });
        }
    }
    Ok(points)
}

/// Log-log slopes against `N` per photon number: `(M, precompute, per_sample)`.
pub fn bench_slopes(points: &[BenchPoint]) -> Vec<(usize, f64, f64)> {
    let mut photons: Vec<usize> = points.iter().map(|p| p.photons).collect();
    photons.sort_unstable();
    photons.dedup();
    photons
        .into_iter()
        .filter_map(|m| {
            let row: Vec<&BenchPoint> = points.iter().filter(|p| p.photons == m).collect();
            if row.len() < 2 {
                return None;
            }
            let xs: Vec<f64> = row.iter().map(|p| p.n_modes as f64).collect();
            let pre: Vec<f64> = row.iter().map(|p| p.precompute_ms).collect();
            let per: Vec<f64> = row.iter().map(|p| p.per_sample_us).collect();
            Some((m, loglog_slope(&xs, &pre), loglog_slope(&xs, &per)))
        })
        .collect()
}

pub fn cmd_bench(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.params()?;
    announce(cfg, &params);
    let modes_list = if cfg.modes_list.is_empty() {
        vec![5, 10, 20, 40]
    } else {
        cfg.modes_list.clone()
    };
    let photons_list = if cfg.photons_list.is_empty() {
        vec![2, 4]
    } else {
        cfg.photons_list.clone()
    };
    let haar_seed = match cfg.unitary {
        UnitarySource::Haar { seed, .. } => seed,
        UnitarySource::Path(_) => bail!("config field `unitary`: bench generates its own Haar unitaries"),
    };
    let points = run_bench(
        &params,
        &modes_list,
        &photons_list,
        &cfg.plan(cfg.samples),
        haar_seed,
        cfg.reps,
    )?;

    let mut w = csv_writer(cfg)?;
    w.write_record(["n_modes", "photons", "precompute_ms", "per_sample_us"])?;
    for p in &points {
        w.write_record([
            p.n_modes.to_string(),
            p.photons.to_string(),
            p.precompute_ms.to_string(),
            p.per_sample_us.to_string(),
        ])?;
    }
    w.flush()?;
    let slopes = bench_slopes(&points);
    for (m, pre, per) in &slopes {
        eprintln!("M = {m}: precompute slope {pre:.3}, per-sample slope {per:.3}");
    }
    let slopes_json: Vec<_> = slopes
        .iter()
        .map(|(m, pre, per)| json!({ "photons": m, "precompute_slope": pre, "per_sample_slope": per }))
        .collect();
    write_sidecar(cfg, "bench", json!({ "points": points, "slopes": slopes_json }))
}

pub fn cmd_gen_unitary(args: &RunArgs) -> anyhow::Result<()> {
    let merged = Merged::new(args)?;
    let (seed, n) = match merged.unitary()? {
        Some(UnitarySource::Haar { seed, n }) => (seed, n),
        Some(UnitarySource::Path(_)) => bail!("config field `unitary`: gen-unitary needs --haar-seed and --modes"),
        None => match args.modes {
            Some(n) => (args.seed.unwrap_or(0), n),
            None => bail!("config field `unitary`: gen-unitary needs --modes"),
        },
    };
    let u = haar_random(n, seed).context("config field `modes`")?;
    match args.out.clone().or(merged.file.output) {
        Some(path) => u.save(&path)?,
        None => io::stdout().write_all(u.to_json().as_bytes())?,
    }
    eprintln!("unitarity residual {:e}", check_unitary(&u));
    Ok(())
}

pub fn cmd_oracle(cfg: &RunConfig) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let u = cfg.load_unitary()?;
    let patterns = cfg.patterns_for(u.n())?;
    let mut w = csv_writer(cfg)?;
    w.write_record(["pattern", "probability"])?;
    let mut total = 0.0;
    for p in &patterns {
        let prob = exact_probability(&u, &params, p)?;
        total += prob;
        w.write_record([p.to_string(), prob.to_string()])?;
    }
    w.flush()?;
    write_sidecar(cfg, "oracle", json!({ "total_probability": total }))
}
