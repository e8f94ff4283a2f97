use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use assess_service::{App, ServiceOptions};
use bayes_assess::config::{Budget, OpenBudget};
use bayes_assess::data::{ingest_predictions, InputFormat};
use bayes_assess::engine::{make_replay_oracle, read_trajectories, run_experiment, write_trajectories, Trajectory};
use bayes_assess::evalharness::{evaluate_runs, summarize_methods, EvaluationReport, GroundTruth};
use bayes_assess::{build_report, synth_pool, Assessment, AssessmentReport, Pool, SessionConfig, SynthSpec};

use crate::{EvalArgs, IngestArgs, ReportArgs, RunArgs, ServeArgs, SynthArgs};

/// A required config file that does not exist; reported with usage, exit 2.
#[derive(Debug)]
pub struct ConfigMissing(pub PathBuf);

impl fmt::Display for ConfigMissing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config file {} not found", self.0.display())
    }
}

impl std::error::Error for ConfigMissing {}

fn load_config(path: &Path) -> Result<SessionConfig> {
    if !path.is_file() {
        return Err(ConfigMissing(path.to_path_buf()).into());
    }
    SessionConfig::load(path).with_context(|| format!("reading config {}", path.display()))
}

fn load_pool(path: &Path) -> Result<Pool> {
    ingest_predictions(path, InputFormat::from_path(path))
        .with_context(|| format!("reading pool {}", path.display()))
}

fn sidecar(traj: &Path) -> PathBuf {
    let mut name = traj.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_kebab<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .with_context(|| format!("unknown {what} `{value}`"))
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let format = match &args.format {
        Some(f) => parse_kebab("format", f)?,
        None => InputFormat::from_path(&args.input),
    };
    let pool = ingest_predictions(&args.input, format)
        .with_context(|| format!("reading {}", args.input.display()))?;
    pool.write_jsonl(BufWriter::new(File::create(&args.out)?))?;
    let labeled = pool.records().iter().filter(|r| r.label.is_some()).count();
    eprintln!(
        "{} records, {} classes, {labeled} labeled -> {}",
        pool.len(),
        pool.num_classes(),
        args.out.display()
    );
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_reader(BufReader::new(file))
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let profile = match (&args.profile, args.classes) {
                (Some(p), _) => p.clone(),
                (None, Some(k)) => SynthSpec::linear_profile(k, args.low, args.high),
                (None, None) => bail!("give --spec, --profile or --classes"),
            };
            let seed = args.seed.context("--seed is required without --spec")?;
            SynthSpec::new(profile, args.n.unwrap_or(10_000), seed)
        }
    };
    if let Some(p) = args.profile.filter(|_| args.spec.is_some()) {
        spec.num_classes = p.len();
        spec.accuracy_profile = p;
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(o) = args.offset {
        spec.calibration_offset = o;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let pool = synth_pool(&spec)?;
    pool.write_jsonl(BufWriter::new(File::create(&args.out)?))?;
    eprintln!("{} records, {} classes -> {}", pool.len(), pool.num_classes(), args.out.display());
    Ok(())
}

pub fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(b) = &args.budget {
        cfg.budget = match b.parse::<usize>() {
            Ok(n) => Budget::Labels(n),
            Err(_) => Budget::Open(parse_kebab::<OpenBudget>("budget", b)?),
        };
    }
    if let Some(s) = &args.strategy {
        cfg.strategy.kind = parse_kebab("strategy", s)?;
    }
    let pool = load_pool(&args.pool)?;
    let assessment = Arc::new(Assessment::from_config(&pool, cfg)?);
    let truth = if args.stop {
        GroundTruth::compute(&pool, &assessment)?.stop_truth()
    } else {
        if assessment.config().budget.limit().is_none() {
            log::warn!("open budget without --stop: runs end when the pool is exhausted");
        }
        None
    };
    let oracle = make_replay_oracle(&pool)?;
    let outcomes = run_experiment(&assessment, &oracle, truth.as_ref(), args.jobs)?;
    let trajectories: Vec<Trajectory> = outcomes.into_iter().map(|o| o.trajectory).collect();

    write_trajectories(&trajectories, BufWriter::new(File::create(&args.out)?))?;
    let side = sidecar(&args.out);
    fs::write(&side, serde_json::to_string_pretty(assessment.config())? + "\n")?;
    for t in &trajectories {
        eprintln!(
            "run {}: {} labels ({:?})",
            t.run,
            t.steps.len(),
            t.terminal.expect("finished run")
        );
    }
    eprintln!("config {} -> {}", assessment.config().digest(), side.display());
    Ok(())
}

fn read_traj(path: &Path) -> Result<Vec<Trajectory>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let t = read_trajectories(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
    if t.is_empty() {
        bail!("{} holds no trajectory", path.display());
    }
    Ok(t)
}

/// Config of a trajectory file, checked against the digest it carries.
fn traj_config(explicit: Option<&Path>, traj: &Path, trajectories: &[Trajectory]) -> Result<SessionConfig> {
    let cfg = load_config(&explicit.map(Path::to_path_buf).unwrap_or_else(|| sidecar(traj)))?;
    let digest = cfg.digest();
    for t in trajectories {
        if !t.config_digest.is_empty() && t.config_digest != digest {
            bail!(
                "{} run {} was produced by config {}, not {}",
                traj.display(),
                t.run,
                t.config_digest,
                digest
            );
        }
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct EvalOutput {
    config_digests: BTreeMap<String, String>,
    truth: BTreeMap<String, GroundTruth>,
    #[serde(flatten)]
    report: EvaluationReport,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let pool = load_pool(&args.truth_from)?;
    if !pool.is_fully_labeled() {
        bail!("{} is not fully labeled", args.truth_from.display());
    }
    let mut methods = BTreeMap::new();
    let mut digests = BTreeMap::new();
    let mut truths = BTreeMap::new();
    for path in &args.traj {
        let trajectories = read_traj(path)?;
        let cfg = traj_config(args.config.as_deref(), path, &trajectories)?;
        let kind = serde_json::to_value(cfg.strategy.kind)?;
        let mut name = kind.as_str().unwrap_or("method").to_string();
        if methods.contains_key(&name) {
            name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(name);
        }
        if methods.contains_key(&name) {
            bail!("two trajectory files resolve to method name `{name}`");
        }
        let assessment = Assessment::from_config(&pool, cfg)?;
        let truth = GroundTruth::compute(&pool, &assessment)?;
        methods.insert(name.clone(), evaluate_runs(&assessment, &truth, &trajectories)?);
        digests.insert(name.clone(), assessment.config().digest());
        truths.insert(name, truth);
    }
    let baseline = match &args.baseline {
        Some(b) => Some(b.as_str()),
        None if methods.len() > 1 && methods.contains_key("random") => Some("random"),
        None => None,
    };
    let report = summarize_methods(&methods, baseline)?;
    write_json(
        &EvalOutput {
            config_digests: digests,
            truth: truths,
            report,
        },
        args.out.as_deref(),
    )
}

pub fn report(args: ReportArgs) -> Result<()> {
    let trajectories = read_traj(&args.traj)?;
    let cfg = traj_config(args.config.as_deref(), &args.traj, &trajectories)?;
    let traj = trajectories
        .iter()
        .find(|t| t.run == args.run)
        .with_context(|| format!("no run {} in {}", args.run, args.traj.display()))?;
    let pool = load_pool(&args.pool)?;
    let assessment = Assessment::from_config(&pool, cfg)?;
    let beliefs = traj.replay(&assessment)?;
    let report = build_report(&assessment, &beliefs, traj.steps.len(), traj.terminal)?;
    if let Some(dir) = &args.plots {
        write_plots(dir, &report)?;
    }
    write_json(&report, args.out.as_deref())
}

/// `summaries.csv` always; `ranking.csv` and `reliability.json` when present.
fn write_plots(dir: &Path, report: &AssessmentReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join("summaries.csv"))?);
    writeln!(out, "arm,name,quantity,n_labels,mean,ci_low,ci_high")?;
    for arm in &report.arms {
        let mut rows = Vec::new();
        if let Some(s) = arm.accuracy {
            rows.push(("accuracy".to_string(), s));
        }
        if let Some(cs) = &arm.confusion {
            rows.extend(cs.iter().enumerate().map(|(j, s)| (format!("true_class_{j}"), *s)));
        }
        if let Some(s) = arm.metric {
            rows.push(("metric".to_string(), s));
        }
        for (q, s) in rows {
            writeln!(
                out,
                "{},{:?},{q},{},{},{},{}",
                arm.arm, arm.name, arm.n_labels, s.mean, s.ci_low, s.ci_high
            )?;
        }
    }
    out.flush()?;
    if let Some(r) = &report.ranking {
        let mut out = BufWriter::new(File::create(dir.join("ranking.csv"))?);
        writeln!(out, "arm,mean_rank,rank_low,rank_high,p_extreme")?;
        for (arm, g) in r.arms.iter().zip(&r.distribution.groups) {
            writeln!(out, "{arm},{},{},{},{}", g.mean_rank, g.rank_low, g.rank_high, g.p_extreme)?;
        }
        out.flush()?;
    }
    if let Some(r) = &report.reliability {
        fs::write(dir.join("reliability.json"), serde_json::to_string_pretty(r)? + "\n")?;
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    cfg.validate()?;
    let pool = load_pool(&args.pool)?;
    let app = App::new(
        pool,
        ServiceOptions {
            default_config: Some(cfg),
            token: args.token,
            state_dir: args.state_dir,
        },
    )?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        assess_service::serve(listener, app).await?;
        Ok(())
    })
}
