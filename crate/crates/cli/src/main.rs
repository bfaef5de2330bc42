//! `extinction`: exact statistics, simulation, limit-law prediction and
//! validation for the stochastic logistic process.
//!
//! Machine-readable output goes to files or stdout; human summaries go to
//! stderr. Exit codes: 0 success or Pass, 1 Fail, 2 invalid input or error,
//! 3 Inconclusive.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use extinction_core::exact::{self, build_log_nu};
use extinction_core::laws::{self, predict_law, DispatchPolicy};
use extinction_core::model::{classify_phase, make_params, BDRateSpec, ModelParams};
use extinction_core::rng::DEFAULT_SEED;
use extinction_core::sim::{self, Conditioning};
use extinction_core::validation::{self, CaseId, Instance, Verdict};
use extinction_core::{export, Error};

/// Environment variable naming the directory relative output paths resolve
/// against.
const OUT_DIR_ENV: &str = "EXTINCTION_OUT_DIR";

#[derive(Parser)]
#[command(name = "extinction", version, about = "Extinction times of the stochastic logistic process")]
struct Cli {
    /// Worker threads for simulation (default: all cores). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and asymptotic quantities of one instance, as JSON.
    Analyze(AnalyzeArgs),
    /// Sample extinction times; writes `<output>.csv` and `<output>.json`.
    Simulate(SimulateArgs),
    /// Predicted CDF of the extinction time as `t,F` CSV.
    Predict(PredictArgs),
    /// Validate a limit-law case; writes a JSON report.
    Validate(ValidateArgs),
    /// Analyze a grid of `(n, r)` values; one CSV row per point.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    r: f64,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// |c| at which the phase leaves the critical window.
    #[arg(long, default_value_t = 3.0)]
    phase_cutoff: f64,
    /// γX₀ (or δX₀) treated as unbounded from this value on.
    #[arg(long, default_value_t = 5.0)]
    gamma_x0_cutoff: f64,
    /// δ below which the small-δ rapid-extinction law applies.
    #[arg(long, default_value_t = 0.1)]
    small_delta: f64,
    /// X₀ below which the initial value counts as constant.
    #[arg(long, default_value_t = 10)]
    x0_constant: u64,
    /// Replicates of the diffusion sample behind the critical-window law.
    #[arg(long, default_value_t = 10_000)]
    diffusion_replicates: usize,
}

impl PolicyArgs {
    fn policy(&self, seed: u64) -> Result<DispatchPolicy, Error> {
        if !(self.phase_cutoff > 0.0) || !(self.gamma_x0_cutoff > 0.0) || !(self.small_delta > 0.0) {
            return Err(Error::InvalidParameter("policy thresholds must be positive".into()));
        }
        Ok(DispatchPolicy {
            phase_cutoff: self.phase_cutoff,
            gamma_x0_cutoff: self.gamma_x0_cutoff,
            small_delta: self.small_delta,
            x0_constant: self.x0_constant,
            diffusion_replicates: self.diffusion_replicates,
            diffusion_seed: seed,
            ..DispatchPolicy::default()
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x0: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CondArg {
    None,
    Zero,
    Xstar,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x0: u64,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = sim::DEFAULT_T_CAP)]
    t_cap: f64,
    /// Simulate the branching process with birth rate r instead (n unused).
    #[arg(long)]
    bbp: bool,
    /// Condition on hitting 0 (`zero`) or X* (`xstar`) first.
    #[arg(long, value_enum, default_value = "none")]
    conditioning: CondArg,
    /// Output stem; `.csv` and `.json` are appended.
    #[arg(long, default_value = "samples")]
    output: PathBuf,
    /// Also dump the path of replicate 0 as `time,state` CSV.
    #[arg(long)]
    path: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    x0: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Grid intervals of the CSV.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Case id, e.g. thm1-1a, thm3, thm4, thm5-2.
    #[arg(long = "case")]
    case_id: String,
    /// Defaults to the case preset.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Defaults to the case preset.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Censoring horizon for unconditioned runs (default: case preset).
    #[arg(long)]
    t_cap: Option<f64>,
    /// Override the preset sequence with `n:r:x0` triples.
    #[arg(long, value_delimiter = ',')]
    instance: Vec<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for per-instance sample CSVs.
    #[arg(long)]
    samples_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated values of n.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long)]
    r_min: f64,
    #[arg(long)]
    r_max: f64,
    #[arg(long, default_value_t = 10)]
    r_steps: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: could not configure the thread pool");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx { out_dir: cli.out_dir };
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Predict(a) => predict(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

struct Ctx {
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Write to the resolved path, or stdout when `output` is `None`.
    fn emit(&self, output: Option<&Path>, text: &str) -> Result<(), Error> {
        match output {
            Some(p) => {
                let path = self.resolve(p);
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(&path, text)?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Serialize)]
struct LawSummary {
    case_tag: String,
    scale_s: f64,
    log_scale_s: f64,
    shift_t: f64,
}

#[derive(Serialize)]
struct Analysis {
    n: u64,
    r: f64,
    phase: String,
    c: f64,
    x_star: Option<f64>,
    big_x_star: Option<u64>,
    v_star: Option<f64>,
    x0: Option<u64>,
    h_plus: Option<f64>,
    h_minus: Option<f64>,
    log_p_star: Option<f64>,
    l_star: Option<f64>,
    log_l_star: Option<f64>,
    log_e_star_o: Option<f64>,
    log_e_star_asymptotic: Option<f64>,
    mean_extinction: Option<f64>,
    log_mean_extinction: Option<f64>,
    law: Option<LawSummary>,
}

fn analysis(p: &ModelParams, x0: Option<u64>, policy: &DispatchPolicy) -> Result<Analysis, Error> {
    if let Some(x) = x0 {
        if x > p.n {
            return Err(Error::StateOutOfRange { state: x, max: p.n });
        }
    }
    let phase = classify_phase(p, policy.phase_cutoff);
    let table = build_log_nu(p)?;
    let xs = p.big_x_star.unwrap_or(0);
    let window = xs >= 2;
    let (mut h_plus, mut h_minus) = (None, None);
    if let (Some(x), true) = (x0, xs >= 1) {
        h_plus = finite(table.log_h_plus(x)?.exp());
        h_minus = Some(table.log_h_minus(x)?.exp());
    }
    let log_p_star = if window { Some(exact::p_star_exact(&table)?) } else { None };
    let log_l_star = if window { Some(exact::log_l_star(&table)?) } else { None };
    let log_e_star_o = if window { Some(exact::sojourn_expectation(&table)?) } else { None };
    let log_mean = x0.map(|x| table.log_mean_extinction_all()[x as usize]);
    let law = match x0 {
        Some(x) if x > 0 => {
            let l = predict_law(p, x, policy)?;
            Some(LawSummary {
                case_tag: l.case_tag,
                scale_s: l.scale_s,
                log_scale_s: l.log_scale_s,
                shift_t: l.shift_t,
            })
        }
        _ => None,
    };
    Ok(Analysis {
        n: p.n,
        r: p.r,
        phase: format!("{:?}", phase.kind),
        c: p.c,
        x_star: p.x_star,
        big_x_star: p.big_x_star,
        v_star: p.v_star,
        x0,
        h_plus,
        h_minus,
        log_p_star,
        l_star: log_l_star.map(f64::exp),
        log_l_star,
        log_e_star_o,
        log_e_star_asymptotic: laws::e_star_asymptotic(p).ok(),
        mean_extinction: log_mean.map(f64::exp).and_then(finite),
        log_mean_extinction: log_mean.and_then(finite),
        law,
    })
}

fn analyze(ctx: &Ctx, a: AnalyzeArgs) -> Result<u8, Error> {
    let p = make_params(a.model.n, a.model.r)?;
    let policy = a.policy.policy(a.seed)?;
    let out = analysis(&p, a.x0, &policy)?;
    eprintln!("phase {} (c = {:.4})", out.phase, out.c);
    ctx.emit(a.output.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(0)
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<u8, Error> {
    if a.replicates == 0 {
        return Err(Error::InvalidParameter("--replicates must be ≥ 1".into()));
    }
    let samples = match (a.bbp, a.conditioning) {
        (true, CondArg::None) => {
            let spec = BDRateSpec::bbp(a.model.r)?;
            sim::sample_extinction(&spec, a.x0, a.replicates, a.seed, a.t_cap)?
        }
        (true, _) => {
            return Err(Error::InvalidParameter(
                "conditioning applies to the logistic chain only".into(),
            ))
        }
        (false, CondArg::None) => {
            let p = make_params(a.model.n, a.model.r)?;
            sim::sample_extinction(&BDRateSpec::logistic(&p), a.x0, a.replicates, a.seed, a.t_cap)?
        }
        (false, c) => {
            let p = make_params(a.model.n, a.model.r)?;
            let target = match c {
                CondArg::Zero => Conditioning::HitsZeroFirst,
                _ => Conditioning::HitsXstarFirst,
            };
            sim::sample_conditioned(&p, a.x0, target, a.replicates, a.seed)?
        }
    };
    let (csv, json) = export::write_samples(&samples, &ctx.resolve(&a.output))?;
    eprintln!(
        "{} values, {} censored -> {} and {}",
        samples.values.len(),
        samples.meta.censored_count,
        csv.display(),
        json.display()
    );
    if let Some(path_out) = a.path {
        let spec = if a.bbp {
            BDRateSpec::bbp(a.model.r)?
        } else {
            BDRateSpec::logistic(&make_params(a.model.n, a.model.r)?)
        };
        let mut rng = extinction_core::rng::stream(a.seed, 0);
        let path = sim::simulate_path_with(&spec, a.x0, &mut rng, a.t_cap, &[]);
        ctx.emit(Some(&path_out), &export::path_csv(&path))?;
    }
    Ok(0)
}

fn predict(ctx: &Ctx, a: PredictArgs) -> Result<u8, Error> {
    let p = make_params(a.model.n, a.model.r)?;
    let policy = a.policy.policy(a.seed)?;
    let law = predict_law(&p, a.x0, &policy)?;
    eprintln!(
        "{}: scale {} (log {}), shift {}",
        law.case_tag, law.scale_s, law.log_scale_s, law.shift_t
    );
    let text = match a.format {
        Format::Csv => {
            let (grid, values) = export::law_grid(&law, a.points);
            export::cdf_csv(&grid, &values)
        }
        Format::Json => serde_json::to_string_pretty(&law)? + "\n",
    };
    ctx.emit(a.output.as_deref(), &text)?;
    Ok(0)
}

fn parse_instance(s: &str) -> Result<Instance, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidParameter(format!("instance `{s}` is not n:r:x0"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(Instance {
        n: parts[0].parse().map_err(|_| bad())?,
        r: parts[1].parse().map_err(|_| bad())?,
        x0: parts[2].parse().map_err(|_| bad())?,
    })
}

fn validate(ctx: &Ctx, a: ValidateArgs) -> Result<u8, Error> {
    let case: CaseId = a.case_id.parse()?;
    if let Some(cap) = a.t_cap {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!("--t-cap must be > 0, got {cap}")));
        }
    }
    let sequence = if a.instance.is_empty() {
        validation::preset_sequence(case)
    } else {
        a.instance.iter().map(|s| parse_instance(s)).collect::<Result<_, _>>()?
    };
    let replicates = a.replicates.unwrap_or_else(|| validation::preset_replicates(case));
    let tolerance = a
        .tolerance
        .unwrap_or_else(|| validation::default_tolerance(case, replicates));
    let (report, runs) = validation::validate_theorem_runs(case, &sequence, replicates, a.seed, tolerance, a.t_cap)?;
    if let Some(dir) = &a.samples_dir {
        for (k, run) in runs.iter().enumerate() {
            let stem = ctx.resolve(dir).join(format!("{}_{k}", case.as_str()));
            export::write_samples(&run.samples, &stem)?;
        }
    }
    for i in &report.instances {
        eprintln!("n={} r={} x0={} ks={:.5} censored={}", i.n, i.r, i.x0, i.ks, i.censored);
    }
    eprintln!("{}: {} (tolerance {})", report.case, report.verdict, report.tolerance);
    ctx.emit(a.output.as_deref(), &(report.to_json()? + "\n"))?;
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 3,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> Result<u8, Error> {
    if !(a.r_min >= 0.0) || !(a.r_max >= a.r_min) || a.r_steps == 0 {
        return Err(Error::InvalidParameter("need 0 ≤ r_min ≤ r_max and r_steps ≥ 1".into()));
    }
    let policy = DispatchPolicy::default();
    let mut out = String::from(
        "n,r,phase,c,x_star,big_x_star,v_star,log_p_star,log_l_star,log_e_star_o,log_e_star_asymptotic\n",
    );
    for &n in &a.n {
        for k in 0..=a.r_steps {
            let r = a.r_min + (a.r_max - a.r_min) * k as f64 / a.r_steps as f64;
            let p = make_params(n, r)?;
            let row = analysis(&p, None, &policy)?;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                n,
                r,
                row.phase,
                row.c,
                opt(row.x_star),
                row.big_x_star.map(|v| v.to_string()).unwrap_or_default(),
                opt(row.v_star),
                opt(row.log_p_star),
                opt(row.log_l_star),
                opt(row.log_e_star_o),
                opt(row.log_e_star_asymptotic),
            ));
        }
    }
    ctx.emit(a.output.as_deref(), &out)?;
    Ok(0)
}
