//! Command-line front end: `sample`, `bd`, `analyze` and `check`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analysis::{category_fractions, reweight, reweight_categories, volume_estimate, Estimate};
use crate::bd::{energy_for_kappa, run_bd_replicas, BdConfig, MorseParams};
use crate::error::{Error, Result};
use crate::models::{Ellipsoid, EllipsoidInterior, Model, ParabolaLine, PolymerWall, Polymer6, StickyKappas, Trimer};
use crate::proposals::SamplerParams;
use crate::sampler::{run_chain_with_rng, ChainTrace, TraceRecord};
use crate::selfcheck;
use crate::trace::{read_trace_file, write_summary, write_trace_file, ChainReport, RunSummary, TraceTable};

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "STRATSAMPLE_OUT_DIR";

const DEFAULT_SEMIAXES: [f64; 10] = [2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 1.0, 1.0, 1.0];

#[derive(Parser, Debug)]
#[command(name = "stratsample", version, about = "Sample distributions on stratifications of constraint manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run stratification sampler chains on a built-in model.
    Sample(SampleArgs),
    /// Run Brownian dynamics of the sticky 6-sphere polymer.
    Bd(BdArgs),
    /// Post-process trace files.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the gradient, tangent-space and flat-case self-checks.
    Check,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    ParabolaLine,
    Trimer,
    Polymer6,
    PolymerWall,
    Ellipsoid,
    EllipsoidInterior,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    /// Sticky parameter for trimer, polymer6 and polymer-wall.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long)]
    pub kappa_aa: Option<f64>,
    #[arg(long)]
    pub kappa_ab: Option<f64>,
    #[arg(long)]
    pub kappa_bb: Option<f64>,
    /// Number of spheres for polymer-wall.
    #[arg(long, default_value_t = 10)]
    pub n_spheres: usize,
    #[arg(long, default_value_t = 0.0)]
    pub k_bend: f64,
    /// Comma-separated semi-axes for the ellipsoid models.
    #[arg(long, value_delimiter = ',')]
    pub semiaxes: Option<Vec<f64>>,
    /// Level weights `exp(rate * level)` for the nested ellipsoid.
    #[arg(long, default_value_t = 0.94)]
    pub level_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub surface_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    pub interior_weight: f64,
}

impl ModelArgs {
    pub fn build(&self) -> Result<Box<dyn Model>> {
        let axes = || self.semiaxes.clone().unwrap_or_else(|| DEFAULT_SEMIAXES.to_vec());
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        Ok(match self.model {
            ModelName::ParabolaLine => Box::new(ParabolaLine::new()),
            ModelName::Trimer => Box::new(Trimer::new(positive("kappa", self.kappa)?)),
            ModelName::Polymer6 => {
                let k = |v: Option<f64>, name| positive(name, v.unwrap_or(self.kappa));
                Box::new(Polymer6::typed(StickyKappas {
                    aa: k(self.kappa_aa, "kappa-aa")?,
                    ab: k(self.kappa_ab, "kappa-ab")?,
                    bb: k(self.kappa_bb, "kappa-bb")?,
                }))
            }
            ModelName::PolymerWall => Box::new(PolymerWall::new(self.n_spheres, positive("kappa", self.kappa)?, self.k_bend)?),
            ModelName::Ellipsoid => Box::new(Ellipsoid::with_exponential_weights(axes(), self.level_rate)?),
            ModelName::EllipsoidInterior => {
                Box::new(EllipsoidInterior::new(axes(), self.surface_weight, self.interior_weight)?)
            }
        })
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub sigma_bdy: Option<f64>,
    #[arg(long)]
    pub sigma_tan: Option<f64>,
    #[arg(long)]
    pub lambda_lose: Option<f64>,
    /// Defaults to sigma_bdy * lambda_lose when sigma_bdy or lambda_lose is
    /// given, otherwise to the model's recommendation.
    #[arg(long)]
    pub lambda_gain: Option<f64>,
}

impl ParamArgs {
    pub fn resolve(&self, recommended: SamplerParams) -> Result<SamplerParams> {
        let mut p = recommended;
        p.sigma = self.sigma.unwrap_or(p.sigma);
        p.sigma_tan = self.sigma_tan.unwrap_or(p.sigma_tan);
        p.sigma_bdy = self.sigma_bdy.unwrap_or(p.sigma_bdy);
        p.lambda_lose = self.lambda_lose.unwrap_or(p.lambda_lose);
        p.lambda_gain = match self.lambda_gain {
            Some(g) => g,
            None if self.sigma_bdy.is_some() || self.lambda_lose.is_some() => p.sigma_bdy * p.lambda_lose,
            None => p.lambda_gain,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output directory (default: $STRATSAMPLE_OUT_DIR, else the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File name prefix (default: the model name).
    #[arg(long)]
    pub prefix: Option<String>,
}

impl OutputArgs {
    fn dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 10)]
    pub thin: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent chains run concurrently; chain k uses RNG stream k.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BdArgs {
    /// Target sticky parameter; the well depth is calibrated to match.
    #[arg(long, default_value_t = 2.885, conflicts_with = "energy")]
    pub kappa: f64,
    /// Morse well depth, overriding --kappa.
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long, default_value_t = 60.0)]
    pub rho: f64,
    /// Simulated time per replica.
    #[arg(long, default_value_t = 100.0)]
    pub time: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.05)]
    pub cadence: f64,
    #[arg(long, default_value_t = 0.1)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Fraction of records in each category, with binned standard errors.
    Fractions(FractionArgs),
    /// Fractions or an observable mean under per-record weights.
    Reweight(ReweightArgs),
    /// Volume of each category relative to an anchor of known volume.
    Volume(VolumeArgs),
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Trace files; records are concatenated in order.
    #[arg(long = "trace", required = true)]
    pub traces: Vec<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
}

#[derive(Args, Debug)]
pub struct FractionArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Column that defines the categories.
    #[arg(long, default_value = "manifold_id")]
    pub by: String,
}

#[derive(Args, Debug)]
pub struct ReweightArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Weight spec, e.g. `pow:bonds:1.5` or `exp:0.94:level`; terms joined with `*` multiply.
    #[arg(long)]
    pub weights: String,
    #[arg(long, default_value = "manifold_id")]
    pub by: String,
    /// Report the weighted mean of this column instead of category fractions.
    #[arg(long)]
    pub observable: Option<String>,
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Density constant of each category, e.g. `exp:0.94` for `c = exp(0.94 * key)`.
    #[arg(long, default_value = "exp:0")]
    pub weights: String,
    /// `COLUMN:KEY:VOLUME`, e.g. `level:10:2`.
    #[arg(long)]
    pub anchor: String,
    /// Only report this category (`KEY` or `COLUMN:KEY`).
    #[arg(long)]
    pub target: Option<String>,
}

/// One factor of a weight spec.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightTerm {
    /// `exp(rate * column)`; with no column, the category key.
    Exp { rate: f64, column: Option<String> },
    /// `base ^ column`
    Pow { column: String, base: f64 },
}

pub fn parse_weight_spec(spec: &str) -> Result<Vec<WeightTerm>> {
    let bad = || Error::Parse(format!("bad weight spec {spec:?}; expected exp:RATE[:COLUMN] or pow:COLUMN:BASE"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    spec.split('*')
        .map(|term| {
            let parts: Vec<&str> = term.trim().split(':').collect();
            match parts.as_slice() {
                ["exp", rate] => Ok(WeightTerm::Exp { rate: num(rate)?, column: None }),
                ["exp", rate, col] => Ok(WeightTerm::Exp { rate: num(rate)?, column: Some(col.to_string()) }),
                ["pow", col, base] => Ok(WeightTerm::Pow { column: col.to_string(), base: num(base)? }),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn record_weight(terms: &[WeightTerm], table: &TraceTable, r: &TraceRecord) -> Result<f64> {
    let value = |col: &str| -> Result<f64> {
        let key = table.key_of(col, r)?;
        key.parse().map_err(|_| Error::Parse(format!("column {col} value {key:?} is not numeric")))
    };
    let mut w = 1.0;
    for t in terms {
        w *= match t {
            WeightTerm::Exp { rate, column: Some(c) } => (rate * value(c)?).exp(),
            WeightTerm::Pow { column, base } => base.powf(value(column)?),
            WeightTerm::Exp { column: None, .. } => {
                return Err(Error::Parse("exp:RATE without a column needs a category; use exp:RATE:COLUMN".into()))
            }
        };
    }
    Ok(w)
}

fn category_weight(terms: &[WeightTerm], column: &str, key: &str) -> Result<f64> {
    let v: f64 = key.parse().map_err(|_| Error::Parse(format!("category {key:?} is not numeric")))?;
    let mut w = 1.0;
    for t in terms {
        w *= match t {
            WeightTerm::Exp { rate, column: c } if c.as_deref().is_none_or(|c| c == column) => (rate * v).exp(),
            WeightTerm::Pow { column: c, base } if c == column => base.powf(v),
            _ => return Err(Error::Parse(format!("volume weights may only depend on column {column}"))),
        };
    }
    Ok(w)
}

fn load_traces(paths: &[PathBuf]) -> Result<TraceTable> {
    let mut table: Option<TraceTable> = None;
    for p in paths {
        let t = read_trace_file(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
        match &mut table {
            None => table = Some(t),
            Some(acc) => {
                if acc.observable_names != t.observable_names {
                    return Err(Error::Parse(format!("{}: columns differ from the first trace", p.display())));
                }
                acc.records.extend(t.records);
            }
        }
    }
    table.ok_or_else(|| Error::InvalidParameter("no trace files given".into()))
}

fn keys_by(table: &TraceTable, column: &str) -> Result<Vec<String>> {
    table.records.iter().map(|r| table.key_of(column, r)).collect()
}

/// Copies of the records with `manifold_id` replaced by the category key and
/// the observables replaced by `extra`.
fn rekeyed(table: &TraceTable, column: &str, extra: impl Fn(usize) -> Vec<f64>) -> Result<Vec<TraceRecord>> {
    let keys = keys_by(table, column)?;
    Ok(table
        .records
        .iter()
        .zip(keys)
        .enumerate()
        .map(|(i, (r, k))| TraceRecord { step: r.step, manifold_id: k, m_l: r.m_l, observables: extra(i) })
        .collect())
}

/// Run the analysis and return its JSON report.
pub fn analyze(cmd: &AnalyzeCommand) -> Result<serde_json::Value> {
    let by_key = |r: &TraceRecord| r.manifold_id.clone();
    match cmd {
        AnalyzeCommand::Fractions(a) => {
            let table = load_traces(&a.trace.traces)?;
            let records = rekeyed(&table, &a.by, |_| Vec::new())?;
            let fr = category_fractions(&records, by_key, a.trace.bins)?;
            Ok(json!({ "n_records": records.len(), "by": a.by, "fractions": fr }))
        }
        AnalyzeCommand::Reweight(a) => {
            let table = load_traces(&a.trace.traces)?;
            let terms = parse_weight_spec(&a.weights)?;
            let weights: Vec<f64> = table.records.iter().map(|r| record_weight(&terms, &table, r)).collect::<Result<_>>()?;
            let weight = |r: &TraceRecord| r.observables[0];
            match &a.observable {
                Some(col) => {
                    let values = table.column(col)?;
                    let records = rekeyed(&table, "manifold_id", |i| vec![weights[i], values[i]])?;
                    let est = reweight(&records, weight, |r| r.observables[1], a.trace.bins)?;
                    Ok(json!({ "n_records": records.len(), "observable": col, "estimate": est }))
                }
                None => {
                    let records = rekeyed(&table, &a.by, |i| vec![weights[i]])?;
                    let fr = reweight_categories(&records, weight, by_key, a.trace.bins)?;
                    Ok(json!({ "n_records": records.len(), "by": a.by, "fractions": fr }))
                }
            }
        }
        AnalyzeCommand::Volume(a) => {
            let table = load_traces(&a.trace.traces)?;
            let terms = parse_weight_spec(&a.weights)?;
            let parts: Vec<&str> = a.anchor.rsplitn(3, ':').collect();
            let [vol, anchor_key, column] = parts.as_slice() else {
                return Err(Error::Parse(format!("bad anchor {:?}; expected COLUMN:KEY:VOLUME", a.anchor)));
            };
            let anchor_volume: f64 = vol.parse().map_err(|_| Error::Parse(format!("bad anchor volume {vol:?}")))?;
            let anchor_key = canonical_key(anchor_key);
            let records = rekeyed(&table, column, |_| Vec::new())?;
            let mut targets: Vec<String> = match &a.target {
                Some(t) => vec![canonical_key(t.strip_prefix(&format!("{column}:")).unwrap_or(t))],
                None => records.iter().map(by_key).filter(|k| *k != anchor_key).collect(),
            };
            targets.sort();
            targets.dedup();
            let mut weights = BTreeMap::new();
            for k in targets.iter().chain(std::iter::once(&anchor_key)) {
                weights.insert(k.clone(), category_weight(&terms, column, k)?);
            }
            let weight_of = |k: &str| weights[k];
            let mut out: BTreeMap<String, Estimate> = BTreeMap::new();
            for t in &targets {
                let est = volume_estimate(&records, by_key, &weight_of, t, (&anchor_key, anchor_volume), a.trace.bins)?;
                out.insert(t.clone(), est);
            }
            Ok(json!({
                "n_records": records.len(),
                "by": column,
                "anchor": { "key": anchor_key, "volume": anchor_volume },
                "volumes": out,
            }))
        }
    }
}

/// Numeric keys in the form traces use (`10.0` -> `10`).
fn canonical_key(k: &str) -> String {
    k.parse::<f64>().map(crate::trace::format_value).unwrap_or_else(|_| k.to_string())
}

/// Files written so far; removed unless the run completes.
struct OutputGuard {
    files: Vec<PathBuf>,
    done: bool,
}

impl OutputGuard {
    fn new() -> Self {
        OutputGuard { files: Vec::new(), done: false }
    }
    fn track(&mut self, p: &Path) -> PathBuf {
        self.files.push(p.to_path_buf());
        p.to_path_buf()
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.done {
            for f in &self.files {
                let _ = fs::remove_file(f);
            }
        }
    }
}

fn write_run(
    output: &OutputArgs,
    prefix: &str,
    what: &str,
    traces: &[ChainTrace],
    mut summary: RunSummary,
) -> Result<PathBuf> {
    let dir = output.dir();
    fs::create_dir_all(&dir)?;
    let prefix = output.prefix.clone().unwrap_or_else(|| prefix.to_string());
    let mut guard = OutputGuard::new();
    for (k, t) in traces.iter().enumerate() {
        let name = format!("{prefix}.{what}{k}.csv");
        write_trace_file(&guard.track(&dir.join(&name)), t)?;
        summary.chains.push(ChainReport::new(k, name, t));
    }
    let path = guard.track(&dir.join(format!("{prefix}.summary.json")));
    write_summary(&path, &summary)?;
    guard.done = true;
    Ok(path)
}

pub fn sample(args: &SampleArgs) -> Result<PathBuf> {
    let model = args.model.build()?;
    let params = args.params.resolve(model.recommended_params())?;
    if args.chains == 0 {
        return Err(Error::InvalidParameter("need at least one chain".into()));
    }
    if args.thin == 0 {
        return Err(Error::InvalidParameter("thin must be at least 1".into()));
    }
    let model: &dyn Model = model.as_ref();
    let traces: Vec<ChainTrace> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..args.chains)
            .map(|k| {
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                    rng.set_stream(k as u64);
                    run_chain_with_rng(model, model.initial_state(), args.steps, args.thin, &params, &mut rng, args.seed)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect::<Result<_>>()
    })?;
    let summary = RunSummary { model: model.describe(), params: Some(params), bd: None, chains: Vec::new() };
    write_run(&args.output, model.name(), "chain", &traces, summary)
}

pub fn bd(args: &BdArgs) -> Result<PathBuf> {
    let energy = match args.energy {
        Some(e) => e,
        None => energy_for_kappa(args.kappa, args.rho)?,
    };
    let potential = MorseParams::new(energy, args.rho);
    let config = BdConfig { potential, dt: args.dt, total_time: args.time, cadence: args.cadence, burn_in: args.burn_in };
    if args.replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    let traces = run_bd_replicas(&config, args.replicas, args.seed)?;
    let model = json!({ "name": "polymer6-bd", "kappa": potential.sticky_parameter(), "energy": energy, "rho": args.rho });
    let summary = RunSummary { model, params: None, bd: Some(config), chains: Vec::new() };
    write_run(&args.output, "polymer6-bd", "replica", &traces, summary)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => sample(a).map(|p| println!("{}", p.display())),
        Command::Bd(a) => bd(a).map(|p| println!("{}", p.display())),
        Command::Analyze(a) => analyze(a).map(|v| println!("{}", serde_json::to_string_pretty(&v).expect("serializable"))),
        Command::Check => {
            let results = selfcheck::run_all();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Error::InvalidState("self-check failed".into()))
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_specs() {
        assert_eq!(parse_weight_spec("exp:0.94").unwrap(), vec![WeightTerm::Exp { rate: 0.94, column: None }]);
        assert_eq!(
            parse_weight_spec("pow:n_AA:2 * exp:-1:level").unwrap(),
            vec![
                WeightTerm::Pow { column: "n_AA".into(), base: 2.0 },
                WeightTerm::Exp { rate: -1.0, column: Some("level".into()) }
            ]
        );
        assert!(parse_weight_spec("exp").is_err());
        assert!(parse_weight_spec("pow:x:y").is_err());
    }

    #[test]
    fn category_weights_follow_key() {
        let t = parse_weight_spec("exp:0.5").unwrap();
        assert!((category_weight(&t, "level", "2").unwrap() - 1f64.exp()).abs() < 1e-15);
        let t = parse_weight_spec("pow:other:2").unwrap();
        assert!(category_weight(&t, "level", "2").is_err());
    }

    #[test]
    fn lambda_gain_default_follows_overrides() {
        let rec = SamplerParams::new(0.4, 0.3, 0.2, 0.4).with_lambda_gain(0.24);
        let p = ParamArgs::default().resolve(rec).unwrap();
        assert_eq!(p.lambda_gain, 0.24);
        let p = ParamArgs { lambda_lose: Some(0.5), ..Default::default() }.resolve(rec).unwrap();
        assert!((p.lambda_gain - 0.15).abs() < 1e-15);
        assert!(ParamArgs { sigma: Some(-1.0), ..Default::default() }.resolve(rec).is_err());
    }

    #[test]
    fn numeric_keys_are_canonical() {
        assert_eq!(canonical_key("10.0"), "10");
        assert_eq!(canonical_key("EEI"), "EEI");
    }
}
