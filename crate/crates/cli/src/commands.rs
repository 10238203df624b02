use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ggm_core::graphs::SYMMETRIC_SEARCH_MAX_P;
use ggm_core::selector::{DegreeCheck, DEFAULT_ETA};
use ggm_core::specfun::PenaltyTable;
use ggm_core::{
    build_penalty_table, run_benchmark, run_prop1_experiment, select, validate_degree_condition,
    BenchConfig, BenchReport, CollectionSpec, CombineRule, Density, Family, Method, OracleMode,
    Prop1Config, Prop1Report, Sample, SelectionResult, Strategy,
};
use serde::Serialize;

use crate::cli::{EstimateArgs, PenTableArgs, Prop1Args, SimulateArgs};
use crate::config::FileLayer;
use crate::error::CliError;

/// Where an artifact went; decides where the human-readable summary goes.
enum Sink {
    Stdout,
    File,
}

fn emit(out: Option<&Path>, content: &str) -> Result<Sink, CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
            Ok(Sink::File)
        }
        None => {
            print!("{content}");
            Ok(Sink::Stdout)
        }
    }
}

/// The summary goes to standard output unless the artifact already did.
fn summarize(sink: Sink, text: &str) {
    match sink {
        Sink::File => print!("{text}"),
        Sink::Stdout => eprint!("{text}"),
    }
}

fn echo_config<T: Serialize>(cfg: &T) -> Result<(), CliError> {
    eprintln!("config: {}", serde_json::to_string(cfg)?);
    Ok(())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("missing required option --{flag}")))
}

fn parse<T>(text: Option<String>, what: &str) -> Result<Option<T>, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    text.map(|s| s.parse().map_err(|e| CliError::usage(format!("--{what}: {e}"))))
        .transpose()
}

/// Picks the default search for `family`, falling back to stepwise where
/// branch-and-bound cannot represent the vertex set.
fn default_strategy(family: Family, p: usize) -> Strategy {
    match Strategy::default_for(family) {
        Strategy::BranchAndBound if p > SYMMETRIC_SEARCH_MAX_P => Strategy::Stepwise,
        s => s,
    }
}

fn check_pairing(family: Family, strategy: Strategy) -> Result<(), CliError> {
    let ok = match strategy {
        Strategy::ExactDecomposed => family == Family::DegreeDirected,
        Strategy::BranchAndBound => family == Family::Degree,
        Strategy::Exhaustive | Strategy::Stepwise => true,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "strategy {strategy} cannot search the {family} family"
        )))
    }
}

#[derive(Debug, Serialize)]
struct PenTableConfig {
    n: usize,
    p: usize,
    k: f64,
    dmax: usize,
}

pub fn pen_table(args: PenTableArgs, mut file: FileLayer) -> Result<(), CliError> {
    let cfg = PenTableConfig {
        n: required(file.take("n", args.n)?, "n")?,
        p: required(file.take("p", args.p)?, "p")?,
        k: file.take("k", args.k)?.unwrap_or(2.0),
        dmax: required(file.take("dmax", args.dmax)?, "dmax")?,
    };
    let out = file.take::<PathBuf>("out", args.out)?;
    file.finish()?;
    echo_config(&cfg)?;
    let table = build_penalty_table(cfg.n, cfg.p, cfg.k, cfg.dmax)?;
    emit(out.as_deref(), &pen_table_csv(&cfg, &table)?)?;
    Ok(())
}

fn pen_table_csv(cfg: &PenTableConfig, table: &PenaltyTable) -> Result<String, CliError> {
    let mut csv = String::new();
    let _ = writeln!(csv, "# config={}", serde_json::to_string(cfg)?);
    csv.push_str("d,pen\n");
    for (d, v) in table.values().iter().enumerate() {
        let _ = writeln!(csv, "{d},{v}");
    }
    Ok(csv)
}

#[derive(Debug, Serialize)]
struct EstimateConfig {
    data: PathBuf,
    n: usize,
    p: usize,
    family: Family,
    dmax: usize,
    k: f64,
    strategy: Strategy,
    eta: f64,
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    config: &'a EstimateConfig,
    degree_check: DegreeCheck,
    #[serde(flatten)]
    result: &'a SelectionResult,
}

pub fn estimate(args: EstimateArgs, mut file: FileLayer) -> Result<(), CliError> {
    let data: PathBuf = required(file.take("data", args.data)?, "data")?;
    let family: Family = parse(file.take("family", args.family)?, "family")?
        .unwrap_or(Family::DegreeDirected);
    let dmax = file.take("dmax", args.dmax)?.unwrap_or(4);
    let k = file.take("k", args.k)?.unwrap_or(2.0);
    let strategy: Option<Strategy> = parse(file.take("strategy", args.strategy)?, "strategy")?;
    let eta = file.take("eta", args.eta)?.unwrap_or(DEFAULT_ETA);
    let out = file.take::<PathBuf>("out", args.out)?;
    file.finish()?;

    let sample = Sample::read_csv_file(&data).map_err(|e| match e {
        ggm_core::Error::Io(io) => CliError::runtime(format!("cannot read {}: {io}", data.display())),
        other => CliError::from(other),
    })?;
    let (n, p) = (sample.n(), sample.p());
    if n < 3 {
        return Err(CliError::usage(format!("need at least 3 observations (got {n})")));
    }
    let cfg = EstimateConfig {
        data,
        n,
        p,
        family,
        dmax,
        k,
        strategy: strategy.unwrap_or_else(|| default_strategy(family, p)),
        eta,
    };
    check_pairing(cfg.family, cfg.strategy)?;
    echo_config(&cfg)?;

    let spec = CollectionSpec::new(cfg.family, cfg.dmax, p)?;
    let check = validate_degree_condition(n, p, spec.max_neighborhood(), cfg.eta)?;
    if let Some(w) = check.warning() {
        eprintln!("warning: {w}");
    }
    let pen = build_penalty_table(n, p, cfg.k, spec.max_neighborhood())?;
    let result = select(&sample, &spec, &pen, cfg.strategy)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let json = serde_json::to_string_pretty(&EstimateOutput {
        config: &cfg,
        degree_check: check,
        result: &result,
    })? + "\n";
    let sink = emit(out.as_deref(), &json)?;
    summarize(
        sink,
        &format!(
            "selected {} with degree {}, criterion {:.6}\n",
            if result.m_hat.is_directed() { "directed shape" } else { "graph" },
            result.m_hat.degree(),
            result.crit
        ),
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct MethodList(Vec<Method>);

impl std::str::FromStr for MethodList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut v: Vec<Method> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m: Method = part.parse().map_err(|e: ggm_core::Error| e.to_string())?;
            if !v.contains(&m) {
                v.push(m);
            }
        }
        if v.is_empty() {
            return Err("no methods given".into());
        }
        Ok(MethodList(v))
    }
}

fn simulate_config(args: SimulateArgs, file: &mut FileLayer) -> Result<BenchConfig, CliError> {
    let n = required(file.take("n", args.n)?, "n")?;
    let p = required(file.take("p", args.p)?, "p")?;
    // --q and --s form one setting; flags replace both file keys together
    let density = if args.q.is_some() || args.s.is_some() {
        file.discard("q");
        file.discard("s");
        match (args.q, args.s) {
            (Some(q), _) => Density::Q(q),
            (_, Some(s)) => Density::S(s),
            _ => unreachable!(),
        }
    } else {
        match (file.take::<f64>("q", None)?, file.take::<f64>("s", None)?) {
            (Some(_), Some(_)) => {
                return Err(CliError::usage("config file sets both q and s"));
            }
            (Some(q), None) => Density::Q(q),
            (None, Some(s)) => Density::S(s),
            (None, None) => return Err(CliError::usage("one of --q or --s is required")),
        }
    };
    let mut cfg = BenchConfig::new(n, p, density);
    if let Some(g) = file.take("graphs", args.graphs)? {
        cfg.graphs = g;
    }
    if let Some(r) = file.take("reps", args.reps)? {
        cfg.reps = r;
    }
    if let Some(k) = file.take("k", args.k)? {
        cfg.k = k;
    }
    if let Some(f) = parse(file.take("family", args.family)?, "family")? {
        cfg.family = f;
    }
    if let Some(d) = file.take("dmax", args.dmax)? {
        cfg.d = d;
    }
    cfg.strategy = parse(file.take("strategy", args.strategy)?, "strategy")?
        .unwrap_or_else(|| default_strategy(cfg.family, p));
    if let Some(MethodList(m)) = parse(file.take("methods", args.methods)?, "methods")? {
        cfg.methods = m;
    }
    if let Some(s) = file.take("seed", args.seed)? {
        cfg.seed = s;
    }
    if let Some(o) = parse::<OracleMode>(file.take("oracle", args.oracle)?, "oracle")? {
        cfg.oracle = o;
    }
    if let Some(m) = file.take("margin", args.margin)? {
        cfg.margin = m;
    }
    if let Some(a) = file.take("alpha", args.alpha)? {
        cfg.lasso.alpha = a;
    }
    if let Some(r) = parse::<CombineRule>(file.take("rule", args.rule)?, "rule")? {
        cfg.lasso.rule = r;
    }
    if let Some(b) = file.take("mb-refit", args.mb_refit)? {
        cfg.mb_refit = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(args: SimulateArgs, mut file: FileLayer) -> Result<(), CliError> {
    let out = file.take::<PathBuf>("out", args.out.clone())?;
    let cfg = simulate_config(args, &mut file)?;
    file.finish()?;
    echo_config(&cfg)?;
    let report = run_benchmark(&cfg)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    let sink = match &out {
        Some(prefix) => {
            emit(Some(&with_suffix(prefix, ".json")), &json)?;
            for m in &cfg.methods {
                let path = with_suffix(prefix, &format!("_{}.csv", m.as_str()));
                emit(Some(&path), &report.to_csv(*m)?)?;
            }
            Sink::File
        }
        None => emit(None, &json)?,
    };
    summarize(sink, &bench_summary(&report));
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn bench_summary(report: &BenchReport) -> String {
    let pct = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{:.1}", 100.0 * x));
    let mut s = String::from("method   r.Risk   power%   FDR%   mean degree\n");
    for m in &report.methods {
        let _ = writeln!(
            s,
            "{:<8} {:>6}   {:>6}   {:>4}   {:.2}",
            m.method.as_str(),
            m.r_risk.map_or("NA".to_string(), |r| format!("{r:.2}")),
            pct(m.power),
            pct(Some(m.fdr)),
            m.mean_selected_degree
        );
    }
    s
}

pub fn prop1(args: Prop1Args, mut file: FileLayer) -> Result<(), CliError> {
    let mut cfg = Prop1Config::default();
    if let Some(g) = file.take("gamma", args.gamma)? {
        cfg.gamma = g;
    }
    if let Some(n) = file.take("n", args.n)? {
        cfg.n = n;
    }
    if let Some(p) = file.take("p", args.p)? {
        cfg.p = p;
    }
    if let Some(d) = file.take("dmax", args.dmax)? {
        cfg.d = d;
    }
    if let Some(r) = file.take("reps", args.reps)? {
        cfg.reps = r;
    }
    if let Some(s) = file.take("seed", args.seed)? {
        cfg.seed = s;
    }
    if let Some(k) = file.take("k", args.k)? {
        cfg.k_control = k;
    }
    if let Some(f) = parse(file.take("family", args.family)?, "family")? {
        cfg.family = f;
    }
    if let Some(s) = parse(file.take("strategy", args.strategy)?, "strategy")? {
        cfg.strategy = s;
    }
    let out = file.take::<PathBuf>("out", args.out)?;
    file.finish()?;
    echo_config(&cfg)?;
    if !cfg.hypothesis_holds() {
        eprintln!(
            "warning: p={} is below e^(2/(1-gamma)) + 1 = {:.1}; the overfitting bound does not apply",
            cfg.p,
            (2.0 / (1.0 - cfg.gamma)).exp() + 1.0
        );
    }
    let report = run_prop1_experiment(&cfg)?;
    let sink = emit(out.as_deref(), &report.to_csv()?)?;
    summarize(sink, &prop1_summary(&report));
    Ok(())
}

fn prop1_summary(r: &Prop1Report) -> String {
    let mut s = String::new();
    for summary in [&r.deflated, &r.control] {
        let _ = writeln!(
            s,
            "{:<9} mean |m_j| {:.3}  median {:.1}  P(|m_j| >= 3) {:.3}",
            summary.penalty,
            summary.mean_column_size,
            summary.median_column_size,
            summary.fraction_at_least(3)
        );
    }
    let _ = writeln!(
        s,
        "median gap (deflated - control): {:.1}",
        r.deflated.median_column_size - r.control.median_column_size
    );
    s
}
