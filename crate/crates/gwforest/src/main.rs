//! Command-line laboratory for conditioned branching-process trees:
//! sampling, censusing tree files, exact formulas, small-n ground truth,
//! and Monte Carlo experiment campaigns.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::SmallRng;
use rand::SeedableRng;

use gwforest::census::{self, CountMode};
use gwforest::exact::{self, KRegime};
use gwforest::experiments::{self, ExperimentSummary, PatternRule};
use gwforest::offspring::OffspringDistribution;
use gwforest::oracle;
use gwforest::sampler::{self, SampleConfig, SampleError};
use gwforest::tree::PlaneTree;

#[derive(Parser)]
#[command(name = "gwforest", version, about = "Conditioned branching-process tree laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw conditioned trees, one degree sequence per line.
    Sample(SampleArgs),
    /// Census a file of trees: pattern counts, r-ary heights, threshold K.
    Census(CensusArgs),
    /// Exact formulas: count moments, least-likely trees, K prediction.
    Exact(ExactArgs),
    /// Small-n brute force: exact count pmf and moments.
    Oracle(OracleArgs),
    /// Monte Carlo campaigns over a list of sizes.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Offspring law: builtin name or explicit `i:p,i:p,...`.
    #[arg(long)]
    dist: String,
    /// Tree size (must be 1 mod the law's span).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation mass for unbounded supports.
    #[arg(long, default_value_t = 1e-15)]
    tail_epsilon: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CensusArgs {
    /// Input file with one degree sequence per line.
    #[arg(long = "in")]
    input: PathBuf,
    /// Patterns to count (repeatable).
    #[arg(long)]
    pattern: Vec<String>,
    /// Size classes to count (repeatable).
    #[arg(long)]
    size: Vec<u32>,
    /// Branching factors for maximal complete r-ary heights (repeatable).
    #[arg(long, default_value = "2")]
    r: Vec<u32>,
    #[arg(long, default_value_t = 12)]
    kcap: u32,
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 1e-15)]
    tail_epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(subcommand)]
    sub: Option<ExactSub>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long, default_value = "fringe")]
    mode: String,
    /// Comma-separated list of mean, var, fm2.
    #[arg(long, default_value = "mean")]
    what: String,
    #[arg(long, default_value_t = 1e-15)]
    tail_epsilon: f64,
}

#[derive(Subcommand)]
enum ExactSub {
    /// Least likely possible tree of size at most k.
    Pmin {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-15)]
        tail_epsilon: f64,
    },
    /// Predicted centerline for the all-trees threshold.
    PredictK {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: u64,
        /// Force a regime: well-behaved | cayley | super-exponential.
        #[arg(long)]
        regime: Option<String>,
        #[arg(long, default_value_t = 1e-15)]
        tail_epsilon: f64,
    },
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    pattern: String,
    #[arg(long, default_value = "fringe")]
    mode: String,
    #[arg(long, default_value_t = 1e-15)]
    tail_epsilon: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// poisson | sizeclass | nonfringe | heights | kn
    #[arg(long)]
    kind: String,
    #[arg(long)]
    dist: String,
    /// Comma-separated tree sizes.
    #[arg(long)]
    n: String,
    /// Pattern rule for poisson/nonfringe kinds,
    /// e.g. `chain:ceil(0.5*log2(n)+0.5)`.
    #[arg(long)]
    pattern_rule: Option<String>,
    /// Size-class rule (an expression in n) for the sizeclass kind.
    #[arg(long)]
    k_rule: Option<String>,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long, default_value = "fringe")]
    mode: String,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    kcap: u32,
    #[arg(long, default_value_t = 1e-15)]
    tail_epsilon: f64,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary output file; stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Errors carrying the process exit code: 2 invalid config, 3 sampler
/// exhaustion.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl ToString) -> Self {
        CliError { code: 2, message: message.to_string() }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        let code = match e {
            SampleError::RejectionsExhausted { .. } => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<experiments::ExperimentError> for CliError {
    fn from(e: experiments::ExperimentError) -> Self {
        match e {
            experiments::ExperimentError::Sample(s) => s.into(),
            other => CliError::config(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample(a) => run_sample(a),
        Command::Census(a) => run_census(a),
        Command::Exact(a) => run_exact(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Experiment(a) => run_experiment(a),
    }
}

fn parse_dist(spec: &str, tail_epsilon: f64) -> Result<OffspringDistribution, CliError> {
    OffspringDistribution::parse_spec(spec, tail_epsilon).map_err(CliError::config)
}

fn parse_pattern(s: &str) -> Result<PlaneTree, CliError> {
    s.parse().map_err(CliError::config)
}

fn parse_mode(s: &str) -> Result<CountMode, CliError> {
    s.parse().map_err(CliError::config)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(CliError::config),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_sample(a: SampleArgs) -> Result<(), CliError> {
    let dist = parse_dist(&a.dist, a.tail_epsilon)?;
    let cfg = SampleConfig::new(a.n, a.seed);
    let mut lines = String::new();
    for i in 0..a.count {
        let mut rng = SmallRng::seed_from_u64(sampler::derive_seed(a.seed, i));
        let t = sampler::sample_conditional(&dist, &cfg, &mut rng)?;
        lines.push_str(&t.to_string());
        lines.push('\n');
    }
    emit(&a.out, &lines)
}

fn run_census(a: CensusArgs) -> Result<(), CliError> {
    let dist = parse_dist(&a.dist, a.tail_epsilon)?;
    let patterns: Vec<PlaneTree> = a
        .pattern
        .iter()
        .map(|s| parse_pattern(s))
        .collect::<Result<_, _>>()?;
    let text = fs::read_to_string(&a.input).map_err(CliError::config)?;
    let hosts: Vec<PlaneTree> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse_pattern)
        .collect::<Result<_, _>>()?;

    let mut header = String::from("n");
    for p in &patterns {
        header.push_str(&format!(",\"fringe:{p}\",\"nonfringe:{p}\""));
    }
    for k in &a.size {
        header.push_str(&format!(",size:{k}"));
    }
    for r in &a.r {
        header.push_str(&format!(",H_{r},Hnf_{r}"));
    }
    header.push_str(",K,K_saturated\n");
    let mut out = header;
    for host in &hosts {
        let rep = census::census_report(host, &dist, &patterns, &a.size, &a.r, a.kcap)
            .map_err(CliError::config)?;
        let mut line = format!("{}", rep.n);
        for p in &patterns {
            line.push_str(&format!(
                ",{},{}",
                rep.fringe_counts[&p.key()],
                rep.nonfringe_counts[&p.key()]
            ));
        }
        for k in &a.size {
            line.push_str(&format!(",{}", rep.size_counts[k]));
        }
        for r in &a.r {
            line.push_str(&format!(",{},{}", rep.h_r[r], rep.h_r_nf[r]));
        }
        line.push_str(&format!(",{},{}\n", rep.k, rep.k_saturated));
        out.push_str(&line);
    }
    emit(&a.out, &out)
}

fn run_exact(a: ExactArgs) -> Result<(), CliError> {
    if let Some(sub) = a.sub {
        return match sub {
            ExactSub::Pmin { dist, k, tail_epsilon } => {
                let d = parse_dist(&dist, tail_epsilon)?;
                let r = exact::pmin(&d, k).map_err(CliError::config)?;
                println!("statistic,value");
                println!("size,{}", r.size);
                println!("prob,{}", r.prob);
                println!("log_prob,{}", r.log_prob);
                println!("tree,\"{}\"", r.tree);
                Ok(())
            }
            ExactSub::PredictK { dist, n, regime, tail_epsilon } => {
                let d = parse_dist(&dist, tail_epsilon)?;
                let hint = match regime.as_deref() {
                    None => None,
                    Some("well-behaved") => Some(KRegime::WellBehaved),
                    Some("cayley") => Some(KRegime::CayleyLike),
                    Some("super-exponential") => Some(KRegime::SuperExponential),
                    Some(other) => {
                        return Err(CliError::config(format!("unknown regime {other:?}")))
                    }
                };
                let p = exact::predict_k(&d, n, hint).map_err(CliError::config)?;
                println!("statistic,value");
                println!("estimate,{}", p.estimate);
                println!("regime,{:?}", p.regime);
                if let Some(g) = p.gamma {
                    println!("gamma,{g}");
                }
                println!("note,\"{}\"", p.note);
                Ok(())
            }
        };
    }

    let dist_spec = a.dist.ok_or_else(|| CliError::config("--dist is required"))?;
    let n = a.n.ok_or_else(|| CliError::config("--n is required"))?;
    let pattern = a.pattern.ok_or_else(|| CliError::config("--pattern is required"))?;
    let dist = parse_dist(&dist_spec, a.tail_epsilon)?;
    let t = parse_pattern(&pattern)?;
    let mode = parse_mode(&a.mode)?;

    println!("dist,n,pattern,mode,statistic,value");
    let print_stat =
        |stat: &str, value: f64| println!("{dist_spec},{n},\"{t}\",{},{stat},{value}", a.mode);
    for what in a.what.split(',') {
        match (what.trim(), mode) {
            ("mean", CountMode::Fringe) => {
                let v = exact::expected_fringe_count(&dist, n, &t).map_err(CliError::config)?;
                print_stat("mean", v);
            }
            ("mean", CountMode::Nonfringe) => {
                let v = exact::expected_nonfringe_count(&dist, n, &t).map_err(CliError::config)?;
                print_stat("mean", v);
            }
            ("var" | "fm2", CountMode::Nonfringe) => {
                let r = exact::second_factorial_nonfringe(&dist, n, &t).map_err(CliError::config)?;
                if what.trim() == "var" {
                    print_stat("var", r.variance);
                } else {
                    print_stat("fm2", r.second_factorial);
                }
            }
            ("var" | "fm2", CountMode::Fringe) => {
                return Err(CliError::config(
                    "var/fm2 are only available in nonfringe mode",
                ));
            }
            (other, _) => {
                return Err(CliError::config(format!("unknown statistic {other:?}")));
            }
        }
    }
    Ok(())
}

fn run_oracle(a: OracleArgs) -> Result<(), CliError> {
    let dist = parse_dist(&a.dist, a.tail_epsilon)?;
    let t = parse_pattern(&a.pattern)?;
    let mode = parse_mode(&a.mode)?;
    let r = oracle::exact_count_pmf(&dist, a.n, &t, mode).map_err(CliError::config)?;
    println!("statistic,value");
    for (count, prob) in &r.pmf {
        println!("pmf[{count}],{prob}");
    }
    println!("mean,{}", r.mean);
    println!("variance,{}", r.variance);
    println!("second_factorial,{}", r.second_factorial);
    println!("reference_mean,{}", r.reference_mean);
    println!("tv_to_poisson,{}", r.tv_to_poisson);
    Ok(())
}

fn run_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let dist = parse_dist(&a.dist, a.tail_epsilon)?;
    let n_list: Vec<usize> = a
        .n
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::config(format!("bad n {s:?}"))))
        .collect::<Result<_, _>>()?;
    if n_list.is_empty() {
        return Err(CliError::config("--n must list at least one size"));
    }
    let rule = |field: &Option<String>| -> Result<PatternRule, CliError> {
        let s = field
            .as_deref()
            .ok_or_else(|| CliError::config("--pattern-rule is required for this kind"))?;
        PatternRule::parse(s).map_err(CliError::from)
    };
    let summary: ExperimentSummary = match a.kind.as_str() {
        "poisson" => experiments::run_poisson_regimes(
            &dist,
            &n_list,
            &rule(&a.pattern_rule)?,
            a.replicates,
            a.seed,
        )?,
        "sizeclass" => {
            let k_rule = a
                .k_rule
                .as_deref()
                .ok_or_else(|| CliError::config("--k-rule is required for sizeclass"))?;
            experiments::run_size_class(&dist, &n_list, k_rule, a.replicates, a.seed)?
        }
        "nonfringe" => experiments::run_nonfringe_concentration(
            &dist,
            &n_list,
            &rule(&a.pattern_rule)?,
            a.replicates,
            a.seed,
        )?,
        "heights" => {
            let mode = parse_mode(&a.mode)?;
            experiments::run_heights(&dist, &n_list, a.r, mode, a.replicates, a.seed)?
        }
        "kn" => experiments::run_kn(&dist, &n_list, a.replicates, a.seed, a.kcap)?,
        other => return Err(CliError::config(format!("unknown experiment kind {other:?}"))),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(CliError::config)?;
    emit(&a.csv, &summary.to_csv())?;
    match &a.json {
        Some(path) => fs::write(path, json).map_err(CliError::config)?,
        None => {
            if a.csv.is_some() {
                println!("{json}");
            }
        }
    }
    Ok(())
}
