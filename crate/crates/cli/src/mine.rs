use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::ValueEnum;
use diskmine_core::baselines::brute_force_oracle_db;
use diskmine_core::txdb::IoContext;
use diskmine_core::{
    diskmine, memory_only, naive_diskmine, partition_mine, BlockConfig, CollectSink, DbFormat, DbLocator,
    DiskmineConfig, Error, FimiWriter, Itemset, ItemsetSink, MemoryBudget, MinSupport, PartitionConfig, RunReport,
    SupportThreshold, Techniques,
};
use serde::Deserialize;

const DEFAULT_BUDGET: u64 = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Diskmine,
    /// One projection per frequent item.
    Naive,
    /// Two-pass partitioning.
    Partition,
    /// A single in-memory tree, ignoring the budget.
    MemoryOnly,
    /// Brute-force counting; at most 24 distinct items.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// `1 5 9 (42)` lines.
    Fimi,
    /// A JSON array of `{"items": [..], "support": n}`.
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TechniqueSet {
    All,
    None,
}

/// How groups past the cut point are sized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingMethod {
    /// Walk the partial tree for each group's node count.
    Traversal,
    /// Sum the per-item ancestor counts.
    Mu,
}

/// Mine frequent itemsets.
///
/// Each setting is taken from its flag if given, else from the --config
/// TOML file (keys are the flag names with underscores), else the default.
#[derive(clap::Args, Debug)]
pub struct MineArgs {
    /// Transaction database.
    input: PathBuf,
    /// text or binary; by default guessed from the extension.
    #[arg(long)]
    input_format: Option<DbFormat>,
    #[arg(short, long, value_enum)]
    algorithm: Option<Algorithm>,
    /// Fraction (0.02, 2%) or absolute count (40).
    #[arg(short = 's', long)]
    min_support: Option<String>,
    /// Bytes, with an optional K, M or G suffix (powers of 1024). Default 64M.
    #[arg(short, long)]
    memory_budget: Option<String>,
    #[arg(long)]
    block_size: Option<u64>,
    /// Directory for projected databases. Default: a fresh directory under
    /// the system temp dir, removed after a successful run.
    #[arg(long)]
    tmp_dir: Option<PathBuf>,
    /// Result file; standard output if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Where to write the run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON-lines log of every decomposition.
    #[arg(long)]
    plan_log: Option<PathBuf>,
    /// I/O-saving projection techniques (diskmine only).
    #[arg(long, value_enum)]
    techniques: Option<TechniqueSet>,
    /// Group sizing (diskmine only).
    #[arg(long, value_enum)]
    grouping: Option<GroupingMethod>,
    #[arg(long)]
    max_depth: Option<u32>,
    /// Candidates kept in memory before spilling (partition only).
    #[arg(long)]
    spill_limit: Option<usize>,
    /// Fail if any itemset is produced twice.
    #[arg(long)]
    check_disjoint: bool,
    /// Write itemsets as they are found instead of sorted (fimi only).
    #[arg(long)]
    stream: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum Scalar {
    #[default]
    Missing,
    Int(u64),
    Float(f64),
    Text(String),
}

impl Scalar {
    fn text(self) -> Option<String> {
        match self {
            Scalar::Missing => None,
            Scalar::Int(v) => Some(v.to_string()),
            Scalar::Float(v) => Some(v.to_string()),
            Scalar::Text(s) => Some(s),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    algorithm: Option<Algorithm>,
    min_support: Scalar,
    memory_budget: Scalar,
    block_size: Option<u64>,
    tmp_dir: Option<PathBuf>,
    output: Option<PathBuf>,
    report: Option<PathBuf>,
    format: Option<OutputFormat>,
    plan_log: Option<PathBuf>,
    techniques: Option<TechniqueSet>,
    grouping: Option<GroupingMethod>,
    max_depth: Option<u32>,
    spill_limit: Option<usize>,
    check_disjoint: Option<bool>,
}

/// Settings after flags, config file and defaults are merged.
#[derive(Debug)]
struct RunConfig {
    input: DbLocator,
    algorithm: Algorithm,
    min_support: MinSupport,
    budget: MemoryBudget,
    block: BlockConfig,
    tmp_dir: Option<PathBuf>,
    output: Option<PathBuf>,
    report: Option<PathBuf>,
    format: OutputFormat,
    plan_log: Option<PathBuf>,
    techniques: Techniques,
    grouping: GroupingMethod,
    max_depth: u32,
    spill_limit: usize,
    check_disjoint: bool,
    stream: bool,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

/// `4096`, `64K`, `64M`, `1G`, `2GiB`.
pub fn parse_bytes(s: &str) -> anyhow::Result<u64> {
    let t = s.trim();
    let digits = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(digits);
    let shift = match unit.trim().to_ascii_uppercase().as_str() {
        "" | "B" => 0,
        "K" | "KB" | "KIB" => 10,
        "M" | "MB" | "MIB" => 20,
        "G" | "GB" | "GIB" => 30,
        _ => return Err(config_error(format!("cannot parse byte size `{s}`"))),
    };
    let v: u64 = num.parse().map_err(|_| config_error(format!("cannot parse byte size `{s}`")))?;
    v.checked_mul(1 << shift)
        .ok_or_else(|| config_error(format!("byte size `{s}` overflows")))
}

impl RunConfig {
    fn resolve(args: MineArgs) -> anyhow::Result<RunConfig> {
        let file = match &args.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let min_support = args
            .min_support
            .or(file.min_support.text())
            .ok_or_else(|| config_error("--min-support is required"))?;
        let min_support: MinSupport = min_support.parse()?;
        let budget = match args.memory_budget.or(file.memory_budget.text()) {
            Some(s) => parse_bytes(&s)?,
            None => DEFAULT_BUDGET,
        };
        let block = match args.block_size.or(file.block_size) {
            Some(b) => BlockConfig::new(b)?,
            None => BlockConfig::default(),
        };
        let format = args.format.or(file.format).unwrap_or(OutputFormat::Fimi);
        let stream = args.stream;
        if stream && format == OutputFormat::Json {
            return Err(config_error("--stream needs the fimi format"));
        }
        let input_format = args.input_format.unwrap_or_else(|| DbFormat::from_path(&args.input));
        let techniques = match args.techniques.or(file.techniques).unwrap_or(TechniqueSet::All) {
            TechniqueSet::All => Techniques::all(),
            TechniqueSet::None => Techniques::none(),
        };
        let budget = MemoryBudget::new(budget);
        budget.validate()?;
        Ok(RunConfig {
            input: DbLocator::new(args.input, input_format),
            algorithm: args.algorithm.or(file.algorithm).unwrap_or(Algorithm::Diskmine),
            min_support,
            budget,
            block,
            tmp_dir: args.tmp_dir.or(file.tmp_dir),
            output: args.output.or(file.output),
            report: args.report.or(file.report),
            format,
            plan_log: args.plan_log.or(file.plan_log),
            techniques,
            grouping: args.grouping.or(file.grouping).unwrap_or(GroupingMethod::Traversal),
            max_depth: args
                .max_depth
                .or(file.max_depth)
                .unwrap_or(DiskmineConfig::DEFAULT_MAX_DEPTH),
            spill_limit: args
                .spill_limit
                .or(file.spill_limit)
                .unwrap_or(PartitionConfig::DEFAULT_SPILL_LIMIT),
            check_disjoint: args.check_disjoint || file.check_disjoint.unwrap_or(false),
            stream,
        })
    }
}

pub fn cmd_mine(args: MineArgs) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::resolve(args)?;
    if !cfg.input.path.exists() {
        return Err(Error::FileNotFound(cfg.input.path.clone()).into());
    }
    let scratch = match &cfg.tmp_dir {
        Some(_) => None,
        None => Some(
            tempfile::Builder::new()
                .prefix("diskmine-")
                .tempdir()
                .context("creating a temporary directory")?,
        ),
    };
    let tmp_dir = match (&cfg.tmp_dir, &scratch) {
        (Some(p), _) => p.clone(),
        (None, Some(t)) => t.path().to_path_buf(),
        (None, None) => unreachable!(),
    };
    let result = run(&cfg, &tmp_dir);
    if result.is_err() {
        if let Some(t) = scratch {
            let kept = t.keep();
            log::warn!("keeping {} for inspection", kept.display());
        }
    }
    result
}

fn run(cfg: &RunConfig, tmp_dir: &Path) -> anyhow::Result<ExitCode> {
    let out: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(out);

    let report = if cfg.stream {
        let mut sink = FimiWriter::new(&mut out);
        let report = mine_into(cfg, tmp_dir, &mut sink)?;
        sink.finish().context("writing results")?;
        report
    } else {
        let mut sink = CollectSink::new();
        let report = mine_into(cfg, tmp_dir, &mut sink)?;
        let itemsets = sink.into_sorted();
        match cfg.format {
            OutputFormat::Fimi => {
                let mut w = FimiWriter::new(&mut out);
                for s in &itemsets {
                    w.emit(&s.items, s.support)?;
                }
                w.finish().context("writing results")?;
            }
            OutputFormat::Json => {
                serde_json::to_writer(&mut out, &itemsets).context("writing results")?;
                writeln!(out).context("writing results")?;
            }
        }
        report
    };
    out.flush().context("writing results")?;

    log::info!(
        "{}: {} itemsets, depth {}, {} blocks read, {} written",
        report.algorithm,
        report.itemsets_emitted,
        report.recursion_depth,
        report.io.blocks_read,
        report.io.blocks_written
    );
    if let Some(p) = &cfg.report {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &report).context("writing the report")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn mine_into(cfg: &RunConfig, tmp_dir: &Path, sink: &mut dyn ItemsetSink) -> anyhow::Result<RunReport> {
    let dm = DiskmineConfig {
        block: cfg.block,
        max_depth: cfg.max_depth,
        techniques: cfg.techniques,
        traversal_grouping: cfg.grouping == GroupingMethod::Traversal,
        check_disjoint: cfg.check_disjoint,
        plan_log: cfg.plan_log.clone(),
        ..DiskmineConfig::new(cfg.budget, tmp_dir)
    };
    let report = match cfg.algorithm {
        Algorithm::Diskmine => diskmine(&cfg.input, cfg.min_support, &dm, sink)?,
        Algorithm::Naive => naive_diskmine(&cfg.input, cfg.min_support, &dm, sink)?,
        Algorithm::MemoryOnly => memory_only(&cfg.input, cfg.min_support, &dm, sink)?,
        Algorithm::Partition => {
            let pc = PartitionConfig {
                block: cfg.block,
                spill_limit: cfg.spill_limit,
                ..PartitionConfig::new(cfg.budget, tmp_dir)
            };
            partition_mine(&cfg.input, cfg.min_support, &pc, sink)?
        }
        Algorithm::Oracle => oracle(cfg, sink)?,
    };
    Ok(report)
}

fn oracle(cfg: &RunConfig, sink: &mut dyn ItemsetSink) -> anyhow::Result<RunReport> {
    let io = IoContext::new(cfg.block);
    let n = diskmine_core::txdb::count_items(&cfg.input, &io)?.n_transactions;
    let threshold = SupportThreshold::resolve(cfg.min_support, n)?;
    let found: Vec<Itemset> = brute_force_oracle_db(&cfg.input, &io, &threshold)?;
    for s in &found {
        sink.emit(&s.items, s.support)?;
    }
    Ok(RunReport {
        algorithm: "oracle".into(),
        io: io.stats(),
        itemsets_emitted: found.len() as u64,
        db_bytes: cfg.input.file_size()?,
        block_size: cfg.block.block_size,
        n_transactions: n,
        threshold: threshold.count(),
        ..RunReport::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_sizes() {
        assert_eq!(parse_bytes("4096").unwrap(), 4096);
        assert_eq!(parse_bytes("64K").unwrap(), 64 << 10);
        assert_eq!(parse_bytes("2 MiB").unwrap(), 2 << 20);
        assert_eq!(parse_bytes("1g").unwrap(), 1 << 30);
        assert!(parse_bytes("12Q").is_err());
        assert!(parse_bytes("").is_err());
    }

    #[derive(clap::Parser)]
    struct Wrap {
        #[command(flatten)]
        args: MineArgs,
    }

    fn args(extra: &[&str]) -> MineArgs {
        use clap::Parser;
        let mut argv = vec!["mine", "db.dat"];
        argv.extend_from_slice(extra);
        Wrap::parse_from(argv).args
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("run.toml");
        fs::write(
            &conf,
            "algorithm = \"naive\"\nmin_support = 0.25\nmemory_budget = \"1M\"\nblock_size = 512\n",
        )
        .unwrap();
        let c = conf.to_str().unwrap();

        let cfg = RunConfig::resolve(args(&["--config", c])).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Naive);
        assert_eq!(cfg.min_support, MinSupport::Fraction(0.25));
        assert_eq!(cfg.budget.bytes, 1 << 20);
        assert_eq!(cfg.block.block_size, 512);
        assert_eq!(cfg.input.format, DbFormat::Text);

        let cfg = RunConfig::resolve(args(&["--config", c, "-a", "partition", "-s", "3"])).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Partition);
        assert_eq!(cfg.min_support, MinSupport::Count(3));
        assert_eq!(cfg.budget.bytes, 1 << 20);
    }

    #[test]
    fn defaults_and_required_support() {
        let cfg = RunConfig::resolve(args(&["-s", "2%"])).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Diskmine);
        assert_eq!(cfg.budget.bytes, DEFAULT_BUDGET);
        assert_eq!(cfg.format, OutputFormat::Fimi);
        assert!(RunConfig::resolve(args(&[])).is_err());
        assert!(RunConfig::resolve(args(&["-s", "1", "--format", "json", "--stream"])).is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
