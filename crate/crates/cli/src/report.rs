use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use diskmine_core::projection::{predict_costs, CostModel};
use diskmine_core::RunReport;
use serde::Serialize;

/// Compare a run's measured block transfers with the closed-form cost model.
#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// Run report written by `mine --report`.
    report: PathBuf,
    /// Also write the numbers as CSV (`-` for standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, PartialEq, Serialize)]
struct Row {
    algorithm: String,
    db_bytes: u64,
    block_size: u64,
    /// Groups at the root; 0 when the first tree fit.
    k: usize,
    /// Mean frequent items per transaction.
    n: f64,
    depth: u32,
    blocks_read: u64,
    blocks_written: u64,
    blocks_total: u64,
    projected_bytes: u64,
    predicted_general: f64,
    predicted_naive: f64,
    predicted_aggressive: f64,
    predicted_diskmine: f64,
}

fn row(r: &RunReport) -> Row {
    let d = r.db_bytes as f64;
    let b = r.block_size.max(1) as f64;
    let k = r.root_groups.unwrap_or(0);
    let (general, naive, aggressive, dm) = if k == 0 {
        // no projection: one counting scan and one build scan
        let two = 2.0 * d / b;
        (two, two, two, two)
    } else {
        // the pass count needs the full tree size, which a run that
        // decomposed never learns, so only the transfer formulas are used
        let p = predict_costs(&CostModel {
            d,
            b,
            m: r.memory_budget as f64,
            t: r.memory_budget as f64,
            c: 0.5,
            n: r.avg_frequent_items,
            k: k as f64,
        });
        (p.io_general, p.io_naive, p.io_aggressive, p.io_diskmine)
    };
    Row {
        algorithm: r.algorithm.clone(),
        db_bytes: r.db_bytes,
        block_size: r.block_size,
        k,
        n: r.avg_frequent_items,
        depth: r.recursion_depth,
        blocks_read: r.io.blocks_read,
        blocks_written: r.io.blocks_written,
        blocks_total: r.io.total_blocks(),
        projected_bytes: r.projected_bytes(),
        predicted_general: general,
        predicted_naive: naive,
        predicted_aggressive: aggressive,
        predicted_diskmine: dm,
    }
}

fn print_table(row: &Row) {
    println!("algorithm         {}", row.algorithm);
    println!("database bytes    {}", row.db_bytes);
    println!("block size        {}", row.block_size);
    println!("root groups       {}", row.k);
    println!("avg frequent/tx   {:.2}", row.n);
    println!("recursion depth   {}", row.depth);
    println!("projected bytes   {}", row.projected_bytes);
    println!("blocks read       {}", row.blocks_read);
    println!("blocks written    {}", row.blocks_written);
    println!("blocks total      {}", row.blocks_total);
    println!();
    println!("{:<24}{:>14}{:>18}", "model", "predicted", "measured/pred");
    for (label, p) in [
        ("general", row.predicted_general),
        ("naive projection", row.predicted_naive),
        ("aggressive projection", row.predicted_aggressive),
        ("diskmine", row.predicted_diskmine),
    ] {
        let ratio = if p > 0.0 { row.blocks_total as f64 / p } else { f64::NAN };
        println!("{label:<24}{p:>14.1}{ratio:>18.3}");
    }
}

pub fn cmd_report(args: ReportArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.report).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => diskmine_core::Error::FileNotFound(args.report.clone()).into(),
        _ => anyhow::Error::new(e),
    })?;
    let report: RunReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.report.display()))?;
    let row = row(&report);
    print_table(&row);
    if let Some(p) = &args.csv {
        let out: Box<dyn io::Write> = if p.as_os_str() == "-" {
            Box::new(io::stdout().lock())
        } else {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        };
        let mut w = csv::Writer::from_writer(out);
        w.serialize(&row).context("writing CSV")?;
        w.flush().context("writing CSV")?;
    }
    Ok(ExitCode::SUCCESS)
}
