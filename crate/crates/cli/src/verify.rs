use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use diskmine_core::fpgrowth::parse_fimi;
use diskmine_core::{Error, ItemId};

/// Compare two FIMI result files as itemset-to-support maps.
///
/// Exits 0 when they agree and 1 otherwise, listing the differences.
#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    expected: PathBuf,
    actual: PathBuf,
    /// Differences listed per category.
    #[arg(long, default_value_t = 20)]
    show: usize,
}

type ResultMap = BTreeMap<Vec<ItemId>, u64>;

fn load(path: &Path) -> anyhow::Result<ResultMap> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::FileNotFound(path.into()).into()),
        Err(e) => return Err(anyhow::Error::new(e).context(format!("opening {}", path.display()))),
    };
    Ok(parse_fimi(BufReader::new(f), &path.display().to_string())?)
}

fn render(items: &[ItemId]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Default, PartialEq)]
struct Diff {
    missing: Vec<(Vec<ItemId>, u64)>,
    extra: Vec<(Vec<ItemId>, u64)>,
    /// Itemset, expected support, actual support.
    changed: Vec<(Vec<ItemId>, u64, u64)>,
}

impl Diff {
    fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.changed.is_empty()
    }
}

fn diff(expected: &ResultMap, actual: &ResultMap) -> Diff {
    let mut d = Diff::default();
    for (items, &s) in expected {
        match actual.get(items) {
            None => d.missing.push((items.clone(), s)),
            Some(&t) if t != s => d.changed.push((items.clone(), s, t)),
            Some(_) => {}
        }
    }
    for (items, &t) in actual {
        if !expected.contains_key(items) {
            d.extra.push((items.clone(), t));
        }
    }
    d
}

pub fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let expected = load(&args.expected)?;
    let actual = load(&args.actual)?;
    let d = diff(&expected, &actual);
    if d.is_empty() {
        println!("identical: {} itemsets", expected.len());
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "differ: {} missing, {} extra, {} with other support ({} expected, {} actual)",
        d.missing.len(),
        d.extra.len(),
        d.changed.len(),
        expected.len(),
        actual.len()
    );
    for (items, s) in d.missing.iter().take(args.show) {
        println!("  missing  {} ({s})", render(items));
    }
    for (items, t) in d.extra.iter().take(args.show) {
        println!("  extra    {} ({t})", render(items));
    }
    for (items, s, t) in d.changed.iter().take(args.show) {
        println!("  support  {}: expected {s}, got {t}", render(items));
    }
    Ok(ExitCode::from(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(entries: &[(&[u32], u64)]) -> ResultMap {
        entries
            .iter()
            .map(|(i, s)| (i.iter().map(|&x| ItemId(x)).collect(), *s))
            .collect()
    }

    #[test]
    fn classifies_differences() {
        let a = map(&[(&[1], 3), (&[2], 2), (&[1, 2], 2)]);
        let b = map(&[(&[1], 3), (&[2], 3), (&[3], 2)]);
        let d = diff(&a, &b);
        assert_eq!(d.missing, vec![(vec![ItemId(1), ItemId(2)], 2)]);
        assert_eq!(d.extra, vec![(vec![ItemId(3)], 2)]);
        assert_eq!(d.changed, vec![(vec![ItemId(2)], 2, 3)]);
        assert!(diff(&a, &a).is_empty());
    }
}
