//! CSV and key=value writers. Every file opens with a `#` provenance line.

use crate::config::{ExperimentConfig, Kind};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `# hidden-sir <version> kind=<kind> config_sha256=<hash> seed=<seed>`
pub fn provenance(cfg: &ExperimentConfig, kind: Kind, seed: &str) -> String {
    format!(
        "# hidden-sir {VERSION} kind={} config_sha256={} seed={seed}",
        kind.as_str(),
        cfg.hash
    )
}

/// Seed label for files that pool every seed of the run.
pub fn seed_range(cfg: &ExperimentConfig) -> String {
    if cfg.seed_count == 1 {
        cfg.base_seed.to_string()
    } else {
        format!(
            "{}..{}",
            cfg.base_seed,
            cfg.base_seed.wrapping_add(cfg.seed_count as u64 - 1)
        )
    }
}

pub fn write_csv<I>(path: &Path, provenance: &str, header: &[String], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{provenance}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, provenance: &str, body: &str) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{provenance}")?;
    file.write_all(body.as_bytes())?;
    file.flush()
}

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.075, 1e-300, 14.852198362167508] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(2.0), "2");
    }
}
