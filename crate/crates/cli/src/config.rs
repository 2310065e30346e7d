//! Command-line flags and their config-file equivalents.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use trendfetch_core::experiment::{ExperimentConfig, OutputFormat, TraceSource};
use trendfetch_core::memsim::{DataPath, EvictionMode, LatencyModel, Medium};
use trendfetch_core::prefetch::PrefetcherKind;

/// Settings shared by `run` and `compare`. Every flag has a key of the
/// same name (dashes become underscores) in the `--config` TOML file;
/// flags win over the file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Trace file (`tick,pid,page[,kind]` lines).
    #[arg(long, conflicts_with = "gen")]
    pub trace: Option<PathBuf>,
    /// Generator spec, e.g. `stride:n=100000,k=10`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Prefetcher to run; repeat or comma-separate for several.
    #[arg(long = "prefetcher", value_delimiter = ',')]
    #[serde(default)]
    pub prefetcher: Vec<PrefetcherKind>,
    /// Resident set size in pages (default: half the working set).
    #[arg(long)]
    pub resident_cap: Option<usize>,
    /// Prefetch cache size in pages (default: unbounded).
    #[arg(long)]
    pub prefetch_cap: Option<usize>,
    #[arg(long)]
    pub hsize: Option<usize>,
    #[arg(long)]
    pub nsplit: Option<usize>,
    #[arg(long)]
    pub pwmax: Option<usize>,
    #[arg(long)]
    pub nextn: Option<usize>,
    /// eager or lazy (default: eager for leap, lazy otherwise).
    #[arg(long)]
    pub eviction: Option<EvictionMode>,
    /// rdma or disk.
    #[arg(long)]
    pub medium: Option<Medium>,
    /// default or lean.
    #[arg(long)]
    pub datapath: Option<DataPath>,
    /// Ticks before a prefetched page arrives.
    #[arg(long)]
    pub arrival_delay: Option<u64>,
    /// Leading events excluded from the report.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// json, csv or table.
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random generators that do not name one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Latency constants; config file only.
    #[arg(skip)]
    pub latency: Option<LatencyModel>,
}

macro_rules! prefer {
    ($cli:ident, $file:ident, $($field:ident),+) => {
        $( if $cli.$field.is_none() { $cli.$field = $file.$field.take(); } )+
    };
}

impl RunArgs {
    /// Fills unset flags from the `--config` file, if one was given.
    pub fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let mut file = load_file(&path)?;
        if self.trace.is_none() && self.gen.is_none() {
            self.trace = file.trace.take();
            self.gen = file.gen.take();
        }
        if self.prefetcher.is_empty() {
            self.prefetcher = std::mem::take(&mut file.prefetcher);
        }
        prefer!(
            self,
            file,
            resident_cap,
            prefetch_cap,
            hsize,
            nsplit,
            pwmax,
            nextn,
            eviction,
            medium,
            datapath,
            arrival_delay,
            warmup,
            format,
            out,
            seed,
            latency
        );
        Ok(self)
    }

    pub fn source(&self) -> Result<TraceSource> {
        match (&self.trace, &self.gen) {
            (Some(path), None) => Ok(TraceSource::File(path.clone())),
            (None, Some(spec)) => Ok(TraceSource::Gen(spec.clone())),
            (Some(_), Some(_)) => bail!("--trace and --gen are mutually exclusive"),
            (None, None) => bail!("one of --trace or --gen is required"),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let prefetchers = if self.prefetcher.is_empty() {
            vec![PrefetcherKind::Leap]
        } else {
            self.prefetcher.clone()
        };
        let mut cfg = ExperimentConfig::new(self.source()?, prefetchers);
        cfg.resident_capacity = self.resident_cap;
        cfg.prefetch_capacity = self.prefetch_cap;
        if let Some(h) = self.hsize {
            cfg.history_size = h;
        }
        if let Some(n) = self.nsplit {
            cfg.params.n_split = n;
        }
        if let Some(p) = self.pwmax {
            cfg.params.pw_max = p;
        }
        if let Some(n) = self.nextn {
            cfg.params.next_n = n;
        }
        cfg.eviction = self.eviction;
        if let Some(latency) = self.latency {
            cfg.latency = latency;
        }
        if let Some(m) = self.medium {
            cfg.latency.medium = m;
        }
        if let Some(d) = self.datapath {
            cfg.latency.datapath = d;
        }
        cfg.arrival_delay = self.arrival_delay.unwrap_or(0);
        cfg.warmup_events = self.warmup.unwrap_or(0);
        cfg.seed = self.seed.unwrap_or(0);
        if let Some(f) = self.format {
            cfg.format = f;
        }
        Ok(cfg)
    }
}

fn load_file(path: &Path) -> Result<RunArgs> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "gen = \"seq:n=10\"\nprefetcher = [\"leap\", \"nextn\"]\nhsize = 16\nnextn = 4\n\
             [latency]\nt_prefetch_hit = 900"
        )
        .unwrap();
        let cli = RunArgs {
            config: Some(f.path().to_path_buf()),
            hsize: Some(64),
            ..Default::default()
        };
        let cfg = cli.merged().unwrap().experiment().unwrap();
        assert_eq!(cfg.history_size, 64);
        assert_eq!(cfg.params.next_n, 4);
        assert_eq!(
            cfg.prefetchers,
            vec![PrefetcherKind::Leap, PrefetcherKind::NextN]
        );
        assert_eq!(cfg.latency.t_prefetch_hit, 900);
        assert_eq!(cfg.latency.t_fetch_rdma, 4_300);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "hsize = 8\nbogus = 1").unwrap();
        let cli = RunArgs {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        assert!(cli.merged().is_err());
    }

    #[test]
    fn a_trace_source_is_required() {
        assert!(RunArgs::default().experiment().is_err());
    }
}
