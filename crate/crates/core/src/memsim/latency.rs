use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Backing store behind the resident set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    #[default]
    Rdma,
    Disk,
}

/// Software path a demand miss takes before the fetch is issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataPath {
    /// Block-layer style path with request preparation and batching.
    #[default]
    Default,
    /// Direct path with only a small constant overhead.
    Lean,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($ty::$variant),)+
                    _ => Err(format!(
                        "invalid {} `{s}` (expected {})",
                        stringify!($ty).to_ascii_lowercase(),
                        [$($text),+].join(" or ")
                    )),
                }
            }
        }
    };
}

text_enum!(Medium { Rdma => "rdma", Disk => "disk" });
text_enum!(DataPath { Default => "default", Lean => "lean" });

/// Per-access latency constants in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyModel {
    pub t_resident_hit: u64,
    pub t_prefetch_hit: u64,
    pub t_fetch_rdma: u64,
    pub t_fetch_disk: u64,
    pub t_datapath_default: u64,
    pub t_datapath_lean: u64,
    pub medium: Medium,
    pub datapath: DataPath,
    /// Nanoseconds per trace tick, used to price waits on in-flight
    /// prefetches.
    pub tick_ns: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            t_resident_hit: 100,
            t_prefetch_hit: 800,
            t_fetch_rdma: 4_300,
            t_fetch_disk: 91_500,
            t_datapath_default: 34_000,
            t_datapath_lean: 700,
            medium: Medium::Rdma,
            datapath: DataPath::Default,
            tick_ns: 1_000,
        }
    }
}

impl LatencyModel {
    pub fn fetch(&self) -> u64 {
        match self.medium {
            Medium::Rdma => self.t_fetch_rdma,
            Medium::Disk => self.t_fetch_disk,
        }
    }

    pub fn datapath_overhead(&self) -> u64 {
        match self.datapath {
            DataPath::Default => self.t_datapath_default,
            DataPath::Lean => self.t_datapath_lean,
        }
    }

    pub fn miss(&self) -> u64 {
        self.fetch() + self.datapath_overhead()
    }

    /// Latency of a hit on a prefetch still `wait_ticks` from arrival. The
    /// demand read joins the in-flight request, so it never costs more than
    /// a fresh miss.
    pub fn late_prefetch_hit(&self, wait_ticks: u64) -> u64 {
        wait_ticks
            .saturating_mul(self.tick_ns)
            .saturating_add(self.t_prefetch_hit)
            .min(self.miss())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_miss_costs() {
        let mut m = LatencyModel::default();
        assert_eq!(m.miss(), 38_300);
        m.datapath = DataPath::Lean;
        assert_eq!(m.miss(), 5_000);
        m.medium = Medium::Disk;
        assert_eq!(m.miss(), 92_200);
    }

    #[test]
    fn late_hits_are_capped_by_a_miss() {
        let m = LatencyModel::default();
        assert_eq!(m.late_prefetch_hit(0), 800);
        assert_eq!(m.late_prefetch_hit(3), 3_800);
        assert_eq!(m.late_prefetch_hit(1_000), m.miss());
    }

    #[test]
    fn names_round_trip() {
        for m in [Medium::Rdma, Medium::Disk] {
            assert_eq!(m.to_string().parse::<Medium>().unwrap(), m);
        }
        assert_eq!("LEAN".parse::<DataPath>().unwrap(), DataPath::Lean);
        assert!("nvme".parse::<Medium>().is_err());
    }
}
