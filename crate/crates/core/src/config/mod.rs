//! The NUMA placement × hardware prefetcher tuning space.

mod machine;
mod space;

pub use machine::{parse_machine, MachineDescription};
pub use space::{
    enumerate_space, read_space_csv, reduce_labels_matrix, translate_config, write_space_csv, ConfigurationSpace,
};

use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("machine description line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("axis pair ({threads},{nodes}) exceeds machine `{machine}`")]
    AxisOutOfBounds { machine: String, threads: u32, nodes: u32 },
    #[error("invalid machine description: {0}")]
    Invalid(String),
    #[error("configuration {0} is not valid on machine `{1}`")]
    NotOnMachine(u32, String),
    #[error("asked for {k} labels out of {available} configurations")]
    TooManyLabels { k: usize, available: usize },
    #[error("malformed configuration CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which of the four core prefetchers are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrefetcherConfig {
    pub dcu_ip: bool,
    pub dcu_next_line: bool,
    pub l2_adjacent: bool,
    pub l2_streamer: bool,
}

impl PrefetcherConfig {
    pub const ALL_ENABLED: PrefetcherConfig =
        PrefetcherConfig { dcu_ip: true, dcu_next_line: true, l2_adjacent: true, l2_streamer: true };
}

/// Register 0x1A4 layout: a set bit disables the prefetcher. Bit 0 is the L2
/// streamer, 1 the L2 adjacent-line, 2 the DCU next-line, 3 the DCU IP.
pub fn msr_encode(p: PrefetcherConfig) -> u8 {
    (!p.l2_streamer as u8) | (!p.l2_adjacent as u8) << 1 | (!p.dcu_next_line as u8) << 2 | (!p.dcu_ip as u8) << 3
}

/// Inverse of [`msr_encode`]; bits above the low four are ignored.
pub fn msr_decode(bits: u8) -> PrefetcherConfig {
    PrefetcherConfig {
        l2_streamer: bits & 1 == 0,
        l2_adjacent: bits & 2 == 0,
        dcu_next_line: bits & 4 == 0,
        dcu_ip: bits & 8 == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThreadMapping {
    RoundRobin,
    Contiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageMapping {
    FirstTouch,
    Locality,
    Interleave,
    Balance,
}

impl ThreadMapping {
    pub const ALL: [ThreadMapping; 2] = [ThreadMapping::RoundRobin, ThreadMapping::Contiguous];

    pub fn name(self) -> &'static str {
        match self {
            ThreadMapping::RoundRobin => "round_robin",
            ThreadMapping::Contiguous => "contiguous",
        }
    }
}

impl PageMapping {
    pub const ALL: [PageMapping; 4] =
        [PageMapping::FirstTouch, PageMapping::Locality, PageMapping::Interleave, PageMapping::Balance];

    pub fn name(self) -> &'static str {
        match self {
            PageMapping::FirstTouch => "first_touch",
            PageMapping::Locality => "locality",
            PageMapping::Interleave => "interleave",
            PageMapping::Balance => "balance",
        }
    }
}

impl fmt::Display for ThreadMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for PageMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThreadMapping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ThreadMapping::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown thread mapping `{s}`"))
    }
}

impl FromStr for PageMapping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PageMapping::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown page mapping `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NumaConfig {
    pub thread_count: u32,
    pub node_count: u32,
    pub thread_mapping: ThreadMapping,
    pub page_mapping: PageMapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub id: u32,
    pub numa: NumaConfig,
    pub prefetch: PrefetcherConfig,
}
