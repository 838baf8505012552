use std::path::Path;

use super::{ConfigError, PageMapping, ThreadMapping};

/// A target machine and the NUMA sub-space explored on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineDescription {
    pub name: String,
    pub numa_nodes: u32,
    pub cores_per_node: u32,
    /// `(thread_count, node_count)` pairs in enumeration order.
    pub numa_axis: Vec<(u32, u32)>,
    pub thread_mappings: Vec<ThreadMapping>,
    pub page_mappings: Vec<PageMapping>,
    /// Skip placements that cannot differ: thread mappings when every core
    /// runs a thread, page mappings when one node holds every page.
    pub collapse_degenerate: bool,
}

const SKYLAKE: &str = include_str!("../../machines/skylake.machine");
const SANDYBRIDGE: &str = include_str!("../../machines/sandybridge.machine");

impl MachineDescription {
    pub fn total_cores(&self) -> u32 {
        self.numa_nodes * self.cores_per_node
    }

    pub fn skylake() -> Self {
        parse_machine(SKYLAKE).expect("bundled description")
    }

    pub fn sandybridge() -> Self {
        parse_machine(SANDYBRIDGE).expect("bundled description")
    }

    /// Resolves `skylake`/`sandybridge` to the bundled files, anything else as a path.
    pub fn load(name_or_path: &str) -> Result<Self, ConfigError> {
        match name_or_path {
            "skylake" => Ok(Self::skylake()),
            "sandybridge" | "sandy_bridge" => Ok(Self::sandybridge()),
            path => parse_machine(&std::fs::read_to_string(Path::new(path))?),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(ConfigError::Invalid("missing name".into()));
        }
        if self.numa_nodes == 0 || self.cores_per_node == 0 {
            return Err(ConfigError::Invalid("numa_nodes and cores_per_node must be positive".into()));
        }
        if self.numa_axis.is_empty() || self.thread_mappings.is_empty() || self.page_mappings.is_empty() {
            return Err(ConfigError::Invalid("axis and mapping lists must be non-empty".into()));
        }
        for &(t, n) in &self.numa_axis {
            if !self.fits(t, n) {
                return Err(ConfigError::AxisOutOfBounds { machine: self.name.clone(), threads: t, nodes: n });
            }
        }
        let mut seen = self.numa_axis.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.numa_axis.len() {
            return Err(ConfigError::Invalid("duplicate numa_axis pair".into()));
        }
        Ok(())
    }

    /// Whether `threads` threads fit on `nodes` nodes of this machine.
    pub fn fits(&self, threads: u32, nodes: u32) -> bool {
        threads >= 1 && nodes >= 1 && nodes <= self.numa_nodes && threads <= nodes * self.cores_per_node
    }
}

/// Parses the `key = value` format; `#` starts a comment.
///
/// ```text
/// name = skylake
/// numa_nodes = 2
/// cores_per_node = 24
/// numa_axis = [(48,2),(24,2),(24,1)]
/// thread_mappings = round_robin, contiguous
/// page_mappings = first_touch, locality, interleave, balance
/// collapse_degenerate = true
/// ```
pub fn parse_machine(text: &str) -> Result<MachineDescription, ConfigError> {
    let mut m = MachineDescription {
        name: String::new(),
        numa_nodes: 0,
        cores_per_node: 0,
        numa_axis: Vec::new(),
        thread_mappings: ThreadMapping::ALL.to_vec(),
        page_mappings: PageMapping::ALL.to_vec(),
        collapse_degenerate: true,
    };
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line: k + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
        let value = value.trim();
        let number = |v: &str| v.parse::<u32>().map_err(|_| err(format!("`{v}` is not a positive integer")));
        match key.trim() {
            "name" => m.name = value.to_string(),
            "numa_nodes" => m.numa_nodes = number(value)?,
            "cores_per_node" => m.cores_per_node = number(value)?,
            "numa_axis" => m.numa_axis = parse_axis(value).map_err(err)?,
            "thread_mappings" => m.thread_mappings = parse_list(value).map_err(err)?,
            "page_mappings" => m.page_mappings = parse_list(value).map_err(err)?,
            "collapse_degenerate" => {
                m.collapse_degenerate = value.parse().map_err(|_| err(format!("`{value}` is not a boolean")))?
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    m.validate()?;
    Ok(m)
}

fn parse_axis(value: &str) -> Result<Vec<(u32, u32)>, String> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or("numa_axis must be a bracketed list")?;
    let compact: String = inner.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Ok(Vec::new());
    }
    compact
        .strip_prefix('(')
        .and_then(|v| v.strip_suffix(')'))
        .ok_or("axis entries must look like (threads,nodes)")?
        .split("),(")
        .map(|pair| {
            let (t, n) = pair.split_once(',').ok_or(format!("bad axis pair `{pair}`"))?;
            Ok((t.parse().map_err(|_| format!("bad thread count `{t}`"))?, n.parse().map_err(|_| format!("bad node count `{n}`"))?))
        })
        .collect()
}

fn parse_list<T: std::str::FromStr<Err = String>>(value: &str) -> Result<Vec<T>, String> {
    value.split(',').map(|s| s.trim().parse()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_parse() {
        let s = MachineDescription::skylake();
        assert_eq!(s.total_cores(), 48);
        assert_eq!(s.numa_axis[0], (48, 2));
        assert_eq!(MachineDescription::sandybridge().total_cores(), 32);
    }

    #[test]
    fn axis_outside_machine_is_rejected() {
        let text = "name = tiny\nnuma_nodes = 1\ncores_per_node = 4\nnuma_axis = [(8,1)]";
        assert!(matches!(parse_machine(text), Err(ConfigError::AxisOutOfBounds { threads: 8, .. })));
        let text = "name = tiny\nnuma_nodes = 1\ncores_per_node = 4\nnuma_axis = [(2,2)]";
        assert!(parse_machine(text).is_err());
    }

    #[test]
    fn optional_keys() {
        let text = "name = t\nnuma_nodes = 2\ncores_per_node = 2\nnuma_axis = [ (4, 2) ]\n\
                    thread_mappings = contiguous\npage_mappings = interleave, balance\ncollapse_degenerate = false";
        let m = parse_machine(text).unwrap();
        assert_eq!(m.numa_axis, vec![(4, 2)]);
        assert_eq!(m.thread_mappings, vec![ThreadMapping::Contiguous]);
        assert_eq!(m.page_mappings, vec![PageMapping::Interleave, PageMapping::Balance]);
        assert!(!m.collapse_degenerate);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse_machine("name = x\nnuma_nodes: 2") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_machine("name = x\nnuma_axis = (1,1)").is_err());
        assert!(parse_machine("name = x\nfrobnicate = 1").is_err());
    }
}
