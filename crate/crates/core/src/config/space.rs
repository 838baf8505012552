use std::io::{Read, Write};

use super::{
    msr_decode, msr_encode, ConfigError, Configuration, MachineDescription, NumaConfig, PageMapping,
    PrefetcherConfig, ThreadMapping,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    pub machine: MachineDescription,
    /// `configs[i].id == i`.
    pub configs: Vec<Configuration>,
    pub baseline_id: u32,
}

/// Enumerates axis pairs × thread mappings × page mappings × the 16 prefetcher
/// settings, ids assigned in that lexicographic order.
pub fn enumerate_space(machine: &MachineDescription) -> Result<ConfigurationSpace, ConfigError> {
    machine.validate()?;
    let mut configs = Vec::new();
    for &(t, n) in &machine.numa_axis {
        for tm in thread_mappings_at(machine, t) {
            for pm in page_mappings_at(machine, n) {
                for bits in 0..16u8 {
                    configs.push(Configuration {
                        id: configs.len() as u32,
                        numa: NumaConfig { thread_count: t, node_count: n, thread_mapping: tm, page_mapping: pm },
                        prefetch: msr_decode(bits),
                    });
                }
            }
        }
    }
    let mut space = ConfigurationSpace { machine: machine.clone(), configs, baseline_id: 0 };
    let reference = NumaConfig {
        thread_count: machine.total_cores(),
        node_count: machine.numa_nodes,
        thread_mapping: ThreadMapping::RoundRobin,
        page_mapping: PageMapping::Locality,
    };
    if let Some(id) = space.find(&reference, &PrefetcherConfig::ALL_ENABLED) {
        space.baseline_id = id;
    }
    Ok(space)
}

fn thread_mappings_at(m: &MachineDescription, threads: u32) -> Vec<ThreadMapping> {
    if m.collapse_degenerate && threads == m.total_cores() {
        vec![representative(&m.thread_mappings, ThreadMapping::RoundRobin)]
    } else {
        m.thread_mappings.clone()
    }
}

fn page_mappings_at(m: &MachineDescription, nodes: u32) -> Vec<PageMapping> {
    if m.collapse_degenerate && nodes == 1 {
        vec![representative(&m.page_mappings, PageMapping::Locality)]
    } else {
        m.page_mappings.clone()
    }
}

fn representative<T: Copy + PartialEq>(listed: &[T], preferred: T) -> T {
    if listed.contains(&preferred) {
        preferred
    } else {
        listed[0]
    }
}

impl ConfigurationSpace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Configuration> {
        self.configs.get(id as usize)
    }

    pub fn baseline(&self) -> &Configuration {
        &self.configs[self.baseline_id as usize]
    }

    pub fn find(&self, numa: &NumaConfig, prefetch: &PrefetcherConfig) -> Option<u32> {
        self.configs.iter().find(|c| c.numa == *numa && c.prefetch == *prefetch).map(|c| c.id)
    }

    /// Like [`find`](Self::find), but first replaces a mapping that the
    /// degenerate collapse removed with its representative.
    pub fn find_canonical(&self, numa: &NumaConfig, prefetch: &PrefetcherConfig) -> Option<u32> {
        let tms = thread_mappings_at(&self.machine, numa.thread_count);
        let pms = page_mappings_at(&self.machine, numa.node_count);
        let mut canon = *numa;
        if !tms.contains(&canon.thread_mapping) && tms.len() == 1 {
            canon.thread_mapping = tms[0];
        }
        if !pms.contains(&canon.page_mapping) && pms.len() == 1 {
            canon.page_mapping = pms[0];
        }
        self.find(&canon, prefetch)
    }

    fn contains(&self, c: &Configuration) -> bool {
        self.get(c.id).is_some_and(|own| own == c)
    }
}

fn scale(value: u32, src_full: u32, dst_full: u32) -> u32 {
    if value == src_full {
        return dst_full;
    }
    let scaled = (value as f64 * dst_full as f64 / src_full as f64).round() as u32;
    scaled.clamp(1, dst_full)
}

/// Moves `c` from `src` to `dst`: prefetcher and mapping policies carry over,
/// thread and node counts scale with the machine size (a full machine stays
/// full) and snap to the nearest pair of the destination axis.
pub fn translate_config(
    c: &Configuration,
    src: &ConfigurationSpace,
    dst: &ConfigurationSpace,
) -> Result<Configuration, ConfigError> {
    if !src.contains(c) {
        return Err(ConfigError::NotOnMachine(c.id, src.machine.name.clone()));
    }
    let (s, d) = (&src.machine, &dst.machine);
    let t = scale(c.numa.thread_count, s.total_cores(), d.total_cores());
    let n = scale(c.numa.node_count, s.numa_nodes, d.numa_nodes);
    let dist = |&(at, an): &(u32, u32)| {
        let (dt, dn) = (at as f64 - t as f64, an as f64 - n as f64);
        dt * dt + dn * dn
    };
    let mut snapped = d.numa_axis[0];
    for pair in &d.numa_axis[1..] {
        let (a, b) = (dist(pair), dist(&snapped));
        if a < b || (a == b && *pair < snapped) {
            snapped = *pair;
        }
    }
    let numa = NumaConfig { thread_count: snapped.0, node_count: snapped.1, ..c.numa };
    let id = dst.find_canonical(&numa, &c.prefetch).ok_or_else(|| ConfigError::NotOnMachine(c.id, d.name.clone()))?;
    Ok(dst.configs[id as usize])
}

/// Greedy forward selection over a region × configuration speedup matrix:
/// each step adds the configuration that most raises the mean over regions of
/// the best speedup among the selected ones. Ties go to the lower index.
pub fn reduce_labels_matrix(speedups: &[Vec<f64>], k: usize) -> Result<Vec<usize>, ConfigError> {
    let available = speedups.first().map_or(0, |r| r.len());
    if k > available || speedups.iter().any(|r| r.len() != available) {
        return Err(ConfigError::TooManyLabels { k, available });
    }
    let mut best = vec![f64::NEG_INFINITY; speedups.len()];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    while chosen.len() < k {
        let mut pick: Option<(usize, f64)> = None;
        for c in (0..available).filter(|c| !chosen.contains(c)) {
            let mean = speedups.iter().zip(&best).map(|(r, &b)| b.max(r[c])).sum::<f64>() / speedups.len() as f64;
            if pick.is_none_or(|(_, m)| mean > m) {
                pick = Some((c, mean));
            }
        }
        let (c, _) = pick.expect("k <= available");
        for (b, r) in best.iter_mut().zip(speedups) {
            *b = b.max(r[c]);
        }
        chosen.push(c);
    }
    Ok(chosen)
}

const CSV_HEADER: [&str; 6] = ["config_id", "thread_count", "node_count", "thread_mapping", "page_mapping", "msr_hex"];

pub fn write_space_csv(space: &ConfigurationSpace, out: impl Write) -> Result<(), ConfigError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| ConfigError::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for c in &space.configs {
        w.write_record([
            c.id.to_string(),
            c.numa.thread_count.to_string(),
            c.numa.node_count.to_string(),
            c.numa.thread_mapping.to_string(),
            c.numa.page_mapping.to_string(),
            format!("0x{:X}", msr_encode(c.prefetch)),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads configurations written by [`write_space_csv`].
pub fn read_space_csv(input: impl Read) -> Result<Vec<Configuration>, ConfigError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| ConfigError::Csv(e.to_string()))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(ConfigError::Csv(format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::Csv(e.to_string()))?;
        let bad = |what: &str| ConfigError::Csv(format!("row {}: bad {what}", k + 1));
        let num = |i: usize, what: &str| rec[i].trim().parse::<u32>().map_err(|_| bad(what));
        let msr = rec[5].trim().trim_start_matches("0x").trim_start_matches("0X");
        let bits = u8::from_str_radix(msr, 16).ok().filter(|b| *b < 16).ok_or_else(|| bad("msr_hex"))?;
        out.push(Configuration {
            id: num(0, "config_id")?,
            numa: NumaConfig {
                thread_count: num(1, "thread_count")?,
                node_count: num(2, "node_count")?,
                thread_mapping: rec[3].trim().parse().map_err(|_| bad("thread_mapping"))?,
                page_mapping: rec[4].trim().parse().map_err(|_| bad("page_mapping"))?,
            },
            prefetch: msr_decode(bits),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::parse_machine;
    use super::*;

    fn single() -> MachineDescription {
        parse_machine(
            "name = one\nnuma_nodes = 2\ncores_per_node = 4\nnuma_axis = [(4,2)]\n\
             thread_mappings = contiguous\npage_mappings = interleave",
        )
        .unwrap()
    }

    #[test]
    fn bundled_space_sizes() {
        let sky = enumerate_space(&MachineDescription::skylake()).unwrap();
        assert_eq!(sky.len(), 288);
        assert_eq!(enumerate_space(&MachineDescription::sandybridge()).unwrap().len(), 320);
        let b = sky.baseline();
        assert_eq!((b.numa.thread_count, b.numa.node_count), (48, 2));
        assert_eq!(b.numa.thread_mapping, ThreadMapping::RoundRobin);
        assert_eq!(b.numa.page_mapping, PageMapping::Locality);
        assert_eq!(msr_encode(b.prefetch), 0);
    }

    #[test]
    fn without_collapse_the_full_product_is_enumerated() {
        let mut m = MachineDescription::skylake();
        m.collapse_degenerate = false;
        assert_eq!(enumerate_space(&m).unwrap().len(), 16 * 5 * 2 * 4);
    }

    #[test]
    fn single_pair_gives_sixteen() {
        let s = enumerate_space(&single()).unwrap();
        assert_eq!(s.len(), 16);
        assert!(s.configs.iter().enumerate().all(|(i, c)| c.id as usize == i));
        // no round_robin/locality entry, so the first all-enabled config stands in
        assert_eq!(s.baseline_id, 0);
    }

    #[test]
    fn ids_follow_lexicographic_order() {
        let s = enumerate_space(&MachineDescription::skylake()).unwrap();
        let key = |c: &Configuration| {
            let axis = s.machine.numa_axis.iter().position(|p| *p == (c.numa.thread_count, c.numa.node_count));
            (axis, c.numa.thread_mapping, c.numa.page_mapping, msr_encode(c.prefetch))
        };
        assert!(s.configs.windows(2).all(|w| key(&w[0]) < key(&w[1])));
    }

    #[test]
    fn translate_full_machine() {
        let sky = enumerate_space(&MachineDescription::skylake()).unwrap();
        let snb = enumerate_space(&MachineDescription::sandybridge()).unwrap();
        let c = translate_config(sky.baseline(), &sky, &snb).unwrap();
        assert_eq!((c.numa.thread_count, c.numa.node_count), (32, 4));
        assert_eq!(c.prefetch, sky.baseline().prefetch);
        for c in &sky.configs {
            assert_eq!(translate_config(c, &sky, &sky).unwrap(), *c);
            let t = translate_config(c, &sky, &snb).unwrap();
            assert_eq!(t.prefetch, c.prefetch);
        }
    }

    #[test]
    fn translate_rejects_foreign_config() {
        let sky = enumerate_space(&MachineDescription::skylake()).unwrap();
        let snb = enumerate_space(&MachineDescription::sandybridge()).unwrap();
        let mut c = sky.configs[5];
        c.numa.thread_count = 7;
        assert!(matches!(translate_config(&c, &sky, &snb), Err(ConfigError::NotOnMachine(..))));
    }

    #[test]
    fn greedy_examples() {
        let m = vec![vec![1.0, 2.0, 1.6], vec![1.0, 1.0, 1.5]];
        assert_eq!(reduce_labels_matrix(&m, 1).unwrap(), vec![2]);
        assert_eq!(reduce_labels_matrix(&m, 3).unwrap().len(), 3);
        assert!(reduce_labels_matrix(&m, 4).is_err());
        // exact tie: lower index wins
        assert_eq!(reduce_labels_matrix(&[vec![2.0, 2.0]], 1).unwrap(), vec![0]);
    }

    #[test]
    fn csv_round_trip() {
        let s = enumerate_space(&MachineDescription::sandybridge()).unwrap();
        let mut buf = Vec::new();
        write_space_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("config_id,thread_count,node_count,thread_mapping,page_mapping,msr_hex\n0,32,4,round_robin,"));
        assert_eq!(read_space_csv(buf.as_slice()).unwrap(), s.configs);
    }
}
