use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use irtune::config::{enumerate_space, ConfigurationSpace, MachineDescription};
use irtune::dataset::{ingest_counters, ingest_timings, RegionDataset};
use irtune::graph::{read_graph, ProgramGraph, Vocabulary};
use irtune::passes::{read_manifest, FlagSequence};

use crate::error::{CliError, Result};

pub const VOCAB_FILE: &str = "vocab.txt";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<fs::File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::File::create(path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_space(machine: &str) -> Result<ConfigurationSpace> {
    Ok(enumerate_space(&MachineDescription::load(machine)?)?)
}

pub fn load_timings(path: &Path, space: &ConfigurationSpace) -> Result<RegionDataset> {
    Ok(ingest_timings(fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?, space)?)
}

pub fn attach_counters(ds: &mut RegionDataset, path: &Path) -> Result<()> {
    let (schema, records) = ingest_counters(fs::File::open(path)?)?;
    ds.attach_counters(schema, records);
    Ok(())
}

/// `region_id,label` rows.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, u32>> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Data(format!("{} line {}: expected `region_id,label`", path.display(), i + 1));
        let (r, l) = line.split_once(',').ok_or_else(bad)?;
        let l: u32 = l.trim().parse().map_err(|_| bad())?;
        if out.insert(r.trim().to_string(), l).is_some() {
            return Err(CliError::Data(format!("{}: duplicate region `{r}`", path.display())));
        }
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &BTreeMap<String, u32>) -> Result<()> {
    let mut s = String::from("region_id,label\n");
    for (r, l) in labels {
        s.push_str(&format!("{r},{l}\n"));
    }
    write_text(path, &s)
}

/// Every `*.graph` file of `dir` and the size of the vocabulary stored
/// beside them.
pub fn load_graph_dir(dir: &Path) -> Result<(Vec<ProgramGraph>, Vocabulary)> {
    let vocab = Vocabulary::read(&read_text(&dir.join(VOCAB_FILE))?)?;
    let mut graphs = Vec::new();
    for p in list_files(dir, "graph")? {
        graphs.push(read_graph(&read_text(&p)?).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?);
    }
    if graphs.is_empty() {
        return Err(CliError::Data(format!("no graphs in {}", dir.display())));
    }
    Ok((graphs, vocab))
}

pub fn load_manifest(path: &Path) -> Result<Vec<FlagSequence>> {
    Ok(read_manifest(&read_text(path)?)?)
}

/// The sequence with `id` from `manifest`; the identity is always known.
pub fn sequence_by_id(manifest: &[FlagSequence], id: u32) -> Result<FlagSequence> {
    if let Some(s) = manifest.iter().find(|s| s.id == id) {
        return Ok(s.clone());
    }
    if id == 0 {
        return Ok(FlagSequence::identity());
    }
    Err(CliError::Data(format!("sequence {id} is not in the manifest")))
}
