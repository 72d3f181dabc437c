//! On-disk formats: topology JSON, headerless trace CSV, stats CSV, TE config
//! JSON, path-set JSON and model JSON.

use std::fs;
use std::path::Path;

use rte_core::neural::{Layer, Mlp};
use rte_core::te::TeConfig;
use rte_core::topology::{Edge, Graph, PathSets};
use rte_core::traffic::{DemandMatrix, TrafficStats, TrafficTrace};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const MODEL_VERSION: u32 = 1;

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Data(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub directed: bool,
    pub num_nodes: usize,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub src: usize,
    pub dst: usize,
    pub capacity: f64,
}

pub fn read_topology(path: &Path) -> Result<Graph> {
    let file: TopologyFile = read_json(path)?;
    let edges = file.edges.iter().map(|e| Edge { src: e.src, dst: e.dst, capacity: e.capacity }).collect();
    Graph::new(file.num_nodes, file.directed, edges).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

pub fn write_topology(path: &Path, g: &Graph) -> Result<()> {
    let file = TopologyFile {
        directed: g.is_directed(),
        num_nodes: g.node_count(),
        edges: g.edges().iter().map(|e| EdgeRecord { src: e.src, dst: e.dst, capacity: e.capacity }).collect(),
    };
    write_json(path, &file)
}

/// Reads a headerless CSV with `n * n` row-major values per snapshot. Nonzero
/// diagonals are zeroed with a warning; negative or non-finite values are errors.
pub fn read_trace(path: &Path, num_nodes: usize) -> Result<TrafficTrace> {
    let data_err = |msg: String| HarnessError::Data(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::io(path, io),
            other => data_err(format!("{other:?}")),
        })?;
    let mut snapshots = Vec::new();
    let mut forced = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| data_err(format!("row {}: {e}", row + 1)))?;
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| data_err(format!("row {}: not a number: {f:?}", row + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != num_nodes * num_nodes {
            return Err(data_err(format!("row {}: expected {} values, got {}", row + 1, num_nodes * num_nodes, values.len())));
        }
        let (dm, was_forced) =
            DemandMatrix::with_forced_diagonal(num_nodes, values).map_err(|e| data_err(format!("row {}: {e}", row + 1)))?;
        forced += was_forced as usize;
        snapshots.push(dm);
    }
    if forced > 0 {
        log::warn!("{}: nonzero diagonal forced to zero in {forced} snapshot(s)", path.display());
    }
    Ok(TrafficTrace::new(num_nodes, snapshots)?)
}

pub fn write_trace(path: &Path, trace: &TrafficTrace) -> Result<()> {
    let mut out = String::new();
    for m in trace.snapshots() {
        let row: Vec<String> = m.values().iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// One row per off-diagonal pair: `sd_src,sd_dst,mean,variance`.
pub fn write_stats(path: &Path, stats: &TrafficStats) -> Result<()> {
    let n = stats.num_nodes();
    let mut out = String::from("sd_src,sd_dst,mean,variance\n");
    for s in 0..n {
        for d in (0..n).filter(|&d| d != s) {
            out.push_str(&format!("{s},{d},{},{}\n", stats.mean[s * n + d], stats.variance[s * n + d]));
        }
    }
    write_file(path, out.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    sd_pairs: Vec<(usize, usize)>,
    ratios: Vec<Vec<f64>>,
}

pub fn write_te_config(path: &Path, config: &TeConfig, ps: &PathSets) -> Result<()> {
    let file = ConfigFile {
        sd_pairs: ps.sd_pairs().to_vec(),
        ratios: (0..ps.num_sd()).map(|sd| config.group(ps, sd).to_vec()).collect(),
    };
    write_json(path, &file)
}

pub fn read_te_config(path: &Path, ps: &PathSets) -> Result<TeConfig> {
    let file: ConfigFile = read_json(path)?;
    if file.sd_pairs != ps.sd_pairs() {
        return Err(HarnessError::Data(format!("{}: SD pairs do not match the path sets", path.display())));
    }
    let ratios = file.ratios.into_iter().flatten().collect();
    TeConfig::new(ratios, ps).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSetFile {
    pub k: usize,
    pub num_nodes: usize,
    pub groups: Vec<PathGroup>,
    pub unreachable: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathGroup {
    pub src: usize,
    pub dst: usize,
    pub paths: Vec<Vec<usize>>,
}

pub fn write_path_sets(path: &Path, ps: &PathSets, k: usize) -> Result<()> {
    let file = PathSetFile {
        k,
        num_nodes: ps.num_nodes(),
        groups: ps
            .sd_pairs()
            .iter()
            .enumerate()
            .map(|(sd, &(src, dst))| PathGroup { src, dst, paths: ps.paths_of(sd).iter().map(|p| p.nodes.clone()).collect() })
            .collect(),
        unreachable: ps.unreachable().to_vec(),
    };
    write_json(path, &file)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    h: usize,
    num_nodes: usize,
    num_paths: usize,
    input_scale: f64,
    gamma: f64,
    layers: Vec<LayerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

pub fn save_model(path: &Path, model: &Mlp) -> Result<()> {
    let file = ModelFile {
        version: MODEL_VERSION,
        h: model.h,
        num_nodes: model.num_nodes,
        num_paths: model.num_paths(),
        input_scale: model.input_scale,
        gamma: model.gamma,
        layers: model
            .layers
            .iter()
            .map(|l| LayerRecord { w: l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect(), b: l.bias.clone() })
            .collect(),
    };
    write_json(path, &file)
}

/// Loads a model and checks its dimensions against `ps`.
pub fn load_model(path: &Path, ps: &PathSets) -> Result<Mlp> {
    let file: ModelFile = read_json(path)?;
    let err = |msg: String| HarnessError::Data(format!("{}: {msg}", path.display()));
    if file.version != MODEL_VERSION {
        return Err(err(format!("unsupported model version {} (expected {MODEL_VERSION})", file.version)));
    }
    if file.num_paths != ps.num_paths() {
        return Err(err(format!("model has {} paths, path sets have {}", file.num_paths, ps.num_paths())));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, l) in file.layers.into_iter().enumerate() {
        let outputs = l.w.len();
        let inputs = l.w.first().map_or(0, Vec::len);
        if l.w.iter().any(|row| row.len() != inputs) {
            return Err(err(format!("layer {i}: ragged weight matrix")));
        }
        layers.push(Layer { inputs, outputs, weights: l.w.into_iter().flatten().collect(), bias: l.b });
    }
    Mlp::from_layers(file.h, file.num_nodes, file.input_scale, file.gamma, layers, ps).map_err(|e| err(e.to_string()))
}
