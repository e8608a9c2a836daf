//! File formats: CSV for clouds and full distance matrices, JSON for
//! everything else (clouds, masked distance edge lists, noise specs,
//! anchor graphs).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SquaredDistanceMatrix};
use crate::graph::{AnchorGraph, GraphMeta, LocalEdgeSet};
use crate::noise::NoiseSpec;

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

/// Writes one row per point, `k` columns, no header.
pub fn write_cloud_csv<W: Write>(w: W, cloud: &PointCloud) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for p in cloud.iter_points() {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a cloud from CSV; a non-numeric first row is treated as a header.
pub fn read_cloud_csv<R: Read>(r: R) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if idx == 0 => continue, // header row
            Err(e) => {
                return Err(Error::Parse(format!("row {}: {e}", idx + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let dim = rows[0].len();
    PointCloud::from_rows(dim, &rows)
}

pub fn save_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_cloud_csv(BufWriter::new(File::create(path)?), cloud)
}

pub fn load_cloud_csv(path: &Path) -> Result<PointCloud> {
    read_cloud_csv(BufReader::new(File::open(path)?))
}

pub fn save_cloud_json(path: &Path, cloud: &PointCloud) -> Result<()> {
    save_json(path, cloud)
}

pub fn load_cloud_json(path: &Path) -> Result<PointCloud> {
    load_json(path)
}

// ---------------------------------------------------------------------------
// Squared distance matrices
// ---------------------------------------------------------------------------

/// Writes the full `n×n` matrix of squared distances as CSV.
pub fn write_sdm_csv<W: Write>(w: W, d: &SquaredDistanceMatrix) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let n = d.size();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| d.get(i, j).to_string()).collect();
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_sdm_csv<R: Read>(r: R) -> Result<SquaredDistanceMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut entries = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if n == 0 {
            n = record.len();
        } else if record.len() != n {
            return Err(Error::Parse("ragged distance matrix".into()));
        }
        for field in record.iter() {
            entries.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))?,
            );
        }
    }
    if entries.len() != n * n {
        return Err(Error::Parse(format!(
            "expected a square matrix, got {} entries in {n} columns",
            entries.len()
        )));
    }
    SquaredDistanceMatrix::from_entries(n, entries)
}

pub fn save_sdm_csv(path: &Path, d: &SquaredDistanceMatrix) -> Result<()> {
    write_sdm_csv(BufWriter::new(File::create(path)?), d)
}

pub fn load_sdm_csv(path: &Path) -> Result<SquaredDistanceMatrix> {
    read_sdm_csv(BufReader::new(File::open(path)?))
}

/// One observed pair in the masked JSON form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdmEdge {
    pub i: usize,
    pub j: usize,
    pub d2: f64,
}

/// Masked edge-list form: `{"n": ..., "edges": [{"i","j","d2"}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdmEdgeList {
    pub n: usize,
    pub edges: Vec<SdmEdge>,
}

pub fn sdm_to_edge_list(d: &SquaredDistanceMatrix) -> SdmEdgeList {
    let edges = d
        .observed_pairs()
        .into_iter()
        .map(|(i, j)| SdmEdge {
            i,
            j,
            d2: d.get(i, j),
        })
        .collect();
    SdmEdgeList { n: d.size(), edges }
}

pub fn sdm_from_edge_list(list: &SdmEdgeList) -> Result<SquaredDistanceMatrix> {
    let edges: Vec<(usize, usize, f64)> =
        list.edges.iter().map(|e| (e.i, e.j, e.d2)).collect();
    SquaredDistanceMatrix::from_edges(list.n, &edges)
}

// ---------------------------------------------------------------------------
// Noise specs
// ---------------------------------------------------------------------------

/// On-disk noise spec: either a uniform sigma or a CSV matrix of sigmas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpecFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_uniform: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_matrix_csv: Option<String>,
    pub seed: u64,
}

/// Resolves a [`NoiseSpecFile`] into a [`NoiseSpec`] for `n` points;
/// relative CSV paths resolve against `base_dir`.
pub fn resolve_noise_spec(file: &NoiseSpecFile, n: usize, base_dir: &Path) -> Result<NoiseSpec> {
    match (&file.sigma_uniform, &file.sigma_matrix_csv) {
        (Some(sigma), None) => NoiseSpec::uniform(n, *sigma, file.seed),
        (None, Some(rel)) => {
            let path = base_dir.join(rel);
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(BufReader::new(File::open(&path)?));
            let mut entries = Vec::new();
            for record in reader.records() {
                let record = record.map_err(csv_err)?;
                for field in record.iter() {
                    entries.push(
                        field
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(e.to_string()))?,
                    );
                }
            }
            if entries.len() != n * n {
                return Err(Error::Parse(format!(
                    "sigma matrix at {} has {} entries, expected {}",
                    path.display(),
                    entries.len(),
                    n * n
                )));
            }
            NoiseSpec::from_matrix(n, entries, file.seed)
        }
        _ => Err(Error::Parse(
            "noise spec needs exactly one of sigma_uniform or sigma_matrix_csv".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Anchor graphs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphEdgeJson {
    i: usize,
    j: usize,
    d: f64,
    kind: String,
}

/// Wire form of an anchor graph. Local edges appear grouped per vertex in
/// role order (for stable triples: `r_i`, `r_j`, witness).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    k: usize,
    anchors: Vec<usize>,
    edges: Vec<GraphEdgeJson>,
    meta: GraphMeta,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    stable_angles: Vec<(usize, f64)>,
}

pub fn graph_to_json_string(g: &AnchorGraph) -> Result<String> {
    let mut edges = Vec::with_capacity(g.edge_count());
    for &(a, b, d) in g.global_edges() {
        edges.push(GraphEdgeJson {
            i: a,
            j: b,
            d,
            kind: "global".into(),
        });
    }
    let mut stable_angles = Vec::new();
    for set in g.locals() {
        if let Some(angle) = set.stable_angle {
            stable_angles.push((set.vertex, angle));
        }
        for &(a, d) in &set.edges {
            edges.push(GraphEdgeJson {
                i: set.vertex,
                j: a,
                d,
                kind: "local".into(),
            });
        }
    }
    let json = GraphJson {
        n: g.n(),
        k: g.k(),
        anchors: g.anchors().to_vec(),
        edges,
        meta: g.meta.clone(),
        stable_angles,
    };
    serde_json::to_string_pretty(&json).map_err(|e| Error::Parse(e.to_string()))
}

pub fn graph_from_json_str(text: &str) -> Result<AnchorGraph> {
    let json: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let anchor_set: std::collections::BTreeSet<usize> = json.anchors.iter().copied().collect();
    let mut global_edges = Vec::new();
    // Preserve encounter order inside each vertex's local list; role order
    // matters for stable triples.
    let mut local_map: std::collections::BTreeMap<usize, Vec<(usize, f64)>> =
        std::collections::BTreeMap::new();
    for e in &json.edges {
        match e.kind.as_str() {
            "global" => {
                if !anchor_set.contains(&e.i) || !anchor_set.contains(&e.j) {
                    return Err(Error::Parse(format!(
                        "global edge ({}, {}) must join two anchors",
                        e.i, e.j
                    )));
                }
                global_edges.push((e.i, e.j, e.d));
            }
            "local" => {
                let (vertex, anchor) = match (anchor_set.contains(&e.i), anchor_set.contains(&e.j))
                {
                    (false, true) => (e.i, e.j),
                    (true, false) => (e.j, e.i),
                    _ => {
                        return Err(Error::Parse(format!(
                            "local edge ({}, {}) must join a non-anchor to an anchor",
                            e.i, e.j
                        )))
                    }
                };
                local_map.entry(vertex).or_default().push((anchor, e.d));
            }
            other => {
                return Err(Error::Parse(format!("unknown edge kind {other:?}")));
            }
        }
    }
    let angle_map: std::collections::BTreeMap<usize, f64> =
        json.stable_angles.iter().copied().collect();
    let locals: Vec<LocalEdgeSet> = local_map
        .into_iter()
        .map(|(vertex, edges)| LocalEdgeSet {
            vertex,
            edges,
            stable_angle: angle_map.get(&vertex).copied(),
        })
        .collect();
    AnchorGraph::new(json.n, json.k, json.anchors, global_edges, locals, json.meta)
}

pub fn save_graph_json(path: &Path, g: &AnchorGraph) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(graph_to_json_string(g)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn load_graph_json(path: &Path) -> Result<AnchorGraph> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    graph_from_json_str(&text)
}

// ---------------------------------------------------------------------------
// Generic JSON helpers
// ---------------------------------------------------------------------------

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
