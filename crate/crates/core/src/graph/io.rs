//! Text loaders: tab-separated edge lists, feature/label CSV and JSON
//! split lists.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{Graph, Splits};
use crate::error::{Error, Result};

/// Parses `src<TAB>dst` lines; blank lines and `#` comments are skipped.
pub fn load_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

fn parse_edge_list(text: &str, ctx: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let parse = |s: Option<&str>| -> Result<usize> {
            s.map(str::trim)
                .ok_or_else(|| Error::parse(format!("{ctx}:{}", lineno + 1), "expected src<TAB>dst"))?
                .parse()
                .map_err(|e| Error::parse(format!("{ctx}:{}", lineno + 1), e))
        };
        let src = parse(parts.next())?;
        let dst = parse(parts.next())?;
        edges.push((src, dst));
    }
    Ok(edges)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    let mut out = String::from("# src\tdst\n");
    for (i, j) in g.edges() {
        out.push_str(&format!("{i}\t{j}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads `node_id,f0..f{d-1},label`. Rows may appear in any order but every
/// node id in `0..rows` must be present exactly once.
pub fn load_features_csv(path: &Path) -> Result<(Array2<f64>, Vec<usize>)> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::parse(&ctx, e))?;
    let header = rdr.headers().map_err(|e| Error::parse(&ctx, e))?.clone();
    let ncols = header.len();
    if ncols < 2 || &header[0] != "node_id" || &header[ncols - 1] != "label" {
        return Err(Error::parse(&ctx, "header must be node_id,f0..,label"));
    }
    let dim = ncols - 2;
    let mut rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(&ctx, e))?;
        let id: usize = rec[0].trim().parse().map_err(|e| Error::parse(&ctx, e))?;
        let feats = (1..=dim)
            .map(|k| rec[k].trim().parse::<f64>().map_err(|e| Error::parse(&ctx, e)))
            .collect::<Result<Vec<_>>>()?;
        let label: usize = rec[ncols - 1].trim().parse().map_err(|e| Error::parse(&ctx, e))?;
        rows.push((id, feats, label));
    }
    let n = rows.len();
    let mut features = Array2::zeros((n, dim));
    let mut labels = vec![usize::MAX; n];
    for (id, feats, label) in rows {
        if id >= n {
            return Err(Error::NodeOutOfRange { id, num_nodes: n });
        }
        if labels[id] != usize::MAX {
            return Err(Error::parse(&ctx, format!("duplicate node_id {id}")));
        }
        labels[id] = label;
        for (k, v) in feats.into_iter().enumerate() {
            features[[id, k]] = v;
        }
    }
    Ok((features, labels))
}

/// JSON object `{"train": [...], "val": [...], "test": [...]}`.
pub fn load_splits(path: &Path) -> Result<Splits> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

pub fn load_graph(edges: &Path, features: &Path, splits: &Path) -> Result<Graph> {
    let edge_list = load_edge_list(edges)?;
    let (x, y) = load_features_csv(features)?;
    let s = load_splits(splits)?;
    Graph::build(&edge_list, x, y, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_with_comments() {
        let e = parse_edge_list("# header\n0\t1\n\n2\t1\n", "t").unwrap();
        assert_eq!(e, vec![(0, 1), (2, 1)]);
        assert!(parse_edge_list("0 1\n", "t").is_err());
    }

    #[test]
    fn round_trip_files() {
        let dir = tempfile::tempdir().unwrap();
        let ep = dir.path().join("g.tsv");
        let fp = dir.path().join("x.csv");
        let sp = dir.path().join("s.json");
        fs::write(&ep, "0\t1\n1\t2\n").unwrap();
        fs::write(&fp, "node_id,f0,f1,label\n2,0.5,1,1\n0,1,0,0\n1,0,1,1\n").unwrap();
        fs::write(&sp, r#"{"train":[0],"val":[1],"test":[2]}"#).unwrap();
        let g = load_graph(&ep, &fp, &sp).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.labels(), &[0, 1, 1]);
        assert_eq!(g.features()[[2, 0]], 0.5);

        let out = dir.path().join("out.tsv");
        write_edge_list(&out, &g).unwrap();
        assert_eq!(load_edge_list(&out).unwrap(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let fp = dir.path().join("x.csv");
        fs::write(&fp, "id,f0,y\n0,1,0\n").unwrap();
        assert!(load_features_csv(&fp).is_err());
    }
}
