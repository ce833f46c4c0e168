//! File formats: rational set files (one rational per line, `#` comments,
//! duplicates rejected), lattice set CSV, graph files with an `n |A| |B|`
//! header, line-triple files, and the decomposition JSON schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::applications::{parse_line_triple, Line};
use crate::error::{Error, Result};
use crate::fibering::{LatticeGraph, LatticeSet};
use crate::rational::Rational;
use crate::separation::Decomposition;
use crate::setops::RationalSet;

/// Parse a set file: one rational per line, `#` starts a comment, blank
/// lines are skipped, duplicates are an error.
pub fn parse_set(text: &str) -> Result<RationalSet> {
    let mut elems = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let value: Rational = line
            .parse()
            .map_err(|e| Error::parse(format!("line {}: {e}", lineno + 1)))?;
        elems.push(value);
    }
    RationalSet::from_unique(elems).map_err(|_| Error::parse("duplicate elements in set file"))
}

pub fn read_set(path: &Path) -> Result<RationalSet> {
    parse_set(&std::fs::read_to_string(path)?)
}

pub fn format_set(set: &RationalSet) -> String {
    let mut out = String::new();
    for x in set.iter() {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

pub fn write_set(path: &Path, set: &RationalSet) -> Result<()> {
    Ok(std::fs::write(path, format_set(set))?)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(idx) => line[..idx].trim(),
        None => line.trim(),
    }
}

/// Lattice set CSV: one integer vector per row.
pub fn parse_lattice_set(text: &str) -> Result<LatticeSet> {
    let mut points = Vec::new();
    let mut dim = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::parse(format!("line {}: bad integer", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(d) = dim {
            if coords.len() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: coords.len(),
                });
            }
        } else {
            dim = Some(coords.len());
        }
        points.push(coords);
    }
    let dim = dim.ok_or_else(|| Error::parse("empty lattice set file"))?;
    LatticeSet::new(dim, points)
}

pub fn read_lattice_set(path: &Path) -> Result<LatticeSet> {
    parse_lattice_set(&std::fs::read_to_string(path)?)
}

pub fn format_lattice_set(set: &LatticeSet) -> String {
    let mut out = String::new();
    for p in set.iter() {
        let row: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_lattice_set(path: &Path, set: &LatticeSet) -> Result<()> {
    Ok(std::fs::write(path, format_lattice_set(set))?)
}

/// Graph file: header `n |A| |B|`, then `i j` edge rows (0-based). The
/// vertex sets live in separate CSV files; the header pins their sizes.
pub fn parse_graph(text: &str, a: LatticeSet, b: LatticeSet) -> Result<LatticeGraph> {
    let mut lines = text.lines().map(strip_comment).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty graph file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::parse("graph header must be `n |A| |B|`"));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| Error::parse("bad dimension in header"))?;
    let na: usize = parts[1]
        .parse()
        .map_err(|_| Error::parse("bad |A| in header"))?;
    let nb: usize = parts[2]
        .parse()
        .map_err(|_| Error::parse("bad |B| in header"))?;
    if n != a.dim() || na != a.len() || nb != b.len() {
        return Err(Error::parse(format!(
            "header ({n}, {na}, {nb}) disagrees with sets ({}, {}, {})",
            a.dim(),
            a.len(),
            b.len()
        )));
    }
    let mut edges = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::parse(format!("bad edge row {line:?}")));
        }
        let i: u32 = parts[0]
            .parse()
            .map_err(|_| Error::parse("bad edge index"))?;
        let j: u32 = parts[1]
            .parse()
            .map_err(|_| Error::parse("bad edge index"))?;
        edges.push((i, j));
    }
    LatticeGraph::new(a, b, edges)
}

pub fn format_graph(g: &LatticeGraph) -> String {
    let mut out = format!("{} {} {}\n", g.a.dim(), g.a.len(), g.b.len());
    for &(i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

/// Line file: one `a b c` triple of rationals per row for `ax + by = c`.
pub fn parse_lines_file(text: &str) -> Result<Vec<Line>> {
    let mut lines = Vec::new();
    for raw in text.lines() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        lines.push(parse_line_triple(line)?);
    }
    Ok(lines)
}

pub fn read_lines_file(path: &Path) -> Result<Vec<Line>> {
    parse_lines_file(&std::fs::read_to_string(path)?)
}

#[derive(Deserialize)]
struct DecompositionFile {
    #[serde(rename = "X")]
    x: Vec<String>,
    fibers: BTreeMap<String, Vec<String>>,
}

/// Decomposition JSON: `{"X": [rationals], "fibers": {"x": [rationals]}}`.
pub fn parse_decomposition(text: &str) -> Result<Decomposition> {
    let file: DecompositionFile = serde_json::from_str(text)?;
    let x_set: RationalSet = file
        .x
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<Rational>>>()?
        .into_iter()
        .collect();
    let mut fibers = BTreeMap::new();
    for (key, values) in file.fibers {
        let x: Rational = key.parse()?;
        let fiber: RationalSet = values
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Rational>>>()?
            .into_iter()
            .collect();
        fibers.insert(x, fiber);
    }
    Decomposition::new(x_set, fibers)
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition> {
    parse_decomposition(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_file_round_trip() {
        let text = "# generated\n1/2\n-3\n7/5\n\n# trailing comment\n";
        let set = parse_set(text).unwrap();
        assert_eq!(set.len(), 3);
        let again = parse_set(&format_set(&set)).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn set_file_rejects_duplicates() {
        assert!(parse_set("1\n2\n2/1\n").is_err());
        assert!(parse_set("1\nx\n").is_err());
    }

    #[test]
    fn lattice_round_trip() {
        let text = "0,0\n1,2\n-3,4\n";
        let set = parse_lattice_set(text).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(parse_lattice_set(&format_lattice_set(&set)).unwrap(), set);
        assert!(parse_lattice_set("1,2\n3\n").is_err());
        assert!(parse_lattice_set("").is_err());
    }

    #[test]
    fn graph_round_trip() {
        let a = LatticeSet::new(1, vec![vec![0], vec![1]]).unwrap();
        let b = LatticeSet::new(1, vec![vec![0], vec![2]]).unwrap();
        let g = LatticeGraph::new(a.clone(), b.clone(), vec![(0, 0), (1, 1)]).unwrap();
        let text = format_graph(&g);
        assert!(text.starts_with("1 2 2\n"));
        let parsed = parse_graph(&text, a.clone(), b.clone()).unwrap();
        assert_eq!(parsed, g);
        assert!(parse_graph("2 2 2\n0 0\n", a.clone(), b.clone()).is_err());
        assert!(parse_graph("1 2 2\n0 5\n", a, b).is_err());
    }

    #[test]
    fn lines_file() {
        let lines = parse_lines_file("1 -1 0\n0 1 1/2\n").unwrap();
        assert_eq!(lines.len(), 2);
        assert!(parse_lines_file("0 0 1\n").is_err());
    }

    #[test]
    fn decomposition_file() {
        let text = r#"{"X": ["2", "4"], "fibers": {"2": ["1"], "4": ["1"]}}"#;
        let d = parse_decomposition(text).unwrap();
        assert_eq!(d.x_set().len(), 2);
        // Coprimality violation caught at construction.
        let bad = r#"{"X": ["2", "4"], "fibers": {"2": ["6"], "4": ["1"]}}"#;
        assert!(parse_decomposition(bad).is_err());
    }
}
