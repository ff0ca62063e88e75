//! Text formats for neighbor lists, graphs, labels and SBM instances.
//!
//! Every writer takes optional comment lines, emitted as `# ...` at the top
//! of the file, so artifacts can carry the configuration that produced
//! them. Readers skip comment lines they do not understand. Floats are
//! written in Rust's shortest round-trip form, so reading back is exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::synth::SbmInstance;
use crate::types::{Neighbor, NeighborList};

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str, line: usize) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what}")))
}

/// `# n=<n>` then `node neighbor distance [hop] flag`, tab separated. The
/// flag is 1 when the owning list is marked infeasible.
pub fn write_neighbor_lists<W: Write>(
    mut w: W,
    lists: &[NeighborList],
    with_hop: bool,
    comments: &[String],
) -> Result<()> {
    writeln!(w, "# n={}", lists.len())?;
    write_comments(&mut w, comments)?;
    if with_hop {
        writeln!(w, "node\tneighbor\tdistance\thop\tflag")?;
    } else {
        writeln!(w, "node\tneighbor\tdistance\tflag")?;
    }
    for list in lists {
        let flag = u8::from(list.infeasible);
        for nb in &list.entries {
            if with_hop {
                writeln!(w, "{}\t{}\t{}\t{}\t{flag}", list.owner, nb.id, nb.dist, nb.hop)?;
            } else {
                writeln!(w, "{}\t{}\t{}\t{flag}", list.owner, nb.id, nb.dist)?;
            }
        }
    }
    Ok(())
}

/// Inverse of [`write_neighbor_lists`]. Lists come back uncapped.
pub fn read_neighbor_lists<R: Read>(r: R) -> Result<Vec<NeighborList>> {
    let mut n = None;
    let mut with_hop = false;
    let mut lists: Vec<NeighborList> = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("# n=") {
            let count: usize = parse_field(Some(rest), "node count", lineno)?;
            n = Some(count);
            lists = (0..count).map(|i| NeighborList::new(i, None)).collect();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if line.starts_with("node\t") {
            with_hop = line.split('\t').any(|h| h == "hop");
            continue;
        }
        if n.is_none() {
            return Err(Error::Parse("neighbor file lacks a `# n=` header".into()));
        }
        let mut f = line.split('\t');
        let node: usize = parse_field(f.next(), "node", lineno)?;
        let id: usize = parse_field(f.next(), "neighbor", lineno)?;
        let dist: f64 = parse_field(f.next(), "distance", lineno)?;
        let hop: u32 = if with_hop { parse_field(f.next(), "hop", lineno)? } else { 0 };
        let flag: u8 = parse_field(f.next(), "flag", lineno)?;
        let list = lists
            .get_mut(node)
            .ok_or_else(|| Error::Parse(format!("line {lineno}: node {node} out of range")))?;
        list.entries.push(Neighbor { id, dist, hop });
        list.infeasible |= flag == 1;
    }
    for list in &mut lists {
        list.entries.sort_by(Neighbor::cmp_key);
    }
    Ok(lists)
}

/// `# n=<n> sigma=<sigma>` then `i j weight` rows with `i < j`, sorted.
pub fn write_graph<W: Write>(mut w: W, graph: &WeightedGraph, comments: &[String]) -> Result<()> {
    match graph.sigma {
        Some(s) => writeln!(w, "# n={} sigma={s}", graph.num_nodes())?,
        None => writeln!(w, "# n={} sigma=none", graph.num_nodes())?,
    }
    write_comments(&mut w, comments)?;
    for &(i, j, wt) in graph.edges() {
        writeln!(w, "{i}\t{j}\t{wt}")?;
    }
    Ok(())
}

pub fn read_graph<R: Read>(r: R) -> Result<WeightedGraph> {
    let mut header: Option<(usize, Option<f64>)> = None;
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("# n=") {
            let mut parts = rest.split_whitespace();
            let n: usize = parse_field(parts.next(), "node count", lineno)?;
            let sigma = match parts.next().and_then(|s| s.strip_prefix("sigma=")) {
                Some("none") | None => None,
                Some(s) => Some(parse_field(Some(s), "sigma", lineno)?),
            };
            header = Some((n, sigma));
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let i: usize = parse_field(f.next(), "i", lineno)?;
        let j: usize = parse_field(f.next(), "j", lineno)?;
        let wt: f64 = parse_field(f.next(), "weight", lineno)?;
        edges.push((i, j, wt));
    }
    let (n, sigma) = header.ok_or_else(|| Error::Parse("graph file lacks a `# n=` header".into()))?;
    let mut g = WeightedGraph::from_edges(n, edges)?;
    g.sigma = sigma;
    Ok(g)
}

/// `id,label` CSV.
pub fn write_labels<W: Write>(mut w: W, labels: &[usize], comments: &[String]) -> Result<()> {
    write_comments(&mut w, comments)?;
    writeln!(w, "id,label")?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(w, "{i},{l}")?;
    }
    Ok(())
}

/// Reads an `id,label` CSV. Ids must be exactly `0..n` in any order; labels
/// are any non-negative integers.
pub fn read_labels<R: Read>(r: R) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = parse_field(rec.get(0), "id", idx + 2)?;
        let label = parse_field(rec.get(1), "label", idx + 2)?;
        pairs.push((id, label));
    }
    pairs.sort_unstable();
    if pairs.iter().enumerate().any(|(i, &(id, _))| id != i) {
        return Err(Error::Parse("label ids must cover 0..n exactly once".into()));
    }
    Ok(pairs.into_iter().map(|p| p.1).collect())
}

/// Writes `features.csv`, `nodes.csv` (`id,group,cluster`), `adjacency.tsv`
/// (directed, row-normalized) and `params.json` into `dir`.
pub fn write_sbm_instance(dir: &Path, inst: &SbmInstance, comments: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(x) = &inst.features {
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("features.csv"))?);
        write_comments(&mut w, comments)?;
        let header: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for row in x.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("nodes.csv"))?);
    write_comments(&mut w, comments)?;
    writeln!(w, "id,group,cluster")?;
    for i in 0..inst.params.n {
        writeln!(w, "{i},{},{}", inst.groups[i], inst.truth[i])?;
    }
    w.flush()?;

    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("adjacency.tsv"))?);
    writeln!(w, "# n={}", inst.params.n)?;
    write_comments(&mut w, comments)?;
    for (i, row) in inst.adjacency.iter().enumerate() {
        for &(j, wt) in row {
            writeln!(w, "{i}\t{j}\t{wt}")?;
        }
    }
    w.flush()?;

    std::fs::write(dir.join("params.json"), serde_json::to_string_pretty(&inst.params)? + "\n")?;
    Ok(())
}
