//! Edge-list CSV encoding of built networks.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use super::{MemoryNetwork, Network, WeightedNetwork};
use crate::error::{Error, Result};
use crate::station::{trim_bytes, StationId};

pub const EDGE_HEADER: [&str; 3] = ["src", "dst", "weight"];
pub const MEMORY_EDGE_HEADER: [&str; 5] = ["src_i", "src_j", "dst_j", "dst_k", "weight"];

pub fn write_edge_list<W: Write>(out: W, g: &WeightedNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EDGE_HEADER)?;
    let st = g.stations();
    for (i, j, weight) in g.edges() {
        w.write_record([st[i].as_str(), st[j].as_str(), &weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_memory_edge_list<W: Write>(out: W, g: &MemoryNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MEMORY_EDGE_HEADER)?;
    for (a, b, weight) in g.edges() {
        let (i, j) = g.node_label(a);
        let (j2, k) = g.node_label(b);
        w.write_record([i.as_str(), j.as_str(), j2.as_str(), k.as_str(), &weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_network<W: Write>(out: W, g: &Network) -> Result<()> {
    match g {
        Network::Station(g) => write_edge_list(out, g),
        Network::Memory(g) => write_memory_edge_list(out, g),
    }
}

fn rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let got = rdr.byte_headers()?.clone();
    let got: Vec<&[u8]> = got.iter().map(trim_bytes).collect();
    if got != header.iter().map(|h| h.as_bytes()).collect::<Vec<_>>() {
        return Err(Error::Format(format!("edge list header must be `{}`", header.join(","))));
    }
    collect_rows(rdr, header.len())
}

fn collect_rows<R: Read>(mut rdr: csv::Reader<R>, width: usize) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        let next = rdr.position().line() + 1;
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => return Err(Error::Format(format!("line {next}: {e}"))),
        }
        let line = rec.position().map_or(next, |p| p.line());
        if rec.len() != width {
            return Err(Error::Format(format!(
                "line {line}: expected {width} fields, found {}",
                rec.len()
            )));
        }
        let fields: Vec<String> = rec.iter().map(|f| f.trim().to_owned()).collect();
        if fields.iter().any(String::is_empty) {
            return Err(Error::Format(format!("line {line}: empty field")));
        }
        out.push((line, fields));
    }
    Ok(out)
}

/// Parses a `src,dst,weight` edge list.
pub fn parse_edge_list<R: Read>(input: R, directed: bool) -> Result<WeightedNetwork> {
    let mut weights = Vec::new();
    for (line, f) in rows(input, &EDGE_HEADER)? {
        let w: f64 = f[2]
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad weight `{}`", f[2])))?;
        weights.push((StationId::new(f[0].clone()), StationId::new(f[1].clone()), w));
    }
    WeightedNetwork::from_weights(directed, [], &weights)
}

/// Parses a `src_i,src_j,dst_j,dst_k,weight` memory edge list.
pub fn parse_memory_edge_list<R: Read>(input: R) -> Result<MemoryNetwork> {
    let parsed = rows(input, &MEMORY_EDGE_HEADER)?;
    memory_from_rows(parsed)
}

fn memory_from_rows(parsed: Vec<(u64, Vec<String>)>) -> Result<MemoryNetwork> {
    let mut stations = BTreeSet::new();
    let mut raw = Vec::with_capacity(parsed.len());
    for (line, f) in parsed {
        if f[1] != f[2] {
            return Err(Error::Format(format!(
                "line {line}: trips {}{} and {}{} are not connected",
                f[0], f[1], f[2], f[3]
            )));
        }
        if f[0] == f[1] || f[2] == f[3] {
            return Err(Error::Format(format!("line {line}: self-loop trip")));
        }
        let w: u64 = f[4]
            .parse()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| Error::Format(format!("line {line}: weight must be a positive integer")))?;
        for s in &f[..4] {
            stations.insert(StationId::new(s.clone()));
        }
        raw.push((line, f, w));
    }
    let stations: Vec<StationId> = stations.into_iter().collect();
    let idx = |s: &str| stations.binary_search_by(|x| x.as_str().cmp(s)).expect("collected");
    let mut nodes = BTreeSet::new();
    for (_, f, _) in &raw {
        nodes.insert((idx(&f[0]), idx(&f[1])));
        nodes.insert((idx(&f[2]), idx(&f[3])));
    }
    let nodes: Vec<(usize, usize)> = nodes.into_iter().collect();
    let nidx = |p: (usize, usize)| nodes.binary_search(&p).expect("collected");
    let mut edges = BTreeMap::new();
    for (line, f, w) in raw {
        let key = (nidx((idx(&f[0]), idx(&f[1]))), nidx((idx(&f[2]), idx(&f[3]))));
        if edges.insert(key, w).is_some() {
            return Err(Error::Format(format!("line {line}: duplicate memory edge")));
        }
    }
    MemoryNetwork::from_parts(stations, nodes, edges)
}

/// Reads either edge-list flavour, picking the format from the header.
/// `directed` applies to plain station edge lists only.
pub fn read_network<R: Read>(input: R, directed: bool) -> Result<Network> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let got = rdr.byte_headers()?.clone();
    let got: Vec<&[u8]> = got.iter().map(trim_bytes).collect();
    let is = |h: &[&str]| got == h.iter().map(|s| s.as_bytes()).collect::<Vec<_>>();
    if is(&MEMORY_EDGE_HEADER) {
        Ok(Network::Memory(memory_from_rows(collect_rows(rdr, 5)?)?))
    } else if is(&EDGE_HEADER) {
        let mut weights = Vec::new();
        for (line, f) in collect_rows(rdr, 3)? {
            let w: f64 = f[2]
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: bad weight `{}`", f[2])))?;
            weights.push((StationId::new(f[0].clone()), StationId::new(f[1].clone()), w));
        }
        Ok(Network::Station(WeightedNetwork::from_weights(directed, [], &weights)?))
    } else {
        Err(Error::Format(format!(
            "unrecognised edge list header; expected `{}` or `{}`",
            EDGE_HEADER.join(","),
            MEMORY_EDGE_HEADER.join(",")
        )))
    }
}
