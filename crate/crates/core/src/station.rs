//! Station identifiers and the station universe file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque station identifier as it appears in the input files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Self {
        StationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        StationId(s.to_owned())
    }
}

impl From<String> for StationId {
    fn from(s: String) -> Self {
        StationId(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub name: String,
    /// Ground-truth importance; `None` keeps the station in the networks but
    /// out of every evaluation.
    pub ground_truth: Option<f64>,
}

/// The declared set of stations, keyed and iterated in identifier order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StationUniverse {
    stations: BTreeMap<StationId, Station>,
}

pub const STATION_HEADER: [&str; 3] = ["station_id", "name", "ground_truth_score"];

impl StationUniverse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a station; returns `false` if the id was already present.
    pub fn insert(&mut self, id: StationId, station: Station) -> bool {
        if self.stations.contains_key(&id) {
            return false;
        }
        self.stations.insert(id, station);
        true
    }

    pub fn contains(&self, id: &str) -> bool {
        self.stations.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&Station> {
        self.stations.get(id)
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &StationId> {
        self.stations.keys()
    }

    pub fn id_set(&self) -> BTreeSet<StationId> {
        self.stations.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StationId, &Station)> {
        self.stations.iter()
    }

    /// Ground-truth scores of the stations that have one.
    pub fn truth(&self) -> BTreeMap<StationId, f64> {
        self.stations
            .iter()
            .filter_map(|(id, s)| s.ground_truth.map(|g| (id.clone(), g)))
            .collect()
    }
}

impl std::borrow::Borrow<str> for StationId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Parses a `station_id,name,ground_truth_score` file.
///
/// Unlike trip records, a malformed station row is fatal: the universe is
/// small, hand-curated and every later stage depends on it.
pub fn parse_stations<R: Read>(input: R) -> Result<StationUniverse> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.byte_headers()?.clone();
    let header: Vec<&[u8]> = header.iter().map(trim_bytes).collect();
    if header != STATION_HEADER.iter().map(|h| h.as_bytes()).collect::<Vec<_>>() {
        return Err(Error::Format(format!(
            "station header must be `{}`",
            STATION_HEADER.join(",")
        )));
    }

    let mut universe = StationUniverse::new();
    let mut row = csv::StringRecord::new();
    loop {
        let line = rdr.position().line() + 1;
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => return Err(Error::Format(format!("line {line}: {e}"))),
        }
        let line = row.position().map_or(line, |p| p.line());
        if row.len() != 3 {
            return Err(Error::Format(format!(
                "line {line}: expected 3 fields, found {}",
                row.len()
            )));
        }
        let id = row[0].trim();
        if id.is_empty() {
            return Err(Error::Format(format!("line {line}: empty station_id")));
        }
        let score = row[2].trim();
        let ground_truth = if score.is_empty() {
            None
        } else {
            let v: f64 = score
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: bad score `{score}`")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Format(format!(
                    "line {line}: score must be a non-negative real, got `{score}`"
                )));
            }
            Some(v)
        };
        let station = Station {
            name: row[1].trim().to_owned(),
            ground_truth,
        };
        if !universe.insert(StationId::new(id), station) {
            return Err(Error::Format(format!("line {line}: duplicate station `{id}`")));
        }
    }
    Ok(universe)
}

pub fn write_stations<W: Write>(out: W, universe: &StationUniverse) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATION_HEADER)?;
    for (id, s) in universe.iter() {
        let score = s.ground_truth.map(|g| g.to_string()).unwrap_or_default();
        w.write_record([id.as_str(), s.name.as_str(), score.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn trim_bytes(b: &[u8]) -> &[u8] {
    let start = b.iter().position(|c| !c.is_ascii_whitespace()).unwrap_or(b.len());
    let end = b.iter().rposition(|c| !c.is_ascii_whitespace()).map_or(start, |e| e + 1);
    let b = &b[start..end];
    b.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(b)
}
