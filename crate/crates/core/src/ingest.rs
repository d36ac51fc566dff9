//! Smart-card OD record parsing and per-passenger daily partitioning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Weekday};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::station::{trim_bytes, StationId};

pub const RECORD_HEADER: [&str; 4] = ["card_id", "depart_time", "origin", "destination"];
pub const REJECT_HEADER: [&str; 2] = ["line_number", "reason"];

const ISO_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// One tap-in/tap-out trip of one card.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OdRecord {
    pub card_id: String,
    /// Local wall-clock departure time.
    pub depart: NaiveDateTime,
    pub origin: StationId,
    pub destination: StationId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    MissingField,
    ExtraField,
    BadEncoding,
    BadTimestamp,
    UnknownStation,
    SelfLoop,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MissingField => "missing-field",
            RejectReason::ExtraField => "extra-field",
            RejectReason::BadEncoding => "bad-encoding",
            RejectReason::BadTimestamp => "bad-timestamp",
            RejectReason::UnknownStation => "unknown-station",
            RejectReason::SelfLoop => "self-loop",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line in the input; the header is line 1.
    pub line: u64,
    pub reason: RejectReason,
}

/// Which calendar days survive ingest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DayFilter {
    #[default]
    All,
    Weekdays,
    Weekends,
}

impl DayFilter {
    pub fn keeps(self, date: NaiveDate) -> bool {
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        match self {
            DayFilter::All => true,
            DayFilter::Weekdays => !weekend,
            DayFilter::Weekends => weekend,
        }
    }
}

impl std::str::FromStr for DayFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(DayFilter::All),
            "weekday" | "weekdays" => Ok(DayFilter::Weekdays),
            "weekend" | "weekends" => Ok(DayFilter::Weekends),
            other => Err(Error::Config(format!("unknown day filter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestConfig {
    /// Declared station universe; `None` accepts any station id.
    pub stations: Option<BTreeSet<StationId>>,
    /// Offset added to epoch-second timestamps to obtain local time.
    pub utc_offset_secs: i32,
    pub day_filter: DayFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFormat {
    Iso,
    EpochSeconds,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<OdRecord>,
    pub rejects: Vec<RejectedRow>,
    /// Well-formed rows dropped by the day filter.
    pub filtered: usize,
    pub time_format: Option<TimeFormat>,
}

fn detect_format(field: &str) -> TimeFormat {
    let digits = field.strip_prefix('-').unwrap_or(field);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        TimeFormat::EpochSeconds
    } else {
        TimeFormat::Iso
    }
}

fn parse_time(field: &str, format: TimeFormat, offset: i32) -> Option<NaiveDateTime> {
    match format {
        TimeFormat::Iso => NaiveDateTime::parse_from_str(field, ISO_FORMAT).ok(),
        TimeFormat::EpochSeconds => {
            if detect_format(field) != TimeFormat::EpochSeconds {
                return None;
            }
            let secs: i64 = field.parse().ok()?;
            let local = secs.checked_add(i64::from(offset))?;
            DateTime::from_timestamp(local, 0).map(|t| t.naive_utc())
        }
    }
}

/// Parses a record stream. Malformed rows come back as [`RejectedRow`]s;
/// only an unreadable stream or a wrong header is fatal.
pub fn parse_records<R: Read>(input: R, config: &IngestConfig) -> Result<ParsedRecords> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.byte_headers()?.clone();
    let header: Vec<&[u8]> = header.iter().map(trim_bytes).collect();
    if header != RECORD_HEADER.iter().map(|h| h.as_bytes()).collect::<Vec<_>>() {
        return Err(Error::Format(format!(
            "record header must be `{}`",
            RECORD_HEADER.join(",")
        )));
    }

    let mut out = ParsedRecords::default();
    let mut row = csv::ByteRecord::new();
    loop {
        let next_line = rdr.position().line() + 1;
        match rdr.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => return Err(Error::Format(format!("line {next_line}: {e}"))),
        }
        let line = row.position().map_or(next_line, |p| p.line());
        let reject = |reason| RejectedRow { line, reason };

        if row.len() > 4 {
            out.rejects.push(reject(RejectReason::ExtraField));
            continue;
        }
        let mut fields = [""; 4];
        let mut encoding_ok = true;
        for (slot, raw) in fields.iter_mut().zip(row.iter()) {
            match std::str::from_utf8(raw) {
                Ok(s) => *slot = s.trim(),
                Err(_) => encoding_ok = false,
            }
        }
        if !encoding_ok {
            out.rejects.push(reject(RejectReason::BadEncoding));
            continue;
        }
        if row.len() < 4 || fields.iter().any(|f| f.is_empty()) {
            out.rejects.push(reject(RejectReason::MissingField));
            continue;
        }
        let [card, time, origin, destination] = fields;

        let format = *out.time_format.get_or_insert_with(|| detect_format(time));
        let Some(depart) = parse_time(time, format, config.utc_offset_secs) else {
            out.rejects.push(reject(RejectReason::BadTimestamp));
            continue;
        };
        if let Some(universe) = &config.stations {
            if !universe.contains(origin) || !universe.contains(destination) {
                out.rejects.push(reject(RejectReason::UnknownStation));
                continue;
            }
        }
        if origin == destination {
            out.rejects.push(reject(RejectReason::SelfLoop));
            continue;
        }
        if !config.day_filter.keeps(depart.date()) {
            out.filtered += 1;
            continue;
        }
        out.records.push(OdRecord {
            card_id: card.to_owned(),
            depart,
            origin: StationId::new(origin),
            destination: StationId::new(destination),
        });
    }
    Ok(out)
}

pub fn write_records<W: Write>(out: W, records: &[OdRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let t = r.depart.format(ISO_FORMAT).to_string();
        w.write_record([r.card_id.as_str(), &t, r.origin.as_str(), r.destination.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejects<W: Write>(out: W, rejects: &[RejectedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REJECT_HEADER)?;
    for r in rejects {
        w.write_record([r.line.to_string().as_str(), r.reason.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trip {
    pub origin: StationId,
    pub destination: StationId,
    pub depart: NaiveDateTime,
}

/// All trips of one card on one calendar day, in departure order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassengerDay {
    pub card_id: String,
    pub date: NaiveDate,
    pub trips: Vec<Trip>,
}

/// Groups records by (card, departure date). Trips crossing midnight stay on
/// the day they departed. Equal departure times keep their input order.
pub fn partition_by_day(records: &[OdRecord]) -> Vec<PassengerDay> {
    let mut groups: BTreeMap<(&str, NaiveDate), Vec<&OdRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.card_id.as_str(), r.depart.date()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((card, date), mut rs)| {
            rs.sort_by_key(|r| r.depart);
            PassengerDay {
                card_id: card.to_owned(),
                date,
                trips: rs
                    .into_iter()
                    .map(|r| Trip {
                        origin: r.origin.clone(),
                        destination: r.destination.clone(),
                        depart: r.depart,
                    })
                    .collect(),
            }
        })
        .collect()
}
