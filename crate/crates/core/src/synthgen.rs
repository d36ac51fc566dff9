//! Synthetic smart-card corpora with planted station importance.
//!
//! Each passenger-day draws a home station, a motif template and the
//! template's destinations. Home stations follow `home_weight`;
//! destinations follow the planted importance, without replacement and
//! never the home itself.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::OdRecord;
use crate::station::{Station, StationId, StationUniverse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Template {
    /// home → d1
    SingleTrip,
    /// home → d1 → home
    ReturnPair,
    /// home → d1 → d2 → home
    Chain3,
    /// home → d1 → d2 → d3 → home
    Chain4,
    /// home → d1 → home → d2 → home
    Star3,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::SingleTrip,
        Template::ReturnPair,
        Template::Chain3,
        Template::Chain4,
        Template::Star3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::SingleTrip => "single-trip",
            Template::ReturnPair => "return-pair",
            Template::Chain3 => "chain-3",
            Template::Chain4 => "chain-4",
            Template::Star3 => "star-3",
        }
    }

    /// Distinct stations visited, home included.
    pub fn size(self) -> usize {
        self.destinations() + 1
    }

    pub fn destinations(self) -> usize {
        match self {
            Template::SingleTrip | Template::ReturnPair => 1,
            Template::Chain3 | Template::Star3 => 2,
            Template::Chain4 => 3,
        }
    }

    /// Trip sequence over slot indices: 0 is home, 1.. are destinations.
    pub fn legs(self) -> &'static [(usize, usize)] {
        match self {
            Template::SingleTrip => &[(0, 1)],
            Template::ReturnPair => &[(0, 1), (1, 0)],
            Template::Chain3 => &[(0, 1), (1, 2), (2, 0)],
            Template::Chain4 => &[(0, 1), (1, 2), (2, 3), (3, 0)],
            Template::Star3 => &[(0, 1), (1, 0), (0, 2), (2, 0)],
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown motif template `{s}`")))
    }
}

/// Fully resolved generator input.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub station_count: usize,
    pub passenger_count: usize,
    pub days: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Planted importance per station index.
    pub importance: Vec<f64>,
    pub home_weight: Vec<f64>,
    pub template_mix: BTreeMap<Template, f64>,
}

pub fn station_id(k: usize) -> StationId {
    StationId::new(format!("S{k:03}"))
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.passenger_count == 0 || self.days == 0 {
            return bad("passenger_count and days must be positive".into());
        }
        if self.importance.len() != self.station_count || self.home_weight.len() != self.station_count {
            return bad("importance and home_weight need one entry per station".into());
        }
        if self
            .importance
            .iter()
            .chain(&self.home_weight)
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return bad("station weights must be positive and finite".into());
        }
        if self.template_mix.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("template probabilities must be non-negative".into());
        }
        let total: f64 = self.template_mix.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("template probabilities sum to {total}, not 1"));
        }
        let largest = self
            .template_mix
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(t, _)| t.size())
            .max()
            .unwrap_or(0);
        if self.station_count < largest + 1 {
            return bad(format!(
                "{} stations cannot host a {largest}-station template (need at least {})",
                self.station_count,
                largest + 1
            ));
        }
        Ok(())
    }

    pub fn truth(&self) -> StationUniverse {
        let mut u = StationUniverse::new();
        for (k, &imp) in self.importance.iter().enumerate() {
            u.insert(
                station_id(k),
                Station {
                    name: format!("station {k}"),
                    ground_truth: Some(imp),
                },
            );
        }
        u
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Sorted by (card, departure time).
    pub records: Vec<OdRecord>,
    pub truth: StationUniverse,
}

/// Draws `count` distinct indices with probability proportional to
/// `weights`, skipping `exclude`.
fn sample_without_replacement<R: Rng>(rng: &mut R, weights: &[f64], exclude: usize, count: usize) -> Vec<usize> {
    let mut w = weights.to_vec();
    w[exclude] = 0.0;
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = w.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut choice = None;
        for (k, &wk) in w.iter().enumerate() {
            if wk <= 0.0 {
                continue;
            }
            choice = Some(k);
            if target < wk {
                break;
            }
            target -= wk;
        }
        let k = choice.expect("positive weight remains");
        picked.push(k);
        w[k] = 0.0;
    }
    picked
}

/// Generates the corpus. Passengers draw from independent ChaCha streams of
/// the same seed, so output does not depend on thread count.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let home = WeightedIndex::new(&cfg.home_weight).map_err(|e| Error::Config(e.to_string()))?;
    let (templates, probs): (Vec<Template>, Vec<f64>) = cfg
        .template_mix
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(&t, &p)| (t, p))
        .unzip();
    let pick_template = WeightedIndex::new(&probs).map_err(|e| Error::Config(e.to_string()))?;
    let stations: Vec<StationId> = (0..cfg.station_count).map(station_id).collect();

    let per_passenger: Vec<Vec<OdRecord>> = (0..cfg.passenger_count)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(p as u64 + 1);
            let card = format!("card{p:06}");
            let mut out = Vec::new();
            for d in 0..cfg.days {
                let date = cfg.start_date + Duration::days(d as i64);
                let h = home.sample(&mut rng);
                let t = templates[pick_template.sample(&mut rng)];
                let mut slots = vec![h];
                slots.extend(sample_without_replacement(&mut rng, &cfg.importance, h, t.destinations()));
                let legs = t.legs();
                // Evenly spaced between 06:00 and 22:00.
                let step = 16 * 3600 / legs.len() as i64;
                for (k, &(a, b)) in legs.iter().enumerate() {
                    let secs = 6 * 3600 + k as i64 * step;
                    out.push(OdRecord {
                        card_id: card.clone(),
                        depart: date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::seconds(secs),
                        origin: stations[slots[a]].clone(),
                        destination: stations[slots[b]].clone(),
                    });
                }
            }
            out
        })
        .collect();

    Ok(SynthCorpus {
        records: per_passenger.into_iter().flatten().collect(),
        truth: cfg.truth(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImportanceModel {
    Uniform,
    LogNormal { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomeModel {
    Uniform,
    /// Home weight is the reciprocal of importance.
    InverseImportance,
}

/// Generator settings as written in a `key = value` file, before the
/// station weights are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub station_count: usize,
    pub passenger_count: usize,
    pub days: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub importance: ImportanceModel,
    pub home: HomeModel,
    pub template_mix: BTreeMap<Template, f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            station_count: 50,
            passenger_count: 1000,
            days: 5,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2016, 9, 5).expect("valid date"),
            importance: ImportanceModel::LogNormal { sigma: 1.0 },
            home: HomeModel::InverseImportance,
            template_mix: [
                (Template::SingleTrip, 0.1),
                (Template::ReturnPair, 0.5),
                (Template::Chain3, 0.15),
                (Template::Chain4, 0.05),
                (Template::Star3, 0.2),
            ]
            .into(),
        }
    }
}

impl SynthSpec {
    /// Applies one `key = value` setting. `mix.<template>` keys replace the
    /// default mix as a whole on first use.
    pub fn set(&mut self, key: &str, value: &str, mix_started: &mut bool) -> Result<()> {
        let cfg_err = |what: &str| Error::Config(format!("bad value `{value}` for `{key}`: {what}"));
        let int = || value.parse::<usize>().map_err(|_| cfg_err("expected an integer"));
        match key {
            "station_count" => self.station_count = int()?,
            "passenger_count" => self.passenger_count = int()?,
            "days" => self.days = int()?,
            "seed" => self.seed = value.parse().map_err(|_| cfg_err("expected a 64-bit integer"))?,
            "start_date" => {
                self.start_date = NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| cfg_err("expected YYYY-MM-DD"))?
            }
            "importance" => {
                self.importance = match value {
                    "uniform" => ImportanceModel::Uniform,
                    "lognormal" => ImportanceModel::LogNormal { sigma: 1.0 },
                    _ => return Err(cfg_err("expected uniform or lognormal")),
                }
            }
            "importance_sigma" => {
                let sigma: f64 = value.parse().map_err(|_| cfg_err("expected a number"))?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(cfg_err("sigma must be positive"));
                }
                self.importance = ImportanceModel::LogNormal { sigma };
            }
            "home_weight" => {
                self.home = match value {
                    "uniform" => HomeModel::Uniform,
                    "inverse-importance" => HomeModel::InverseImportance,
                    _ => return Err(cfg_err("expected uniform or inverse-importance")),
                }
            }
            k if k.starts_with("mix.") => {
                let t: Template = k["mix.".len()..].parse()?;
                let p: f64 = value.parse().map_err(|_| cfg_err("expected a probability"))?;
                if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                    return Err(cfg_err("probability must lie in [0,1]"));
                }
                if !*mix_started {
                    self.template_mix.clear();
                    *mix_started = true;
                }
                self.template_mix.insert(t, p);
            }
            other => return Err(Error::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Draws station weights (seeded from `seed`, independent of the
    /// passenger streams) and checks the result.
    pub fn resolve(&self) -> Result<SynthConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let importance: Vec<f64> = match self.importance {
            ImportanceModel::Uniform => vec![1.0; self.station_count],
            ImportanceModel::LogNormal { sigma } => {
                let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
                (0..self.station_count).map(|_| dist.sample(&mut rng)).collect()
            }
        };
        let home_weight = match self.home {
            HomeModel::Uniform => vec![1.0; self.station_count],
            HomeModel::InverseImportance => importance.iter().map(|w| 1.0 / w).collect(),
        };
        let cfg = SynthConfig {
            station_count: self.station_count,
            passenger_count: self.passenger_count,
            days: self.days,
            seed: self.seed,
            start_date: self.start_date,
            importance,
            home_weight,
            template_mix: self.template_mix.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `key = value` lines (blank lines and `#` comments ignored) on top
/// of the defaults. Repeated keys are an error.
pub fn parse_synth_spec(text: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec::default();
    let mut mix_started = false;
    let mut seen = std::collections::BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim(), value.trim().trim_matches('"'));
        if !seen.insert(key.to_owned()) {
            return Err(Error::Config(format!("line {}: `{key}` set twice", n + 1)));
        }
        spec.set(key, value, &mut mix_started)
            .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::partition_by_day;
    use crate::motif::{build_motif, canonical_form, canonical_edges, CanonicalMotif};

    fn small(mix: &[(Template, f64)]) -> SynthConfig {
        SynthSpec {
            station_count: 8,
            passenger_count: 50,
            days: 3,
            seed: 11,
            template_mix: mix.iter().copied().collect(),
            ..Default::default()
        }
        .resolve()
        .unwrap()
    }

    #[test]
    fn return_pair_only() {
        let corpus = generate(&small(&[(Template::ReturnPair, 1.0)])).unwrap();
        let days = partition_by_day(&corpus.records);
        assert_eq!(days.len(), 150);
        for d in days {
            assert_eq!(d.trips.len(), 2);
            assert_eq!(d.trips[0].destination, d.trips[1].origin);
            assert_eq!(d.trips[0].origin, d.trips[1].destination);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = small(&[(Template::Chain3, 0.5), (Template::Star3, 0.5)]);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(generate(&other).unwrap().records, a.records);
    }

    #[test]
    fn generated_days_conform_to_templates() {
        for t in Template::ALL {
            let corpus = generate(&small(&[(t, 1.0)])).unwrap();
            let n = t.size();
            let slots: Vec<(u8, u8)> = t.legs().iter().map(|&(a, b)| (a as u8, b as u8)).collect();
            let expected = CanonicalMotif::Exact {
                node_count: n as u8,
                edges: canonical_edges(n, &slots),
            };
            for d in partition_by_day(&corpus.records) {
                assert_eq!(canonical_form(&build_motif(&d), 8), expected, "{t}");
                assert!(d.trips.windows(2).all(|w| w[0].depart < w[1].depart));
            }
        }
    }

    #[test]
    fn too_few_stations() {
        let mut spec = SynthSpec {
            station_count: 4,
            template_mix: [(Template::Chain4, 1.0)].into(),
            ..Default::default()
        };
        assert!(matches!(spec.resolve(), Err(Error::Config(_))));
        spec.station_count = 5;
        assert!(spec.resolve().is_ok());
    }

    #[test]
    fn mix_must_sum_to_one() {
        let spec = SynthSpec {
            template_mix: [(Template::ReturnPair, 0.5), (Template::Chain3, 0.4)].into(),
            ..Default::default()
        };
        assert!(spec.resolve().is_err());
    }

    #[test]
    fn spec_file_parsing() {
        let text = "# corpus\nstation_count = 12\npassenger_count=30\nseed = 7\n\
                    importance = uniform\nhome_weight = uniform\n\
                    mix.return-pair = 0.75\nmix.single-trip = 0.25\n";
        let spec = parse_synth_spec(text).unwrap();
        assert_eq!(spec.station_count, 12);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.importance, ImportanceModel::Uniform);
        assert_eq!(spec.template_mix.len(), 2);
        assert!(spec.resolve().is_ok());

        for bad in ["station_count", "nope = 1", "days = x", "seed = 1\nseed = 2", "mix.loop = 1"] {
            assert!(parse_synth_spec(bad).is_err(), "{bad}");
        }
    }
}
