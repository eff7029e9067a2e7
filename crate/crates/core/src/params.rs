//! Parameter populations: CSV ingestion, synthetic sampling, stability filtering.
//!
//! CSV schema: header `id,ks,kv,ka,tau,l,TL`, one set per row.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dde::ParamSet;
use crate::error::{Error, Result};
use crate::stability;

pub const HEADER: [&str; 7] = ["id", "ks", "kv", "ka", "tau", "l", "TL"];
const NAMES: [&str; 6] = ["ks", "kv", "ka", "tau", "l", "TL"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    File { path: PathBuf },
    Synthetic { seed: u64, spec: Box<SamplerSpec>, note: String },
    Derived { from: Box<Provenance>, filter: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    /// `(identifier, parameters)` in a fixed order.
    pub sets: Vec<(String, ParamSet)>,
    pub provenance: Provenance,
}

fn to_array(p: &ParamSet) -> [f64; 6] {
    [p.ks, p.kv, p.ka, p.tau, p.l, p.tl]
}

fn from_array(v: [f64; 6]) -> ParamSet {
    ParamSet {
        ks: v[0],
        kv: v[1],
        ka: v[2],
        tau: v[3],
        l: v[4],
        tl: v[5],
    }
}

impl Population {
    pub fn new(sets: Vec<(String, ParamSet)>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::new();
        for (id, p) in &sets {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid("id", format!("duplicate identifier {id:?}")));
            }
            p.validate().map_err(|e| Error::ParamSet {
                id: id.clone(),
                source: Box::new(e),
            })?;
        }
        Ok(Self { sets, provenance })
    }

    pub fn single(p: ParamSet) -> Result<Self> {
        Self::new(
            vec![("1".to_string(), p)],
            Provenance::File { path: PathBuf::from("<inline>") },
        )
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn params(&self) -> impl Iterator<Item = &ParamSet> {
        self.sets.iter().map(|(_, p)| p)
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self {
            sets: self.sets.iter().take(n).cloned().collect(),
            provenance: Provenance::Derived {
                from: Box::new(self.provenance.clone()),
                filter: format!("first {n}"),
            },
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER)?;
        for (id, p) in &self.sets {
            let mut rec = vec![id.clone()];
            // Display prints the shortest string that parses back to the same f64
            rec.extend(to_array(p).iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::commands::write_atomic(path, |f| self.write_csv(f))
    }

    /// Writes the provenance record next to `csv_path` as `<csv_path>.provenance.json`.
    pub fn save_provenance(&self, csv_path: &Path) -> Result<PathBuf> {
        let path = sidecar_path(csv_path);
        crate::commands::write_atomic(&path, |f| {
            serde_json::to_writer_pretty(f, &self.provenance)?;
            Ok(())
        })?;
        Ok(path)
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

/// Reads and validates a population file. Empty `id` cells fall back to the
/// 1-based row number.
pub fn load(path: &Path) -> Result<Population> {
    let file = std::fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers()?.clone();
    let schema = |row: usize, column: &str, reason: String| Error::Schema {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        reason,
    };
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(schema(
            0,
            "header",
            format!("expected {:?}, got {:?}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut sets = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != HEADER.len() {
            return Err(schema(row, "*", format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let id = if rec[0].is_empty() { row.to_string() } else { rec[0].to_string() };
        let mut v = [0.0; 6];
        for (j, name) in NAMES.iter().enumerate() {
            v[j] = rec[j + 1]
                .parse::<f64>()
                .map_err(|e| schema(row, name, format!("{:?}: {e}", &rec[j + 1])))?;
        }
        sets.push((id, from_array(v)));
    }
    if sets.is_empty() {
        return Err(Error::invalid("population", format!("{} has no parameter rows", path.display())));
    }
    Population::new(sets, Provenance::File { path: path.to_path_buf() })
}

/// Independent truncated normal per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub centers: ParamSet,
    /// Standard deviations in `ks, kv, ka, tau, l, TL` order.
    pub spreads: [f64; 6],
    /// `(lo, hi)` truncation bounds in the same order.
    pub bounds: [(f64, f64); 6],
    pub count: usize,
    pub seed: u64,
}

impl SamplerSpec {
    /// Centred on the reference set, spreads 20% of each magnitude, truncated
    /// at ±3 spreads and at the parameter invariants.
    pub fn default_with(count: usize, seed: u64) -> Self {
        Self::around(ParamSet::REFERENCE, 0.2, count, seed)
    }

    pub fn around(centers: ParamSet, relative_spread: f64, count: usize, seed: u64) -> Self {
        let c = to_array(&centers);
        let spreads = c.map(|x| relative_spread * x.abs());
        let mut bounds = [(0.0, 0.0); 6];
        for j in 0..6 {
            let (mut lo, hi) = (c[j] - 3.0 * spreads[j], c[j] + 3.0 * spreads[j]);
            match NAMES[j] {
                // strictly positive; the smallest positive f64 keeps the bound open
                "tau" | "TL" => lo = lo.max(f64::MIN_POSITIVE),
                "l" => lo = lo.max(0.0),
                _ => {}
            }
            bounds[j] = (lo, hi);
        }
        Self {
            centers,
            spreads,
            bounds,
            count,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("count", "must be >= 1"));
        }
        let c = to_array(&self.centers);
        for j in 0..6 {
            let (lo, hi) = self.bounds[j];
            let s = self.spreads[j];
            let name = NAMES[j];
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(name, format!("spread must be finite and >= 0, got {s}")));
            }
            if !(lo <= hi) || lo.is_nan() || hi.is_nan() {
                return Err(Error::invalid(name, format!("infeasible truncation [{lo}, {hi}]")));
            }
            if (name == "tau" || name == "TL") && lo <= 0.0 {
                return Err(Error::invalid(name, format!("truncation lower bound must be > 0, got {lo}")));
            }
            if name == "l" && lo < 0.0 {
                return Err(Error::invalid(name, format!("truncation lower bound must be >= 0, got {lo}")));
            }
            if s == 0.0 && !(lo <= c[j] && c[j] <= hi) {
                return Err(Error::invalid(name, format!("zero spread but centre {} outside [{lo}, {hi}]", c[j])));
            }
        }
        Ok(())
    }
}

const MAX_REJECTIONS: usize = 1_000_000;

fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64, name: &str) -> Result<f64> {
    if sd == 0.0 {
        return Ok(mean);
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + sd * z;
        if lo <= x && x <= hi {
            return Ok(x);
        }
    }
    Err(Error::invalid(
        name,
        format!("infeasible truncation: no draw of N({mean}, {sd}²) fell in [{lo}, {hi}]"),
    ))
}

/// Draws `spec.count` sets; identical output for identical specs.
pub fn synth_sample(spec: &SamplerSpec) -> Result<Population> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = to_array(&spec.centers);
    let mut sets = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let mut v = [0.0; 6];
        for j in 0..6 {
            let (lo, hi) = spec.bounds[j];
            v[j] = truncated_normal(&mut rng, c[j], spec.spreads[j], lo, hi, NAMES[j])?;
        }
        sets.push((format!("syn{:04}", i + 1), from_array(v)));
    }
    Population::new(
        sets,
        Provenance::Synthetic {
            seed: spec.seed,
            spec: Box::new(spec.clone()),
            note: "synthetic: independent truncated normals, not a calibrated population".to_string(),
        },
    )
}

/// Sets that are stable at θ (delay-free test at θ = 0), in input order,
/// optionally cut to the first `limit`. Any classification failure is returned.
pub fn filter_stable(pop: &Population, theta: f64, limit: Option<usize>) -> Result<Population> {
    if pop.is_empty() {
        return Err(Error::invalid("population", "is empty"));
    }
    let verdicts: Vec<Result<bool>> = pop
        .sets
        .par_iter()
        .map(|(id, p)| {
            stability::classify(p, theta)
                .map(|v| v.stable)
                .map_err(|e| Error::ParamSet {
                    id: id.clone(),
                    source: Box::new(e),
                })
        })
        .collect();
    let mut sets = Vec::new();
    for ((id, p), v) in pop.sets.iter().zip(verdicts) {
        if v? {
            sets.push((id.clone(), *p));
        }
    }
    if let Some(n) = limit {
        sets.truncate(n);
    }
    Ok(Population {
        sets,
        provenance: Provenance::Derived {
            from: Box::new(pop.provenance.clone()),
            filter: match limit {
                Some(n) => format!("stable at theta={theta}, first {n}"),
                None => format!("stable at theta={theta}"),
            },
        },
    })
}
