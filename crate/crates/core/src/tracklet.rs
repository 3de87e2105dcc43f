//! Tracklets and scene zones, with their file formats.
//!
//! Tracklet CSV rows are `sensorId,trackId,tStart,tEnd,t1,x1,y1,t2,x2,y2,...`.
//! A JSON sidecar keyed by track id adds size, category scores, appearance
//! and carry-bag score. Zone files are JSON arrays of polygons.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::PatchGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Appearance {
    Grid(PatchGrid),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracklet {
    pub id: String,
    pub sensor: String,
    pub t_start: f64,
    pub t_end: f64,
    pub trajectory: Vec<TrackPoint>,
    #[serde(default)]
    pub size: Option<[f64; 3]>,
    /// Probability per category name, e.g. `HUMAN`, `VEHICLE`.
    #[serde(default)]
    pub category_scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub appearance: Option<Appearance>,
    #[serde(default)]
    pub carry_bag: Option<f64>,
}

impl Tracklet {
    pub fn new(id: impl Into<String>, sensor: impl Into<String>, trajectory: Vec<TrackPoint>) -> Result<Self> {
        let (Some(first), Some(last)) = (trajectory.first(), trajectory.last()) else {
            return Err(Error::invalid("empty trajectory"));
        };
        let t = Tracklet {
            id: id.into(),
            sensor: sensor.into(),
            t_start: first.t,
            t_end: last.t,
            size: None,
            category_scores: BTreeMap::new(),
            appearance: None,
            carry_bag: None,
            trajectory,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_category(mut self, name: &str, p: f64) -> Self {
        self.category_scores.insert(name.to_string(), p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("tracklet {}: {m}", self.id)));
        if self.trajectory.is_empty() {
            return bad("empty trajectory");
        }
        if self.t_start > self.t_end {
            return bad("starts after it ends");
        }
        if self.trajectory.windows(2).any(|w| w[1].t < w[0].t) {
            return bad("trajectory is not time-ordered");
        }
        if !self.category_scores.is_empty() {
            let s: f64 = self.category_scores.values().sum();
            if (s - 1.0).abs() > 1e-6 {
                return bad("category scores do not sum to 1");
            }
        }
        Ok(())
    }

    /// Most probable category.
    pub fn category(&self) -> Option<&str> {
        self.category_scores
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k.as_str())
    }

    pub fn first(&self) -> &TrackPoint {
        &self.trajectory[0]
    }

    pub fn last(&self) -> &TrackPoint {
        self.trajectory.last().expect("non-empty trajectory")
    }
}

/// Attributes that do not fit the CSV row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(default)]
    pub size: Option<[f64; 3]>,
    #[serde(default)]
    pub category_scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub appearance: Option<Appearance>,
    #[serde(default)]
    pub carry_bag: Option<f64>,
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let s = rec.get(i).unwrap_or("").trim();
    s.parse()
        .map_err(|_| Error::invalid(format!("tracklet line {line}: `{s}` is not a number")))
}

/// Parse a tracklet CSV and merge its sidecar entries (keyed by track id).
pub fn read_tracklets(csv_text: &str, sidecar: Option<&str>) -> Result<Vec<Tracklet>> {
    let extra: BTreeMap<String, Sidecar> = match sidecar {
        Some(s) => serde_json::from_str(s).map_err(|e| Error::invalid(format!("sidecar: {e}")))?,
        None => BTreeMap::new(),
    };
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("tracklet csv: {e}")))?;
        let line = line + 1;
        if rec.len() < 7 || (rec.len() - 4) % 3 != 0 {
            return Err(Error::invalid(format!(
                "tracklet line {line}: expected sensor, track, start, end and (t, x, y) samples"
            )));
        }
        let sensor = rec[0].trim().to_string();
        let id = rec[1].trim().to_string();
        let trajectory = (4..rec.len())
            .step_by(3)
            .map(|i| {
                Ok(TrackPoint {
                    t: field(&rec, i, line)?,
                    x: field(&rec, i + 1, line)?,
                    y: field(&rec, i + 2, line)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Tracklet {
            t_start: field(&rec, 2, line)?,
            t_end: field(&rec, 3, line)?,
            size: None,
            category_scores: BTreeMap::new(),
            appearance: None,
            carry_bag: None,
            trajectory,
            sensor,
            id,
        };
        if let Some(s) = extra.get(&t.id) {
            t.size = s.size;
            t.category_scores = s.category_scores.clone();
            t.appearance = s.appearance.clone();
            t.carry_bag = s.carry_bag;
        }
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}

/// Write tracklets back as CSV rows plus sidecar JSON.
pub fn write_tracklets(tracklets: &[Tracklet]) -> (String, String) {
    let mut csv = String::new();
    let mut side = BTreeMap::new();
    for t in tracklets {
        csv.push_str(&format!("{},{},{},{}", t.sensor, t.id, t.t_start, t.t_end));
        for p in &t.trajectory {
            csv.push_str(&format!(",{},{},{}", p.t, p.x, p.y));
        }
        csv.push('\n');
        side.insert(
            t.id.clone(),
            Sidecar {
                size: t.size,
                category_scores: t.category_scores.clone(),
                appearance: t.appearance.clone(),
                carry_bag: t.carry_bag,
            },
        );
    }
    (csv, serde_json::to_string_pretty(&side).expect("serializable"))
}

/// Scene region with its geometric-context scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    /// Sensor the zone belongs to; empty for map zones.
    #[serde(default)]
    pub sensor: String,
    pub polygon: Vec<[f64; 2]>,
    /// Probabilities over `SKY`, `VERTICAL`, `HORIZONTAL`.
    #[serde(default)]
    pub geometric_scores: BTreeMap<String, f64>,
}

impl Zone {
    pub fn validate(&self) -> Result<()> {
        if self.polygon.len() < 3 {
            return Err(Error::invalid(format!("zone {}: polygon needs 3 vertices", self.id)));
        }
        if !self.geometric_scores.is_empty() {
            let s: f64 = self.geometric_scores.values().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("zone {}: geometric scores do not sum to 1", self.id)));
            }
        }
        Ok(())
    }

    /// Even-odd point-in-polygon test; points on an edge count as inside.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let poly = &self.polygon;
        let n = poly.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Area centroid.
    pub fn centroid(&self) -> [f64; 2] {
        let poly = &self.polygon;
        let n = poly.len();
        let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            let cross = p[0] * q[1] - q[0] * p[1];
            a2 += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
        }
        if a2.abs() < 1e-12 {
            let k = n as f64;
            return [poly.iter().map(|p| p[0]).sum::<f64>() / k, poly.iter().map(|p| p[1]).sum::<f64>() / k];
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if cross.abs() > 1e-9 {
        return false;
    }
    p[0] >= a[0].min(b[0]) - 1e-9
        && p[0] <= a[0].max(b[0]) + 1e-9
        && p[1] >= a[1].min(b[1]) - 1e-9
        && p[1] <= a[1].max(b[1]) + 1e-9
}

pub fn read_zones(json: &str) -> Result<Vec<Zone>> {
    let zones: Vec<Zone> = serde_json::from_str(json).map_err(|e| Error::invalid(format!("zones: {e}")))?;
    for z in &zones {
        z.validate()?;
    }
    Ok(zones)
}
