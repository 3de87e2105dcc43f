//! Multi-sensor event recognition.
//!
//! Tracklets become primitive evidence. Per time window and sensor, a scene
//! and sub-event knowledge base yields sensor-level event marginals. A global
//! association knowledge base links tracklets across sensors. The top-level
//! knowledge base reads both as soft evidence and scores complex events.
//! The same knowledge bases merged into one network give the monolithic
//! baseline.
//!
//! A corpus directory holds `scene.mln`, `subevents.mln`, `association.mln`,
//! `top.mln` and one `sensor_<ID>.mln` per sensor.

mod association;
mod primitives;
mod windows;
mod zones;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evidence::{clamp_probability, EvidenceSet, Truth};
use crate::fusion::{read_confusion_csv, read_homography, AssociationModels, FusionParams};
use crate::ground::{connected_components, ground, GroundNetwork};
use crate::infer::{exact_marginals, gibbs_marginals, InferenceParams, MAX_EXACT_VARS};
use crate::logic::{Expr, GroundAtom, KnowledgeBase, Weight};
use crate::parser::parse_kb;
use crate::tracklet::{read_tracklets, read_zones, Tracklet, Zone};

pub use association::{
    association_evidence, candidate_pairs, learn_association_weights, LabeledPair, CANDIDATE_PAIR, EQUAL_AGENT,
    EQUAL_AGENTS,
};
pub use primitives::{
    after_int_evidence, generate_primitive_predicates, loc_constant, motion_segments, parse_time_constant,
    time_constant, PrimitiveParams,
};
pub use windows::{assign_tracklets, plan_windows, WindowPlan};
pub use zones::{compute_zone_adjacency, share_boundary, zones_adjacent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    /// Window length in seconds.
    pub window_length: f64,
    pub overlap: f64,
    pub primitives: PrimitiveParams,
    pub inference: InferenceParams,
    /// Networks whose components all have at most this many variables are
    /// enumerated exactly; larger ones are sampled.
    pub exact_max_vars: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            window_length: 900.0,
            overlap: 300.0,
            primitives: PrimitiveParams::default(),
            inference: InferenceParams::default(),
            exact_max_vars: 12,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_file(path: &Path) -> Result<KnowledgeBase> {
    parse_kb(&read(path)?).map_err(|e| e.in_stage(path.display().to_string()))
}

/// The layered knowledge bases of an event corpus.
#[derive(Debug, Clone)]
pub struct EventCorpus {
    pub scene: KnowledgeBase,
    pub subevents: KnowledgeBase,
    /// Sensor-level event definitions by sensor id.
    pub sensors: BTreeMap<String, KnowledgeBase>,
    pub association: KnowledgeBase,
    pub top: KnowledgeBase,
}

impl EventCorpus {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut sensors = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().to_string();
            if let Some(id) = name.strip_prefix("sensor_").and_then(|n| n.strip_suffix(".mln")) {
                sensors.insert(id.to_string(), parse_file(&entry.path())?);
            }
        }
        Ok(EventCorpus {
            scene: parse_file(&dir.join("scene.mln"))?,
            subevents: parse_file(&dir.join("subevents.mln"))?,
            association: parse_file(&dir.join("association.mln"))?,
            top: parse_file(&dir.join("top.mln"))?,
            sensors,
        })
    }

    /// Scene, sub-event and sensor rules for one sensor.
    pub fn sensor_kb(&self, sensor: &str) -> Result<Option<KnowledgeBase>> {
        self.sensors
            .get(sensor)
            .map(|s| KnowledgeBase::merge(&[&self.scene, &self.subevents, s], &[]))
            .transpose()
    }

    /// Open predicates of the top level: the complex events.
    pub fn complex_events(&self) -> Vec<String> {
        open_predicates(&self.top)
    }

    /// Everything in one knowledge base. Predicates handed between levels
    /// become hidden, and a hard rule ties association output to its
    /// top-level name.
    pub fn monolithic_kb(&self) -> Result<KnowledgeBase> {
        let mut parts = vec![&self.scene, &self.subevents];
        parts.extend(self.sensors.values());
        parts.push(&self.association);
        parts.push(&self.top);
        let mut kb = KnowledgeBase::merge(&parts, &[EQUAL_AGENTS, EQUAL_AGENT])?;
        if kb.schema(EQUAL_AGENT).is_some() && kb.schema(EQUAL_AGENTS).is_some() {
            let bridge = Expr::iff(Expr::atom(EQUAL_AGENT, &["a", "b"]), Expr::atom(EQUAL_AGENTS, &["a", "b"]));
            kb.add_rule(Weight::Hard, bridge, format!("{EQUAL_AGENT}(a, b) <=> {EQUAL_AGENTS}(a, b)."))?;
        }
        Ok(kb)
    }
}

fn open_predicates(kb: &KnowledgeBase) -> Vec<String> {
    kb.schemas().iter().filter(|s| !s.closed_world).map(|s| s.name.clone()).collect()
}

/// Tracklets, zones and fusion models of one recording.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub tracklets: Vec<Tracklet>,
    pub zones: Vec<Zone>,
    pub models: AssociationModels,
    pub fusion: FusionParams,
    pub params: PipelineParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    tracklets: String,
    sidecar: Option<String>,
    zones: Option<String>,
    #[serde(default)]
    homographies: BTreeMap<String, String>,
    #[serde(default)]
    confusion: BTreeMap<String, String>,
    #[serde(default)]
    fusion: FusionParams,
    #[serde(default)]
    pipeline: PipelineParams,
}

impl Scenario {
    /// Read a scenario description (TOML). Relative file names resolve
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let f: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let sidecar = f.sidecar.as_ref().map(|s| read(&dir.join(s))).transpose()?;
        let tracklets = read_tracklets(&read(&dir.join(&f.tracklets))?, sidecar.as_deref())?;
        let zones = match &f.zones {
            Some(z) => read_zones(&read(&dir.join(z))?)?,
            None => Vec::new(),
        };
        let mut models = AssociationModels::default();
        for (sensor, file) in &f.homographies {
            models.homographies.insert(sensor.clone(), read_homography(&read(&dir.join(file))?)?);
        }
        for (sensor, file) in &f.confusion {
            models.confusion.insert(sensor.clone(), read_confusion_csv(&read(&dir.join(file))?)?);
        }
        Ok(Scenario {
            tracklets,
            zones,
            models,
            fusion: f.fusion,
            params: f.pipeline,
        })
    }

    fn timeline(&self) -> Option<(f64, f64)> {
        let s = self.tracklets.iter().map(|t| t.t_start).min_by(f64::total_cmp)?;
        let e = self.tracklets.iter().map(|t| t.t_end).max_by(f64::total_cmp)?;
        Some((s, e))
    }

    fn sensors(&self) -> BTreeSet<&str> {
        self.tracklets.iter().map(|t| t.sensor.as_str()).collect()
    }

    fn zones_for(&self, sensor: &str) -> Vec<Zone> {
        self.zones
            .iter()
            .filter(|z| z.sensor.is_empty() || z.sensor == sensor)
            .cloned()
            .collect()
    }
}

/// Marginals of one inference stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub stage: String,
    pub window: Option<usize>,
    pub sensor: Option<String>,
    pub method: &'static str,
    pub marginals: Vec<(GroundAtom, f64)>,
}

/// Where a top-level soft evidence value came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub query: GroundAtom,
    pub probability: f64,
    pub window: Option<usize>,
    pub sensor: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub plan: Option<WindowPlan>,
    pub stages: Vec<StageOutput>,
    /// Stages that failed and were left out, with the reason.
    pub skipped: Vec<String>,
    pub top_evidence: Vec<Provenance>,
    /// Marginal of every grounded complex-event atom.
    pub marginals: Vec<(GroundAtom, f64)>,
    /// Per complex-event predicate, the largest marginal of its groundings
    /// (0 when it has none).
    pub events: BTreeMap<String, f64>,
    pub elapsed_ms: f64,
}

fn pairs_json(m: &[(GroundAtom, f64)]) -> Vec<serde_json::Value> {
    m.iter().map(|(a, p)| json!({"atom": a.to_string(), "p": p})).collect()
}

impl PipelineResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "windows": self.plan.as_ref().map(|p| &p.windows),
            "stages": self.stages.iter().map(|s| json!({
                "stage": s.stage,
                "window": s.window,
                "sensor": s.sensor,
                "method": s.method,
                "marginals": pairs_json(&s.marginals),
            })).collect::<Vec<_>>(),
            "skipped": self.skipped,
            "top_evidence": self.top_evidence.iter().map(|p| json!({
                "query": p.query.to_string(),
                "p": p.probability,
                "window": p.window,
                "sensor": p.sensor,
            })).collect::<Vec<_>>(),
            "marginals": pairs_json(&self.marginals),
            "events": self.events,
            "elapsed_ms": self.elapsed_ms,
        })
    }
}

/// Keep the records of predicates the knowledge base declares, once each.
fn restrict(kb: &KnowledgeBase, ev: &EvidenceSet) -> Result<EvidenceSet> {
    ev.records()
        .iter()
        .filter(|r| kb.schema(&r.atom.predicate).is_some())
        .cloned()
        .collect::<EvidenceSet>()
        .normalized()
}

/// Atoms of the given predicates that occur in some ground clause.
fn constrained_atoms(net: &GroundNetwork, preds: &BTreeSet<&str>) -> Vec<usize> {
    let mut used = vec![false; net.atoms.len()];
    for c in &net.clauses {
        for l in &c.literals {
            used[l.atom] = true;
        }
    }
    (0..net.atoms.len())
        .filter(|&i| used[i] && preds.contains(net.atoms.atom(i).predicate.as_str()))
        .collect()
}

/// Marginals of every constrained atom of `preds`, exact when the network
/// is small enough and sampled otherwise.
pub fn infer_predicates(
    kb: &KnowledgeBase,
    evidence: &EvidenceSet,
    preds: &[String],
    params: &PipelineParams,
) -> Result<(Vec<(GroundAtom, f64)>, &'static str)> {
    let ev = restrict(kb, evidence)?;
    let net = ground(kb, &ev, &[])?;
    let preds: BTreeSet<&str> = preds.iter().map(String::as_str).collect();
    let q = constrained_atoms(&net, &preds);
    if q.is_empty() {
        return Ok((Vec::new(), "none"));
    }
    let limit = params.exact_max_vars.min(MAX_EXACT_VARS);
    let small = connected_components(&net).iter().all(|c| c.atoms.len() <= limit);
    let r = if small {
        exact_marginals(&net, &q)?
    } else {
        gibbs_marginals(&net, &q, &params.inference)?
    };
    let mut out: Vec<(GroundAtom, f64)> = r.atoms.into_iter().zip(r.probabilities).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((out, r.diagnostics.method))
}

/// Marginals of `entryExitZone` and `zoneBuildingEntExit` from the scene
/// rules alone.
pub fn infer_entry_exit_zones(
    scene: &KnowledgeBase,
    tracklets: &[Tracklet],
    zones: &[Zone],
    params: &PipelineParams,
) -> Result<Vec<(GroundAtom, f64)>> {
    let refs: Vec<&Tracklet> = tracklets.iter().collect();
    let mut ev = generate_primitive_predicates(&refs, zones, &params.primitives)?;
    let p = &params.primitives;
    ev.extend(&compute_zone_adjacency(zones, p.adjacency_distance, p.edge_tolerance));
    Ok(infer_predicates(scene, &ev, &open_predicates(scene), params)?.0)
}

fn window_evidence(tracklets: &[&Tracklet], zones: &[Zone], params: &PipelineParams) -> Result<EvidenceSet> {
    let mut ev = generate_primitive_predicates(tracklets, zones, &params.primitives)?;
    let p = &params.primitives;
    ev.extend(&compute_zone_adjacency(zones, p.adjacency_distance, p.edge_tolerance));
    Ok(ev)
}

/// Hard top-level evidence: sensor membership, track intervals and their order.
fn timeline_evidence(tracklets: &[Tracklet], params: &PrimitiveParams) -> EvidenceSet {
    let mut ev = EvidenceSet::new();
    let mut ints = BTreeSet::new();
    for t in tracklets {
        let int = time_constant(t.t_start, t.t_end, params.time_grid);
        ev.add(GroundAtom::new("inSensor", [t.id.as_str(), t.sensor.as_str()]), Truth::True);
        ev.add(GroundAtom::new("trackInterval", [t.id.clone(), int.clone()]), Truth::True);
        ints.insert(int);
    }
    ev.extend(&after_int_evidence(ints.iter().map(String::as_str)));
    ev
}

fn summarize(events: &[String], marginals: &[(GroundAtom, f64)]) -> BTreeMap<String, f64> {
    events
        .iter()
        .map(|e| {
            let m = marginals
                .iter()
                .filter(|(a, _)| &a.predicate == e)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max);
            (e.clone(), m)
        })
        .collect()
}

fn check_params(params: &PipelineParams) -> Result<()> {
    params.primitives.validate()?;
    if params.inference.chains == 0 || params.inference.samples == 0 {
        return Err(Error::invalid("inference needs at least one chain and one sample"));
    }
    Ok(())
}

/// Windowed, layered inference.
pub fn run_hierarchical(corpus: &EventCorpus, scenario: &Scenario) -> Result<PipelineResult> {
    let clock = Instant::now();
    let params = &scenario.params;
    check_params(params)?;
    let events = corpus.complex_events();
    let mut stages = Vec::new();
    let mut skipped = Vec::new();
    let Some((t0, t1)) = scenario.timeline() else {
        return Ok(PipelineResult {
            plan: None,
            stages,
            skipped,
            top_evidence: Vec::new(),
            marginals: Vec::new(),
            events: summarize(&events, &[]),
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
    };
    let plan = plan_windows(t0, t1, params.window_length, params.overlap)?;
    let assignment = assign_tracklets(&plan, &scenario.tracklets);

    let mut sensor_kbs = BTreeMap::new();
    for s in scenario.sensors() {
        match corpus.sensor_kb(s)? {
            Some(kb) => {
                sensor_kbs.insert(s.to_string(), kb);
            }
            None => log::warn!("no event rules for sensor {s}; its tracklets only enter association"),
        }
    }
    let mut jobs = Vec::new();
    for (w, members) in assignment.iter().enumerate() {
        for s in sensor_kbs.keys() {
            let ts: Vec<&Tracklet> = members
                .iter()
                .map(|&i| &scenario.tracklets[i])
                .filter(|t| &t.sensor == s)
                .collect();
            if !ts.is_empty() {
                jobs.push((w, s.clone(), ts));
            }
        }
    }
    let sensor_results: Vec<_> = jobs
        .par_iter()
        .map(|(w, s, ts)| {
            let kb = &sensor_kbs[s];
            let r = window_evidence(ts, &scenario.zones_for(s), params)
                .and_then(|ev| infer_predicates(kb, &ev, &open_predicates(kb), params));
            (*w, s.clone(), r)
        })
        .collect();

    // lower-level outputs the top level reads, merged over windows by maximum
    let mut merged: BTreeMap<GroundAtom, Provenance> = BTreeMap::new();
    for (w, s, r) in sensor_results {
        match r {
            Ok((marginals, method)) => {
                for (a, p) in &marginals {
                    if corpus.top.schema(&a.predicate).is_none() {
                        continue;
                    }
                    let better = merged.get(a).is_none_or(|m| *p > m.probability);
                    if better {
                        let prov = Provenance {
                            query: a.clone(),
                            probability: *p,
                            window: Some(w),
                            sensor: s.clone(),
                        };
                        merged.insert(a.clone(), prov);
                    }
                }
                stages.push(StageOutput {
                    stage: "sensor".into(),
                    window: Some(w),
                    sensor: Some(s),
                    method,
                    marginals,
                });
            }
            Err(e) => {
                log::warn!("window {w}, sensor {s} skipped: {e}");
                skipped.push(format!("window {w}, sensor {s}: {e}"));
            }
        }
    }

    let ev = association_evidence(&scenario.tracklets, &scenario.models, &scenario.fusion)
        .map_err(|e| e.in_stage("association"))?;
    let (assoc, method) = infer_predicates(&corpus.association, &ev, &[EQUAL_AGENT.to_string()], params)
        .map_err(|e| e.in_stage("association"))?;
    for (a, p) in &assoc {
        let q = GroundAtom::new(EQUAL_AGENTS, a.args.clone());
        merged.insert(
            q.clone(),
            Provenance {
                query: a.clone(),
                probability: *p,
                window: None,
                sensor: "association".into(),
            },
        );
    }
    stages.push(StageOutput {
        stage: "association".into(),
        window: None,
        sensor: None,
        method,
        marginals: assoc,
    });

    let mut ev = timeline_evidence(&scenario.tracklets, &params.primitives);
    for (atom, prov) in &merged {
        ev.add(atom.clone(), Truth::Soft(clamp_probability(prov.probability)));
    }
    let (marginals, method) = infer_predicates(&corpus.top, &ev, &events, params).map_err(|e| e.in_stage("top"))?;
    stages.push(StageOutput {
        stage: "top".into(),
        window: None,
        sensor: None,
        method,
        marginals: marginals.clone(),
    });
    Ok(PipelineResult {
        plan: Some(plan),
        stages,
        skipped,
        top_evidence: merged.into_values().collect(),
        events: summarize(&events, &marginals),
        marginals,
        elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

/// All levels in one network over the whole timeline.
pub fn run_monolithic(corpus: &EventCorpus, scenario: &Scenario) -> Result<PipelineResult> {
    let clock = Instant::now();
    let params = &scenario.params;
    check_params(params)?;
    let kb = corpus.monolithic_kb()?;
    let events = corpus.complex_events();
    let refs: Vec<&Tracklet> = scenario.tracklets.iter().collect();
    let mut ev = window_evidence(&refs, &scenario.zones, params)?;
    ev.extend(&association_evidence(&scenario.tracklets, &scenario.models, &scenario.fusion)?);
    ev.extend(&timeline_evidence(&scenario.tracklets, &params.primitives));
    let (marginals, method) = infer_predicates(&kb, &ev, &events, params)?;
    Ok(PipelineResult {
        plan: None,
        stages: vec![StageOutput {
            stage: "monolithic".into(),
            window: None,
            sensor: None,
            method,
            marginals: marginals.clone(),
        }],
        skipped: Vec::new(),
        top_evidence: Vec::new(),
        events: summarize(&events, &marginals),
        marginals,
        elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}
