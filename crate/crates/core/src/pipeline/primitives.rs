use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{clamp_probability, EvidenceSet, Truth};
use crate::logic::{is_constant_name, GroundAtom};
use crate::tracklet::{TrackPoint, Tracklet, Zone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrimitiveParams {
    /// Cell size of location constants, in trajectory units.
    pub loc_grid: f64,
    /// Quantum of interval constants, in seconds.
    pub time_grid: f64,
    /// Speed above which a step counts as movement, units per second.
    pub eps_move: f64,
    /// Distance within which a human endpoint is near a parked vehicle.
    pub near_distance: f64,
    /// Largest centroid distance of adjacent zones.
    pub adjacency_distance: f64,
    /// Tolerance of the shared-boundary test.
    pub edge_tolerance: f64,
}

impl Default for PrimitiveParams {
    fn default() -> Self {
        PrimitiveParams {
            loc_grid: 1.0,
            time_grid: 1.0,
            eps_move: 0.5,
            near_distance: 10.0,
            adjacency_distance: 100.0,
            edge_tolerance: 1.0,
        }
    }
}

impl PrimitiveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("loc_grid", self.loc_grid),
            ("time_grid", self.time_grid),
            ("near_distance", self.near_distance),
            ("adjacency_distance", self.adjacency_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.eps_move >= 0.0) || !(self.edge_tolerance >= 0.0) {
            return Err(Error::invalid("eps_move and edge_tolerance must be non-negative"));
        }
        Ok(())
    }
}

fn quantum(v: f64, grid: f64) -> i64 {
    (v / grid).floor() as i64
}

fn encode(n: i64) -> String {
    if n < 0 {
        format!("m{}", -n)
    } else {
        n.to_string()
    }
}

fn decode(s: &str) -> Option<i64> {
    match s.strip_prefix('m') {
        Some(rest) => rest.parse::<i64>().ok().map(|n| -n),
        None => s.parse().ok(),
    }
}

/// `Loc_X_Y` for the grid cell holding the point; negatives get an `m` prefix.
pub fn loc_constant(x: f64, y: f64, grid: f64) -> String {
    format!("Loc_{}_{}", encode(quantum(x, grid)), encode(quantum(y, grid)))
}

/// `TimeInt_S_E` with both ends quantized to the time grid.
pub fn time_constant(start: f64, end: f64, grid: f64) -> String {
    format!("TimeInt_{}_{}", encode(quantum(start, grid)), encode(quantum(end, grid)))
}

/// Quantized `(start, end)` of a `TimeInt_S_E` constant.
pub fn parse_time_constant(c: &str) -> Option<(i64, i64)> {
    let rest = c.strip_prefix("TimeInt_")?;
    let (s, e) = rest.split_once('_')?;
    Some((decode(s)?, decode(e)?))
}

/// `afterInt(I1, I2)` for every ordered pair of distinct interval constants
/// with `end(I1) <= start(I2)`. Constants that are not intervals are ignored.
pub fn after_int_evidence<'a>(constants: impl IntoIterator<Item = &'a str>) -> EvidenceSet {
    let mut ints: Vec<(&str, (i64, i64))> = constants
        .into_iter()
        .filter_map(|c| parse_time_constant(c).map(|t| (c, t)))
        .collect();
    ints.sort();
    ints.dedup();
    let mut ev = EvidenceSet::new();
    for (a, (_, ea)) in &ints {
        for (b, (sb, _)) in &ints {
            if a != b && ea <= sb {
                ev.add(GroundAtom::new("afterInt", [*a, *b]), Truth::True);
            }
        }
    }
    ev
}

/// Maximal runs of moving or stationary steps, as `(moving, first, last)`
/// sample indices. Consecutive runs share their boundary sample. A single
/// sample is one stationary run.
pub fn motion_segments(tr: &[TrackPoint], eps_move: f64) -> Vec<(bool, usize, usize)> {
    let mut out: Vec<(bool, usize, usize)> = Vec::new();
    if tr.len() < 2 {
        return vec![(false, 0, 0)];
    }
    for i in 0..tr.len() - 1 {
        let (a, b) = (tr[i], tr[i + 1]);
        let d = (b.x - a.x).hypot(b.y - a.y);
        let moving = d > eps_move * (b.t - a.t);
        match out.last_mut() {
            Some(s) if s.0 == moving => s.2 = i + 1,
            _ => out.push((moving, i, i + 1)),
        }
    }
    out
}

/// Position and motion state of a tracklet at time `t`, if it is tracked then.
/// At a boundary between runs the stationary state wins.
fn state_at(tr: &Tracklet, t: f64, eps_move: f64) -> Option<([f64; 2], bool)> {
    let p = &tr.trajectory;
    if t < p[0].t || t > p[p.len() - 1].t {
        return None;
    }
    let segs = motion_segments(p, eps_move);
    let stationary = segs.iter().any(|&(m, i, j)| !m && p[i].t <= t && t <= p[j].t);
    let k = p.partition_point(|q| q.t <= t).saturating_sub(1);
    let pos = if k + 1 < p.len() && p[k + 1].t > p[k].t {
        let f = (t - p[k].t) / (p[k + 1].t - p[k].t);
        [p[k].x + f * (p[k + 1].x - p[k].x), p[k].y + f * (p[k + 1].y - p[k].y)]
    } else {
        [p[k].x, p[k].y]
    };
    Some((pos, stationary))
}

fn check_name(kind: &str, s: &str) -> Result<()> {
    if is_constant_name(s) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{kind} `{s}` is not a valid constant name")))
    }
}

fn zone_applies(z: &Zone, sensor: &str) -> bool {
    z.sensor.is_empty() || z.sensor == sensor
}

fn add(ev: &mut EvidenceSet, pred: &str, args: &[&str], truth: Truth) {
    ev.add(GroundAtom::new(pred, args.iter().copied()), truth);
}

/// Primitive evidence for a set of tracklets and scene zones. Deterministic
/// in the order of its inputs.
pub fn generate_primitive_predicates(
    tracklets: &[&Tracklet],
    zones: &[Zone],
    params: &PrimitiveParams,
) -> Result<EvidenceSet> {
    params.validate()?;
    let loc = |p: &TrackPoint| loc_constant(p.x, p.y, params.loc_grid);
    let time = |a: f64, b: f64| time_constant(a, b, params.time_grid);
    let mut ev = EvidenceSet::new();
    for z in zones {
        check_name("zone id", &z.id)?;
        for (c, p) in &z.geometric_scores {
            check_name("zone class", c)?;
            add(&mut ev, "zoneClass", &[&z.id, c], Truth::Soft(clamp_probability(*p)));
        }
    }
    for t in tracklets {
        check_name("track id", &t.id)?;
        check_name("sensor id", &t.sensor)?;
        t.validate()?;
        let id = t.id.as_str();
        add(&mut ev, "inSensor", &[id, &t.sensor], Truth::True);
        add(&mut ev, "trackInterval", &[id, &time(t.t_start, t.t_end)], Truth::True);
        let (first, last) = (t.first(), t.last());
        add(&mut ev, "appear", &[id, &loc(first), &time(first.t, first.t)], Truth::True);
        add(&mut ev, "disappear", &[id, &loc(last), &time(last.t, last.t)], Truth::True);
        let segs = motion_segments(&t.trajectory, params.eps_move);
        let mut prev: Option<String> = None;
        for &(moving, i, j) in &segs {
            let (a, b) = (&t.trajectory[i], &t.trajectory[j]);
            let int = time(a.t, b.t);
            if moving {
                add(&mut ev, "move", &[id, &loc(a), &loc(b), &int], Truth::True);
            } else {
                add(&mut ev, "stationary", &[id, &loc(a), &int], Truth::True);
            }
            if let Some(p) = prev.filter(|p| *p != int) {
                add(&mut ev, "meets", &[&p, &int], Truth::True);
            }
            prev = Some(int);
        }
        let mut inside = false;
        for z in zones.iter().filter(|z| zone_applies(z, &t.sensor)) {
            if z.contains([first.x, first.y]) {
                add(&mut ev, "appearI", &[id, &z.id], Truth::True);
                inside = true;
            }
            if z.contains([last.x, last.y]) {
                add(&mut ev, "disappearI", &[id, &z.id], Truth::True);
                inside = true;
            }
        }
        if !inside && !zones.is_empty() {
            log::debug!("tracklet {id} starts and ends outside every zone");
        }
        for (c, p) in &t.category_scores {
            check_name("category", c)?;
            add(&mut ev, "class", &[id, c], Truth::Soft(clamp_probability(*p)));
        }
        if let Some(p) = t.carry_bag {
            add(&mut ev, "carryBag", &[id], Truth::Soft(clamp_probability(p)));
        }
    }
    // endpoints of one track next to another track that is parked at that moment
    for h in tracklets {
        for v in tracklets {
            if h.id == v.id || h.sensor != v.sensor {
                continue;
            }
            for (pred, p) in [("appearNear", h.first()), ("disappearNear", h.last())] {
                if let Some((pos, true)) = state_at(v, p.t, params.eps_move) {
                    if (pos[0] - p.x).hypot(pos[1] - p.y) <= params.near_distance {
                        add(&mut ev, pred, &[&h.id, &v.id], Truth::True);
                    }
                }
            }
        }
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, x: f64, y: f64) -> TrackPoint {
        TrackPoint { t, x, y }
    }

    fn has(ev: &EvidenceSet, pred: &str, args: &[&str]) -> bool {
        ev.get(&GroundAtom::new(pred, args.iter().copied())).is_some()
    }

    #[test]
    fn constants() {
        assert_eq!(loc_constant(2.7, -0.5, 1.0), "Loc_2_m1");
        assert_eq!(loc_constant(12.0, 7.9, 5.0), "Loc_2_1");
        assert_eq!(time_constant(3.2, 10.0, 1.0), "TimeInt_3_10");
        assert_eq!(parse_time_constant("TimeInt_m3_10"), Some((-3, 10)));
        assert_eq!(parse_time_constant("Loc_1_2"), None);
        assert!(is_constant_name(&loc_constant(-1.0, -1.0, 1.0)));
    }

    #[test]
    fn move_then_stop() {
        // moves 1 unit per second for 3 s, then stands still for 2 s
        let tr = vec![pt(0.0, 0.0, 0.0), pt(1.0, 1.0, 0.0), pt(2.0, 2.0, 0.0), pt(3.0, 3.0, 0.0), pt(4.0, 3.0, 0.0), pt(5.0, 3.1, 0.0)];
        assert_eq!(motion_segments(&tr, 0.5), vec![(true, 0, 3), (false, 3, 5)]);
        let t = Tracklet::new("V1", "C1", tr).unwrap();
        let ev = generate_primitive_predicates(&[&t], &[], &PrimitiveParams::default()).unwrap();
        assert!(has(&ev, "move", &["V1", "Loc_0_0", "Loc_3_0", "TimeInt_0_3"]));
        assert!(has(&ev, "stationary", &["V1", "Loc_3_0", "TimeInt_3_5"]));
        assert!(has(&ev, "meets", &["TimeInt_0_3", "TimeInt_3_5"]));
        assert!(has(&ev, "trackInterval", &["V1", "TimeInt_0_5"]));
        assert!(has(&ev, "appear", &["V1", "Loc_0_0", "TimeInt_0_0"]));
    }

    #[test]
    fn single_point_is_stationary() {
        let t = Tracklet::new("H1", "C1", vec![pt(4.0, 1.0, 1.0)]).unwrap();
        let ev = generate_primitive_predicates(&[&t], &[], &PrimitiveParams::default()).unwrap();
        assert!(has(&ev, "stationary", &["H1", "Loc_1_1", "TimeInt_4_4"]));
        assert!(!ev.records().iter().any(|r| r.atom.predicate == "move"));
    }

    #[test]
    fn zones_and_nearness() {
        let zone = Zone {
            id: "Z1".into(),
            sensor: "C1".into(),
            polygon: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
            geometric_scores: [("VERTICAL".to_string(), 1.0)].into(),
        };
        let v = Tracklet::new("V1", "C1", vec![pt(0.0, 20.0, 5.0), pt(10.0, 20.0, 5.0)]).unwrap();
        let h = Tracklet::new("H1", "C1", vec![pt(2.0, 22.0, 5.0), pt(5.0, 5.0, 5.0)])
            .unwrap()
            .with_category("HUMAN", 1.0);
        let ev = generate_primitive_predicates(&[&v, &h], &[zone], &PrimitiveParams::default()).unwrap();
        assert!(has(&ev, "disappearI", &["H1", "Z1"]));
        assert!(!has(&ev, "appearI", &["H1", "Z1"]));
        assert!(has(&ev, "appearNear", &["H1", "V1"]));
        assert!(!has(&ev, "disappearNear", &["H1", "V1"]));
        assert_eq!(ev.get(&GroundAtom::new("class", ["H1", "HUMAN"])), Some(Truth::Soft(1.0 - 1e-6)));
        assert_eq!(ev.get(&GroundAtom::new("zoneClass", ["Z1", "VERTICAL"])), Some(Truth::Soft(1.0 - 1e-6)));
    }

    #[test]
    fn generation_is_idempotent() {
        let t = Tracklet::new("V1", "C1", vec![pt(0.0, 0.0, 0.0), pt(1.0, 4.0, 0.0)]).unwrap();
        let p = PrimitiveParams::default();
        assert_eq!(
            generate_primitive_predicates(&[&t], &[], &p).unwrap(),
            generate_primitive_predicates(&[&t], &[], &p).unwrap()
        );
        let bad = Tracklet::new("v1", "C1", vec![pt(0.0, 0.0, 0.0)]).unwrap();
        assert!(generate_primitive_predicates(&[&bad], &[], &p).is_err());
    }

    #[test]
    fn after_int_orders_intervals() {
        let ev = after_int_evidence(["TimeInt_0_10", "TimeInt_10_20", "TimeInt_5_30", "Loc_1_1"]);
        let pairs: Vec<_> = ev.records().iter().map(|r| (r.atom.args[0].as_str(), r.atom.args[1].as_str())).collect();
        assert_eq!(pairs, vec![("TimeInt_0_10", "TimeInt_10_20")]);
    }
}
