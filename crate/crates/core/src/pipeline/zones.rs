use crate::evidence::{EvidenceSet, Truth};
use crate::logic::GroundAtom;
use crate::tracklet::Zone;

type Pt = [f64; 2];

fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn line_distance(p: Pt, a: Pt, b: Pt) -> f64 {
    let d = sub(b, a);
    let len = dot(d, d).sqrt();
    if len == 0.0 {
        let e = sub(p, a);
        return dot(e, e).sqrt();
    }
    (d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0])).abs() / len
}

/// Length of the overlap of segment `rs` projected onto segment `pq`.
fn projected_overlap(p: Pt, q: Pt, r: Pt, s: Pt) -> f64 {
    let d = sub(q, p);
    let len = dot(d, d).sqrt();
    if len == 0.0 {
        return 0.0;
    }
    let u = [d[0] / len, d[1] / len];
    let (a, b) = (dot(sub(r, p), u), dot(sub(s, p), u));
    let (lo, hi) = (a.min(b), a.max(b));
    (hi.min(len) - lo.max(0.0)).max(0.0)
}

fn edges(z: &Zone) -> impl Iterator<Item = (Pt, Pt)> + '_ {
    let n = z.polygon.len();
    (0..n).map(move |i| (z.polygon[i], z.polygon[(i + 1) % n]))
}

/// Some pair of edges is collinear within `tol` and overlaps by more than `tol`.
pub fn share_boundary(a: &Zone, b: &Zone, tol: f64) -> bool {
    edges(a).any(|(p, q)| {
        edges(b).any(|(r, s)| {
            line_distance(r, p, q) <= tol
                && line_distance(s, p, q) <= tol
                && line_distance(p, r, s) <= tol
                && line_distance(q, r, s) <= tol
                && projected_overlap(p, q, r, s).min(projected_overlap(r, s, p, q)) > tol
        })
    })
}

pub fn zones_adjacent(a: &Zone, b: &Zone, max_centroid_distance: f64, tol: f64) -> bool {
    if a.id == b.id || !(a.sensor.is_empty() || b.sensor.is_empty() || a.sensor == b.sensor) {
        return false;
    }
    let (ca, cb) = (a.centroid(), b.centroid());
    let d = sub(ca, cb);
    dot(d, d).sqrt() <= max_centroid_distance && share_boundary(a, b, tol)
}

/// Symmetric `zoneAdjacentZone` evidence: centroids within the distance and
/// a shared stretch of boundary.
pub fn compute_zone_adjacency(zones: &[Zone], max_centroid_distance: f64, tol: f64) -> EvidenceSet {
    let mut ev = EvidenceSet::new();
    for a in zones {
        for b in zones {
            if zones_adjacent(a, b, max_centroid_distance, tol) {
                ev.add(GroundAtom::new("zoneAdjacentZone", [a.id.as_str(), b.id.as_str()]), Truth::True);
            }
        }
    }
    ev
}
