//! Physical connectivity: ground stations, elevation-gated ground-satellite
//! links (GSLs), and the four-neighbor "+Grid" inter-satellite topology.

use crate::constants::EARTH_RADIUS_KM;
use crate::constellation::{Constellation, Propagator, SatId, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

pub type GsId = usize;

/// Default minimum elevation for a usable ground-satellite link, degrees.
pub const DEFAULT_ELEVATION_DEG: f64 = 25.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: GsId,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Aggregate downlink capacity, megabits per second.
    pub capacity_mbps: f64,
    pub antenna_count: u32,
}

impl GroundStation {
    /// Earth-fixed position on the spherical surface, km.
    pub fn ecef(&self) -> Vec3 {
        let lat = self.latitude_deg.to_radians();
        let lon = self.longitude_deg.to_radians();
        Vec3::new(
            EARTH_RADIUS_KM * lat.cos() * lon.cos(),
            EARTH_RADIUS_KM * lat.cos() * lon.sin(),
            EARTH_RADIUS_KM * lat.sin(),
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("line {line}: expected 5 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: unparsable {field}: {text:?}")]
    BadField {
        line: usize,
        field: &'static str,
        text: String,
    },
    #[error("line {line}: duplicate station id {id}")]
    DuplicateId { line: usize, id: GsId },
    #[error("line {line}: {field} out of range ({value})")]
    OutOfRange {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("catalog contains no stations")]
    Empty,
}

/// Parse a station catalog. Lines are `id,lat,lon,capacity_mbps,antennas`;
/// `#` starts a comment (whole-line or trailing); blank lines are skipped.
pub fn parse_catalog(text: &str) -> Result<Vec<GroundStation>, CatalogError> {
    let mut stations: Vec<GroundStation> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(CatalogError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let parse = |field: &'static str, text: &str| -> Result<f64, CatalogError> {
            text.parse::<f64>().map_err(|_| CatalogError::BadField {
                line,
                field,
                text: text.to_string(),
            })
        };
        let id = fields[0]
            .parse::<GsId>()
            .map_err(|_| CatalogError::BadField {
                line,
                field: "id",
                text: fields[0].to_string(),
            })?;
        if stations.iter().any(|s| s.id == id) {
            return Err(CatalogError::DuplicateId { line, id });
        }
        let latitude_deg = parse("latitude", fields[1])?;
        if latitude_deg.abs() > 90.0 {
            return Err(CatalogError::OutOfRange {
                line,
                field: "latitude",
                value: latitude_deg,
            });
        }
        let longitude_deg = parse("longitude", fields[2])?;
        if longitude_deg.abs() > 180.0 {
            return Err(CatalogError::OutOfRange {
                line,
                field: "longitude",
                value: longitude_deg,
            });
        }
        let capacity_mbps = parse("capacity", fields[3])?;
        if capacity_mbps <= 0.0 {
            return Err(CatalogError::OutOfRange {
                line,
                field: "capacity",
                value: capacity_mbps,
            });
        }
        let antenna_count = fields[4]
            .parse::<u32>()
            .map_err(|_| CatalogError::BadField {
                line,
                field: "antenna_count",
                text: fields[4].to_string(),
            })?;
        stations.push(GroundStation {
            id,
            latitude_deg,
            longitude_deg,
            capacity_mbps,
            antenna_count,
        });
    }
    if stations.is_empty() {
        return Err(CatalogError::Empty);
    }
    Ok(stations)
}

/// Bundled 165-station catalog (continentally skewed toward North America
/// and Europe, as real gateway deployments are).
pub fn builtin_catalog() -> Vec<GroundStation> {
    parse_catalog(include_str!("../data/ground_stations.csv"))
        .expect("bundled catalog must parse")
}

/// Elevation of `sat_pos` above the horizon plane of `gs_pos`, degrees.
/// Both positions must be in the same frame, km. The sine is clamped to
/// [-1, 1]: roundoff can push it a few ulps out for zenith passes, where
/// `asin` would return NaN.
pub fn elevation_angle(sat_pos: Vec3, gs_pos: Vec3) -> f64 {
    let to_sat = sat_pos.sub(gs_pos);
    let sine = to_sat.dot(gs_pos.unit()) / to_sat.norm();
    sine.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Largest Earth-central angle between a ground station and a satellite
/// sub-point at which the elevation still reaches `elevation_deg`, degrees.
pub fn max_central_angle_deg(altitude_km: f64, elevation_deg: f64) -> f64 {
    let e = elevation_deg.to_radians();
    let psi = (EARTH_RADIUS_KM * e.cos() / (EARTH_RADIUS_KM + altitude_km)).acos() - e;
    psi.to_degrees()
}

/// Great-circle distance between two surface points, km.
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

/// Static +Grid inter-satellite adjacency: two intra-plane ring neighbors
/// plus the same-index member of each adjacent plane (wrap-around in both
/// dimensions). Adjacency lists are sorted so traversals are deterministic.
#[derive(Debug, Clone)]
pub struct GridTopology {
    pub neighbors: Vec<Vec<SatId>>,
}

impl GridTopology {
    pub fn build(c: &Constellation) -> Self {
        let n_orbits = c.num_orbits();
        assert!(n_orbits >= 3, "+Grid needs at least 3 planes");
        let mut neighbors: Vec<Vec<SatId>> = vec![Vec::with_capacity(4); c.satellites.len()];
        for sat in &c.satellites {
            let plane = &c.members[sat.orbit_index];
            let s = plane.len();
            assert!(s >= 3, "+Grid needs at least 3 satellites per plane");
            let i = sat.in_plane_index;
            let mut adj = vec![plane[(i + 1) % s], plane[(i + s - 1) % s]];
            for d in [1, n_orbits - 1] {
                let other = &c.members[(sat.orbit_index + d) % n_orbits];
                // Ragged (TLE-derived) planes may lack the matching index.
                if i < other.len() {
                    adj.push(other[i]);
                }
            }
            adj.sort_unstable();
            adj.dedup();
            neighbors[sat.id] = adj;
        }
        Self { neighbors }
    }

    /// Breadth-first shortest path from `src` to the nearest satellite for
    /// which `is_target` holds, visiting only satellites passing `usable`.
    /// Ties resolve toward lower satellite ids (sorted adjacency). Returns
    /// the full node sequence including both endpoints.
    pub fn shortest_path(
        &self,
        src: SatId,
        is_target: impl Fn(SatId) -> bool,
        usable: impl Fn(SatId) -> bool,
    ) -> Option<Vec<SatId>> {
        if !usable(src) {
            return None;
        }
        if is_target(src) {
            return Some(vec![src]);
        }
        let mut parent: Vec<Option<SatId>> = vec![None; self.neighbors.len()];
        let mut seen = vec![false; self.neighbors.len()];
        seen[src] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if seen[v] || !usable(v) {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                if is_target(v) {
                    let mut path = vec![v];
                    let mut cur = v;
                    while let Some(p) = parent[cur] {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }

    /// Hop count of the shortest path between two satellites, if connected.
    pub fn distance(&self, src: SatId, dst: SatId) -> Option<usize> {
        self.shortest_path(src, |s| s == dst, |_| true)
            .map(|p| p.len() - 1)
    }
}

/// Connectivity at one instant: ISL edges (static grid minus faulted nodes)
/// and elevation-gated GSL edges.
#[derive(Debug, Clone, Serialize)]
pub struct TopologySnapshot {
    pub t_min: f64,
    pub isl_edges: Vec<(SatId, SatId)>,
    pub gsl_edges: Vec<(SatId, GsId)>,
}

/// Compute the instantaneous snapshot by direct geometry. This is the slow
/// reference path used by tests and the report command; the engine resolves
/// GSLs through precomputed visibility windows instead.
pub fn snapshot(
    c: &Constellation,
    grid: &GridTopology,
    stations: &[GroundStation],
    prop: &Propagator,
    t_min: f64,
    elevation_threshold_deg: f64,
    faulted: &dyn Fn(SatId) -> bool,
) -> TopologySnapshot {
    let mut isl_edges = Vec::new();
    for sat in &c.satellites {
        if faulted(sat.id) {
            continue;
        }
        for &n in &grid.neighbors[sat.id] {
            if sat.id < n && !faulted(n) {
                isl_edges.push((sat.id, n));
            }
        }
    }
    let gs_pos: Vec<Vec3> = stations.iter().map(|g| g.ecef()).collect();
    let mut gsl_edges = Vec::new();
    for sat in &c.satellites {
        if faulted(sat.id) {
            continue;
        }
        let pos = prop.position(c, sat.id, t_min);
        for (k, g) in stations.iter().enumerate() {
            if elevation_angle(pos, gs_pos[k]) >= elevation_threshold_deg {
                gsl_edges.push((sat.id, g.id));
            }
        }
    }
    TopologySnapshot {
        t_min,
        isl_edges,
        gsl_edges,
    }
}
