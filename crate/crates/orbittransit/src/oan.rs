//! Orbit-as-node (OAN) graph: the routing abstraction that treats each
//! orbital plane as one node on a ring.
//!
//! Satellites sharing a plane are interchangeable carriers: at any instant
//! the set of in-plane phases visible from a ground station is a single
//! angular arc, so per-orbit visibility is computed once per minute in
//! closed form and each member's windows fall out by phase filtering. This
//! keeps the construction exact under Earth rotation while the routing table
//! stays quadratic in planes, not satellites: a 72x22 shell needs 72^2 route
//! entries instead of 1584^2, a 484x compression.
//!
//! Plane-to-plane hops use ring distance (adjacent RAAN planes are
//! neighbors), which on the +Grid torus is provably the satellite-level
//! shortest hop count; `validation::check_oan_optimality` verifies this
//! against BFS exhaustively.

use crate::constellation::{Constellation, OrbitId, Propagator, SatId};
use crate::topology::{max_central_angle_deg, GroundStation, GsId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Half-open visibility interval `[start, end)` in simulation minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: u32,
    pub end: u32,
}

impl Window {
    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// Orbit-level visibility window: some member of the plane sees the station
/// throughout `[start, end)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VisibilityWindow {
    pub gs_id: GsId,
    pub start: u32,
    pub end: u32,
    /// Argument of latitude of the first visible member at `start`, degrees.
    pub entry_phase_deg: f64,
}

/// Visibility of one ground station from one orbit across the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitCoverage {
    pub gs_id: GsId,
    /// Union over members, maximal and disjoint, sorted by start.
    pub union_windows: Vec<VisibilityWindow>,
    /// Per-member windows indexed by in-plane index; sorted and disjoint.
    pub sat_windows: Vec<Vec<Window>>,
}

/// One ring node: an orbital plane with its member list and station coverage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitNode {
    pub orbit: OrbitId,
    pub members: Vec<SatId>,
    /// Sorted by station id; stations the plane never sees are absent.
    pub coverage: Vec<OrbitCoverage>,
}

impl OrbitNode {
    pub fn coverage_for(&self, gs: GsId) -> Option<&OrbitCoverage> {
        self.coverage
            .binary_search_by_key(&gs, |c| c.gs_id)
            .ok()
            .map(|i| &self.coverage[i])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OanGraph {
    pub nodes: Vec<OrbitNode>,
    pub horizon: u32,
    /// Orbits covering each station (reverse index over `nodes`).
    pub orbits_by_gs: Vec<Vec<OrbitId>>,
}

/// Smallest wrapped angular difference |a - b| in degrees, in [0, 180].
fn ang_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Build the OAN graph by scanning the horizon one minute at a time.
///
/// For each (orbit, station, minute) the set of visible in-plane phases is
/// one arc `|theta - center| <= half_width`, derived from the elevation mask
/// in closed form; members are then tested by angle comparison only.
pub fn build_oan(
    c: &Constellation,
    stations: &[GroundStation],
    prop: &Propagator,
    horizon: u32,
    elevation_threshold_deg: f64,
) -> OanGraph {
    let earth_rate = if prop.earth_rotation {
        Propagator::earth_rate_deg_per_min()
    } else {
        0.0
    };
    // Station unit vectors rotated into the inertial frame, per minute.
    let gs_units: Vec<Vec<[f64; 3]>> = stations
        .iter()
        .map(|g| {
            let u = g.ecef().unit();
            (0..horizon)
                .map(|t| {
                    let r = u.rotate_z(earth_rate * t as f64);
                    [r.x, r.y, r.z]
                })
                .collect()
        })
        .collect();

    let nodes: Vec<OrbitNode> = c
        .orbits
        .par_iter()
        .enumerate()
        .map(|(orbit_idx, orbit)| {
            let members = c.members[orbit_idx].clone();
            let cos_psi = max_central_angle_deg(orbit.altitude_km, elevation_threshold_deg)
                .to_radians()
                .cos();
            let om = orbit.raan_deg.to_radians();
            let inc = orbit.inclination_deg.to_radians();
            let e1 = [om.cos(), om.sin(), 0.0];
            let e2 = [-om.sin() * inc.cos(), om.cos() * inc.cos(), inc.sin()];
            let rate = orbit.rate_deg_per_min();
            let phases: Vec<f64> = members.iter().map(|&id| c.satellites[id].phase_deg).collect();

            let mut coverage = Vec::new();
            for (gs_idx, g) in stations.iter().enumerate() {
                let mut sat_open: Vec<Option<u32>> = vec![None; members.len()];
                let mut sat_windows: Vec<Vec<Window>> = vec![Vec::new(); members.len()];
                let mut union_open: Option<(u32, f64)> = None;
                let mut union_windows: Vec<VisibilityWindow> = Vec::new();
                for t in 0..horizon {
                    let gu = &gs_units[gs_idx][t as usize];
                    let c1 = e1[0] * gu[0] + e1[1] * gu[1] + e1[2] * gu[2];
                    let c2 = e2[0] * gu[0] + e2[1] * gu[1] + e2[2] * gu[2];
                    let r2 = c1 * c1 + c2 * c2;
                    let mut any_visible = false;
                    let mut entry_phase = 0.0;
                    if r2 >= cos_psi * cos_psi {
                        let center = c2.atan2(c1).to_degrees();
                        let half_width = (cos_psi / r2.sqrt()).acos().to_degrees();
                        for (m, &phase0) in phases.iter().enumerate() {
                            let theta = phase0 + rate * t as f64;
                            if ang_diff(theta, center) <= half_width {
                                if !any_visible {
                                    any_visible = true;
                                    entry_phase = theta.rem_euclid(360.0);
                                }
                                if sat_open[m].is_none() {
                                    sat_open[m] = Some(t);
                                }
                            } else if let Some(s) = sat_open[m].take() {
                                sat_windows[m].push(Window { start: s, end: t });
                            }
                        }
                    } else {
                        for (m, open) in sat_open.iter_mut().enumerate() {
                            if let Some(s) = open.take() {
                                sat_windows[m].push(Window { start: s, end: t });
                            }
                        }
                    }
                    match (union_open, any_visible) {
                        (None, true) => union_open = Some((t, entry_phase)),
                        (Some((s, p)), false) => {
                            union_windows.push(VisibilityWindow {
                                gs_id: g.id,
                                start: s,
                                end: t,
                                entry_phase_deg: p,
                            });
                            union_open = None;
                        }
                        _ => {}
                    }
                }
                for (m, open) in sat_open.iter_mut().enumerate() {
                    if let Some(s) = open.take() {
                        sat_windows[m].push(Window {
                            start: s,
                            end: horizon,
                        });
                    }
                }
                if let Some((s, p)) = union_open {
                    union_windows.push(VisibilityWindow {
                        gs_id: g.id,
                        start: s,
                        end: horizon,
                        entry_phase_deg: p,
                    });
                }
                if !union_windows.is_empty() {
                    coverage.push(OrbitCoverage {
                        gs_id: g.id,
                        union_windows,
                        sat_windows,
                    });
                }
            }
            OrbitNode {
                orbit: orbit_idx,
                members,
                coverage,
            }
        })
        .collect();

    let mut orbits_by_gs = vec![Vec::new(); stations.iter().map(|g| g.id + 1).max().unwrap_or(0)];
    for node in &nodes {
        for cov in &node.coverage {
            orbits_by_gs[cov.gs_id].push(node.orbit);
        }
    }
    OanGraph {
        nodes,
        horizon,
        orbits_by_gs,
    }
}

impl OanGraph {
    /// Synthetic constructor for oracle instances and unit tests: windows are
    /// supplied directly instead of being derived from geometry.
    pub fn from_windows(
        c: &Constellation,
        horizon: u32,
        gs_ids: &[GsId],
        windows_for: impl Fn(SatId, GsId) -> Vec<Window>,
    ) -> OanGraph {
        let nodes: Vec<OrbitNode> = (0..c.num_orbits())
            .map(|orbit_idx| {
                let members = c.members[orbit_idx].clone();
                let mut coverage = Vec::new();
                for &gs in gs_ids {
                    let sat_windows: Vec<Vec<Window>> = members
                        .iter()
                        .map(|&id| {
                            let mut ws = windows_for(id, gs);
                            ws.retain(|w| !w.is_empty());
                            ws.sort_by_key(|w| w.start);
                            ws
                        })
                        .collect();
                    // Union of member windows on the minute grid.
                    let mut union_windows = Vec::new();
                    let mut open: Option<u32> = None;
                    for t in 0..horizon {
                        let any = sat_windows
                            .iter()
                            .any(|ws| ws.iter().any(|w| w.contains(t)));
                        match (open, any) {
                            (None, true) => open = Some(t),
                            (Some(s), false) => {
                                union_windows.push(VisibilityWindow {
                                    gs_id: gs,
                                    start: s,
                                    end: t,
                                    entry_phase_deg: 0.0,
                                });
                                open = None;
                            }
                            _ => {}
                        }
                    }
                    if let Some(s) = open {
                        union_windows.push(VisibilityWindow {
                            gs_id: gs,
                            start: s,
                            end: horizon,
                            entry_phase_deg: 0.0,
                        });
                    }
                    if !union_windows.is_empty() {
                        coverage.push(OrbitCoverage {
                            gs_id: gs,
                            union_windows,
                            sat_windows,
                        });
                    }
                }
                coverage.sort_by_key(|cv| cv.gs_id);
                OrbitNode {
                    orbit: orbit_idx,
                    members,
                    coverage,
                }
            })
            .collect();
        let mut orbits_by_gs = vec![Vec::new(); gs_ids.iter().map(|&g| g + 1).max().unwrap_or(0)];
        for node in &nodes {
            for cov in &node.coverage {
                orbits_by_gs[cov.gs_id].push(node.orbit);
            }
        }
        OanGraph {
            nodes,
            horizon,
            orbits_by_gs,
        }
    }

    pub fn num_orbits(&self) -> usize {
        self.nodes.len()
    }

    /// Ring hop distance between two planes.
    pub fn orbit_hops(&self, a: OrbitId, b: OrbitId) -> usize {
        let n = self.nodes.len();
        let d = (a as i64 - b as i64).unsigned_abs() as usize % n;
        d.min(n - d)
    }

    /// Offset scan order used by traffic diffusion: own plane first, then
    /// alternating outward (+1, -1, +2, -2, ...), covering the whole ring.
    pub fn offset_sequence(&self) -> Vec<i64> {
        let n = self.nodes.len() as i64;
        let mut seq = vec![0];
        for d in 1..=(n / 2) {
            seq.push(d);
            if d < n - d {
                seq.push(-d);
            }
        }
        seq
    }

    /// Plane reached from `orbit` by a (possibly negative) ring offset.
    pub fn orbit_at_offset(&self, orbit: OrbitId, delta: i64) -> OrbitId {
        let n = self.nodes.len() as i64;
        (orbit as i64 + delta).rem_euclid(n) as usize
    }

    /// Member of `orbit` sharing the in-plane index of `sat` — the satellite
    /// the data sits on after crossing planes at a fixed grid column. Ragged
    /// plane sizes wrap by modulo.
    pub fn phase_mapped_member(&self, c: &Constellation, sat: SatId, orbit: OrbitId) -> SatId {
        let idx = c.satellites[sat].in_plane_index % self.nodes[orbit].members.len();
        self.nodes[orbit].members[idx]
    }

    /// Route-table entries the ring abstraction needs (planes squared).
    pub fn route_table_entries(&self) -> u64 {
        (self.nodes.len() as u64).pow(2)
    }

    /// Entries a satellite-level all-pairs table would need.
    pub fn satellite_pair_entries(&self) -> u64 {
        let sats: u64 = self.nodes.iter().map(|n| n.members.len() as u64).sum();
        sats.pow(2)
    }

    fn sat_window_list(&self, c: &Constellation, sat: SatId, gs: GsId) -> Option<&[Window]> {
        let s = c.satellite(sat);
        let cov = self.nodes[s.orbit_index].coverage_for(gs)?;
        Some(&cov.sat_windows[s.in_plane_index])
    }

    /// Pickup-carry-offload delivery time: minutes from `t` until `sat` next
    /// has (or currently has) a usable link to `gs`. `None` means the pair
    /// never connects within the horizon — a typed sentinel, not an error.
    pub fn pco_delivery_time(&self, c: &Constellation, sat: SatId, t: u32, gs: GsId) -> Option<u32> {
        let windows = self.sat_window_list(c, sat, gs)?;
        // First window ending after t.
        let i = windows.partition_point(|w| w.end <= t);
        windows.get(i).map(|w| w.start.saturating_sub(t))
    }

    /// Window of `sat` over `gs` that contains `t`, if any.
    pub fn window_containing(&self, c: &Constellation, sat: SatId, gs: GsId, t: u32) -> Option<Window> {
        let windows = self.sat_window_list(c, sat, gs)?;
        let i = windows.partition_point(|w| w.end <= t);
        windows.get(i).copied().filter(|w| w.contains(t))
    }

    /// True when `sat` has an elevation-gated link to `gs` at minute `t`.
    pub fn gsl_up(&self, c: &Constellation, sat: SatId, gs: GsId, t: u32) -> bool {
        self.window_containing(c, sat, gs, t).is_some()
    }

    /// All satellites with a usable link to `gs` at minute `t`, ascending id.
    pub fn visible_sats(&self, _c: &Constellation, gs: GsId, t: u32) -> Vec<SatId> {
        let mut out = Vec::new();
        if gs >= self.orbits_by_gs.len() {
            return out;
        }
        for &orbit in &self.orbits_by_gs[gs] {
            let node = &self.nodes[orbit];
            let cov = node.coverage_for(gs).expect("reverse index consistent");
            for (m, &sat) in node.members.iter().enumerate() {
                let ws = &cov.sat_windows[m];
                let i = ws.partition_point(|w| w.end <= t);
                if ws.get(i).is_some_and(|w| w.contains(t)) {
                    out.push(sat);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Union-window table in CSV form (`orbit,gs,start,end`), for reports.
    pub fn window_table_csv(&self) -> String {
        let mut out = String::from("orbit,gs,start,end\n");
        for node in &self.nodes {
            for cov in &node.coverage {
                for w in &cov.union_windows {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        node.orbit, cov.gs_id, w.start, w.end
                    ));
                }
            }
        }
        out
    }
}
