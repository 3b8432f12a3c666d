//! Geometric ground-station selection baselines.
//!
//! These pick stations by where the holding satellite is *right now* —
//! nearest station, or nearest station with admission room — rather than by
//! where its plane will pass. Paired with the relay and withhold routing
//! policies they form the reference strategies the plane-aware pipeline is
//! judged against. By design they skip reported-charge screening and plane
//! diffusion; that naivety is the point of the comparison.

use crate::constellation::{Constellation, Propagator, SatId};
use crate::scenario::{RoutingPolicy, SelectionPolicy, StrategyConfig};
use crate::topology::{great_circle_km, GroundStation, GsId};

/// Sub-satellite point: geodetic latitude and longitude (degrees) directly
/// beneath the satellite at tick `t` (spherical Earth).
pub fn subpoint(prop: &Propagator, c: &Constellation, sat: SatId, t: u32) -> (f64, f64) {
    let p = prop.position(c, sat, t as f64);
    let r = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
    let lat = (p.z / r).asin().to_degrees();
    let lon = p.y.atan2(p.x).to_degrees();
    (lat, lon)
}

/// Closest live station to a ground point; ties break toward the lower id.
pub fn select_nearest(
    stations: &[GroundStation],
    gs_ok: &[bool],
    lat_deg: f64,
    lon_deg: f64,
) -> Option<GsId> {
    select_nearest_available(stations, gs_ok, lat_deg, lon_deg, |_| true)
}

/// Closest live station that also passes `has_room` (admission headroom in
/// the current accounting window); ties break toward the lower id.
pub fn select_nearest_available(
    stations: &[GroundStation],
    gs_ok: &[bool],
    lat_deg: f64,
    lon_deg: f64,
    has_room: impl Fn(GsId) -> bool,
) -> Option<GsId> {
    let mut best: Option<(f64, GsId)> = None;
    for g in stations {
        if !gs_ok[g.id] || !has_room(g.id) {
            continue;
        }
        let km = great_circle_km(lat_deg, lon_deg, g.latitude_deg, g.longitude_deg);
        match best {
            Some((bkm, _)) if km >= bkm => {}
            _ => best = Some((km, g.id)),
        }
    }
    best.map(|(_, id)| id)
}

/// The strategy matrix used throughout comparisons: the plane-aware hybrid
/// pipeline plus the four geometric-selection baselines.
pub fn standard_strategies() -> Vec<StrategyConfig> {
    vec![
        StrategyConfig {
            selection: SelectionPolicy::Oan,
            routing: RoutingPolicy::Hybrid,
        },
        StrategyConfig {
            selection: SelectionPolicy::Nearest,
            routing: RoutingPolicy::IslShortest,
        },
        StrategyConfig {
            selection: SelectionPolicy::Nearest,
            routing: RoutingPolicy::PcoWithhold,
        },
        StrategyConfig {
            selection: SelectionPolicy::NearestAvailable,
            routing: RoutingPolicy::IslShortest,
        },
        StrategyConfig {
            selection: SelectionPolicy::NearestAvailable,
            routing: RoutingPolicy::PcoWithhold,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{generate_walker, WalkerConfig};

    fn station(id: GsId, lat: f64, lon: f64) -> GroundStation {
        GroundStation {
            id,
            latitude_deg: lat,
            longitude_deg: lon,
            capacity_mbps: 1000.0,
            antenna_count: 1,
        }
    }

    #[test]
    fn subpoint_tracks_equatorial_orbit() {
        let mut cfg = WalkerConfig::default();
        cfg.num_orbits = 1;
        cfg.sats_per_orbit = 4;
        cfg.inclination_deg = 0.0;
        let c = generate_walker(&cfg);
        let prop = Propagator {
            earth_rotation: false,
        };
        let (lat, lon) = subpoint(&prop, &c, 0, 0);
        assert!(lat.abs() < 1e-9, "equatorial orbit stays at latitude 0");
        assert!(lon.abs() < 1e-9, "phase 0 with RAAN 0 starts at longitude 0");
    }

    #[test]
    fn subpoint_latitude_bounded_by_inclination() {
        let cfg = WalkerConfig::default();
        let c = generate_walker(&cfg);
        let prop = Propagator {
            earth_rotation: true,
        };
        for t in (0..200).step_by(7) {
            let (lat, lon) = subpoint(&prop, &c, 3, t);
            assert!(lat.abs() <= cfg.inclination_deg + 1e-6);
            assert!((-180.0..=180.0).contains(&lon));
        }
    }

    #[test]
    fn nearest_picks_closest_station() {
        let stations = vec![
            station(0, 0.0, 0.0),
            station(1, 10.0, 10.0),
            station(2, -45.0, 90.0),
        ];
        let ok = vec![true; 3];
        assert_eq!(select_nearest(&stations, &ok, 9.0, 9.0), Some(1));
        assert_eq!(select_nearest(&stations, &ok, 1.0, -1.0), Some(0));
    }

    #[test]
    fn nearest_skips_dead_stations() {
        let stations = vec![station(0, 0.0, 0.0), station(1, 10.0, 10.0)];
        let ok = vec![false, true];
        assert_eq!(select_nearest(&stations, &ok, 0.0, 0.0), Some(1));
        let none = vec![false, false];
        assert_eq!(select_nearest(&stations, &none, 0.0, 0.0), None);
    }

    #[test]
    fn nearest_available_respects_room_predicate() {
        let stations = vec![station(0, 0.0, 0.0), station(1, 10.0, 10.0)];
        let ok = vec![true, true];
        let gs = select_nearest_available(&stations, &ok, 0.0, 0.0, |g| g != 0);
        assert_eq!(gs, Some(1));
        let gs = select_nearest_available(&stations, &ok, 0.0, 0.0, |_| false);
        assert_eq!(gs, None);
    }

    #[test]
    fn ties_break_toward_lower_id() {
        let stations = vec![station(0, 5.0, 0.0), station(1, -5.0, 0.0)];
        let ok = vec![true, true];
        assert_eq!(select_nearest(&stations, &ok, 0.0, 0.0), Some(0));
    }

    #[test]
    fn strategy_matrix_is_the_five_compared() {
        let all = standard_strategies();
        assert_eq!(all.len(), 5);
        assert_eq!(all[0].selection, SelectionPolicy::Oan);
        assert_eq!(all[0].routing, RoutingPolicy::Hybrid);
        let labels: Vec<String> = all.iter().map(|s| s.label()).collect();
        assert_eq!(labels.len(), 5);
        let unique: std::collections::BTreeSet<&String> = labels.iter().collect();
        assert_eq!(unique.len(), 5, "labels distinguish every strategy");
    }
}
