//! Physical constants shared across modules.

/// Earth's gravitational parameter, km^3/s^2 (WGS-84).
pub const MU_EARTH: f64 = 398_600.441_8;

/// Mean Earth radius, km (spherical model used throughout).
pub const EARTH_RADIUS_KM: f64 = 6_371.0;

/// Sidereal day length, seconds; sets the Earth-fixed frame rotation rate.
pub const SIDEREAL_DAY_S: f64 = 86_164.090_5;

/// Megabits per decimal terabyte (10^12 bytes * 8 / 10^6).
pub const MEGABITS_PER_TB: f64 = 8.0e6;

/// Seconds per simulation time unit (all tick arithmetic is in minutes).
pub const SECONDS_PER_MINUTE: f64 = 60.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equatorial_ground_speed_matches_sidereal_rate() {
        // One full Earth circumference per sidereal day, expressed per minute.
        let km_per_min =
            2.0 * std::f64::consts::PI * EARTH_RADIUS_KM / SIDEREAL_DAY_S * SECONDS_PER_MINUTE;
        assert!((km_per_min - 27.9).abs() < 0.1, "got {km_per_min}");
    }
}
