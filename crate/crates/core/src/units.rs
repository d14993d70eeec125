//! Unit conversions. Powers are dBm at the edges and linear milliwatts inside;
//! densities are per km² at the edges and per m² inside.

/// Speed of light used for wavelength conversions (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Exact conversion factor from BS/km² to BS/m².
pub const PER_KM2_TO_PER_M2: f64 = 1e-6;

pub const PER_M2_TO_PER_KM2: f64 = 1e6;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

pub fn per_km2_to_per_m2(density: f64) -> f64 {
    density * PER_KM2_TO_PER_M2
}

pub fn per_m2_to_per_km2(density: f64) -> f64 {
    density * PER_M2_TO_PER_KM2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((linear_to_db(16.0) - 12.041199826559248).abs() < 1e-12);
        assert!((mw_to_dbm(dbm_to_mw(20.0)) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn density_conversion_is_exact_factor() {
        assert_eq!(per_km2_to_per_m2(2.5e5), 0.25);
        assert_eq!(per_m2_to_per_km2(1e-4), 100.0);
    }
}
