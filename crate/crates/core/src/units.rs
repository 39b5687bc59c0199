//! Decibel conversions and a few physical constants.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Values below this (in dB) are treated as zero power.
pub const DB_FLOOR: f64 = -250.0;
/// Written in place of a quantile that falls below [`DB_FLOOR`].
pub const DB_SENTINEL: f64 = -300.0;

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    lin_to_db(mw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for db in [-174.0, -3.0, 0.0, 6.0, 30.0] {
            assert!((lin_to_db(db_to_lin(db)) - db).abs() < 1e-12);
        }
        assert_eq!(lin_to_db(0.0), f64::NEG_INFINITY);
        assert!((dbm_to_mw(10.0) - 10.0).abs() < 1e-12);
    }
}
