use std::f64::consts::TAU;

use super::types::Constituent;
use super::{HarmonicError, Result};

/// M2 period: 12 h 25.2 min.
pub const M2_PERIOD_HOURS: f64 = 12.42;

// Periods in hours. Values other than M2 and S2 are the usual mean periods.
const CATALOG: &[(&str, f64)] = &[
    ("M2", M2_PERIOD_HOURS),
    ("S2", 12.0),
    ("N2", 12.658_348_24),
    ("K2", 11.967_234_79),
    ("K1", 23.934_469_66),
    ("O1", 25.819_341_66),
    ("P1", 24.065_890_16),
    ("Q1", 26.868_356_67),
    ("M4", M2_PERIOD_HOURS / 2.0),
];

/// Looks up a constituent by name; `sigma = 2 pi / period`.
pub fn constituent_frequency(name: &str) -> Result<Constituent> {
    CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(n, period)| Constituent {
            name: n.to_string(),
            frequency: TAU / period,
        })
        .ok_or_else(|| HarmonicError::UnknownConstituent(name.to_string()))
}

pub fn catalog_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m2_frequency_is_pinned() {
        let m2 = constituent_frequency("M2").unwrap();
        // 2 * pi / 12.42
        assert_eq!(m2.frequency, 0.505_892_536_809_950_6);
        assert!((m2.period_hours() - 12.42).abs() < 1e-12);
    }

    #[test]
    fn s2_is_half_a_solar_day() {
        let s2 = constituent_frequency("S2").unwrap();
        assert!((s2.period_hours() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_name_is_a_catalog_miss() {
        assert_eq!(
            constituent_frequency("XX").unwrap_err(),
            HarmonicError::UnknownConstituent("XX".to_string())
        );
    }

    #[test]
    fn catalog_has_the_basics_with_distinct_frequencies() {
        let names: Vec<_> = catalog_names().collect();
        for needed in ["M2", "S2", "K1", "O1"] {
            assert!(names.contains(&needed));
        }
        let set = super::super::ConstituentSet::from_names(&names);
        assert!(set.is_ok());
    }
}
