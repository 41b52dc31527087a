use serde::{Deserialize, Serialize};

use super::{FrameError, Result};

pub const INCOME_CATEGORIES: usize = 10;
pub const EDUCATION_LEVELS: usize = 9;

/// Aggregated catchment values, one per predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocioeconomicProfile {
    pub avg_income: f64,
    pub avg_education: f64,
    pub avg_age: f64,
    pub total_population: f64,
    pub male_female_ratio: f64,
}

impl SocioeconomicProfile {
    pub fn validate(&self, station: &str) -> Result<()> {
        let bad = |reason: &str| {
            Err(FrameError::InvalidProfile {
                station: station.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.values().iter().any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if !(0.0..=(EDUCATION_LEVELS - 1) as f64).contains(&self.avg_education) {
            return bad("avg_education outside [0, 8]");
        }
        if self.total_population <= 0.0 {
            return bad("total_population must be positive");
        }
        if self.male_female_ratio <= 0.0 {
            return bad("male_female_ratio must be positive");
        }
        Ok(())
    }

    /// Values in predictor column order.
    pub fn values(&self) -> [f64; 5] {
        [
            self.avg_income,
            self.avg_education,
            self.avg_age,
            self.total_population,
            self.male_female_ratio,
        ]
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        Self {
            avg_income: v[0],
            avg_education: v[1],
            avg_age: v[2],
            total_population: v[3],
            male_female_ratio: v[4],
        }
    }
}

fn weighted_level(counts: &[f64], levels: impl Iterator<Item = f64>) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(FrameError::EmptyHouseholds);
    }
    let weighted: f64 = counts.iter().zip(levels).map(|(c, l)| c * l).sum();
    Ok(weighted / total)
}

fn check_counts(counts: &[f64], expected: usize) -> Result<()> {
    if counts.len() != expected {
        return Err(FrameError::CategoryCount {
            expected,
            actual: counts.len(),
        });
    }
    if counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
        return Err(FrameError::InvalidFrame(
            "household counts must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Household-weighted income category, categories indexed 0..=9.
pub fn avg_income(category_counts: &[f64]) -> Result<f64> {
    check_counts(category_counts, INCOME_CATEGORIES)?;
    let max = (INCOME_CATEGORIES - 1) as f64;
    // rounding in the weighted sum can overshoot the top index by an ulp
    weighted_level(category_counts, (0..INCOME_CATEGORIES).map(|i| i as f64)).map(|v| v.clamp(0.0, max))
}

/// Household-weighted education level on the 0..=8 scale.
pub fn avg_education(level_counts: &[f64]) -> Result<f64> {
    check_counts(level_counts, EDUCATION_LEVELS)?;
    let max = (EDUCATION_LEVELS - 1) as f64;
    weighted_level(level_counts, (0..EDUCATION_LEVELS).map(|i| i as f64)).map(|v| v.clamp(0.0, max))
}

pub fn avg_age(bracket_counts: &[f64], bracket_levels: &[f64]) -> Result<f64> {
    if bracket_counts.len() != bracket_levels.len() {
        return Err(FrameError::LengthMismatch(
            bracket_counts.len(),
            bracket_levels.len(),
        ));
    }
    check_counts(bracket_counts, bracket_levels.len())?;
    weighted_level(bracket_counts, bracket_levels.iter().copied())
}

/// Returns `(male + female, male / female)`.
pub fn population_and_gender(male: f64, female: f64) -> Result<(f64, f64)> {
    if female <= 0.0 {
        return Err(FrameError::ZeroFemale);
    }
    if male < 0.0 {
        return Err(FrameError::InvalidFrame("male population is negative".into()));
    }
    Ok((male + female, male / female))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn income_examples() {
        let mut c = [0.0; 10];
        c[9] = 12.0;
        assert_eq!(avg_income(&c).unwrap(), 9.0);
        let mut c = [0.0; 10];
        c[0] = 2.0;
        c[1] = 2.0;
        assert_eq!(avg_income(&c).unwrap(), 0.5);
        assert_eq!(avg_income(&[1.0; 10]).unwrap(), 4.5);
        assert_eq!(avg_income(&[0.0; 10]), Err(FrameError::EmptyHouseholds));
        assert!(matches!(
            avg_income(&[1.0; 9]),
            Err(FrameError::CategoryCount {
                expected: 10,
                actual: 9
            })
        ));
    }

    #[test]
    fn education_examples() {
        let mut c = [0.0; 9];
        c[8] = 3.0;
        assert_eq!(avg_education(&c).unwrap(), 8.0);
        assert_eq!(avg_education(&[5.0; 9]).unwrap(), 4.0);
        assert_eq!(avg_education(&[0.0; 9]), Err(FrameError::EmptyHouseholds));
    }

    #[test]
    fn age_examples() {
        assert_eq!(avg_age(&[7.0], &[35.0]).unwrap(), 35.0);
        assert_eq!(avg_age(&[1.0, 1.0], &[20.0, 40.0]).unwrap(), 30.0);
        assert_eq!(avg_age(&[1.0, 2.0, 1.0], &[20.0, 40.0, 60.0]).unwrap(), 40.0);
        assert_eq!(avg_age(&[0.0, 0.0], &[20.0, 40.0]), Err(FrameError::EmptyHouseholds));
        assert_eq!(avg_age(&[1.0], &[20.0, 40.0]), Err(FrameError::LengthMismatch(1, 2)));
    }

    #[test]
    fn population_examples() {
        assert_eq!(population_and_gender(100.0, 100.0).unwrap(), (200.0, 1.0));
        assert_eq!(population_and_gender(0.0, 50.0).unwrap(), (50.0, 0.0));
        assert_eq!(population_and_gender(120.0, 80.0).unwrap(), (200.0, 1.5));
        assert_eq!(population_and_gender(10.0, 0.0), Err(FrameError::ZeroFemale));
    }

    proptest! {
        #[test]
        fn weighted_levels_stay_in_index_range(
            income in proptest::collection::vec(0.0f64..1e6, 10),
            edu in proptest::collection::vec(0.0f64..1e6, 9),
        ) {
            if let Ok(v) = avg_income(&income) {
                prop_assert!((0.0..=9.0).contains(&v));
            }
            if let Ok(v) = avg_education(&edu) {
                prop_assert!((0.0..=8.0).contains(&v));
            }
        }
    }
}
