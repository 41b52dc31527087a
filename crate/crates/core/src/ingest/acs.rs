//! Census table aggregation over a catchment's counties.
//!
//! Category labels and their canonical order come from the versioned schema
//! in `schema/acs_categories.json`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::frames::{self, SocioeconomicProfile};

const BUNDLED_SCHEMA: &str = include_str!("../../schema/acs_categories.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBracket {
    pub label: String,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsSchema {
    pub version: u32,
    pub income: Vec<String>,
    pub education: Vec<String>,
    pub age: Vec<AgeBracket>,
    pub sex: Vec<String>,
}

impl AcsSchema {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_SCHEMA).expect("bundled schema is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let schema: Self =
            serde_json::from_str(text).map_err(|e| IngestError::InvalidConfig(format!("schema: {e}")))?;
        if schema.income.len() != frames::INCOME_CATEGORIES
            || schema.education.len() != frames::EDUCATION_LEVELS
            || schema.sex.len() != 2
            || schema.age.is_empty()
        {
            return Err(IngestError::InvalidConfig(
                "schema needs 10 income, 9 education, 2 sex categories and at least one age bracket".into(),
            ));
        }
        Ok(schema)
    }

    pub fn age_labels(&self) -> Vec<String> {
        self.age.iter().map(|b| b.label.clone()).collect()
    }

    pub fn age_levels(&self) -> Vec<f64> {
        self.age.iter().map(|b| b.level).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcsRow {
    pub county: String,
    pub category: String,
    pub value: f64,
}

/// One census table as `(county, category, value)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAcsTable {
    pub table_id: String,
    rows: Vec<AcsRow>,
}

impl RawAcsTable {
    pub fn new(table_id: impl Into<String>, rows: Vec<AcsRow>) -> Result<Self, IngestError> {
        let table_id = table_id.into();
        let mut seen = BTreeSet::new();
        for row in &rows {
            if !(row.value >= 0.0) || !row.value.is_finite() {
                return Err(IngestError::InvalidTable {
                    table: table_id,
                    message: format!("{} / {}: value {} must be non-negative", row.county, row.category, row.value),
                });
            }
            if !seen.insert((row.county.as_str(), row.category.as_str())) {
                return Err(IngestError::InvalidTable {
                    table: table_id,
                    message: format!("duplicate category {:?} for county {}", row.category, row.county),
                });
            }
        }
        Ok(Self { table_id, rows })
    }

    pub fn rows(&self) -> &[AcsRow] {
        &self.rows
    }

    /// Reads `county,category,value` CSV.
    pub fn from_csv(table_id: impl Into<String>, bytes: &[u8]) -> Result<Self, IngestError> {
        let table_id = table_id.into();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let header = rdr
            .headers()
            .map_err(|e| IngestError::Parse { line: 1, message: e.to_string() })?;
        if header.iter().ne(["county", "category", "value"]) {
            return Err(IngestError::Parse {
                line: 1,
                message: format!("{table_id}: expected header county,category,value"),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<AcsRow>() {
            let row = rec.map_err(|e| IngestError::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: format!("{table_id}: {e}"),
            })?;
            rows.push(row);
        }
        Self::new(table_id, rows)
    }

    /// Category counts in `labels` order, summed over `counties`.
    pub fn category_counts(&self, counties: &BTreeSet<String>, labels: &[String]) -> Result<Vec<f64>, IngestError> {
        let mut per_county: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for row in &self.rows {
            if counties.contains(&row.county) {
                per_county
                    .entry(row.county.as_str())
                    .or_default()
                    .insert(row.category.as_str(), row.value);
            }
        }
        let mut totals = vec![0.0; labels.len()];
        for county in counties {
            let cats = per_county.get(county.as_str()).ok_or_else(|| IngestError::MissingCounty {
                table: self.table_id.clone(),
                county: county.clone(),
            })?;
            if cats.len() != labels.len() {
                return Err(IngestError::CategoryCountMismatch {
                    table: self.table_id.clone(),
                    county: county.clone(),
                    expected: labels.len(),
                    actual: cats.len(),
                });
            }
            for (slot, label) in totals.iter_mut().zip(labels) {
                *slot += cats.get(label.as_str()).ok_or_else(|| IngestError::InvalidTable {
                    table: self.table_id.clone(),
                    message: format!("county {county} lacks category {label:?}"),
                })?;
            }
        }
        Ok(totals)
    }
}

pub fn parse_acs_income(table: &RawAcsTable, counties: &BTreeSet<String>, schema: &AcsSchema) -> Result<Vec<f64>, IngestError> {
    table.category_counts(counties, &schema.income)
}

pub fn parse_acs_education(table: &RawAcsTable, counties: &BTreeSet<String>, schema: &AcsSchema) -> Result<Vec<f64>, IngestError> {
    table.category_counts(counties, &schema.education)
}

pub fn parse_acs_age(table: &RawAcsTable, counties: &BTreeSet<String>, schema: &AcsSchema) -> Result<Vec<f64>, IngestError> {
    table.category_counts(counties, &schema.age_labels())
}

/// `(male, female)` persons summed over `counties`.
pub fn parse_acs_sex(table: &RawAcsTable, counties: &BTreeSet<String>, schema: &AcsSchema) -> Result<(f64, f64), IngestError> {
    let v = table.category_counts(counties, &schema.sex)?;
    Ok((v[0], v[1]))
}

/// The four census tables a profile is built from.
#[derive(Debug, Clone)]
pub struct AcsTables {
    pub income: RawAcsTable,
    pub education: RawAcsTable,
    pub age: RawAcsTable,
    pub sex: RawAcsTable,
}

/// Aggregates the catchment's counties into one socioeconomic profile.
pub fn catchment_profile(
    tables: &AcsTables,
    counties: &BTreeSet<String>,
    schema: &AcsSchema,
) -> Result<SocioeconomicProfile, IngestError> {
    let income = frames::avg_income(&parse_acs_income(&tables.income, counties, schema)?)?;
    let education = frames::avg_education(&parse_acs_education(&tables.education, counties, schema)?)?;
    let age = frames::avg_age(&parse_acs_age(&tables.age, counties, schema)?, &schema.age_levels())?;
    let (male, female) = parse_acs_sex(&tables.sex, counties, schema)?;
    let (total, ratio) = frames::population_and_gender(male, female)?;
    Ok(SocioeconomicProfile {
        avg_income: income,
        avg_education: education,
        avg_age: age,
        total_population: total,
        male_female_ratio: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn income_rows(county: &str, values: &[f64]) -> Vec<AcsRow> {
        let schema = AcsSchema::bundled();
        schema
            .income
            .iter()
            .zip(values)
            .map(|(label, v)| AcsRow {
                county: county.into(),
                category: label.clone(),
                value: *v,
            })
            .collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bundled_schema_shape() {
        let s = AcsSchema::bundled();
        assert_eq!(s.version, 1);
        assert_eq!(s.income.len(), 10);
        assert_eq!(s.education.len(), 9);
    }

    #[test]
    fn single_county_passthrough_and_summation() {
        let schema = AcsSchema::bundled();
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut b = vec![0.0; 10];
        b[0] = 2.0;
        b[1] = 3.0;
        let mut rows = income_rows("A", &a);
        rows.extend(income_rows("B", &b));
        let table = RawAcsTable::new("income", rows).unwrap();
        assert_eq!(parse_acs_income(&table, &set(&["A"]), &schema).unwrap(), a);
        let summed = parse_acs_income(&table, &set(&["A", "B"]), &schema).unwrap();
        assert_eq!(summed[..3], [2.0, 4.0, 2.0]);
    }

    #[test]
    fn missing_county_and_wrong_category_count() {
        let schema = AcsSchema::bundled();
        let mut rows = income_rows("A", &[1.0; 10]);
        rows.pop();
        let table = RawAcsTable::new("income", rows).unwrap();
        assert!(matches!(
            parse_acs_income(&table, &set(&["A"]), &schema),
            Err(IngestError::CategoryCountMismatch {
                expected: 10,
                actual: 9,
                ..
            })
        ));
        assert!(matches!(
            parse_acs_income(&table, &set(&["Z"]), &schema),
            Err(IngestError::MissingCounty { .. })
        ));
    }

    #[test]
    fn table_invariants() {
        let mut rows = income_rows("A", &[1.0; 10]);
        rows[0].value = -1.0;
        assert!(RawAcsTable::new("t", rows).is_err());
        let mut rows = income_rows("A", &[1.0; 10]);
        rows[1].category = rows[0].category.clone();
        assert!(RawAcsTable::new("t", rows).is_err());
    }

    #[test]
    fn csv_reading() {
        let text = "county,category,value\nA,Male,10\nA,Female,5\n";
        let t = RawAcsTable::from_csv("sex", text.as_bytes()).unwrap();
        assert_eq!(
            parse_acs_sex(&t, &set(&["A"]), &AcsSchema::bundled()).unwrap(),
            (10.0, 5.0)
        );
        assert!(RawAcsTable::from_csv("sex", b"a,b,c\n").is_err());
    }
}
