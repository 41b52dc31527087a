use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ReproduceError;
use crate::frames::Transition;

pub(crate) const BUNDLED_GOLDEN: &str = include_str!("../../fixtures/paper_tables.json");
pub(crate) const BUNDLED_TABLE1: &str = include_str!("../../fixtures/table1.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenVariance {
    pub x: Vec<f64>,
    pub cumulative_x: Vec<f64>,
    pub y: Vec<f64>,
    pub cumulative_y: Vec<f64>,
    pub adjusted_r2: Vec<f64>,
}

/// Predictor columns (one per factor) plus the dependent-variable row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenMatrix {
    pub columns: Vec<Vec<f64>>,
    pub dependent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenCoefficients {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

/// Published table values keyed by transition slug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenTables {
    pub components: usize,
    pub variance: BTreeMap<String, GoldenVariance>,
    pub weights: BTreeMap<String, GoldenMatrix>,
    pub loadings: BTreeMap<String, GoldenMatrix>,
    /// Per transition, one VIP column per factor count.
    pub vip: BTreeMap<String, Vec<Vec<f64>>>,
    pub coefficients: BTreeMap<String, GoldenCoefficients>,
}

fn entry<'a, T>(map: &'a BTreeMap<String, T>, table: &str, t: Transition) -> Result<&'a T, ReproduceError> {
    map.get(t.slug())
        .ok_or_else(|| ReproduceError::Fixture(format!("golden {table} table lacks {}", t.slug())))
}

impl GoldenTables {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_GOLDEN).expect("bundled golden tables are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ReproduceError> {
        let tables: Self = serde_json::from_str(text).map_err(|e| ReproduceError::Fixture(format!("golden tables: {e}")))?;
        tables.validate()?;
        Ok(tables)
    }

    fn validate(&self) -> Result<(), ReproduceError> {
        let a = self.components;
        let bad = |what: String| Err(ReproduceError::Fixture(what));
        for t in Transition::ALL {
            let v = self.variance(t)?;
            for row in [&v.x, &v.cumulative_x, &v.y, &v.cumulative_y, &v.adjusted_r2] {
                if row.len() != a {
                    return bad(format!("{}: variance rows need {a} cells", t.slug()));
                }
            }
            for (name, m) in [("weights", self.weights(t)?), ("loadings", self.loadings(t)?)] {
                if m.columns.len() != a || m.dependent.len() != a || m.columns.iter().any(|c| c.len() != 5) {
                    return bad(format!("{}: {name} must be 5 x {a} plus a dependent row", t.slug()));
                }
            }
            let vip = self.vip(t)?;
            if vip.len() != a || vip.iter().any(|c| c.len() != 5) {
                return bad(format!("{}: vip must be 5 x {a}", t.slug()));
            }
            if self.coefficients(t)?.coefficients.len() != 5 {
                return bad(format!("{}: coefficients need 5 cells", t.slug()));
            }
        }
        Ok(())
    }

    pub fn variance(&self, t: Transition) -> Result<&GoldenVariance, ReproduceError> {
        entry(&self.variance, "variance", t)
    }

    pub fn weights(&self, t: Transition) -> Result<&GoldenMatrix, ReproduceError> {
        entry(&self.weights, "weights", t)
    }

    pub fn loadings(&self, t: Transition) -> Result<&GoldenMatrix, ReproduceError> {
        entry(&self.loadings, "loadings", t)
    }

    pub fn vip(&self, t: Transition) -> Result<&Vec<Vec<f64>>, ReproduceError> {
        entry(&self.vip, "vip", t)
    }

    pub fn coefficients(&self, t: Transition) -> Result<&GoldenCoefficients, ReproduceError> {
        entry(&self.coefficients, "coefficients", t)
    }
}
