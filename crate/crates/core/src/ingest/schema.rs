//! Declarative feature schema, read from TOML.
//!
//! ```toml
//! duration_column = "Reproduction Days"
//! event_column = "Reproduced"
//! page_column = "Pages"
//!
//! [[feature]]
//! source = "Number of Equations"   # CSV header
//! encoding = "per_page"            # numeric | per_page | ordinal | one_hot
//! column = "Normalized Number of Equations"
//!
//! [[feature]]
//! source = "Paper Readability"
//! encoding = "ordinal"
//! mapping = { Low = 0, Ok = 1, Good = 2, Excellent = 3 }
//!
//! [[feature]]
//! source = "Rigor vs Empirical"
//! encoding = "one_hot"
//! categories = ["Balance", "Empirical", "Theory"]
//! aliases = { Balanced = "Balance" }
//! ```
//!
//! `name` labels the feature in per-feature reports and defaults to `source`.
//! `column` names the encoded column; one-hot columns are `<column>_<category>`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PAPER_ONE_HOT: &str = include_str!("../../schemas/paper_one_hot.toml");
const PAPER_ORDINAL: &str = include_str!("../../schemas/paper_ordinal.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum Encoding {
    Numeric,
    /// Divided by the raw page count of the same row.
    PerPage,
    Ordinal { mapping: BTreeMap<String, f64> },
    OneHot { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(flatten)]
    pub encoding: Encoding,
    /// Raw spellings rewritten before lookup, e.g. `None -> No`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, String>,
}

impl FeatureSpec {
    pub fn feature_name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.source)
    }

    fn column_stem(&self) -> String {
        match (&self.column, &self.encoding) {
            (Some(c), _) => c.clone(),
            (None, Encoding::PerPage) => format!("Normalized {}", self.feature_name()),
            (None, _) => self.feature_name().to_string(),
        }
    }

    /// Encoded column names this feature produces, in order.
    pub fn column_names(&self) -> Vec<String> {
        let stem = self.column_stem();
        match &self.encoding {
            Encoding::OneHot { categories } => {
                categories.iter().map(|c| format!("{stem}_{c}")).collect()
            }
            _ => vec![stem],
        }
    }

    pub(crate) fn canonical<'a>(&'a self, raw: &'a str) -> &'a str {
        self.aliases.get(raw).map(String::as_str).unwrap_or(raw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    pub duration_column: String,
    pub event_column: String,
    /// Raw page count used by `per_page` features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_column: Option<String>,
    #[serde(rename = "feature")]
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("schema: {e}")))
    }

    /// One-hot encoding of every categorical feature; 34 columns. Used by the
    /// linear Cox and logistic models.
    pub fn paper_one_hot() -> Self {
        Self::from_toml_str(PAPER_ONE_HOT).expect("bundled schema is valid")
    }

    /// Readability, algorithm difficulty and pseudo code as ordinals, the
    /// rest as in [`FeatureSchema::paper_one_hot`]. Used by the boosted model.
    pub fn paper_ordinal() -> Self {
        Self::from_toml_str(PAPER_ORDINAL).expect("bundled schema is valid")
    }

    pub fn column_names(&self) -> Vec<String> {
        self.features.iter().flat_map(|f| f.column_names()).collect()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names().len()
    }

    /// Every CSV header the schema reads.
    pub fn required_columns(&self) -> Vec<&str> {
        let mut cols = vec![self.duration_column.as_str(), self.event_column.as_str()];
        if let Some(p) = &self.page_column {
            cols.push(p);
        }
        for f in &self.features {
            if !cols.contains(&f.source.as_str()) {
                cols.push(&f.source);
            }
        }
        cols
    }

    fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("schema lists no features".into()));
        }
        let needs_pages = self
            .features
            .iter()
            .any(|f| matches!(f.encoding, Encoding::PerPage));
        if needs_pages && self.page_column.is_none() {
            return Err(Error::Config(
                "per_page features need `page_column` to be set".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &self.features {
            match &f.encoding {
                Encoding::OneHot { categories } if categories.is_empty() => {
                    return Err(Error::Config(format!("`{}`: empty category list", f.source)));
                }
                Encoding::Ordinal { mapping } if mapping.is_empty() => {
                    return Err(Error::Config(format!("`{}`: empty ordinal mapping", f.source)));
                }
                Encoding::Ordinal { mapping } if mapping.values().any(|v| !v.is_finite()) => {
                    return Err(Error::Config(format!("`{}`: non-finite ordinal level", f.source)));
                }
                _ => {}
            }
            for c in f.column_names() {
                if !seen.insert(c.clone()) {
                    return Err(Error::Config(format!("duplicate encoded column `{c}`")));
                }
            }
        }
        Ok(())
    }
}
