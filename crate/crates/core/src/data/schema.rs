use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Binary,
    Nominal,
    Ordinal,
}

/// One feature column. For ordinal and binary columns `levels` is the
/// severity order (code 0 first); for nominal columns it is the closed set
/// of admissible values and codes follow first appearance in the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    /// `[negative, positive]`.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
    pub target: TargetSpec,
    /// Header spellings accepted in place of a canonical column name.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl FeatureSchema {
    pub fn from_json_str(text: &str) -> Result<Self, DataError> {
        let schema: Self =
            serde_json::from_str(text).map_err(|e| DataError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.target.levels.len() != 2 {
            return Err(DataError::Schema(format!(
                "target `{}` must be binary",
                self.target.name
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for col in &self.columns {
            if col.name == self.target.name {
                return Err(DataError::Schema(format!(
                    "`{}` is declared as both feature and target",
                    col.name
                )));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate column `{}`", col.name)));
            }
            let n_levels = col.levels.len();
            let ok = match col.kind {
                ColumnKind::Numeric => n_levels == 0,
                ColumnKind::Binary => n_levels == 2,
                ColumnKind::Nominal | ColumnKind::Ordinal => n_levels >= 2,
            };
            if !ok {
                return Err(DataError::Schema(format!(
                    "column `{}` of kind {:?} declares {} level(s)",
                    col.name, col.kind, n_levels
                )));
            }
            let distinct: std::collections::BTreeSet<_> = col.levels.iter().collect();
            if distinct.len() != n_levels {
                return Err(DataError::Schema(format!(
                    "column `{}` repeats a level",
                    col.name
                )));
            }
        }
        Ok(())
    }

    /// Canonical name for a header cell, honoring the alias map.
    pub fn resolve<'a>(&'a self, header: &'a str) -> &'a str {
        let trimmed = header.trim();
        self.aliases
            .get(trimmed)
            .map(String::as_str)
            .unwrap_or(trimmed)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary_target() {
        let text = r#"{"columns":[{"name":"a","kind":"numeric"}],
                       "target":{"name":"y","levels":["x"]}}"#;
        assert!(matches!(
            FeatureSchema::from_json_str(text),
            Err(DataError::Schema(_))
        ));
    }

    #[test]
    fn rejects_ordinal_without_levels() {
        let text = r#"{"columns":[{"name":"a","kind":"ordinal"}],
                       "target":{"name":"y","levels":["n","p"]}}"#;
        assert!(FeatureSchema::from_json_str(text).is_err());
    }

    #[test]
    fn alias_resolution() {
        let text = r#"{"columns":[{"name":"Goiter","kind":"nominal","levels":["a","b"]}],
                       "target":{"name":"y","levels":["n","p"]},
                       "aliases":{"Physical Examination":"Goiter"}}"#;
        let schema = FeatureSchema::from_json_str(text).unwrap();
        assert_eq!(schema.resolve("Physical Examination"), "Goiter");
        assert_eq!(schema.resolve(" Goiter "), "Goiter");
    }
}
