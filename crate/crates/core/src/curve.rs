use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Axis hints for plotting a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotHints {
    pub x_column: String,
    pub y_columns: Vec<String>,
    pub x_log: bool,
    pub y_log: bool,
    pub x_label: String,
    pub y_label: String,
}

/// Tabular output of a sweep: named columns, rows of reals, and a metadata
/// block describing the run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentCurve {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    metadata: BTreeMap<String, String>,
    plot: Option<PlotHints>,
}

impl ExperimentCurve {
    pub fn new<S: Into<String>>(experiment: &str, columns: impl IntoIterator<Item = S>) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("experiment".to_string(), experiment.to_string());
        metadata.insert(
            "engine_version".to_string(),
            crate::ENGINE_VERSION.to_string(),
        );
        ExperimentCurve {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata,
            plot: None,
        }
    }

    /// Rebuilds a curve from parsed parts, checking row arity.
    pub fn from_parts(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut curve = ExperimentCurve {
            columns,
            rows: Vec::new(),
            metadata,
            plot: None,
        };
        for row in rows {
            curve.push_row(row)?;
        }
        Ok(curve)
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invariant(
                "curve row arity",
                format!(
                    "row has {} values, header has {}",
                    row.len(),
                    self.columns.len()
                ),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn with_plot(mut self, plot: PlotHints) -> Self {
        self.plot = Some(plot);
        self
    }

    pub fn set_plot(&mut self, plot: PlotHints) {
        self.plot = Some(plot);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn plot(&self) -> Option<&PlotHints> {
        self.plot.as_ref()
    }

    pub fn experiment(&self) -> &str {
        self.metadata
            .get("experiment")
            .map(String::as_str)
            .unwrap_or("")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}
