//! CSV ingestion: column selection, missing-value row drops, one-hot
//! encoding, z-scoring and sensitive-group mapping.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

pub use crate::metrics::dataset_balance;

/// Cell values treated as missing (after trimming).
pub const MISSING_TOKENS: [&str; 4] = ["", "?", "NA", "NaN"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CategoricalPolicy {
    #[default]
    OneHot,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    #[default]
    Zscore,
    None,
}

/// How raw sensitive-column values become group ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum GroupRule {
    /// One group per distinct value, ids in sorted value order.
    #[default]
    Distinct,
    /// Keep only the listed values (ids in list order); drop other rows.
    Keep { values: Vec<String> },
    /// Each inner list becomes one group; rows matching none are dropped.
    Merge { groups: Vec<Vec<String>> },
    /// Numeric column: `value >= at` is group 1, otherwise group 0.
    Threshold { at: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub delimiter: char,
    /// Explicit feature columns. `None` selects every column that is not
    /// the sensitive column, the label column, or listed in `exclude`.
    pub feature_columns: Option<Vec<String>>,
    pub exclude: Vec<String>,
    pub sensitive_column: String,
    pub label_column: Option<String>,
    pub categorical: CategoricalPolicy,
    pub scaling: Scaling,
    pub group_rule: GroupRule,
}

impl Default for IngestSpec {
    fn default() -> Self {
        Self {
            path: PathBuf::new(),
            delimiter: ',',
            feature_columns: None,
            exclude: Vec::new(),
            sensitive_column: String::new(),
            label_column: None,
            categorical: CategoricalPolicy::default(),
            scaling: Scaling::default(),
            group_rule: GroupRule::default(),
        }
    }
}

impl IngestSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub dropped_by_group_rule: usize,
    pub feature_names: Vec<String>,
    pub group_mapping: BTreeMap<String, usize>,
    pub label_mapping: Option<BTreeMap<String, usize>>,
    pub num_groups: usize,
    pub categorical: CategoricalPolicy,
    pub scaling: Scaling,
}

fn is_missing(v: &str) -> bool {
    MISSING_TOKENS.contains(&v)
}

fn column_index(headers: &[String], name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
}

fn dense_ids(values: &BTreeSet<&str>) -> BTreeMap<String, usize> {
    // Numeric values sort numerically, others lexicographically.
    let mut sorted: Vec<&str> = values.iter().copied().collect();
    if sorted.iter().all(|v| v.parse::<f64>().is_ok()) {
        sorted.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    sorted.into_iter().enumerate().map(|(i, v)| (v.to_string(), i)).collect()
}

fn group_of(rule: &GroupRule, value: &str) -> Result<Option<String>> {
    Ok(match rule {
        GroupRule::Distinct => Some(value.to_string()),
        GroupRule::Keep { values } => values.iter().any(|v| v == value).then(|| value.to_string()),
        GroupRule::Merge { groups } => groups.iter().position(|g| g.iter().any(|v| v == value)).map(|i| i.to_string()),
        GroupRule::Threshold { at } => {
            let x: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("sensitive value `{value}` is not numeric")))?;
            Some(if x >= *at { "1" } else { "0" }.to_string())
        }
    })
}

/// Loads the file named by `spec.path`.
pub fn load_csv(spec: &IngestSpec) -> Result<(Dataset, IngestReport)> {
    let file = std::fs::File::open(&spec.path)?;
    load_csv_from(file, spec)
}

/// Loads CSV text from any reader; `spec.path` is ignored.
pub fn load_csv_from<R: Read>(reader: R, spec: &IngestSpec) -> Result<(Dataset, IngestReport)> {
    if !spec.delimiter.is_ascii() {
        return Err(Error::InvalidParameter(format!("delimiter {:?} is not ASCII", spec.delimiter)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let sens = column_index(&headers, &spec.sensitive_column)?;
    let label = spec.label_column.as_deref().map(|l| column_index(&headers, l)).transpose()?;
    for name in &spec.exclude {
        column_index(&headers, name)?;
    }
    let features: Vec<usize> = match &spec.feature_columns {
        Some(cols) => cols.iter().map(|c| column_index(&headers, c)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| i != sens && Some(i) != label && !spec.exclude.contains(&headers[i]))
            .collect(),
    };
    if features.contains(&sens) {
        return Err(Error::InvalidParameter("the sensitive column cannot be a feature".into()));
    }
    if features.is_empty() {
        return Err(Error::InvalidDataset("no feature columns selected".into()));
    }

    let mut used: Vec<usize> = features.clone();
    used.push(sens);
    used.extend(label);
    let mut dropped_missing = 0;
    let mut dropped_by_group_rule = 0;
    let mut rows: Vec<(&csv::StringRecord, String)> = Vec::new();
    for rec in &records {
        if used.iter().any(|&c| is_missing(rec.get(c).unwrap_or(""))) {
            dropped_missing += 1;
            continue;
        }
        match group_of(&spec.group_rule, &rec[sens])? {
            Some(g) => rows.push((rec, g)),
            None => dropped_by_group_rule += 1,
        }
    }
    if dropped_missing > 0 {
        log::info!("dropped {dropped_missing} row(s) with missing values");
    }

    let group_mapping: BTreeMap<String, usize> = match &spec.group_rule {
        GroupRule::Keep { values } => values.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
        GroupRule::Merge { groups } => groups.iter().enumerate().map(|(i, g)| (g.join("|"), i)).collect(),
        GroupRule::Threshold { at } => [(format!("<{at}"), 0), (format!(">={at}"), 1)].into_iter().collect(),
        GroupRule::Distinct => dense_ids(&rows.iter().map(|(_, g)| g.as_str()).collect()),
    };
    let groups: Vec<usize> = rows
        .iter()
        .map(|(_, g)| match &spec.group_rule {
            GroupRule::Distinct | GroupRule::Keep { .. } => group_mapping[g],
            _ => g.parse().expect("rule-generated group id"),
        })
        .collect();
    let num_groups = groups.iter().collect::<BTreeSet<_>>().len();
    if num_groups < 2 {
        return Err(Error::InvalidDataset(format!("sensitive column resolves to {num_groups} group(s); need at least 2")));
    }

    let label_mapping = label.map(|l| dense_ids(&rows.iter().map(|(r, _)| &r[l]).collect()));
    let truth = label.map(|l| {
        let map = label_mapping.as_ref().unwrap();
        rows.iter().map(|(r, _)| map[&r[l]]).collect::<Vec<_>>()
    });

    // Build columns, expanding categoricals.
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut feature_names = Vec::new();
    for &c in &features {
        let parsed: Option<Vec<f64>> = rows.iter().map(|(r, _)| r[c].parse::<f64>().ok()).collect();
        match parsed {
            Some(col) if col.iter().all(|v| v.is_finite()) => {
                columns.push(col);
                feature_names.push(headers[c].clone());
            }
            _ => {
                if spec.categorical == CategoricalPolicy::Reject {
                    let bad = rows.iter().map(|(r, _)| &r[c]).find(|v| v.parse::<f64>().is_err()).unwrap_or("");
                    return Err(Error::Parse(format!("column `{}` has non-numeric value `{bad}`", headers[c])));
                }
                let levels: BTreeSet<&str> = rows.iter().map(|(r, _)| &r[c]).collect();
                for level in levels {
                    columns.push(rows.iter().map(|(r, _)| if &r[c] == level { 1.0 } else { 0.0 }).collect());
                    feature_names.push(format!("{}={level}", headers[c]));
                }
            }
        }
    }
    if spec.scaling == Scaling::Zscore {
        for (col, name) in columns.iter_mut().zip(&feature_names) {
            zscore(col, name);
        }
    }

    let n = rows.len();
    let d = columns.len();
    let mut points = Vec::with_capacity(n * d);
    for i in 0..n {
        points.extend(columns.iter().map(|col| col[i]));
    }
    let dataset = Dataset::new(points, d, groups, truth)?;
    let report = IngestReport {
        rows_read: records.len(),
        dropped_missing,
        dropped_by_group_rule,
        feature_names,
        group_mapping,
        label_mapping,
        num_groups,
        categorical: spec.categorical,
        scaling: spec.scaling,
    };
    Ok((dataset, report))
}

/// Centers to mean 0 and scales to population standard deviation 1.
/// Constant columns become all zeros.
fn zscore(col: &mut [f64], name: &str) {
    let n = col.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    } else {
        log::warn!("column `{name}` is constant; z-scored to zeros");
        col.iter_mut().for_each(|v| *v = 0.0);
    }
}
