//! Premise/hypothesis/label records.
//!
//! MNLI and ASSIN2 ship in different layouts with different label
//! vocabularies, so parsing is driven by an [`NliSchema`] that names the
//! columns (or JSON keys) and the label scheme.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_tsv_field, lines, FormatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
    /// The negative class of two-way schemes (ASSIN2).
    None,
}

impl NliLabel {
    pub const ALL: [NliLabel; 4] = [
        NliLabel::Entailment,
        NliLabel::Neutral,
        NliLabel::Contradiction,
        NliLabel::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
            NliLabel::None => "none",
        }
    }

    /// Case-insensitive match against the canonical names.
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    /// entailment / neutral / contradiction
    #[default]
    ThreeWay,
    /// entailment / none
    Binary,
}

impl LabelScheme {
    pub fn contains(self, label: NliLabel) -> bool {
        match self {
            LabelScheme::ThreeWay => label != NliLabel::None,
            LabelScheme::Binary => matches!(label, NliLabel::Entailment | NliLabel::None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliPair {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
}

/// Where each field lives in a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum NliLayout {
    /// Tab-separated columns, 0-based indices. Without an id column, ids are
    /// the 1-based record numbers.
    Tsv {
        #[serde(default)]
        header: bool,
        #[serde(default)]
        id: Option<usize>,
        premise: usize,
        hypothesis: usize,
        label: usize,
        /// Exact column count; defaults to one past the highest index used.
        #[serde(default)]
        columns: Option<usize>,
    },
    /// One JSON object per line.
    Jsonl {
        #[serde(default)]
        id: Option<String>,
        premise: String,
        hypothesis: String,
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliSchema {
    pub layout: NliLayout,
    #[serde(default)]
    pub scheme: LabelScheme,
    /// Extra raw-label spellings, checked before the canonical names
    /// (e.g. `"0" -> entailment`).
    #[serde(default)]
    pub label_names: BTreeMap<String, NliLabel>,
}

impl Default for NliSchema {
    /// `premise<TAB>hypothesis<TAB>label`, no header, three-way labels.
    fn default() -> Self {
        Self {
            layout: NliLayout::Tsv {
                header: false,
                id: None,
                premise: 0,
                hypothesis: 1,
                label: 2,
                columns: None,
            },
            scheme: LabelScheme::ThreeWay,
            label_names: BTreeMap::new(),
        }
    }
}

impl NliSchema {
    /// `id<TAB>premise<TAB>hypothesis<TAB>label` with a header row.
    pub fn with_ids(scheme: LabelScheme) -> Self {
        Self {
            layout: NliLayout::Tsv {
                header: true,
                id: Some(0),
                premise: 1,
                hypothesis: 2,
                label: 3,
                columns: None,
            },
            scheme,
            label_names: BTreeMap::new(),
        }
    }

    fn resolve_label(&self, line: usize, raw: &str) -> Result<NliLabel, FormatError> {
        let label = self
            .label_names
            .get(raw)
            .copied()
            .or_else(|| NliLabel::from_name(raw))
            .filter(|l| self.scheme.contains(*l));
        label.ok_or_else(|| FormatError::UnknownLabel {
            line,
            label: raw.to_string(),
        })
    }
}

pub fn parse_nli(bytes: &[u8], schema: &NliSchema) -> Result<Vec<NliPair>, FormatError> {
    let text = std::str::from_utf8(bytes)?;
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    match &schema.layout {
        NliLayout::Tsv {
            header,
            id,
            premise,
            hypothesis,
            label,
            columns,
        } => {
            let needed = [Some(*premise), Some(*hypothesis), Some(*label), *id]
                .into_iter()
                .flatten()
                .max()
                .unwrap_or(0)
                + 1;
            let mut records = lines(text);
            if *header {
                records.next();
            }
            for (n, (line, row)) in records.enumerate() {
                let fields: Vec<&str> = row.split('\t').collect();
                let bad_width = match columns {
                    Some(c) => fields.len() != *c,
                    None => fields.len() < needed,
                };
                if bad_width {
                    return Err(FormatError::RaggedRecord {
                        line,
                        expected: columns.unwrap_or(needed),
                        found: fields.len(),
                    });
                }
                let pair = NliPair {
                    id: id.map_or_else(|| (n + 1).to_string(), |c| fields[c].to_string()),
                    premise: fields[*premise].to_string(),
                    hypothesis: fields[*hypothesis].to_string(),
                    label: schema.resolve_label(line, fields[*label])?,
                };
                if !seen.insert(pair.id.clone()) {
                    return Err(FormatError::DuplicateId(pair.id));
                }
                pairs.push(pair);
            }
        }
        NliLayout::Jsonl {
            id,
            premise,
            hypothesis,
            label,
        } => {
            for (n, (line, row)) in lines(text).enumerate() {
                let value: serde_json::Value = serde_json::from_str(row)
                    .map_err(|e| FormatError::MalformedSchema(format!("line {line}: {e}")))?;
                let field = |key: &str| -> Result<String, FormatError> {
                    match value.get(key) {
                        Some(serde_json::Value::String(s)) => Ok(s.clone()),
                        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
                        _ => Err(FormatError::MalformedSchema(format!(
                            "line {line}: missing string field {key:?}"
                        ))),
                    }
                };
                let pair = NliPair {
                    id: match id {
                        Some(k) => field(k)?,
                        None => (n + 1).to_string(),
                    },
                    premise: field(premise)?,
                    hypothesis: field(hypothesis)?,
                    label: schema.resolve_label(line, &field(label)?)?,
                };
                if !seen.insert(pair.id.clone()) {
                    return Err(FormatError::DuplicateId(pair.id));
                }
                pairs.push(pair);
            }
        }
    }
    Ok(pairs)
}

/// Inverse of [`parse_nli`]. Labels are written with their canonical names.
pub fn write_nli(pairs: &[NliPair], schema: &NliSchema) -> Result<Vec<u8>, FormatError> {
    let mut out = String::new();
    match &schema.layout {
        NliLayout::Tsv {
            header,
            id,
            premise,
            hypothesis,
            label,
            columns,
        } => {
            let width = columns.unwrap_or_else(|| {
                [Some(*premise), Some(*hypothesis), Some(*label), *id]
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(0)
                    + 1
            });
            let mut row = vec![String::new(); width];
            if *header {
                for (i, cell) in row.iter_mut().enumerate() {
                    *cell = format!("column{i}");
                }
                if let Some(c) = id {
                    row[*c] = "id".into();
                }
                row[*premise] = "premise".into();
                row[*hypothesis] = "hypothesis".into();
                row[*label] = "label".into();
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
            for (n, pair) in pairs.iter().enumerate() {
                check_tsv_field("premise", &pair.premise)?;
                check_tsv_field("hypothesis", &pair.hypothesis)?;
                row.iter_mut().for_each(String::clear);
                match id {
                    Some(c) => {
                        check_tsv_field("id", &pair.id)?;
                        row[*c] = pair.id.clone();
                    }
                    None if pair.id != (n + 1).to_string() => {
                        return Err(FormatError::Unencodable {
                            field: "id".into(),
                            reason: "layout has no id column and ids are not record numbers",
                        })
                    }
                    None => {}
                }
                row[*premise] = pair.premise.clone();
                row[*hypothesis] = pair.hypothesis.clone();
                row[*label] = pair.label.name().to_string();
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        NliLayout::Jsonl {
            id,
            premise,
            hypothesis,
            label,
        } => {
            for pair in pairs {
                let mut obj = serde_json::Map::new();
                if let Some(k) = id {
                    obj.insert(k.clone(), pair.id.clone().into());
                }
                obj.insert(premise.clone(), pair.premise.clone().into());
                obj.insert(hypothesis.clone(), pair.hypothesis.clone().into());
                obj.insert(label.clone(), pair.label.name().into());
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    Ok(out.into_bytes())
}

/// Predicted labels as `id<TAB>label` lines, resolved like gold labels.
pub fn parse_labels(bytes: &[u8], schema: &NliSchema) -> Result<BTreeMap<String, NliLabel>, FormatError> {
    let text = std::str::from_utf8(bytes)?;
    let mut labels = BTreeMap::new();
    for (line, record) in lines(text) {
        let fields: Vec<&str> = record.split('\t').collect();
        let [id, raw] = fields[..] else {
            return Err(FormatError::RaggedRecord {
                line,
                expected: 2,
                found: fields.len(),
            });
        };
        if labels.insert(id.to_string(), schema.resolve_label(line, raw)?).is_some() {
            return Err(FormatError::DuplicateId(id.to_string()));
        }
    }
    Ok(labels)
}

/// Rewrites labels through `mapping`, e.g. contradiction -> neutral when
/// merging a three-way dataset into a two-way task. Order and size are kept.
pub fn remap_labels(
    pairs: &[NliPair],
    mapping: &BTreeMap<NliLabel, NliLabel>,
) -> Result<Vec<NliPair>, FormatError> {
    pairs
        .iter()
        .map(|p| {
            let label = *mapping.get(&p.label).ok_or(FormatError::UnmappedLabel(p.label))?;
            Ok(NliPair {
                label,
                ..p.clone()
            })
        })
        .collect()
}
