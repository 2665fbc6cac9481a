//! MS MARCO style passage ranking files.
//!
//! Collections and query sets are `id<TAB>text` lines; the text runs to the
//! end of the line. Run files are `qid<TAB>pid<TAB>rank` (6-column TREC runs
//! are also read). Relevance judgments are binary.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{check_tsv_field, lines, FormatError};

fn parse_id_text(bytes: &[u8]) -> Result<IndexMap<String, String>, FormatError> {
    let text = std::str::from_utf8(bytes)?;
    let mut map = IndexMap::new();
    for (line, row) in lines(text) {
        let (id, body) = row.split_once('\t').ok_or(FormatError::RaggedRecord {
            line,
            expected: 2,
            found: 1,
        })?;
        if map.insert(id.to_string(), body.to_string()).is_some() {
            return Err(FormatError::DuplicateId(id.to_string()));
        }
    }
    Ok(map)
}

fn write_id_text(map: &IndexMap<String, String>) -> Result<Vec<u8>, FormatError> {
    let mut out = String::new();
    for (id, text) in map {
        check_tsv_field("id", id)?;
        if text.contains('\n') {
            return Err(FormatError::Unencodable {
                field: id.clone(),
                reason: "contains a newline",
            });
        }
        out.push_str(id);
        out.push('\t');
        out.push_str(text);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

macro_rules! id_text_map {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
        pub struct $name {
            entries: IndexMap<String, String>,
        }

        impl $name {
            pub fn new() -> Self {
                Self::default()
            }

            /// Fails with [`FormatError::DuplicateId`] when `id` is present.
            pub fn insert(&mut self, id: impl Into<String>, text: impl Into<String>) -> Result<(), FormatError> {
                let id = id.into();
                if self.entries.contains_key(&id) {
                    return Err(FormatError::DuplicateId(id));
                }
                self.entries.insert(id, text.into());
                Ok(())
            }

            pub fn get(&self, id: &str) -> Option<&str> {
                self.entries.get(id).map(String::as_str)
            }

            pub fn len(&self) -> usize {
                self.entries.len()
            }

            pub fn is_empty(&self) -> bool {
                self.entries.is_empty()
            }

            /// Entries in file order.
            pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
                self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
            }
        }

        impl FromIterator<(String, String)> for $name {
            /// Later duplicates overwrite earlier ones.
            fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
                Self { entries: iter.into_iter().collect() }
            }
        }
    };
}

id_text_map!(
    /// Passage id to passage text, in file order.
    PassageCollection
);
id_text_map!(
    /// Query id to query text, in file order.
    QuerySet
);

pub fn parse_collection(bytes: &[u8]) -> Result<PassageCollection, FormatError> {
    Ok(PassageCollection {
        entries: parse_id_text(bytes)?,
    })
}

pub fn write_collection(c: &PassageCollection) -> Result<Vec<u8>, FormatError> {
    write_id_text(&c.entries)
}

pub fn parse_queries(bytes: &[u8]) -> Result<QuerySet, FormatError> {
    Ok(QuerySet {
        entries: parse_id_text(bytes)?,
    })
}

pub fn write_queries(q: &QuerySet) -> Result<Vec<u8>, FormatError> {
    write_id_text(&q.entries)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEntry {
    pub query_id: String,
    pub passage_id: String,
    /// 1-based.
    pub rank: u32,
}

/// Query id to the set of relevant passage ids.
pub type Qrels = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRunFile")]
pub struct RunFile {
    entries: Vec<RunEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgments: Option<Qrels>,
}

#[derive(Deserialize)]
struct RawRunFile {
    entries: Vec<RunEntry>,
    #[serde(default)]
    judgments: Option<Qrels>,
}

impl TryFrom<RawRunFile> for RunFile {
    type Error = FormatError;

    fn try_from(raw: RawRunFile) -> Result<Self, FormatError> {
        let (mut run, _) = RunFile::new(raw.entries)?;
        run.judgments = raw.judgments;
        Ok(run)
    }
}

/// Non-fatal findings from [`parse_run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunWarning {
    /// Ranks for this query are not exactly `1..=n`.
    NonContiguousRanks { query_id: String },
}

impl RunFile {
    /// Checks the run invariants: positive ranks, distinct within a query,
    /// no repeated `(query, passage)`.
    pub fn new(entries: Vec<RunEntry>) -> Result<(Self, Vec<RunWarning>), FormatError> {
        let mut pairs = HashSet::new();
        let mut ranks: HashMap<&str, Vec<u32>> = HashMap::new();
        for e in &entries {
            if e.rank == 0 {
                return Err(FormatError::InvalidRank {
                    line: 0,
                    value: "0".into(),
                });
            }
            if !pairs.insert((e.query_id.as_str(), e.passage_id.as_str())) {
                return Err(FormatError::DuplicateId(format!("{}\t{}", e.query_id, e.passage_id)));
            }
            ranks.entry(&e.query_id).or_default().push(e.rank);
        }
        let mut warnings = Vec::new();
        let mut order: Vec<_> = ranks.into_iter().collect();
        order.sort_by(|a, b| a.0.cmp(b.0));
        for (qid, mut rs) in order {
            rs.sort_unstable();
            if let Some(w) = rs.windows(2).find(|w| w[0] == w[1]) {
                return Err(FormatError::DuplicateRank {
                    qid: qid.to_string(),
                    rank: w[0],
                });
            }
            if rs.iter().enumerate().any(|(i, r)| *r as usize != i + 1) {
                warnings.push(RunWarning::NonContiguousRanks {
                    query_id: qid.to_string(),
                });
            }
        }
        Ok((
            Self {
                entries,
                judgments: None,
            },
            warnings,
        ))
    }

    pub fn entries(&self) -> &[RunEntry] {
        &self.entries
    }

    /// Entries for one query, best rank first.
    pub fn ranking(&self, query_id: &str) -> Vec<&RunEntry> {
        let mut hits: Vec<&RunEntry> = self.entries.iter().filter(|e| e.query_id == query_id).collect();
        hits.sort_by_key(|e| e.rank);
        hits
    }

    /// Every query id, first-seen order.
    pub fn query_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .map(|e| e.query_id.as_str())
            .filter(|q| seen.insert(*q))
            .collect()
    }

    /// Entries per query, best rank first.
    pub fn by_query(&self) -> HashMap<&str, Vec<&RunEntry>> {
        let mut map: HashMap<&str, Vec<&RunEntry>> = HashMap::new();
        for e in &self.entries {
            map.entry(&e.query_id).or_default().push(e);
        }
        for v in map.values_mut() {
            v.sort_by_key(|e| e.rank);
        }
        map
    }
}

pub fn parse_run(bytes: &[u8]) -> Result<(RunFile, Vec<RunWarning>), FormatError> {
    let text = std::str::from_utf8(bytes)?;
    let mut entries = Vec::new();
    for (line, row) in lines(text) {
        let fields: Vec<&str> = row.split_whitespace().collect();
        let (qid, pid, rank) = match fields.as_slice() {
            [q, p, r] => (*q, *p, *r),
            [q, _, p, r, _, _] => (*q, *p, *r),
            other => {
                return Err(FormatError::RaggedRecord {
                    line,
                    expected: 3,
                    found: other.len(),
                })
            }
        };
        let rank: u32 = rank
            .parse()
            .ok()
            .filter(|r| *r > 0)
            .ok_or_else(|| FormatError::InvalidRank {
                line,
                value: rank.to_string(),
            })?;
        entries.push(RunEntry {
            query_id: qid.to_string(),
            passage_id: pid.to_string(),
            rank,
        });
    }
    RunFile::new(entries)
}

pub fn write_run(run: &RunFile) -> Vec<u8> {
    let mut out = String::new();
    for e in &run.entries {
        out.push_str(&format!("{}\t{}\t{}\n", e.query_id, e.passage_id, e.rank));
    }
    out.into_bytes()
}

/// Reads `qid pid`, `qid iter pid rel` (TREC / MS MARCO qrels) lines.
/// Rows with relevance 0 are ignored.
pub fn parse_qrels(bytes: &[u8]) -> Result<Qrels, FormatError> {
    let text = std::str::from_utf8(bytes)?;
    let mut qrels = Qrels::new();
    for (line, row) in lines(text) {
        let fields: Vec<&str> = row.split_whitespace().collect();
        let (qid, pid, relevant) = match fields.as_slice() {
            [q, p] => (*q, *p, true),
            [q, _, p, rel] => {
                let rel: i64 = rel
                    .parse()
                    .map_err(|_| FormatError::MalformedSchema(format!("line {line}: relevance {rel:?}")))?;
                (*q, *p, rel > 0)
            }
            other => {
                return Err(FormatError::RaggedRecord {
                    line,
                    expected: 4,
                    found: other.len(),
                })
            }
        };
        if relevant {
            qrels.entry(qid.to_string()).or_default().insert(pid.to_string());
        }
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels) -> Vec<u8> {
    let mut out = String::new();
    for (qid, pids) in qrels {
        for pid in pids {
            out.push_str(&format!("{qid}\t0\t{pid}\t1\n"));
        }
    }
    out.into_bytes()
}
