//! Experiment data model: condition taxonomy, idea records and corpus indexing.
//!
//! A corpus is a JSON-Lines file with one [`IdeaRecord`] per line. Records are
//! grouped into condition cells keyed by `(group, class, model)`; the cells
//! partition the corpus and are what the diversity metric is evaluated over.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    InvalidField {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate record id `{id}`")]
    DuplicateId { id: String },
    #[error("unknown {kind} `{value}`")]
    UnknownValue { kind: &'static str, value: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Experimental group. G1 is zero-shot, G2 chain-of-thought, G3 zero-shot
/// with a varying number of participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    G1,
    G2,
    G3,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::G1, Group::G2, Group::G3];

    pub fn strategy(self) -> Strategy {
        match self {
            Group::G1 | Group::G3 => Strategy::ZeroShot,
            Group::G2 => Strategy::Cot,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::G1 => "G1",
            Group::G2 => "G2",
            Group::G3 => "G3",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "G1" => Ok(Group::G1),
            "G2" => Ok(Group::G2),
            "G3" => Ok(Group::G3),
            other => Err(CorpusError::UnknownValue {
                kind: "group",
                value: other.to_string(),
            }),
        }
    }
}

/// Generation class: brainwrite with/without background (`bk`/`raw`) or the
/// independent single-shot baselines (`spbk`/`spraw`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdeaClass {
    Bk,
    Raw,
    Spbk,
    Spraw,
}

impl IdeaClass {
    pub const ALL: [IdeaClass; 4] = [
        IdeaClass::Bk,
        IdeaClass::Raw,
        IdeaClass::Spbk,
        IdeaClass::Spraw,
    ];

    /// True for the `sp*` classes, which generate independently with no sheet passing.
    pub fn is_independent(self) -> bool {
        matches!(self, IdeaClass::Spbk | IdeaClass::Spraw)
    }

    pub fn has_background(self) -> bool {
        matches!(self, IdeaClass::Bk | IdeaClass::Spbk)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IdeaClass::Bk => "bk",
            IdeaClass::Raw => "raw",
            IdeaClass::Spbk => "spbk",
            IdeaClass::Spraw => "spraw",
        }
    }
}

impl fmt::Display for IdeaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdeaClass {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bk" => Ok(IdeaClass::Bk),
            "raw" => Ok(IdeaClass::Raw),
            "spbk" => Ok(IdeaClass::Spbk),
            "spraw" => Ok(IdeaClass::Spraw),
            other => Err(CorpusError::UnknownValue {
                kind: "class",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    Cot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    MathematicalSciences,
    Finance,
    Philosophy,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::MathematicalSciences => "mathematical_sciences",
            Domain::Finance => "finance",
            Domain::Philosophy => "philosophy",
        }
    }
}

/// Full experimental condition of a record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCondition", into = "RawCondition")]
pub struct ConditionKey {
    pub group: Group,
    pub class: IdeaClass,
    pub model: String,
    pub participants: u32,
}

impl ConditionKey {
    pub fn new(group: Group, class: IdeaClass, model: impl Into<String>, participants: u32) -> Self {
        Self {
            group,
            class,
            model: model.into(),
            participants,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.group.strategy()
    }

    pub fn cell(&self) -> CellKey {
        CellKey {
            group: self.group,
            class: self.class,
            model: self.model.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawCondition {
    group: Group,
    class: IdeaClass,
    model: String,
    participants: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strategy: Option<Strategy>,
}

impl TryFrom<RawCondition> for ConditionKey {
    type Error = String;

    fn try_from(raw: RawCondition) -> Result<Self, Self::Error> {
        if raw.participants == 0 {
            return Err("participants must be at least 1".into());
        }
        if raw.model.is_empty() {
            return Err("model must be non-empty".into());
        }
        if let Some(strategy) = raw.strategy {
            if strategy != raw.group.strategy() {
                return Err(format!(
                    "strategy {:?} contradicts group {}",
                    strategy, raw.group
                ));
            }
        }
        Ok(ConditionKey {
            group: raw.group,
            class: raw.class,
            model: raw.model,
            participants: raw.participants,
        })
    }
}

impl From<ConditionKey> for RawCondition {
    fn from(key: ConditionKey) -> Self {
        let strategy = Some(key.strategy());
        RawCondition {
            group: key.group,
            class: key.class,
            model: key.model,
            participants: key.participants,
            strategy,
        }
    }
}

/// Projection of a condition onto the `(group, class, model)` cell used for partitioning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub group: Group,
    pub class: IdeaClass,
    pub model: String,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.group, self.class, self.model)
    }
}

/// One agent contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdeaRecord {
    pub id: String,
    pub topic_id: String,
    pub domain: Domain,
    pub condition: ConditionKey,
    pub round: u32,
    pub agent: u32,
    pub lang: String,
    pub text: String,
}

/// Parses a JSON-Lines corpus. Blank lines are skipped; line numbers are 1-based.
pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<IdeaRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { id: record.id });
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_line(line: &str, line_no: usize) -> Result<IdeaRecord, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::MalformedJson {
            line: line_no,
            message: e.to_string(),
        })?;
    if !value.is_object() {
        return Err(CorpusError::MalformedJson {
            line: line_no,
            message: "expected a JSON object".into(),
        });
    }
    serde_path_to_error::deserialize::<_, IdeaRecord>(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let field = if path == "." {
            missing_field_name(&inner).unwrap_or_else(|| path.clone())
        } else {
            path
        };
        CorpusError::InvalidField {
            line: line_no,
            field,
            message: inner,
        }
    })
}

fn missing_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next().map(str::to_string)
}

pub fn write_records<W: Write>(mut writer: W, records: &[IdeaRecord]) -> Result<(), CorpusError> {
    for record in records {
        let line = serde_json::to_string(record).expect("records always serialize");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Records grouped by cell and by topic.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    records: Vec<IdeaRecord>,
    positions: BTreeMap<String, usize>,
    pub cells: BTreeMap<CellKey, Vec<String>>,
    pub by_topic: BTreeMap<String, Vec<String>>,
}

impl CorpusIndex {
    pub fn records(&self) -> &[IdeaRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&IdeaRecord> {
        self.positions.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record ids of one group, in corpus order.
    pub fn group_ids(&self, group: Group) -> Vec<String> {
        self.records
            .iter()
            .filter(|r| r.condition.group == group)
            .map(|r| r.id.clone())
            .collect()
    }

    pub fn groups(&self) -> BTreeSet<Group> {
        self.records.iter().map(|r| r.condition.group).collect()
    }
}

/// Partitions records into `(group, class, model)` cells.
pub fn partition(records: Vec<IdeaRecord>) -> Result<CorpusIndex, CorpusError> {
    let mut index = CorpusIndex::default();
    for (pos, record) in records.iter().enumerate() {
        if index.positions.insert(record.id.clone(), pos).is_some() {
            return Err(CorpusError::DuplicateId {
                id: record.id.clone(),
            });
        }
        index
            .cells
            .entry(record.condition.cell())
            .or_default()
            .push(record.id.clone());
        index
            .by_topic
            .entry(record.topic_id.clone())
            .or_default()
            .push(record.id.clone());
    }
    index.records = records;
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    EmptyCell,
    MissingTopic,
    AgentOutOfRange,
    RoundInconsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    pub detail: String,
    pub record_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

/// Reports structural problems without touching the index.
///
/// The expected cell grid is every class crossed with every model seen in a
/// group; the expected topic set is every topic seen anywhere in the corpus.
pub fn validate_corpus(index: &CorpusIndex) -> ValidationReport {
    let mut issues = Vec::new();

    let mut models_by_group: BTreeMap<Group, BTreeSet<&str>> = BTreeMap::new();
    for record in index.records() {
        models_by_group
            .entry(record.condition.group)
            .or_default()
            .insert(record.condition.model.as_str());
    }
    for (group, models) in &models_by_group {
        for class in IdeaClass::ALL {
            for model in models {
                let key = CellKey {
                    group: *group,
                    class,
                    model: (*model).to_string(),
                };
                if !index.cells.contains_key(&key) {
                    issues.push(ValidationIssue {
                        kind: IssueKind::EmptyCell,
                        detail: format!("cell {key} has no records"),
                        record_ids: Vec::new(),
                    });
                }
            }
        }
    }

    let topics: BTreeSet<&str> = index.by_topic.keys().map(String::as_str).collect();
    for (key, ids) in &index.cells {
        let present: BTreeSet<&str> = ids
            .iter()
            .filter_map(|id| index.get(id))
            .map(|r| r.topic_id.as_str())
            .collect();
        for topic in topics.difference(&present) {
            issues.push(ValidationIssue {
                kind: IssueKind::MissingTopic,
                detail: format!("topic {topic} missing from cell {key}"),
                record_ids: Vec::new(),
            });
        }
    }

    for record in index.records() {
        let cond = &record.condition;
        if record.agent >= cond.participants {
            issues.push(ValidationIssue {
                kind: IssueKind::AgentOutOfRange,
                detail: format!(
                    "agent {} not below participants {}",
                    record.agent, cond.participants
                ),
                record_ids: vec![record.id.clone()],
            });
        }
        let bad_round = if cond.class.is_independent() {
            record.round != 1
        } else {
            record.round < 1
        };
        if bad_round {
            issues.push(ValidationIssue {
                kind: IssueKind::RoundInconsistency,
                detail: format!("round {} invalid for class {}", record.round, cond.class),
                record_ids: vec![record.id.clone()],
            });
        }
    }

    ValidationReport { issues }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, topic: &str, group: Group, class: IdeaClass, model: &str) -> IdeaRecord {
        IdeaRecord {
            id: id.into(),
            topic_id: topic.into(),
            domain: Domain::Finance,
            condition: ConditionKey::new(group, class, model, 2),
            round: 1,
            agent: 0,
            lang: "en".into(),
            text: format!("idea {id}"),
        }
    }

    fn balanced() -> Vec<IdeaRecord> {
        let mut out = Vec::new();
        for topic in ["t1", "t2"] {
            for class in IdeaClass::ALL {
                for model in ["flash", "air", "plus"] {
                    out.push(record(
                        &format!("{topic}-{class}-{model}"),
                        topic,
                        Group::G1,
                        class,
                        model,
                    ));
                }
            }
        }
        out
    }

    #[test]
    fn parses_single_valid_line() {
        let line = r#"{"id":"a","topic_id":"t1","domain":"finance","condition":{"group":"G1","class":"bk","model":"flash","participants":3},"round":1,"agent":0,"lang":"en","text":"hello"}"#;
        let records = parse_records(line.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].condition.class, IdeaClass::Bk);
        assert_eq!(records[0].condition.strategy(), Strategy::ZeroShot);
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        assert!(parse_records(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn unknown_class_names_line_and_field() {
        let good = serde_json::to_string(&record("a", "t", Group::G1, IdeaClass::Bk, "m")).unwrap();
        let bad = good.replace("\"bk\"", "\"xyz\"").replace("\"a\"", "\"b\"");
        let input = format!("{good}\n{bad}\n");
        match parse_records(input.as_bytes()).unwrap_err() {
            CorpusError::InvalidField { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "condition.class");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let line = r#"{"id":"a","topic_id":"t1","domain":"finance","condition":{"group":"G1","class":"bk","model":"flash","participants":3},"round":1,"agent":0,"lang":"en"}"#;
        match parse_records(line.as_bytes()).unwrap_err() {
            CorpusError::InvalidField { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, "text");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_json_and_duplicates_rejected() {
        assert!(matches!(
            parse_records(&b"{not json"[..]),
            Err(CorpusError::MalformedJson { line: 1, .. })
        ));
        let a = serde_json::to_string(&record("a", "t", Group::G1, IdeaClass::Bk, "m")).unwrap();
        let input = format!("{a}\n{a}\n");
        assert!(matches!(
            parse_records(input.as_bytes()),
            Err(CorpusError::DuplicateId { .. })
        ));
    }

    #[test]
    fn contradictory_strategy_rejected() {
        let line = r#"{"id":"a","topic_id":"t1","domain":"finance","condition":{"group":"G1","class":"bk","model":"flash","participants":3,"strategy":"cot"},"round":1,"agent":0,"lang":"en","text":"x"}"#;
        assert!(matches!(
            parse_records(line.as_bytes()),
            Err(CorpusError::InvalidField { .. })
        ));
    }

    #[test]
    fn partition_splits_by_class() {
        let records = vec![
            record("a", "t", Group::G1, IdeaClass::Bk, "flash"),
            record("b", "t", Group::G1, IdeaClass::Raw, "flash"),
        ];
        let index = partition(records).unwrap();
        assert_eq!(index.cells.len(), 2);
        assert!(index.cells.values().all(|ids| ids.len() == 1));
        assert_eq!(index.by_topic["t"].len(), 2);
    }

    #[test]
    fn partition_of_full_grid_has_twelve_singletons() {
        let records: Vec<_> = balanced().into_iter().filter(|r| r.topic_id == "t1").collect();
        let index = partition(records).unwrap();
        assert_eq!(index.cells.len(), 12);
        assert!(index.cells.values().all(|ids| ids.len() == 1));
    }

    #[test]
    fn partition_empty_and_duplicate() {
        assert!(partition(Vec::new()).unwrap().cells.is_empty());
        let dup = vec![
            record("a", "t", Group::G1, IdeaClass::Bk, "flash"),
            record("a", "t", Group::G1, IdeaClass::Raw, "flash"),
        ];
        assert!(matches!(partition(dup), Err(CorpusError::DuplicateId { .. })));
    }

    #[test]
    fn balanced_fixture_validates_clean() {
        let index = partition(balanced()).unwrap();
        assert!(validate_corpus(&index).is_clean());
    }

    #[test]
    fn missing_topic_reported_once() {
        let records: Vec<_> = balanced()
            .into_iter()
            .filter(|r| r.id != "t2-bk-flash")
            .collect();
        let report = validate_corpus(&partition(records).unwrap());
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].kind, IssueKind::MissingTopic);
        assert!(report.issues[0].detail.contains("G1/bk/flash"));
    }

    #[test]
    fn sp_round_violation_reported() {
        let mut records = balanced();
        let target = records
            .iter_mut()
            .find(|r| r.condition.class == IdeaClass::Spraw)
            .unwrap();
        target.round = 3;
        let id = target.id.clone();
        let report = validate_corpus(&partition(records).unwrap());
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].kind, IssueKind::RoundInconsistency);
        assert_eq!(report.issues[0].record_ids, vec![id]);
    }

    #[test]
    fn agent_out_of_range_reported() {
        let mut records = balanced();
        records[0].agent = 2;
        let report = validate_corpus(&partition(records).unwrap());
        assert_eq!(report.count(IssueKind::AgentOutOfRange), 1);
    }

    #[test]
    fn validation_report_json_shape() {
        let report = ValidationReport {
            issues: vec![ValidationIssue {
                kind: IssueKind::MissingTopic,
                detail: "d".into(),
                record_ids: vec!["x".into()],
            }],
        };
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["issues"][0]["kind"], "missing_topic");
        assert_eq!(json["issues"][0]["record_ids"][0], "x");
    }
}
