//! Case representation: the (problem, solution, outcome, metadata) tuple and
//! the extraction steps that turn a raw record line into a structured case.
//!
//! Record lines look like
//!
//! ```text
//! problem: a=1; b=x | solution: move(a); drop(a) | outcome: success=0.8; cost=4
//! ```
//!
//! with optional `provenance:` and `tags:` sections.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grammar::{self, is_decimal, is_symbol, quote, split_items, split_pair, unquote};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Number(f64),
    Bool(bool),
    Symbol(String),
    Text(String),
}

impl FeatureValue {
    pub fn parse(token: &str) -> Result<Self> {
        let token = token.trim();
        if token.starts_with('"') {
            return unquote(token)
                .map(FeatureValue::Text)
                .ok_or_else(|| Error::malformed(format!("bad quoted text {token}")));
        }
        if is_decimal(token) {
            let n: f64 = token.parse().map_err(|_| Error::malformed(format!("bad number `{token}`")))?;
            if !n.is_finite() {
                return Err(Error::OutOfRange { what: "number".into(), value: n });
            }
            return Ok(FeatureValue::Number(n));
        }
        match token {
            "true" => Ok(FeatureValue::Bool(true)),
            "false" => Ok(FeatureValue::Bool(false)),
            "" => Err(Error::malformed("empty value")),
            t if is_symbol(t) => Ok(FeatureValue::Symbol(t.to_string())),
            t if t.contains(char::is_whitespace) && !t.contains(|c: char| "();|=\",".contains(c)) => {
                Ok(FeatureValue::Text(t.to_string()))
            }
            t => Err(Error::malformed(format!("cannot parse value `{t}`"))),
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            FeatureValue::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Number(n) => write!(f, "{n}"),
            FeatureValue::Bool(b) => write!(f, "{b}"),
            FeatureValue::Symbol(s) => f.write_str(s),
            FeatureValue::Text(t) => f.write_str(&quote(t)),
        }
    }
}

/// Problem features keyed by name. Iteration is lexicographic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMap(BTreeMap<String, FeatureValue>);

impl FeatureMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `name=value; name=value`. An empty string yields an empty map.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in split_items(text, ';')? {
            let (name, value) =
                split_pair(item, '=').ok_or_else(|| Error::malformed(format!("feature `{item}` lacks `=`")))?;
            if !is_symbol(name) {
                return Err(Error::malformed(format!("invalid feature name `{name}`")));
            }
            let value = FeatureValue::parse(value)?;
            if map.insert(name.to_string(), value).is_some() {
                return Err(Error::DuplicateFeature(name.to_string()));
            }
        }
        Ok(FeatureMap(map))
    }

    pub fn insert(&mut self, name: impl Into<String>, value: FeatureValue) -> Option<FeatureValue> {
        self.0.insert(name.into(), value)
    }

    pub fn get(&self, name: &str) -> Option<&FeatureValue> {
        self.0.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FeatureValue)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(String, FeatureValue)> for FeatureMap {
    fn from_iter<I: IntoIterator<Item = (String, FeatureValue)>>(iter: I) -> Self {
        FeatureMap(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionStep {
    pub action: String,
    pub args: Vec<FeatureValue>,
}

impl SolutionStep {
    pub fn new(action: impl Into<String>, args: Vec<FeatureValue>) -> Self {
        SolutionStep { action: action.into(), args }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (head, args) = grammar::parse_call(text)?;
        let args = args.into_iter().map(FeatureValue::parse).collect::<Result<_>>()?;
        Ok(SolutionStep { action: head.to_string(), args })
    }
}

impl fmt::Display for SolutionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.action)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Ordered action steps. May be empty only transiently (queries, adaptation
/// intermediates); retained cases always carry at least one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionPlan {
    pub steps: Vec<SolutionStep>,
}

impl SolutionPlan {
    pub fn new(steps: Vec<SolutionStep>) -> Self {
        SolutionPlan { steps }
    }

    /// Parses `action(args); action(args)`. Empty input gives an empty plan.
    pub fn parse(text: &str) -> Result<Self> {
        let steps = split_items(text, ';')?.into_iter().map(SolutionStep::parse).collect::<Result<_>>()?;
        Ok(SolutionPlan { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.action.as_str())
    }
}

impl fmt::Display for SolutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub success: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl Default for OutcomeRecord {
    fn default() -> Self {
        OutcomeRecord { success: 1.0, metrics: BTreeMap::new() }
    }
}

impl OutcomeRecord {
    pub fn new(success: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&success) {
            return Err(Error::OutOfRange { what: "success".into(), value: success });
        }
        Ok(OutcomeRecord { success, metrics: BTreeMap::new() })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = OutcomeRecord::default();
        let mut seen = BTreeSet::new();
        for item in split_items(text, ';')? {
            let (name, value) =
                split_pair(item, '=').ok_or_else(|| Error::malformed(format!("outcome `{item}` lacks `=`")))?;
            if !seen.insert(name) {
                return Err(Error::DuplicateFeature(name.to_string()));
            }
            let n = match FeatureValue::parse(value)? {
                FeatureValue::Number(n) => n,
                _ => return Err(Error::malformed(format!("outcome `{name}` is not a number"))),
            };
            if name == "success" {
                if !(0.0..=1.0).contains(&n) {
                    return Err(Error::OutOfRange { what: "success".into(), value: n });
                }
                out.success = n;
            } else if is_symbol(name) {
                out.metrics.insert(name.to_string(), n);
            } else {
                return Err(Error::malformed(format!("invalid metric name `{name}`")));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for OutcomeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "success={}", self.success)?;
        for (k, v) in &self.metrics {
            write!(f, "; {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CaseId(pub String);

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CaseId {
    fn from(s: &str) -> Self {
        CaseId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetadata {
    pub id: CaseId,
    pub created_at: u64,
    pub provenance: String,
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub problem: FeatureMap,
    pub solution: SolutionPlan,
    pub outcome: OutcomeRecord,
    pub meta: CaseMetadata,
}

impl Case {
    /// Renders the case as a record line that [`RawCaseRecord::parse_line`]
    /// and [`build_case`] read back to an equal case (given the same tick).
    pub fn to_record_line(&self) -> String {
        render_content(&self.problem, &self.solution, &self.outcome, &self.meta.provenance, &self.meta.tags)
    }
}

fn render_content(
    problem: &FeatureMap,
    solution: &SolutionPlan,
    outcome: &OutcomeRecord,
    provenance: &str,
    tags: &BTreeSet<String>,
) -> String {
    let mut line = format!("problem: {problem} | solution: {solution} | outcome: {outcome}");
    if !provenance.is_empty() {
        line.push_str(" | provenance: ");
        line.push_str(&quote(provenance));
    }
    if !tags.is_empty() {
        line.push_str(" | tags: ");
        line.push_str(&tags.iter().cloned().collect::<Vec<_>>().join(", "));
    }
    line
}

const SECTIONS: &[&str] = &["problem", "solution", "outcome", "provenance", "tags"];

/// An unparsed record: section name to section body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCaseRecord {
    sections: BTreeMap<String, String>,
}

impl RawCaseRecord {
    pub fn parse_line(line: &str) -> Result<Self> {
        let mut sections = BTreeMap::new();
        for part in grammar::split_items(line, '|')? {
            let (name, body) =
                part.split_once(':').ok_or_else(|| Error::malformed(format!("section `{part}` lacks `name:`")))?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::malformed(format!("unknown section `{name}`")));
            }
            if sections.insert(name.to_string(), body.trim().to_string()).is_some() {
                return Err(Error::malformed(format!("section `{name}` repeated")));
            }
        }
        if !sections.contains_key("problem") {
            return Err(Error::malformed("record has no problem section"));
        }
        Ok(RawCaseRecord { sections })
    }

    pub fn from_sections<I, K, V>(iter: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        RawCaseRecord { sections: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect() }
    }

    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections.get(name).map(String::as_str)
    }

    fn canonical_text(&self) -> String {
        self.sections.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join("|")
    }
}

pub fn extract_problem(raw: &RawCaseRecord) -> Result<FeatureMap> {
    let text = raw.section("problem").ok_or_else(|| Error::malformed("record has no problem section"))?;
    FeatureMap::parse(text)
}

pub fn extract_solution(raw: &RawCaseRecord) -> Result<SolutionPlan> {
    let plan = SolutionPlan::parse(raw.section("solution").unwrap_or(""))?;
    if plan.is_empty() {
        return Err(Error::EmptySolution);
    }
    Ok(plan)
}

/// A missing outcome section means the record is a successful precedent.
pub fn extract_outcome(raw: &RawCaseRecord) -> Result<OutcomeRecord> {
    match raw.section("outcome") {
        Some(text) => OutcomeRecord::parse(text),
        None => Ok(OutcomeRecord::default()),
    }
}

fn extract_provenance(raw: &RawCaseRecord) -> String {
    let text = raw.section("provenance").unwrap_or("");
    unquote(text).unwrap_or_else(|| text.to_string())
}

fn extract_tags(raw: &RawCaseRecord) -> Result<BTreeSet<String>> {
    let mut tags = BTreeSet::new();
    for t in split_items(raw.section("tags").unwrap_or(""), ',')? {
        if !is_symbol(t) {
            return Err(Error::malformed(format!("invalid tag `{t}`")));
        }
        tags.insert(t.to_string());
    }
    Ok(tags)
}

/// Content hash of the record. Parseable records hash their canonical
/// rendering, so whitespace and feature order do not change the id.
pub fn content_id(raw: &RawCaseRecord) -> CaseId {
    let canonical = (|| -> Result<String> {
        Ok(render_content(
            &extract_problem(raw)?,
            &extract_solution(raw)?,
            &extract_outcome(raw)?,
            &extract_provenance(raw),
            &extract_tags(raw)?,
        ))
    })()
    .unwrap_or_else(|_| raw.canonical_text());
    let digest = Sha256::digest(canonical.as_bytes());
    CaseId(hex::encode(&digest[..8]))
}

pub fn generate_metadata(raw: &RawCaseRecord, tick: u64) -> CaseMetadata {
    CaseMetadata {
        id: content_id(raw),
        created_at: tick,
        provenance: extract_provenance(raw),
        tags: extract_tags(raw).unwrap_or_default(),
    }
}

pub fn build_case(raw: &RawCaseRecord, tick: u64) -> Result<Case> {
    let problem = extract_problem(raw)?;
    let solution = extract_solution(raw)?;
    let outcome = extract_outcome(raw)?;
    // tags are validated here; generate_metadata itself is infallible
    extract_tags(raw)?;
    Ok(Case { problem, solution, outcome, meta: generate_metadata(raw, tick) })
}

/// Parses a record file: one record per line, blank lines and `#` comments
/// skipped. Each entry carries its 1-based line number.
pub fn parse_case_file(text: &str) -> Vec<(usize, Result<RawCaseRecord>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| (i + 1, RawCaseRecord::parse_line(l)))
        .collect()
}
