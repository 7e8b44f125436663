//! Solution adaptation: select retrieved solutions, transform each against
//! the target constraints, compose the survivors, and fall back to template
//! generation when nothing survives.
//!
//! Every cbr-pathway candidate carries a [`Provenance`] that replays the
//! adaptation step for step.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::case::CaseId;
use crate::case::{FeatureMap, FeatureValue, SolutionPlan, SolutionStep};
use crate::error::{Error, Result};
use crate::grammar::{is_symbol, split_items, split_pair};
use crate::library::CaseLibrary;
use crate::retrieval::{rank_order, Query, ScoredCase};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub substitutions: BTreeMap<String, String>,
    pub forbidden: BTreeSet<String>,
    pub required: Vec<String>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.substitutions.is_empty() && self.forbidden.is_empty() && self.required.is_empty()
    }

    /// Parses `sub A->B, C->D; forbid fly, swim; require land`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cs = ConstraintSet::default();
        for clause in split_items(text, ';')? {
            let (kind, rest) = clause.split_once(char::is_whitespace).unwrap_or((clause, ""));
            let items = split_items(rest, ',')?;
            match kind {
                "sub" => {
                    for item in items {
                        let (from, to) = item
                            .split_once("->")
                            .map(|(a, b)| (a.trim(), b.trim()))
                            .ok_or_else(|| Error::malformed(format!("substitution `{item}` lacks `->`")))?;
                        if !is_symbol(from) || !is_symbol(to) {
                            return Err(Error::malformed(format!("bad substitution `{item}`")));
                        }
                        cs.substitutions.insert(from.to_string(), to.to_string());
                    }
                }
                "forbid" | "require" => {
                    for item in items {
                        if !is_symbol(item) {
                            return Err(Error::malformed(format!("bad action name `{item}`")));
                        }
                        if kind == "forbid" {
                            cs.forbidden.insert(item.to_string());
                        } else {
                            cs.required.push(item.to_string());
                        }
                    }
                }
                other => return Err(Error::malformed(format!("unknown constraint `{other}`"))),
            }
        }
        Ok(cs)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut clauses = Vec::new();
        if !self.substitutions.is_empty() {
            let subs: Vec<String> = self.substitutions.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            clauses.push(format!("sub {}", subs.join(", ")));
        }
        if !self.forbidden.is_empty() {
            clauses.push(format!("forbid {}", self.forbidden.iter().cloned().collect::<Vec<_>>().join(", ")));
        }
        if !self.required.is_empty() {
            clauses.push(format!("require {}", self.required.join(", ")));
        }
        f.write_str(&clauses.join("; "))
    }
}

/// One recorded plan edit. Indices refer to the plan as it stood when the
/// edit was applied.
#[derive(Debug, Clone, PartialEq)]
pub enum EditOp {
    Insert { step: SolutionStep },
    Delete { index: usize, step: SolutionStep },
    Substitute { index: usize, arg: usize, from: String, to: String },
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::Insert { step } => write!(f, "insert {step}"),
            EditOp::Delete { index, step } => write!(f, "delete #{index} {step}"),
            EditOp::Substitute { index, arg, from, to } => {
                write!(f, "substitute #{index}.{arg} {from}->{to}")
            }
        }
    }
}

/// Re-applies recorded edits to a plan.
pub fn apply_edits(plan: &SolutionPlan, edits: &[EditOp]) -> Result<SolutionPlan> {
    let mut steps = plan.steps.clone();
    for op in edits {
        match op {
            EditOp::Insert { step } => steps.push(step.clone()),
            EditOp::Delete { index, step } => {
                if steps.get(*index) != Some(step) {
                    return Err(Error::malformed(format!("replay: no `{step}` at #{index}")));
                }
                steps.remove(*index);
            }
            EditOp::Substitute { index, arg, from, to } => {
                let slot = steps
                    .get_mut(*index)
                    .and_then(|s| s.args.get_mut(*arg))
                    .filter(|v| v.as_symbol() == Some(from.as_str()))
                    .ok_or_else(|| Error::malformed(format!("replay: no `{from}` at #{index}.{arg}")))?;
                *slot = FeatureValue::Symbol(to.clone());
            }
        }
    }
    Ok(SolutionPlan::new(steps))
}

/// Transform with its edit log: insert missing required actions (appended
/// in listed order), delete forbidden-action steps, then substitute
/// argument symbols in a single pass.
pub fn transform_traced(plan: &SolutionPlan, cs: &ConstraintSet) -> Result<(SolutionPlan, Vec<EditOp>)> {
    let mut steps = plan.steps.clone();
    let mut edits = Vec::new();

    for action in &cs.required {
        if !steps.iter().any(|s| &s.action == action) {
            let step = SolutionStep::new(action.clone(), vec![]);
            steps.push(step.clone());
            edits.push(EditOp::Insert { step });
        }
    }

    let mut i = 0;
    while i < steps.len() {
        if cs.forbidden.contains(&steps[i].action) {
            let step = steps.remove(i);
            edits.push(EditOp::Delete { index: i, step });
        } else {
            i += 1;
        }
    }

    for (index, step) in steps.iter_mut().enumerate() {
        for (arg, value) in step.args.iter_mut().enumerate() {
            let Some(from) = value.as_symbol() else { continue };
            if let Some(to) = cs.substitutions.get(from) {
                edits.push(EditOp::Substitute { index, arg, from: from.to_string(), to: to.clone() });
                *value = FeatureValue::Symbol(to.clone());
            }
        }
    }

    if steps.is_empty() {
        return Err(Error::EmptyAfterTransform);
    }
    Ok((SolutionPlan::new(steps), edits))
}

pub fn transform(plan: &SolutionPlan, cs: &ConstraintSet) -> Result<SolutionPlan> {
    transform_traced(plan, cs).map(|(p, _)| p)
}

/// Weighted round-robin interleave. Returns the plan and, for each emitted
/// step, the `(plan index, step index)` it came from.
///
/// Each plan holds credit `ŵ_i · remaining_i / |plan_i|`; the next step comes
/// from the plan with the most credit (lowest index on ties). A step equal to
/// the previously emitted one is consumed but not emitted.
pub fn compose_traced(plans: &[SolutionPlan], weights: &[f64]) -> Result<(SolutionPlan, Vec<(usize, usize)>)> {
    if plans.is_empty() || plans.len() != weights.len() {
        return Err(Error::ArityMismatch { plans: plans.len(), weights: weights.len() });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::config("compose weights must be >= 0 and not all zero"));
    }
    let mut taken = vec![0usize; plans.len()];
    let mut out: Vec<SolutionStep> = Vec::new();
    let mut picks = Vec::new();
    // credit_i / credit_j compared by cross-multiplication to keep ties exact
    let credit_cmp = |i: usize, j: usize, taken: &[usize]| -> Ordering {
        let (ni, nj) = (plans[i].len() as f64, plans[j].len() as f64);
        let lhs = weights[i] * (ni - taken[i] as f64) * nj;
        let rhs = weights[j] * (nj - taken[j] as f64) * ni;
        lhs.total_cmp(&rhs)
    };
    loop {
        let mut best: Option<usize> = None;
        for i in 0..plans.len() {
            if taken[i] >= plans[i].len() {
                continue;
            }
            best = match best {
                Some(b) if credit_cmp(i, b, &taken) != Ordering::Greater => Some(b),
                _ => Some(i),
            };
        }
        let Some(i) = best else { break };
        let step = &plans[i].steps[taken[i]];
        if out.last() != Some(step) {
            out.push(step.clone());
            picks.push((i, taken[i]));
        }
        taken[i] += 1;
    }
    Ok((SolutionPlan::new(out), picks))
}

pub fn compose(plans: &[SolutionPlan], weights: &[f64]) -> Result<SolutionPlan> {
    compose_traced(plans, weights).map(|(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub id: CaseId,
    pub score: f64,
    pub plan: SolutionPlan,
}

/// Solutions of the retrieved cases, best first.
pub fn select(retrieved: &[ScoredCase], lib: &CaseLibrary) -> Result<Vec<Selected>> {
    if retrieved.is_empty() {
        return Err(Error::NothingRetrieved);
    }
    let mut ranked = retrieved.to_vec();
    ranked.sort_by(rank_order);
    ranked
        .into_iter()
        .map(|s| {
            let entry = lib.get(&s.id).ok_or_else(|| Error::UnknownCase(s.id.0.clone()))?;
            Ok(Selected { id: s.id, score: s.score, plan: entry.case.solution.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum PatternValue {
    Any,
    Exact(FeatureValue),
}

/// `pattern -> plan`, e.g. `size=* -> resize(size)`. Plan arguments naming a
/// pattern feature are bound to the query's value for it.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRule {
    pattern: Vec<(String, PatternValue)>,
    plan: SolutionPlan,
    text: String,
}

impl TemplateRule {
    pub fn parse(line: &str) -> Result<Self> {
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| Error::malformed(format!("rule `{line}` lacks `->`")))?;
        let mut pattern = Vec::new();
        for item in split_items(lhs, ';')? {
            let (name, value) =
                split_pair(item, '=').ok_or_else(|| Error::malformed(format!("pattern `{item}` lacks `=`")))?;
            if !is_symbol(name) {
                return Err(Error::malformed(format!("invalid feature name `{name}`")));
            }
            let value = if value == "*" { PatternValue::Any } else { PatternValue::Exact(FeatureValue::parse(value)?) };
            pattern.push((name.to_string(), value));
        }
        let plan = SolutionPlan::parse(rhs)?;
        if plan.is_empty() {
            return Err(Error::EmptySolution);
        }
        Ok(TemplateRule { pattern, plan, text: line.trim().to_string() })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn matches(&self, q: &FeatureMap) -> bool {
        self.pattern.iter().all(|(name, pv)| match (pv, q.get(name)) {
            (_, None) => false,
            (PatternValue::Any, Some(_)) => true,
            (PatternValue::Exact(v), Some(qv)) => v == qv,
        })
    }

    pub fn fire(&self, q: &FeatureMap) -> SolutionPlan {
        let bound: BTreeSet<&str> = self.pattern.iter().map(|(n, _)| n.as_str()).collect();
        let steps = self
            .plan
            .steps
            .iter()
            .map(|s| {
                let args = s
                    .args
                    .iter()
                    .map(|a| match a.as_symbol() {
                        Some(name) if bound.contains(name) => q.get(name).cloned().unwrap_or_else(|| a.clone()),
                        _ => a.clone(),
                    })
                    .collect();
                SolutionStep::new(s.action.clone(), args)
            })
            .collect();
        SolutionPlan::new(steps)
    }

    fn vocabulary(&self) -> BTreeSet<&str> {
        self.plan.actions().collect()
    }
}

/// Parses a rule file: one rule per line, `#` comments and blank lines
/// skipped.
pub fn parse_rules(text: &str) -> Result<Vec<TemplateRule>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| TemplateRule::parse(l).map_err(|e| e.at_line(i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub plan: SolutionPlan,
    /// What produced the plan (a rule's text for template generation).
    pub source: String,
}

/// Plan synthesis from a query and ranked exemplar solutions.
pub trait PlanGenerator {
    fn generate(&self, q: &Query, exemplars: &[SolutionPlan]) -> Result<Generated>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeneratorMode {
    #[default]
    Template,
    External,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratorConfig {
    pub mode: GeneratorMode,
    pub rules: Vec<TemplateRule>,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == GeneratorMode::Template && self.rules.is_empty() {
            return Err(Error::config("template generator needs at least one rule"));
        }
        Ok(())
    }
}

/// Fires the first matching rule, preferring rules whose action vocabulary
/// overlaps most with the top-ranked exemplar.
#[derive(Debug, Clone)]
pub struct TemplateGenerator {
    rules: Vec<TemplateRule>,
}

impl TemplateGenerator {
    pub fn new(rules: Vec<TemplateRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::config("template generator needs at least one rule"));
        }
        Ok(TemplateGenerator { rules })
    }

    pub fn from_config(cfg: &GeneratorConfig) -> Result<Self> {
        match cfg.mode {
            GeneratorMode::Template => Self::new(cfg.rules.clone()),
            GeneratorMode::External => Err(Error::ExternalGeneratorUnavailable),
        }
    }
}

impl PlanGenerator for TemplateGenerator {
    fn generate(&self, q: &Query, exemplars: &[SolutionPlan]) -> Result<Generated> {
        let seed_vocab: BTreeSet<&str> = exemplars.first().map(|p| p.actions().collect()).unwrap_or_default();
        let mut best: Option<(usize, &TemplateRule)> = None;
        for rule in self.rules.iter().filter(|r| r.matches(&q.problem)) {
            let overlap = rule.vocabulary().intersection(&seed_vocab).count();
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, rule));
            }
        }
        let (_, rule) = best.ok_or(Error::NoApplicableTemplate)?;
        Ok(Generated { plan: rule.fire(&q.problem), source: rule.text.clone() })
    }
}

pub fn generate(q: &Query, exemplars: &[SolutionPlan], cfg: &GeneratorConfig) -> Result<SolutionPlan> {
    cfg.validate()?;
    TemplateGenerator::from_config(cfg)?.generate(q, exemplars).map(|g| g.plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pathway {
    Cbr,
    Cot,
    Parametric,
}

impl Pathway {
    pub const ALL: [Pathway; 3] = [Pathway::Cbr, Pathway::Cot, Pathway::Parametric];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pathway::Cbr => "cbr",
            Pathway::Cot => "cot",
            Pathway::Parametric => "parametric",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecord {
    pub id: CaseId,
    pub score: f64,
    /// Edits applied to this source's solution; `None` when the transform
    /// emptied it.
    pub edits: Option<Vec<EditOp>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FallbackRecord {
    pub source: String,
    pub generated: SolutionPlan,
    pub edits: Vec<EditOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDifference {
    pub name: String,
    pub query: Option<FeatureValue>,
    pub case: Option<FeatureValue>,
}

impl fmt::Display for FeatureDifference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<FeatureValue>| v.as_ref().map_or("-".to_string(), |v| v.to_string());
        write!(f, "{}: query={} case={}", self.name, show(&self.query), show(&self.case))
    }
}

pub fn feature_differences(query: &FeatureMap, case: &FeatureMap) -> Vec<FeatureDifference> {
    let names: BTreeSet<&String> = query.iter().chain(case.iter()).map(|(n, _)| n).collect();
    names
        .into_iter()
        .filter_map(|n| {
            let (q, c) = (query.get(n), case.get(n));
            (q != c).then(|| FeatureDifference { name: n.clone(), query: q.cloned(), case: c.cloned() })
        })
        .collect()
}

/// Explanation trace of an adaptation: which cases were used, what was done
/// to each, how they were interleaved, and how the query differs from the
/// best precedent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub sources: Vec<SourceRecord>,
    /// `(source index, step index in the transformed plan)` per output step.
    pub picks: Vec<(usize, usize)>,
    pub fallback: Option<FallbackRecord>,
    pub differences: Vec<FeatureDifference>,
}

impl Provenance {
    /// Rebuilds the plan from the recorded operations.
    pub fn replay(&self, lib: &CaseLibrary) -> Result<SolutionPlan> {
        if let Some(fb) = &self.fallback {
            return apply_edits(&fb.generated, &fb.edits);
        }
        let mut transformed = Vec::with_capacity(self.sources.len());
        for s in &self.sources {
            let entry = lib.get(&s.id).ok_or_else(|| Error::UnknownCase(s.id.0.clone()))?;
            transformed.push(match &s.edits {
                Some(edits) => Some(apply_edits(&entry.case.solution, edits)?),
                None => None,
            });
        }
        let steps = self
            .picks
            .iter()
            .map(|&(src, idx)| {
                transformed
                    .get(src)
                    .and_then(Option::as_ref)
                    .and_then(|p| p.steps.get(idx))
                    .cloned()
                    .ok_or_else(|| Error::malformed(format!("replay: bad pick ({src},{idx})")))
            })
            .collect::<Result<_>>()?;
        Ok(SolutionPlan::new(steps))
    }

    /// Number of adaptation operations: edits, plus one for a multi-source
    /// composition, plus one for a generation fallback.
    pub fn operation_count(&self) -> usize {
        let edits: usize = self.sources.iter().filter_map(|s| s.edits.as_ref()).map(Vec::len).sum();
        let used: BTreeSet<usize> = self.picks.iter().map(|(s, _)| *s).collect();
        let fallback = self.fallback.as_ref().map_or(0, |f| 1 + f.edits.len());
        edits + usize::from(used.len() > 1) + fallback
    }

    pub fn render(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (i, s) in self.sources.iter().enumerate() {
            lines.push(format!("source {i} {} score={}", s.id, s.score));
            match &s.edits {
                Some(edits) => lines.extend(edits.iter().map(|e| format!("  {e}"))),
                None => lines.push("  emptied by constraints".to_string()),
            }
        }
        if !self.picks.is_empty() {
            let picks: Vec<String> = self.picks.iter().map(|(s, i)| format!("{s}:{i}")).collect();
            lines.push(format!("compose {}", picks.join(" ")));
        }
        if let Some(fb) = &self.fallback {
            lines.push(format!("fallback {} -> {}", fb.source, fb.generated));
            lines.extend(fb.edits.iter().map(|e| format!("  {e}")));
        }
        for d in &self.differences {
            lines.push(format!("difference {d}"));
        }
        lines
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    pub plan: SolutionPlan,
    pub pathway: Pathway,
    pub confidence: f64,
    pub provenance: Provenance,
}

/// The full adaptation pipeline: select, transform each, compose; generate
/// when constraints empty every selected plan. When the best-ranked case
/// solves exactly the query's problem, it is the only source. Confidence is
/// the mean retrieval score of the selected sources.
pub fn adapt(
    q: &Query,
    retrieved: &[ScoredCase],
    lib: &CaseLibrary,
    cs: &ConstraintSet,
    generator: Option<&dyn PlanGenerator>,
) -> Result<CandidateSolution> {
    let mut selected = select(retrieved, lib)?;
    // A precedent with exactly the query's problem is reused on its own.
    if lib.get(&selected[0].id).is_some_and(|e| e.case.problem == q.problem) {
        selected.truncate(1);
    }
    let confidence = selected.iter().map(|s| s.score).sum::<f64>() / selected.len() as f64;

    let mut sources = Vec::with_capacity(selected.len());
    let mut survivors: Vec<(usize, SolutionPlan, f64)> = Vec::new();
    for (i, s) in selected.iter().enumerate() {
        match transform_traced(&s.plan, cs) {
            Ok((plan, edits)) => {
                survivors.push((i, plan, s.score));
                sources.push(SourceRecord { id: s.id.clone(), score: s.score, edits: Some(edits) });
            }
            Err(Error::EmptyAfterTransform) => {
                sources.push(SourceRecord { id: s.id.clone(), score: s.score, edits: None });
            }
            Err(e) => return Err(e),
        }
    }

    let differences =
        lib.get(&selected[0].id).map(|e| feature_differences(&q.problem, &e.case.problem)).unwrap_or_default();

    let (plan, picks, fallback) = if survivors.is_empty() {
        let generator = generator.ok_or(Error::EmptyAfterTransform)?;
        let exemplars: Vec<SolutionPlan> = selected.iter().map(|s| s.plan.clone()).collect();
        let generated = generator.generate(q, &exemplars)?;
        let (plan, edits) = transform_traced(&generated.plan, cs)?;
        let record = FallbackRecord { source: generated.source, generated: generated.plan, edits };
        (plan, Vec::new(), Some(record))
    } else {
        let plans: Vec<SolutionPlan> = survivors.iter().map(|(_, p, _)| p.clone()).collect();
        let mut weights: Vec<f64> = survivors.iter().map(|(_, _, w)| *w).collect();
        if weights.iter().all(|w| *w <= 0.0) {
            weights.iter_mut().for_each(|w| *w = 1.0);
        }
        let (plan, picks) = compose_traced(&plans, &weights)?;
        let picks = picks.into_iter().map(|(p, step)| (survivors[p].0, step)).collect();
        (plan, picks, None)
    };

    Ok(CandidateSolution {
        plan,
        pathway: Pathway::Cbr,
        confidence,
        provenance: Provenance { sources, picks, fallback, differences },
    })
}

/// Stand-in chain-of-thought pathway: a fixed sketch that considers each
/// query feature in order and then decides.
pub fn cot_candidate(q: &Query, confidence: f64) -> CandidateSolution {
    let mut steps: Vec<SolutionStep> =
        q.problem.iter().map(|(n, _)| SolutionStep::new("consider", vec![FeatureValue::Symbol(n.clone())])).collect();
    steps.push(SolutionStep::new("decide", vec![]));
    let plan = SolutionPlan::new(steps);
    CandidateSolution {
        plan: plan.clone(),
        pathway: Pathway::Cot,
        confidence,
        provenance: Provenance {
            fallback: Some(FallbackRecord { source: "cot-sketch".into(), generated: plan, edits: vec![] }),
            ..Default::default()
        },
    }
}

/// Stand-in parametric pathway: template generation with no exemplars.
/// `None` when no rule applies.
pub fn parametric_candidate(q: &Query, generator: &dyn PlanGenerator, confidence: f64) -> Option<CandidateSolution> {
    let generated = generator.generate(q, &[]).ok()?;
    Some(CandidateSolution {
        plan: generated.plan.clone(),
        pathway: Pathway::Parametric,
        confidence,
        provenance: Provenance {
            fallback: Some(FallbackRecord { source: generated.source, generated: generated.plan, edits: vec![] }),
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathwayWeights {
    /// (cbr, cot, parametric)
    pub omega: [f64; 3],
}

impl PathwayWeights {
    pub fn new(omega: [f64; 3]) -> Result<Self> {
        if omega.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("pathway weights must be finite and >= 0"));
        }
        if (omega.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("pathway weights must sum to 1, got {omega:?}")));
        }
        Ok(PathwayWeights { omega })
    }

    /// Proportional to confidences; uniform when every confidence is 0.
    pub fn from_confidences(conf: [f64; 3]) -> Self {
        let total: f64 = conf.iter().sum();
        if total <= 0.0 {
            return PathwayWeights { omega: [1.0 / 3.0; 3] };
        }
        PathwayWeights { omega: conf.map(|c| c / total) }
    }
}

/// Scores each candidate `ω_pathway · confidence` and returns the best;
/// ties go to cbr, then cot, then parametric. Without explicit weights, ω is
/// derived from the candidates' confidences.
pub fn combine_pathways(cands: &[CandidateSolution], pw: Option<&PathwayWeights>) -> Result<CandidateSolution> {
    if cands.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut seen = BTreeSet::new();
    let mut conf = [0.0; 3];
    for c in cands {
        if !seen.insert(c.pathway) {
            return Err(Error::config(format!("two candidates for pathway {}", c.pathway)));
        }
        conf[c.pathway.index()] = c.confidence;
    }
    let omega = pw.copied().unwrap_or_else(|| PathwayWeights::from_confidences(conf)).omega;
    let total: f64 = omega.iter().sum();
    let score = |c: &CandidateSolution| {
        let w = if total > 0.0 { omega[c.pathway.index()] / total } else { 0.0 };
        w * c.confidence
    };
    let best = cands
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)).then_with(|| b.pathway.cmp(&a.pathway)))
        .expect("non-empty");
    Ok(best.clone())
}
