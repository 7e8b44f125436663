//! Deterministic scripted environment: ground facts, STRIPS-style action
//! effects and exogenous events at fixed ticks, plus the scenario file
//! format.
//!
//! Within one tick the agent's action is applied first, then any event
//! scheduled for that tick.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::case::{SolutionPlan, SolutionStep};
use crate::error::{Error, Result};
use crate::gda::{Goal, Mismatch, MismatchCase, PlanningCase};
use crate::grammar::{is_decimal, is_symbol, parse_call, split_items, split_top};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if is_symbol(text) {
            return Ok(Fact { pred: text.to_string(), args: vec![] });
        }
        let (pred, args) = parse_call(text)?;
        for a in &args {
            if !is_symbol(a) && !is_decimal(a) {
                return Err(Error::malformed(format!("fact argument `{a}` must be a symbol")));
            }
        }
        Ok(Fact { pred: pred.to_string(), args: args.into_iter().map(str::to_string).collect() })
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.join(","))
    }
}

/// A set of ground facts with sorted iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldState(BTreeSet<Fact>);

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a comma-separated fact list; empty text is the empty state.
    pub fn parse(text: &str) -> Result<Self> {
        split_items(text, ',')?.into_iter().map(Fact::parse).collect()
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.0.contains(f)
    }

    pub fn insert(&mut self, f: Fact) -> bool {
        self.0.insert(f)
    }

    pub fn remove(&mut self, f: &Fact) -> bool {
        self.0.remove(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &WorldState) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn difference(&self, other: &WorldState) -> WorldState {
        WorldState(self.0.difference(&other.0).cloned().collect())
    }

    pub fn intersection_len(&self, other: &WorldState) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn union_len(&self, other: &WorldState) -> usize {
        self.0.union(&other.0).count()
    }
}

impl FromIterator<Fact> for WorldState {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        WorldState(iter.into_iter().collect())
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fact) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{fact}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionEffect {
    pub pre: WorldState,
    pub add: WorldState,
    pub del: WorldState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExoEvent {
    pub tick: u64,
    pub add: WorldState,
    pub del: WorldState,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvScript {
    pub init: WorldState,
    /// Ground actions keyed by their rendered step, e.g. `drive(depot,hub)`.
    pub actions: BTreeMap<String, ActionEffect>,
    pub events: Vec<ExoEvent>,
    pub horizon: u64,
}

impl EnvScript {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("horizon must be >= 1"));
        }
        if self.events.windows(2).any(|w| w[0].tick >= w[1].tick) {
            return Err(Error::config("event ticks must be strictly increasing"));
        }
        Ok(())
    }

    pub fn event_at(&self, tick: u64) -> Option<&ExoEvent> {
        self.events.iter().find(|e| e.tick == tick)
    }

    pub fn effect(&self, step: &SolutionStep) -> Result<&ActionEffect> {
        let key = step.to_string();
        self.actions.get(&key).ok_or(Error::UnknownAction(key))
    }
}

fn apply(state: &mut WorldState, add: &WorldState, del: &WorldState) {
    for f in del.iter() {
        state.remove(f);
    }
    for f in add.iter() {
        state.insert(f.clone());
    }
}

/// The transition function: the action's effects (delete, then add), then
/// the effects of any event scheduled at `tick`.
pub fn step(state: &WorldState, action: Option<&SolutionStep>, tick: u64, script: &EnvScript) -> Result<WorldState> {
    let mut next = state.clone();
    if let Some(a) = action {
        let eff = script.effect(a)?;
        let missing = eff.pre.difference(state);
        if !missing.is_empty() {
            return Err(Error::PreconditionViolated { action: a.to_string(), missing: missing.to_string() });
        }
        apply(&mut next, &eff.add, &eff.del);
    }
    if let Some(ev) = script.event_at(tick) {
        apply(&mut next, &ev.add, &ev.del);
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: WorldState,
    /// Why the attempted action had no effect.
    pub failed: Option<String>,
    pub event: Option<String>,
}

/// A running environment instance.
#[derive(Debug, Clone)]
pub struct Environment {
    script: EnvScript,
    state: WorldState,
    tick: u64,
}

impl Environment {
    pub fn new(script: EnvScript) -> Result<Self> {
        script.validate()?;
        let state = script.init.clone();
        Ok(Environment { script, state, tick: 0 })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn script(&self) -> &EnvScript {
        &self.script
    }

    pub fn halted(&self) -> bool {
        self.tick >= self.script.horizon
    }

    /// Advances one tick. An action whose preconditions fail, or which the
    /// script does not declare, has no effect; scheduled events still fire.
    pub fn advance(&mut self, action: Option<&SolutionStep>) -> Result<StepOutcome> {
        if self.halted() {
            return Err(Error::EnvironmentHalted(self.tick));
        }
        let (state, failed) = match step(&self.state, action, self.tick, &self.script) {
            Ok(s) => (s, None),
            Err(e @ (Error::PreconditionViolated { .. } | Error::UnknownAction(_))) => {
                (step(&self.state, None, self.tick, &self.script)?, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        let event = self.script.event_at(self.tick).map(|e| e.label.clone());
        self.state = state.clone();
        self.tick += 1;
        Ok(StepOutcome { state, failed, event })
    }
}

/// A scenario file: the environment script plus the agent's goal, optional
/// initial plan and seed case bases.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub script: EnvScript,
    pub goal: Goal,
    pub plan: Option<SolutionPlan>,
    pub pcb: Vec<PlanningCase>,
    pub mcb: Vec<MismatchCase>,
}

fn field_map<'a>(parts: &[&'a str], allowed: &[&str]) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut map = BTreeMap::new();
    for part in parts {
        let (k, v) = part
            .split_once(':')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::malformed(format!("field `{part}` lacks `:`")))?;
        if !allowed.contains(&k) {
            return Err(Error::malformed(format!("unknown field `{k}`")));
        }
        if map.insert(k, v).is_some() {
            return Err(Error::malformed(format!("repeated field `{k}`")));
        }
    }
    Ok(map)
}

/// Splits `head | key: v | key: v` into the head and its fields.
fn fields<'a>(line: &'a str, allowed: &[&str]) -> Result<(&'a str, BTreeMap<&'a str, &'a str>)> {
    let parts = split_top(line, '|')?;
    Ok((parts[0], field_map(&parts[1..], allowed)?))
}

/// `key: v | key: v` with no head.
fn keyed<'a>(line: &'a str, allowed: &[&str]) -> Result<BTreeMap<&'a str, &'a str>> {
    field_map(&split_top(line, '|')?, allowed)
}

fn state_field(map: &BTreeMap<&str, &str>, key: &str) -> Result<WorldState> {
    WorldState::parse(map.get(key).copied().unwrap_or(""))
}

fn required<'a>(map: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str> {
    map.get(key).copied().ok_or_else(|| Error::malformed(format!("missing field `{key}`")))
}

/// Parses `facts` or `facts; priority=p`.
pub fn parse_goal(text: &str) -> Result<Goal> {
    let mut parts = split_items(text, ';')?.into_iter();
    let facts = WorldState::parse(parts.next().unwrap_or(""))?;
    let mut priority = 0.0;
    for extra in parts {
        let v = extra
            .strip_prefix("priority=")
            .ok_or_else(|| Error::malformed(format!("unexpected goal field `{extra}`")))?;
        priority = v.trim().parse().map_err(|_| Error::malformed(format!("bad priority `{v}`")))?;
    }
    Goal::new(facts, priority)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section: Option<&str> = None;
        let mut seen = BTreeSet::new();
        let mut init = WorldState::new();
        let mut actions = BTreeMap::new();
        let mut events = Vec::new();
        let mut horizon = None;
        let mut goal = None;
        let mut plan = None;
        let mut pcb = Vec::new();
        let mut mcb = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                const SECTIONS: [&str; 8] = ["init", "actions", "events", "horizon", "goal", "plan", "pcb", "mcb"];
                let known = SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .ok_or_else(|| Error::Parse { line: line_no, reason: format!("unknown section `{name}`") })?;
                if !seen.insert(*known) {
                    return Err(Error::Parse { line: line_no, reason: format!("repeated section `{name}`") });
                }
                section = Some(known);
                continue;
            }
            let parsed: Result<()> = (|| {
                match section {
                    None => return Err(Error::malformed("content before the first section")),
                    Some("init") => {
                        for f in WorldState::parse(line)?.iter() {
                            init.insert(f.clone());
                        }
                    }
                    Some("actions") => {
                        let (head, map) = fields(line, &["pre", "add", "del"])?;
                        let step = SolutionStep::parse(head)?;
                        let eff = ActionEffect {
                            pre: state_field(&map, "pre")?,
                            add: state_field(&map, "add")?,
                            del: state_field(&map, "del")?,
                        };
                        if actions.insert(step.to_string(), eff).is_some() {
                            return Err(Error::malformed(format!("action `{step}` declared twice")));
                        }
                    }
                    Some("events") => {
                        let (head, map) = fields(line, &["add", "del", "label"])?;
                        let tick = head.parse().map_err(|_| Error::malformed(format!("bad event tick `{head}`")))?;
                        let label = map.get("label").copied().unwrap_or("event");
                        if !is_symbol(label) {
                            return Err(Error::malformed(format!("bad event label `{label}`")));
                        }
                        events.push(ExoEvent {
                            tick,
                            add: state_field(&map, "add")?,
                            del: state_field(&map, "del")?,
                            label: label.to_string(),
                        });
                    }
                    Some("horizon") => {
                        if horizon.is_some() {
                            return Err(Error::malformed("horizon given twice"));
                        }
                        horizon = Some(line.parse().map_err(|_| Error::malformed(format!("bad horizon `{line}`")))?);
                    }
                    Some("goal") => {
                        if goal.is_some() {
                            return Err(Error::malformed("goal given twice"));
                        }
                        goal = Some(parse_goal(line)?);
                    }
                    Some("plan") => {
                        if plan.is_some() {
                            return Err(Error::malformed("plan given twice"));
                        }
                        plan = Some(SolutionPlan::parse(line)?);
                    }
                    Some("pcb") => pcb.push(PlanningCase::parse(line)?),
                    Some("mcb") => mcb.push(MismatchCase::parse(line)?),
                    Some(_) => unreachable!(),
                }
                Ok(())
            })();
            parsed.map_err(|e| e.at_line(line_no))?;
        }

        let script =
            EnvScript { init, actions, events, horizon: horizon.ok_or_else(|| Error::malformed("missing [horizon]"))? };
        script.validate()?;
        let scenario =
            Scenario { script, goal: goal.ok_or_else(|| Error::malformed("missing [goal]"))?, plan, pcb, mcb };
        scenario.check_actions()?;
        Ok(scenario)
    }

    /// Every plan step must name a declared action.
    fn check_actions(&self) -> Result<()> {
        let plans = self.plan.iter().chain(self.pcb.iter().map(|c| &c.p));
        for p in plans {
            for s in &p.steps {
                self.script.effect(s)?;
            }
        }
        Ok(())
    }
}

impl PlanningCase {
    /// `state: .. | goal: .. | expect: .. | plan: ..`
    pub fn parse(line: &str) -> Result<Self> {
        let map = keyed(line, &["state", "goal", "expect", "plan"])?;
        PlanningCase::new(
            state_field(&map, "state")?,
            parse_goal(required(&map, "goal")?)?,
            state_field(&map, "expect")?,
            SolutionPlan::parse(required(&map, "plan")?)?,
        )
    }
}

impl fmt::Display for PlanningCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state: {} | goal: {} | expect: {} | plan: {}", self.s, self.g, self.e, self.p)
    }
}

impl MismatchCase {
    /// `missing: .. | unexpected: .. | goal: ..`
    pub fn parse(line: &str) -> Result<Self> {
        let map = keyed(line, &["missing", "unexpected", "goal"])?;
        let m = Mismatch::new(state_field(&map, "missing")?, state_field(&map, "unexpected")?)?;
        MismatchCase::new(m, parse_goal(required(&map, "goal")?)?)
    }
}

impl fmt::Display for MismatchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing: {} | unexpected: {} | goal: {}", self.m.missing, self.m.unexpected, self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(s: &str) -> WorldState {
        WorldState::parse(s).unwrap()
    }

    fn script() -> EnvScript {
        let mut actions = BTreeMap::new();
        actions.insert("go(A,B)".to_string(), ActionEffect { pre: ws("at(A)"), add: ws("at(B)"), del: ws("at(A)") });
        EnvScript {
            init: ws("at(A)"),
            actions,
            events: vec![ExoEvent { tick: 1, add: ws("rain"), del: ws("at(B)"), label: "storm".into() }],
            horizon: 3,
        }
    }

    #[test]
    fn fact_parsing() {
        assert_eq!(Fact::parse("at(truck, depot)").unwrap().to_string(), "at(truck,depot)");
        assert_eq!(Fact::parse("rain").unwrap(), Fact::parse("rain()").unwrap());
        assert!(Fact::parse("at(\"x y\")").is_err());
        assert_eq!(ws("b(1), a(2), a(2)").to_string(), "a(2), b(1)");
        assert!(ws("").is_empty());
    }

    #[test]
    fn step_examples() {
        let s = script();
        assert_eq!(step(&ws("at(A)"), None, 0, &s).unwrap(), ws("at(A)"));
        let go = SolutionStep::parse("go(A,B)").unwrap();
        assert_eq!(step(&ws("at(A)"), Some(&go), 0, &s).unwrap(), ws("at(B)"));
        // action adds at(B), then the same-tick event deletes it and adds rain
        assert_eq!(step(&ws("at(A)"), Some(&go), 1, &s).unwrap(), ws("rain"));
        assert!(matches!(step(&ws("at(C)"), Some(&go), 0, &s), Err(Error::PreconditionViolated { .. })));
        let bad = SolutionStep::parse("fly()").unwrap();
        assert!(matches!(step(&ws("at(A)"), Some(&bad), 0, &s), Err(Error::UnknownAction(_))));
    }

    #[test]
    fn environment_halts_at_horizon() {
        let mut env = Environment::new(script()).unwrap();
        let go = SolutionStep::parse("go(A,B)").unwrap();
        env.advance(Some(&go)).unwrap();
        let out = env.advance(Some(&go)).unwrap();
        assert!(out.failed.is_some());
        assert_eq!(out.event.as_deref(), Some("storm"));
        env.advance(None).unwrap();
        assert!(matches!(env.advance(None), Err(Error::EnvironmentHalted(3))));
    }

    #[test]
    fn script_validation() {
        let mut s = script();
        s.horizon = 0;
        assert!(s.validate().is_err());
        let mut s = script();
        s.events.push(s.events[0].clone());
        assert!(s.validate().is_err());
    }

    const SCENARIO: &str = "\
# tiny
[init]
at(A)
[actions]
go(A,B) | pre: at(A) | add: at(B) | del: at(A)
[events]
2 | add: rain | label: storm
[horizon]
5
[goal]
at(B); priority=2
[plan]
go(A,B)
[pcb]
state: at(A) | goal: at(B) | expect: at(B) | plan: go(A,B)
[mcb]
missing: at(B) | unexpected: rain() | goal: at(B)
";

    #[test]
    fn scenario_parsing() {
        let sc = Scenario::parse(SCENARIO).unwrap();
        assert_eq!(sc.script.horizon, 5);
        assert_eq!(sc.goal.priority, 2.0);
        assert_eq!(sc.script.events[0].label, "storm");
        assert_eq!(sc.pcb.len(), 1);
        assert_eq!(sc.mcb[0].m.unexpected, ws("rain"));
        let again = PlanningCase::parse(&sc.pcb[0].to_string()).unwrap();
        assert_eq!(again, sc.pcb[0]);
        assert_eq!(MismatchCase::parse(&sc.mcb[0].to_string()).unwrap(), sc.mcb[0]);
    }

    #[test]
    fn scenario_errors_carry_lines() {
        let bad = SCENARIO.replace("go(A,B) | pre", "go(A,B) | pree");
        assert!(matches!(Scenario::parse(&bad), Err(Error::Parse { line: 5, .. })));
        let undeclared = SCENARIO.replace("[plan]\ngo(A,B)", "[plan]\nfly()");
        assert!(matches!(Scenario::parse(&undeclared), Err(Error::UnknownAction(_))));
        assert!(Scenario::parse("[init]\n[horizon]\n1\n").is_err());
        assert!(Scenario::parse("[bogus]\n").is_err());
    }
}
