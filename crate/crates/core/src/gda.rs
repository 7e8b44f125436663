//! Goal-driven autonomy loop backed by a planning case base (PCB: state and
//! goal to expectation and plan) and a mismatch case base (MCB: mismatch to
//! new goal).
//!
//! The agent executes a retrieved plan segment, waits until the monitoring
//! window closes (at least `period` ticks, at least the segment length),
//! compares the expected state with the actual one and, on a mismatch,
//! retrieves and formulates a replacement goal.

use std::collections::VecDeque;
use std::fmt;

use crate::case::{SolutionPlan, SolutionStep};
use crate::env::{Environment, WorldState};
use crate::error::{Error, Result};

/// `|a ∩ b| / |a ∪ b|`, 1 when both are empty.
pub fn jaccard(a: &WorldState, b: &WorldState) -> f64 {
    let union = a.union_len(b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_len(b) as f64 / union as f64
}

pub fn state_sim(a: &WorldState, b: &WorldState) -> f64 {
    jaccard(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    facts: WorldState,
    pub priority: f64,
}

impl Goal {
    pub fn new(facts: WorldState, priority: f64) -> Result<Self> {
        if facts.is_empty() {
            return Err(Error::malformed("goal has no facts"));
        }
        if !priority.is_finite() {
            return Err(Error::OutOfRange { what: "goal priority".into(), value: priority });
        }
        Ok(Goal { facts, priority })
    }

    pub fn facts(&self) -> &WorldState {
        &self.facts
    }

    pub fn satisfied_in(&self, s: &WorldState) -> bool {
        self.facts.is_subset(s)
    }

    /// Fraction of the goal's facts true in `s`.
    pub fn quality(&self, s: &WorldState) -> f64 {
        self.facts.intersection_len(s) as f64 / self.facts.len() as f64
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.facts)?;
        if self.priority != 0.0 {
            write!(f, "; priority={}", self.priority)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub missing: WorldState,
    pub unexpected: WorldState,
}

impl Mismatch {
    pub fn new(missing: WorldState, unexpected: WorldState) -> Result<Self> {
        if missing.intersection_len(&unexpected) > 0 {
            return Err(Error::malformed("a fact cannot be both missing and unexpected"));
        }
        Ok(Mismatch { missing, unexpected })
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing={{{}}} unexpected={{{}}}", self.missing, self.unexpected)
    }
}

/// Per-side Jaccard, averaged.
pub fn mismatch_sim(a: &Mismatch, b: &Mismatch) -> f64 {
    (jaccard(&a.missing, &b.missing) + jaccard(&a.unexpected, &b.unexpected)) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningCase {
    pub s: WorldState,
    pub g: Goal,
    pub e: WorldState,
    pub p: SolutionPlan,
}

impl PlanningCase {
    pub fn new(s: WorldState, g: Goal, e: WorldState, p: SolutionPlan) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptySolution);
        }
        Ok(PlanningCase { s, g, e, p })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchCase {
    pub m: Mismatch,
    pub g: Goal,
}

impl MismatchCase {
    pub fn new(m: Mismatch, g: Goal) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::malformed("mismatch case needs a non-empty mismatch"));
        }
        Ok(MismatchCase { m, g })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcbHit {
    pub index: usize,
    pub state_sim: f64,
    pub goal_sim: f64,
}

impl PcbHit {
    pub fn score(&self) -> f64 {
        self.state_sim + self.goal_sim
    }
}

/// Entry maximizing `state_sim + goal overlap`; earliest entry on ties.
pub fn retrieve_pcb(pcb: &[PlanningCase], s: &WorldState, g: &Goal) -> Result<PcbHit> {
    let mut best: Option<PcbHit> = None;
    for (index, c) in pcb.iter().enumerate() {
        let hit = PcbHit { index, state_sim: state_sim(s, &c.s), goal_sim: jaccard(g.facts(), c.g.facts()) };
        if best.is_none_or(|b| hit.score() > b.score()) {
            best = Some(hit);
        }
    }
    best.ok_or(Error::EmptyCaseBase)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McbHit {
    pub index: usize,
    pub sim: f64,
}

pub fn retrieve_mcb(mcb: &[MismatchCase], m: &Mismatch) -> Result<McbHit> {
    let mut best: Option<McbHit> = None;
    for (index, c) in mcb.iter().enumerate() {
        let sim = mismatch_sim(m, &c.m);
        if best.is_none_or(|b| sim > b.sim) {
            best = Some(McbHit { index, sim });
        }
    }
    best.ok_or(Error::EmptyCaseBase)
}

/// `None` when the states agree.
pub fn detect_mismatch(expected: &WorldState, actual: &WorldState) -> Option<Mismatch> {
    if expected == actual {
        return None;
    }
    Some(Mismatch { missing: expected.difference(actual), unexpected: actual.difference(expected) })
}

/// The suggested goal minus facts already true. If nothing is left, a
/// restoration goal over the missing facts; if the mismatch has no missing
/// facts either, the suggestion unchanged.
pub fn formulate_goal(s: &WorldState, m: &Mismatch, suggested: &Goal) -> Goal {
    let open = suggested.facts().difference(s);
    if !open.is_empty() {
        return Goal { facts: open, priority: suggested.priority };
    }
    if !m.missing.is_empty() {
        return Goal { facts: m.missing.clone(), priority: suggested.priority };
    }
    suggested.clone()
}

/// Pending goals, higher priority first and FIFO among equals.
#[derive(Debug, Clone)]
pub struct GoalStack {
    max_depth: usize,
    goals: VecDeque<Goal>,
}

impl GoalStack {
    pub fn new(max_depth: usize) -> Self {
        GoalStack { max_depth, goals: VecDeque::new() }
    }

    pub fn push(&mut self, g: Goal) -> Result<()> {
        if self.goals.len() >= self.max_depth {
            return Err(Error::StackOverflow(self.max_depth));
        }
        let at = self.goals.iter().position(|x| x.priority < g.priority).unwrap_or(self.goals.len());
        self.goals.insert(at, g);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Goal> {
        self.goals.pop_front()
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdaConfig {
    pub theta_p: f64,
    pub theta_m: f64,
    /// Minimum monitoring window, in ticks.
    pub period: u64,
    pub max_depth: usize,
}

impl Default for GdaConfig {
    fn default() -> Self {
        GdaConfig { theta_p: 0.8, theta_m: 0.8, period: 1, max_depth: 8 }
    }
}

impl GdaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta_p", self.theta_p), ("theta_m", self.theta_m)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must be in [0,1], got {v}")));
            }
        }
        if self.period == 0 {
            return Err(Error::config("monitoring period must be >= 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("goal stack depth must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Agent {
    /// Used for the initial goal when the PCB offers nothing.
    pub initial_plan: Option<SolutionPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchRecord {
    pub mismatch: Mismatch,
    pub explanation: String,
    /// MCB entry consulted; `None` marks an unresolved mismatch.
    pub mcb_entry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub state: WorldState,
    pub goal: Option<Goal>,
    pub expectation: Option<WorldState>,
    pub mismatch: Option<MismatchRecord>,
    pub transition: Option<(Goal, Goal)>,
    pub action: Option<SolutionStep>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success { tick: u64 },
    Incomplete { tick: u64 },
}

/// One executed plan segment and how well its goal fared by the end of
/// that goal's pursuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub case: PlanningCase,
    pub quality: f64,
}

/// A handled mismatch and how well the goal pursued in response fared.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub case: MismatchCase,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<TickRecord>,
    pub status: Status,
    pub segments: Vec<Segment>,
    pub resolutions: Vec<Resolution>,
}

fn braced(s: &WorldState) -> String {
    format!("{{{s}}}")
}

fn or_dash<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl EpisodeTrace {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, Status::Success { .. })
    }

    pub fn transitions(&self) -> impl Iterator<Item = (u64, &Goal, &Goal)> {
        self.records.iter().filter_map(|r| r.transition.as_ref().map(|(a, b)| (r.tick, a, b)))
    }

    pub fn mismatches(&self) -> impl Iterator<Item = (u64, &MismatchRecord)> {
        self.records.iter().filter_map(|r| r.mismatch.as_ref().map(|m| (r.tick, m)))
    }

    /// One tab-separated line per tick, then a status line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mismatch = r.mismatch.as_ref().map(|m| {
                let entry = m.mcb_entry.map_or("unresolved".to_string(), |i| i.to_string());
                format!("{} cause={} mcb={entry}", m.mismatch, m.explanation)
            });
            let transition = r.transition.as_ref().map(|(a, b)| format!("{a} -> {b}"));
            let notes = if r.notes.is_empty() { "-".to_string() } else { r.notes.join(",") };
            out.push_str(&format!(
                "tick={}\tstate={}\tgoal={}\texpect={}\tmismatch={}\ttransition={}\taction={}\tnotes={}\n",
                r.tick,
                braced(&r.state),
                or_dash(r.goal.as_ref()),
                or_dash(r.expectation.as_ref().map(braced)),
                or_dash(mismatch),
                or_dash(transition),
                or_dash(r.action.as_ref()),
                notes,
            ));
        }
        let (status, tick) = match self.status {
            Status::Success { tick } => ("success", tick),
            Status::Incomplete { tick } => ("incomplete", tick),
        };
        out.push_str(&format!("status={status}\ttick={tick}\n"));
        out
    }
}

struct Window {
    start: WorldState,
    goal: Goal,
    plan: SolutionPlan,
    remaining: VecDeque<SolutionStep>,
    expect: Option<WorldState>,
    check_at: u64,
    pursuit: usize,
}

struct Pursuit {
    goal: Goal,
    end: Option<WorldState>,
}

/// Runs the goal-driven loop until the goal stack empties (success) or the
/// environment reaches its horizon (incomplete).
pub fn run_gda(
    env: &mut Environment,
    agent: &Agent,
    g_init: &Goal,
    pcb: &[PlanningCase],
    mcb: &[MismatchCase],
    cfg: &GdaConfig,
) -> Result<EpisodeTrace> {
    run_episode(env, agent, g_init, pcb, mcb, cfg, true)
}

/// Non-monitoring baseline: pursues `g_init` only, re-retrieving a plan for
/// it whenever a segment ends, and never formulates goals.
pub fn run_baseline_replanner(
    env: &mut Environment,
    agent: &Agent,
    g_init: &Goal,
    pcb: &[PlanningCase],
    cfg: &GdaConfig,
) -> Result<EpisodeTrace> {
    run_episode(env, agent, g_init, pcb, &[], cfg, false)
}

fn run_episode(
    env: &mut Environment,
    agent: &Agent,
    g_init: &Goal,
    pcb: &[PlanningCase],
    mcb: &[MismatchCase],
    cfg: &GdaConfig,
    monitor: bool,
) -> Result<EpisodeTrace> {
    cfg.validate()?;
    if env.halted() {
        return Err(Error::EnvironmentHalted(env.tick()));
    }
    let mut stack = GoalStack::new(cfg.max_depth);
    stack.push(g_init.clone())?;
    let mut current = stack.pop();
    let mut pursuits = vec![Pursuit { goal: g_init.clone(), end: None }];
    let mut window: Option<Window> = None;
    let mut window_events: Vec<String> = Vec::new();
    let mut records = Vec::new();
    let mut segments: Vec<(PlanningCase, usize)> = Vec::new();
    let mut resolutions: Vec<(MismatchCase, usize)> = Vec::new();
    let mut status = None;

    while !env.halted() {
        let tick = env.tick();
        let s = env.state().clone();
        let mut rec = TickRecord {
            tick,
            state: s.clone(),
            goal: None,
            expectation: None,
            mismatch: None,
            transition: None,
            action: None,
            notes: Vec::new(),
        };

        if window.as_ref().is_some_and(|w| tick >= w.check_at) {
            let w = window.take().expect("checked");
            segments.push((PlanningCase { s: w.start, g: w.goal, e: s.clone(), p: w.plan }, w.pursuit));
            if let (true, Some(e)) = (monitor, w.expect) {
                let found = detect_mismatch(&e, &s);
                rec.expectation = Some(e);
                if let Some(m) = found {
                    let explanation =
                        if window_events.is_empty() { "unknown-cause".to_string() } else { window_events.join("+") };
                    match retrieve_mcb(mcb, &m) {
                        Err(Error::EmptyCaseBase) => {
                            rec.mismatch = Some(MismatchRecord { mismatch: m, explanation, mcb_entry: None });
                        }
                        Err(e) => return Err(e),
                        Ok(hit) => {
                            let g_new = formulate_goal(&s, &m, &mcb[hit.index].g);
                            if let Some(cur) = current.as_ref().filter(|c| c.facts() != g_new.facts()) {
                                rec.transition = Some((cur.clone(), g_new.clone()));
                                pursuits.last_mut().expect("pursuit").end = Some(s.clone());
                                pursuits.push(Pursuit { goal: g_new.clone(), end: None });
                                current = Some(g_new.clone());
                            }
                            resolutions.push((MismatchCase { m: m.clone(), g: g_new }, pursuits.len() - 1));
                            rec.mismatch =
                                Some(MismatchRecord { mismatch: m, explanation, mcb_entry: Some(hit.index) });
                        }
                    }
                }
            }
            window_events.clear();
        }

        while current.as_ref().is_some_and(|g| g.satisfied_in(&s)) {
            pursuits.last_mut().expect("pursuit").end = Some(s.clone());
            rec.notes.push("goal-satisfied".into());
            current = stack.pop();
            if let Some(g) = &current {
                pursuits.push(Pursuit { goal: g.clone(), end: None });
                rec.notes.push("next-goal".into());
            }
        }
        let Some(goal) = current.clone() else {
            status = Some(Status::Success { tick });
            records.push(rec);
            break;
        };
        rec.goal = Some(goal.clone());

        if window.is_none() {
            let hit = retrieve_pcb(pcb, &s, &goal).ok().filter(|h| h.score() > 0.0);
            let chosen = match hit {
                Some(h) => {
                    let c = &pcb[h.index];
                    let expect = if h.state_sim > 0.0 {
                        Some(c.e.clone())
                    } else {
                        if monitor {
                            rec.notes.push("no-expectation".into());
                        }
                        None
                    };
                    Some((c.p.clone(), expect))
                }
                None => match &agent.initial_plan {
                    Some(p) if pursuits.len() == 1 && !p.is_empty() => {
                        rec.notes.push("initial-plan".into());
                        Some((p.clone(), None))
                    }
                    _ => {
                        rec.notes.push("no-plan".into());
                        None
                    }
                },
            };
            if let Some((plan, expect)) = chosen {
                let len = plan.len() as u64;
                window = Some(Window {
                    start: s.clone(),
                    goal: goal.clone(),
                    remaining: plan.steps.iter().cloned().collect(),
                    plan,
                    expect,
                    check_at: tick + len.max(cfg.period),
                    pursuit: pursuits.len() - 1,
                });
            }
        }

        let action = window.as_mut().and_then(|w| w.remaining.pop_front());
        let out = env.advance(action.as_ref())?;
        if out.failed.is_some() {
            rec.notes.push("action-failed".into());
        }
        if let Some(label) = out.event {
            rec.notes.push(format!("event={label}"));
            window_events.push(label);
        }
        rec.action = action;
        records.push(rec);
    }

    let end_state = env.state().clone();
    let status = match status {
        Some(s) => s,
        None if stack.is_empty() && current.as_ref().is_some_and(|g| g.satisfied_in(&end_state)) => {
            Status::Success { tick: env.tick() }
        }
        None => Status::Incomplete { tick: env.tick() },
    };
    for p in &mut pursuits {
        if p.end.is_none() {
            p.end = Some(end_state.clone());
        }
    }
    let quality = |g: &Goal, pursuit: usize| g.quality(pursuits[pursuit].end.as_ref().expect("closed"));
    let segments =
        segments.into_iter().map(|(case, p)| Segment { quality: quality(&pursuits[p].goal, p), case }).collect();
    let resolutions =
        resolutions.into_iter().map(|(case, p)| Resolution { quality: quality(&case.g, p), case }).collect();
    Ok(EpisodeTrace { records, status, segments, resolutions })
}

/// Appends each executed segment whose goal quality exceeds `theta_p` and
/// that the PCB does not already hold. Returns the number added.
pub fn update_pcb(pcb: &mut Vec<PlanningCase>, trace: &EpisodeTrace, cfg: &GdaConfig) -> usize {
    let mut added = 0;
    for seg in &trace.segments {
        if seg.quality > cfg.theta_p && !pcb.contains(&seg.case) {
            pcb.push(seg.case.clone());
            added += 1;
        }
    }
    added
}

/// Appends each handled mismatch whose follow-up goal quality exceeds
/// `theta_m` and that the MCB does not already hold.
pub fn update_mcb(mcb: &mut Vec<MismatchCase>, trace: &EpisodeTrace, cfg: &GdaConfig) -> usize {
    let mut added = 0;
    for r in &trace.resolutions {
        if r.quality > cfg.theta_m && !mcb.contains(&r.case) {
            mcb.push(r.case.clone());
            added += 1;
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(s: &str) -> WorldState {
        WorldState::parse(s).unwrap()
    }

    fn goal(s: &str) -> Goal {
        Goal::new(ws(s), 0.0).unwrap()
    }

    #[test]
    fn state_similarity() {
        assert_eq!(state_sim(&ws("f, g"), &ws("f, g")), 1.0);
        assert_eq!(state_sim(&ws("f"), &ws("g")), 0.0);
        assert_eq!(state_sim(&ws("f, g"), &ws("f, h")), 1.0 / 3.0);
        assert_eq!(state_sim(&ws(""), &ws("")), 1.0);
    }

    #[test]
    fn mismatch_detection() {
        assert_eq!(detect_mismatch(&ws("a"), &ws("a")), None);
        let m = detect_mismatch(&ws("at(B)"), &ws("at(A)")).unwrap();
        assert_eq!((m.missing, m.unexpected), (ws("at(B)"), ws("at(A)")));
        let m = detect_mismatch(&ws("a"), &ws("a, b")).unwrap();
        assert!(m.missing.is_empty());
        assert_eq!(m.unexpected, ws("b"));
    }

    #[test]
    fn pcb_retrieval() {
        let pc = |s: &str, g: &str, p: &str| {
            PlanningCase::new(ws(s), goal(g), ws(s), SolutionPlan::parse(p).unwrap()).unwrap()
        };
        let pcb = vec![pc("a", "x", "one()"), pc("a, b", "y", "two()"), pc("c", "y", "three()")];
        assert_eq!(retrieve_pcb(&pcb, &ws("a, b"), &goal("y")).unwrap().index, 1);
        assert_eq!(retrieve_pcb(&pcb[2..], &ws("zz"), &goal("zz")).unwrap().index, 0);
        // a scores 1 + 0 for entry 0 and 0.5 + 1 for entry 1
        assert_eq!(retrieve_pcb(&pcb, &ws("a"), &goal("y")).unwrap().index, 1);
        assert!(matches!(retrieve_pcb(&[], &ws("a"), &goal("y")), Err(Error::EmptyCaseBase)));
    }

    #[test]
    fn mcb_retrieval() {
        let mc = |miss: &str, unexp: &str, g: &str| {
            MismatchCase::new(Mismatch::new(ws(miss), ws(unexp)).unwrap(), goal(g)).unwrap()
        };
        let mcb = vec![mc("a", "", "g1"), mc("a", "b", "g2"), mc("c", "d", "g3")];
        let m = Mismatch::new(ws("a"), ws("b")).unwrap();
        assert_eq!(retrieve_mcb(&mcb, &m).unwrap().index, 1);
        assert_eq!(retrieve_mcb(&mcb[2..], &m).unwrap().index, 0);
        assert!(retrieve_mcb(&[], &m).is_err());
        assert!(MismatchCase::new(Mismatch::new(ws(""), ws("")).unwrap(), goal("g")).is_err());
        assert!(Mismatch::new(ws("a"), ws("a")).is_err());
    }

    #[test]
    fn goal_formulation() {
        let m = Mismatch::new(ws("open(a)"), ws("cut(a)")).unwrap();
        assert_eq!(formulate_goal(&ws("x"), &m, &goal("y")), goal("y"));
        assert_eq!(formulate_goal(&ws("y"), &m, &goal("y")), goal("open(a)"));
        assert_eq!(formulate_goal(&ws("p, q"), &m, &goal("p, r, s")), goal("r, s"));
    }

    #[test]
    fn goal_stack_order() {
        let mut st = GoalStack::new(3);
        st.push(Goal::new(ws("a"), 1.0).unwrap()).unwrap();
        st.push(Goal::new(ws("b"), 2.0).unwrap()).unwrap();
        st.push(Goal::new(ws("c"), 1.0).unwrap()).unwrap();
        assert!(matches!(st.push(goal("d")), Err(Error::StackOverflow(3))));
        assert_eq!(st.pop().unwrap().facts(), &ws("b"));
        assert_eq!(st.pop().unwrap().facts(), &ws("a"));
        assert_eq!(st.pop().unwrap().facts(), &ws("c"));
        assert!(st.pop().is_none());
    }

    #[test]
    fn goal_quality_fraction() {
        let g = goal("a, b");
        assert_eq!(g.quality(&ws("a")), 0.5);
        assert_eq!(g.quality(&ws("a, b, c")), 1.0);
        assert!(Goal::new(ws(""), 0.0).is_err());
    }
}
