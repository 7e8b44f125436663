//! Utility-gated retention, failure-driven weight transfer and coverage
//! gap detection.

use std::collections::BTreeMap;

use crate::case::{Case, FeatureMap};
use crate::error::{Error, Result};
use crate::library::CaseLibrary;
use crate::retrieval::{rank_order, score_all, Query, RetrievalConfig, ScoredCase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionConfig {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Neighborhood size for generalizability.
    pub k: usize,
}

impl Default for RetentionConfig {
    fn default() -> Self {
        RetentionConfig { delta: 0.6, alpha: 0.5, beta: 0.3, gamma: 0.2, k: 3 }
    }
}

impl RetentionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config(format!("delta must be in [0,1], got {}", self.delta)));
        }
        let coeffs = [self.alpha, self.beta, self.gamma];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::config("alpha, beta, gamma must be >= 0"));
        }
        if (coeffs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("alpha + beta + gamma must equal 1"));
        }
        if self.k == 0 {
            return Err(Error::config("neighborhood k must be >= 1"));
        }
        Ok(())
    }
}

/// Fused similarity of `c` (problem plus solution as plan hint) to every
/// library case, best first.
fn neighbors(c: &Case, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Vec<ScoredCase> {
    let mut all = score_all(&Query::from_case(c), lib, cfg);
    all.sort_by(rank_order);
    all
}

/// `1 − max similarity` to the library; 1 for an empty library.
pub fn novelty(c: &Case, lib: &CaseLibrary, cfg: &RetrievalConfig) -> f64 {
    neighbors(c, lib, cfg).first().map_or(1.0, |best| 1.0 - best.score)
}

pub fn effectiveness(c: &Case) -> f64 {
    c.outcome.success
}

/// Mean similarity to the `k` nearest cases (fewer when the library is
/// smaller); 0 for an empty library.
pub fn generalizability(c: &Case, lib: &CaseLibrary, k: usize, cfg: &RetrievalConfig) -> f64 {
    let near = neighbors(c, lib, cfg);
    let take = k.min(near.len());
    if take == 0 {
        return 0.0;
    }
    near[..take].iter().map(|s| s.score).sum::<f64>() / take as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utility {
    pub novelty: f64,
    pub effectiveness: f64,
    pub generalizability: f64,
    pub value: f64,
}

pub fn combine_utility(novelty: f64, effectiveness: f64, generalizability: f64, rcfg: &RetentionConfig) -> f64 {
    rcfg.alpha * novelty + rcfg.beta * effectiveness + rcfg.gamma * generalizability
}

pub fn utility_breakdown(c: &Case, lib: &CaseLibrary, rcfg: &RetentionConfig, cfg: &RetrievalConfig) -> Utility {
    let near = neighbors(c, lib, cfg);
    let novelty = near.first().map_or(1.0, |best| 1.0 - best.score);
    let take = rcfg.k.min(near.len());
    let generalizability =
        if take == 0 { 0.0 } else { near[..take].iter().map(|s| s.score).sum::<f64>() / take as f64 };
    let effectiveness = effectiveness(c);
    Utility {
        novelty,
        effectiveness,
        generalizability,
        value: combine_utility(novelty, effectiveness, generalizability, rcfg),
    }
}

pub fn utility(c: &Case, lib: &CaseLibrary, rcfg: &RetentionConfig, cfg: &RetrievalConfig) -> f64 {
    utility_breakdown(c, lib, rcfg, cfg).value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetainDecision {
    pub retained: bool,
    pub utility: Utility,
}

/// Inserts `c` iff its utility reaches `delta`.
pub fn retain(lib: &mut CaseLibrary, c: Case, rcfg: &RetentionConfig, cfg: &RetrievalConfig) -> Result<RetainDecision> {
    rcfg.validate()?;
    if c.problem.is_empty() {
        return Err(Error::EmptyProblem);
    }
    let u = utility_breakdown(&c, lib, rcfg, cfg);
    let retained = u.value >= rcfg.delta;
    if retained {
        lib.insert(c)?;
    }
    Ok(RetainDecision { retained, utility: u })
}

/// Per-feature failure counters accumulated across episodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailureStats {
    pub episodes: u64,
    pub misrankings: BTreeMap<String, u64>,
    pub adaptation_failures: BTreeMap<String, u64>,
}

impl FailureStats {
    pub fn is_empty(&self) -> bool {
        self.episodes == 0 && self.misrankings.is_empty() && self.adaptation_failures.is_empty()
    }

    pub fn end_episode(&mut self) {
        self.episodes += 1;
    }

    /// A case that should not have won did: count each feature on which it
    /// disagrees with the query.
    pub fn record_misranking(&mut self, query: &FeatureMap, wrong: &FeatureMap) {
        for name in differing(query, wrong) {
            *self.misrankings.entry(name).or_default() += 1;
        }
    }

    /// Adapting `source` to `query` failed: count each disagreeing feature.
    pub fn record_adaptation_failure(&mut self, query: &FeatureMap, source: &FeatureMap) {
        for name in differing(query, source) {
            *self.adaptation_failures.entry(name).or_default() += 1;
        }
    }
}

fn differing(a: &FeatureMap, b: &FeatureMap) -> Vec<String> {
    let mut names: Vec<String> = a.iter().chain(b.iter()).map(|(n, _)| n.clone()).collect();
    names.sort();
    names.dedup();
    names.retain(|n| a.get(n) != b.get(n));
    names
}

/// One transfer step over explicit feature weights. Each weight is scaled by
/// `1 + eta·(miss − fail)/max(1, episodes)`, clamped to `[0.5, 2]`, and the
/// result is rescaled to the previous total.
pub fn transfer_knowledge(
    weights: &BTreeMap<String, f64>,
    fs: &FailureStats,
    eta: f64,
) -> Result<BTreeMap<String, f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange { what: "eta".into(), value: eta });
    }
    if let Some((n, w)) = weights.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::config(format!("weight for `{n}` must be >= 0, got {w}")));
    }
    let episodes = fs.episodes.max(1) as f64;
    let before: f64 = weights.values().sum();
    let mut updated: BTreeMap<String, f64> = weights
        .iter()
        .map(|(name, w)| {
            let miss = fs.misrankings.get(name).copied().unwrap_or(0) as f64;
            let fail = fs.adaptation_failures.get(name).copied().unwrap_or(0) as f64;
            let factor = (1.0 + eta * (miss - fail) / episodes).clamp(0.5, 2.0);
            (name.clone(), w * factor)
        })
        .collect();
    let after: f64 = updated.values().sum();
    if after <= 0.0 {
        return Ok(weights.clone());
    }
    let scale = before / after;
    updated.values_mut().for_each(|w| *w *= scale);
    Ok(updated)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub probe: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDensity {
    pub cluster: usize,
    pub members: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub clusters: Vec<ClusterDensity>,
}

/// Probes whose best fused similarity falls below `coverage`, plus each
/// cluster's share of the library.
pub fn gap_report(lib: &CaseLibrary, probes: &[Query], coverage: f64, cfg: &RetrievalConfig) -> Result<GapReport> {
    if probes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::OutOfRange { what: "coverage threshold".into(), value: coverage });
    }
    let gaps = probes
        .iter()
        .enumerate()
        .filter_map(|(probe, q)| {
            let best = score_all(q, lib, cfg).iter().map(|s| s.score).fold(0.0, f64::max);
            (best < coverage).then_some(Gap { probe, best })
        })
        .collect();
    let n = lib.len().max(1) as f64;
    let clusters = lib
        .hierarchy()
        .clusters()
        .iter()
        .enumerate()
        .map(|(cluster, c)| ClusterDensity { cluster, members: c.members.len(), density: c.members.len() as f64 / n })
        .collect();
    Ok(GapReport { gaps, clusters })
}
