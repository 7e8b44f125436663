//! Threshold retrieval over three fused similarity channels.
//!
//! * semantic: cosine between problem embeddings, floored at 0
//! * feature: weighted per-feature similarity, weights renormalized over the
//!   query's features
//! * structural: normalized LCS of action sequences against a plan hint
//!
//! Channel scores are fused with `lambda` renormalized over the channels that
//! apply to the query: the structural channel needs a non-empty plan hint and
//! the feature channel needs at least one positively weighted query feature.
//! A case is retrieved when its fused score reaches `tau`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::case::{Case, CaseId, FeatureMap, FeatureValue, SolutionPlan};
use crate::embed::{cosine, embed_problem, Vector};
use crate::error::{Error, Result};
use crate::index::Cluster;
use crate::library::{CaseLibrary, IndexedCase};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Query {
    pub problem: FeatureMap,
    pub plan_hint: Option<SolutionPlan>,
}

impl Query {
    pub fn new(problem: FeatureMap) -> Self {
        Query { problem, plan_hint: None }
    }

    pub fn with_plan(problem: FeatureMap, plan: SolutionPlan) -> Self {
        Query { problem, plan_hint: Some(plan) }
    }

    /// A query that asks "how close is this case to the library", used by
    /// novelty and neighborhood measures.
    pub fn from_case(case: &Case) -> Self {
        Query::with_plan(case.problem.clone(), case.solution.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum FeatureWeights {
    /// Every query feature weighs 1.
    #[default]
    Uniform,
    /// Listed weights; unlisted features weigh 0.
    Explicit(BTreeMap<String, f64>),
}

impl FeatureWeights {
    pub fn weight(&self, name: &str) -> f64 {
        match self {
            FeatureWeights::Uniform => 1.0,
            FeatureWeights::Explicit(m) => m.get(name).copied().unwrap_or(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FeatureWeights::Explicit(m) = self {
            if let Some((k, w)) = m.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
                return Err(Error::config(format!("weight for `{k}` must be finite and >= 0, got {w}")));
            }
            if m.values().sum::<f64>() <= 0.0 {
                return Err(Error::config("feature weights must have a positive sum"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub tau: f64,
    pub weights: FeatureWeights,
    pub lambda: [f64; 3],
    pub top_k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { tau: 0.5, weights: FeatureWeights::Uniform, lambda: [0.5, 0.3, 0.2], top_k: 5 }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config(format!("tau must be in [0,1], got {}", self.tau)));
        }
        if self.lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::config("lambda entries must be finite and >= 0"));
        }
        if self.lambda.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config("lambda must have a positive sum"));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k must be positive"));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelScores {
    pub semantic: f64,
    pub feature: f64,
    pub structural: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCase {
    pub id: CaseId,
    pub channels: ChannelScores,
    pub score: f64,
}

/// Ranking order: score descending, then case id ascending.
pub fn rank_order(a: &ScoredCase, b: &ScoredCase) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

/// Per-feature similarity: exact match for symbols, booleans and text;
/// `1 / (1 + |a - b|)` for numbers; 0 across types.
pub fn value_sim(a: &FeatureValue, b: &FeatureValue) -> f64 {
    match (a, b) {
        (FeatureValue::Number(x), FeatureValue::Number(y)) => 1.0 / (1.0 + (x - y).abs()),
        (x, y) if x == y => 1.0,
        _ => 0.0,
    }
}

/// Weighted feature similarity with weights renormalized over the query's
/// features. Features absent from `p` contribute 0.
pub fn feature_sim(q: &FeatureMap, p: &FeatureMap, weights: &FeatureWeights) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (name, qv) in q.iter() {
        let w = weights.weight(name);
        if w <= 0.0 {
            continue;
        }
        den += w;
        num += w * p.get(name).map_or(0.0, |pv| value_sim(qv, pv));
    }
    if den <= 0.0 {
        return Err(Error::NoWeightedFeatures);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `LCS(a, b) / max(|a|, |b|)` over action symbols; 0 without a hint.
pub fn structural_sim(hint: Option<&SolutionPlan>, case: &Case) -> f64 {
    let Some(hint) = hint else { return 0.0 };
    let a: Vec<&str> = hint.actions().collect();
    let b: Vec<&str> = case.solution.actions().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    lcs_len(&a, &b) as f64 / longest as f64
}

/// Query-side state shared across every case scored for one retrieval.
pub struct PreparedQuery<'q> {
    query: &'q Query,
    embedding: Vector,
    lambda: [f64; 3],
    lambda_sum: f64,
}

impl<'q> PreparedQuery<'q> {
    pub fn new(query: &'q Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Self {
        let embedding = embed_problem(lib.embedder(), &query.problem);
        let feature_applies = query.problem.iter().any(|(n, _)| cfg.weights.weight(n) > 0.0);
        let structural_applies = query.plan_hint.as_ref().is_some_and(|p| !p.is_empty());
        let lambda = [
            cfg.lambda[0],
            if feature_applies { cfg.lambda[1] } else { 0.0 },
            if structural_applies { cfg.lambda[2] } else { 0.0 },
        ];
        let lambda_sum = lambda[0] + lambda[1] + lambda[2];
        PreparedQuery { query, embedding, lambda, lambda_sum }
    }

    /// Effective channel weights, normalized to sum 1 (all 0 if nothing applies).
    pub fn lambda(&self) -> [f64; 3] {
        if self.lambda_sum <= 0.0 {
            return [0.0; 3];
        }
        self.lambda.map(|l| l / self.lambda_sum)
    }

    pub fn embedding(&self) -> &Vector {
        &self.embedding
    }

    pub fn fuse(&self, ch: &ChannelScores) -> f64 {
        if self.lambda_sum <= 0.0 {
            return 0.0;
        }
        let num = self.lambda[0] * ch.semantic + self.lambda[1] * ch.feature + self.lambda[2] * ch.structural;
        (num / self.lambda_sum).clamp(0.0, 1.0)
    }

    pub fn score(&self, entry: &IndexedCase, cfg: &RetrievalConfig) -> ScoredCase {
        let semantic = cosine(&self.embedding, &entry.embedding).unwrap_or(0.0).max(0.0);
        let feature = if self.lambda[1] > 0.0 {
            feature_sim(&self.query.problem, &entry.case.problem, &cfg.weights).unwrap_or(0.0)
        } else {
            0.0
        };
        let structural =
            if self.lambda[2] > 0.0 { structural_sim(self.query.plan_hint.as_ref(), &entry.case) } else { 0.0 };
        let channels = ChannelScores { semantic, feature, structural };
        ScoredCase { id: entry.case.meta.id.clone(), channels, score: self.fuse(&channels) }
    }

    /// Upper bound on the fused score of any member of `cluster`, from the
    /// spherical triangle inequality on the semantic channel.
    fn cluster_bound(&self, cluster: &Cluster) -> f64 {
        let semantic = if self.embedding.is_zero() || cluster.leader.is_zero() {
            0.0
        } else {
            let to_leader = cosine(&self.embedding, &cluster.leader).unwrap_or(1.0).acos();
            let radius = cluster.min_cos.clamp(-1.0, 1.0).acos();
            let gap = to_leader - radius;
            if gap <= 0.0 {
                1.0
            } else {
                gap.cos().max(0.0)
            }
        };
        let bound = ChannelScores { semantic: (semantic + 1e-9).min(1.0), feature: 1.0, structural: 1.0 };
        self.fuse(&bound)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RetrievalStats {
    pub scored: usize,
    pub pruned: usize,
}

fn finish(mut hits: Vec<ScoredCase>, top_k: usize) -> Vec<ScoredCase> {
    hits.sort_by(rank_order);
    hits.truncate(top_k);
    hits
}

/// Scores every case without thresholding or truncation, in library order.
pub fn score_all(q: &Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Vec<ScoredCase> {
    let prepared = PreparedQuery::new(q, lib, cfg);
    lib.entries().iter().map(|e| prepared.score(e, cfg)).collect()
}

/// Reference path: scores every case, keeps those at or above `tau`, ranks
/// and truncates to `top_k`.
pub fn exact_scan(q: &Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Result<Vec<ScoredCase>> {
    cfg.validate()?;
    let hits = score_all(q, lib, cfg).into_iter().filter(|s| s.score >= cfg.tau).collect();
    Ok(finish(hits, cfg.top_k))
}

/// Fused retrieval using the cluster hierarchy to skip clusters whose
/// bound falls below `tau`. Output equals [`exact_scan`].
pub fn hybrid_retrieve(q: &Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Result<Vec<ScoredCase>> {
    hybrid_retrieve_with_stats(q, lib, cfg).map(|(hits, _)| hits)
}

pub fn hybrid_retrieve_with_stats(
    q: &Query,
    lib: &CaseLibrary,
    cfg: &RetrievalConfig,
) -> Result<(Vec<ScoredCase>, RetrievalStats)> {
    cfg.validate()?;
    let prepared = PreparedQuery::new(q, lib, cfg);
    let mut stats = RetrievalStats::default();
    let mut hits = Vec::new();
    for cluster in lib.hierarchy().clusters() {
        if cfg.tau > 0.0 && prepared.cluster_bound(cluster) < cfg.tau {
            stats.pruned += cluster.members.len();
            continue;
        }
        for id in &cluster.members {
            let entry = lib.get(id).ok_or_else(|| Error::UnknownCase(id.0.clone()))?;
            stats.scored += 1;
            let scored = prepared.score(entry, cfg);
            if scored.score >= cfg.tau {
                hits.push(scored);
            }
        }
    }
    Ok((finish(hits, cfg.top_k), stats))
}

/// Threshold retrieval: every case whose fused similarity reaches `tau`,
/// ranked and truncated to `top_k`.
pub fn retrieve(q: &Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Result<Vec<ScoredCase>> {
    hybrid_retrieve(q, lib, cfg)
}
