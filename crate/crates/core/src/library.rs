use std::collections::HashMap;
use std::sync::Arc;

use crate::case::{Case, CaseId};
use crate::embed::{embed_case, Embedder, EmbedderConfig, HashingEmbedder, Vector};
use crate::error::{Error, Result};
use crate::index::{ClusterHierarchy, FeatureIndex};

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct IndexedCase {
    pub case: Case,
    pub embedding: Vector,
}

/// Indexed case collection: cases in insertion order, their problem
/// embeddings, feature postings and the cluster hierarchy.
#[derive(Clone)]
pub struct CaseLibrary {
    embedder: Arc<dyn Embedder + Send + Sync>,
    embedder_cfg: Option<EmbedderConfig>,
    entries: Vec<IndexedCase>,
    positions: HashMap<CaseId, usize>,
    features: FeatureIndex,
    hierarchy: ClusterHierarchy,
}

impl std::fmt::Debug for CaseLibrary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseLibrary")
            .field("cases", &self.entries.len())
            .field("clusters", &self.hierarchy.len())
            .field("embedder", &self.embedder.digest())
            .finish()
    }
}

impl CaseLibrary {
    pub fn new(cfg: EmbedderConfig, cluster_threshold: f64) -> Result<Self> {
        let mut lib = Self::with_embedder(Arc::new(HashingEmbedder::new(cfg)?), cluster_threshold)?;
        lib.embedder_cfg = Some(cfg);
        Ok(lib)
    }

    pub fn with_embedder(embedder: Arc<dyn Embedder + Send + Sync>, cluster_threshold: f64) -> Result<Self> {
        if !(cluster_threshold > 0.0 && cluster_threshold <= 1.0) {
            return Err(Error::config(format!("cluster threshold must be in (0,1], got {cluster_threshold}")));
        }
        Ok(CaseLibrary {
            embedder,
            embedder_cfg: None,
            entries: Vec::new(),
            positions: HashMap::new(),
            features: FeatureIndex::default(),
            hierarchy: ClusterHierarchy::new(cluster_threshold),
        })
    }

    /// Embeds, posts and clusters a case.
    pub fn insert(&mut self, case: Case) -> Result<()> {
        let embedding = embed_case(self.embedder.as_ref(), &case);
        self.insert_with_embedding(case, embedding)
    }

    pub(crate) fn insert_with_embedding(&mut self, case: Case, embedding: Vector) -> Result<()> {
        if self.positions.contains_key(&case.meta.id) {
            return Err(Error::DuplicateId(case.meta.id.0.clone()));
        }
        if embedding.dim() != self.embedder.dim() {
            return Err(Error::DimMismatch { left: embedding.dim(), right: self.embedder.dim() });
        }
        let id = case.meta.id.clone();
        self.features.add(&id, &case.problem);
        self.hierarchy.assign(&id, &embedding)?;
        self.positions.insert(id, self.entries.len());
        self.entries.push(IndexedCase { case, embedding });
        Ok(())
    }

    /// Rebuilds the cluster hierarchy over all cases in insertion order.
    pub fn organize(&mut self, threshold: f64) -> Result<&ClusterHierarchy> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::config(format!("cluster threshold must be in (0,1], got {threshold}")));
        }
        let mut h = ClusterHierarchy::new(threshold);
        for e in &self.entries {
            h.assign(&e.case.meta.id, &e.embedding)?;
        }
        self.hierarchy = h;
        Ok(&self.hierarchy)
    }

    pub fn get(&self, id: &CaseId) -> Option<&IndexedCase> {
        self.positions.get(id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, id: &CaseId) -> bool {
        self.positions.contains_key(id)
    }

    pub fn entries(&self) -> &[IndexedCase] {
        &self.entries
    }

    pub fn cases(&self) -> impl Iterator<Item = &Case> {
        self.entries.iter().map(|e| &e.case)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    /// Set when the library was built from a hashing-embedder config.
    pub fn embedder_config(&self) -> Option<&EmbedderConfig> {
        self.embedder_cfg.as_ref()
    }

    pub fn features(&self) -> &FeatureIndex {
        &self.features
    }

    pub fn hierarchy(&self) -> &ClusterHierarchy {
        &self.hierarchy
    }

    pub fn next_tick(&self) -> u64 {
        self.entries.iter().map(|e| e.case.meta.created_at + 1).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{build_case, RawCaseRecord};

    fn case(line: &str, tick: u64) -> Case {
        build_case(&RawCaseRecord::parse_line(line).unwrap(), tick).unwrap()
    }

    fn lib() -> CaseLibrary {
        CaseLibrary::new(EmbedderConfig::default(), DEFAULT_CLUSTER_THRESHOLD).unwrap()
    }

    #[test]
    fn index_then_lookup() {
        let mut l = lib();
        let c = case("problem: color=red; size=3 | solution: paint()", 0);
        let id = c.meta.id.clone();
        l.insert(c).unwrap();
        let hits = l.features().lookup("size", &crate::case::FeatureValue::Number(3.0)).unwrap();
        assert!(hits.contains(&id));
        assert!(l.features().lookup("size", &crate::case::FeatureValue::Number(4.0)).is_none());
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut l = lib();
        l.insert(case("problem: a=1 | solution: x()", 0)).unwrap();
        let e = l.insert(case("problem: a=1 | solution: x()", 1)).unwrap_err();
        assert!(matches!(e, Error::DuplicateId(_)));
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn postings_count_matches_feature_total() {
        let mut l = lib();
        let lines = [
            "problem: a=1 | solution: x()",
            "problem: a=1; b=2 | solution: x()",
            "problem: a=2; b=2; c=z | solution: y()",
            "problem: | solution: y()",
        ];
        let mut expected = 0;
        for (i, line) in lines.iter().enumerate() {
            let c = case(line, i as u64);
            expected += c.problem.len();
            l.insert(c).unwrap();
        }
        assert_eq!(l.features().total_postings(), expected);
    }

    #[test]
    fn incremental_and_batch_clustering_agree() {
        let mut l = lib();
        for i in 0..30 {
            l.insert(case(&format!("problem: k={}; tag=t{}; n={i} | solution: s()", i % 4, i % 3), i)).unwrap();
        }
        let incremental: Vec<Vec<CaseId>> = l.hierarchy().clusters().iter().map(|c| c.members.clone()).collect();
        let batch: Vec<Vec<CaseId>> =
            l.organize(DEFAULT_CLUSTER_THRESHOLD).unwrap().clusters().iter().map(|c| c.members.clone()).collect();
        assert_eq!(incremental, batch);
        assert!(batch.len() <= l.len());
    }

    #[test]
    fn bad_threshold_rejected() {
        assert!(CaseLibrary::new(EmbedderConfig::default(), 0.0).is_err());
        assert!(lib().organize(1.5).is_err());
    }
}
