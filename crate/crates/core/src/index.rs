//! Feature postings and the single-level cluster hierarchy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::case::{CaseId, FeatureMap};
use crate::embed::{cosine, Vector};
use crate::error::Result;

/// Inverted index from `(feature name, rendered value)` to case ids.
#[derive(Debug, Clone, Default)]
pub struct FeatureIndex {
    postings: BTreeMap<(String, String), BTreeSet<CaseId>>,
}

impl FeatureIndex {
    pub fn add(&mut self, id: &CaseId, problem: &FeatureMap) {
        for (name, value) in problem.iter() {
            self.postings.entry((name.clone(), value.to_string())).or_default().insert(id.clone());
        }
    }

    pub fn lookup(&self, name: &str, value: &crate::case::FeatureValue) -> Option<&BTreeSet<CaseId>> {
        self.postings.get(&(name.to_string(), value.to_string()))
    }

    pub fn total_postings(&self) -> usize {
        self.postings.values().map(BTreeSet::len).sum()
    }

    pub fn keys(&self) -> impl Iterator<Item = &(String, String)> {
        self.postings.keys()
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub leader: Vector,
    pub members: Vec<CaseId>,
    /// Smallest cosine between the leader and any member (1 for a singleton).
    pub min_cos: f64,
}

/// Greedy leader clustering: a case joins the first cluster whose leader is
/// within `threshold` cosine, otherwise it founds a new cluster.
#[derive(Debug, Clone)]
pub struct ClusterHierarchy {
    threshold: f64,
    clusters: Vec<Cluster>,
    member_of: HashMap<CaseId, usize>,
}

impl ClusterHierarchy {
    pub fn new(threshold: f64) -> Self {
        ClusterHierarchy { threshold, clusters: Vec::new(), member_of: HashMap::new() }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn assign(&mut self, id: &CaseId, embedding: &Vector) -> Result<usize> {
        for (i, c) in self.clusters.iter_mut().enumerate() {
            let cos = cosine(&c.leader, embedding)?;
            if cos >= self.threshold {
                c.members.push(id.clone());
                c.min_cos = c.min_cos.min(cos);
                self.member_of.insert(id.clone(), i);
                return Ok(i);
            }
        }
        self.clusters.push(Cluster { leader: embedding.clone(), members: vec![id.clone()], min_cos: 1.0 });
        let idx = self.clusters.len() - 1;
        self.member_of.insert(id.clone(), idx);
        Ok(idx)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster_of(&self, id: &CaseId) -> Option<usize> {
        self.member_of.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}
