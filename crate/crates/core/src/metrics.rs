//! Evaluation metrics: explainability, adaptation rate, cost totals and
//! weighted solution quality.

use crate::adaptation::CandidateSolution;
use crate::error::{Error, Result};
use crate::library::CaseLibrary;

fn unit(what: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::OutOfRange { what: what.into(), value: v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReasoningInstance {
    pub trace: f64,
    pub complexity: f64,
}

impl ReasoningInstance {
    pub fn new(trace: f64, complexity: f64) -> Result<Self> {
        unit("trace completeness", trace)?;
        if !(complexity.is_finite() && complexity > 0.0) {
            return Err(Error::OutOfRange { what: "complexity".into(), value: complexity });
        }
        Ok(ReasoningInstance { trace, complexity })
    }

    /// Trace completeness is the fraction of plan positions the provenance
    /// replays exactly; complexity is the operation count, at least 1.
    pub fn from_candidate(c: &CandidateSolution, lib: &CaseLibrary) -> Self {
        let trace = match c.provenance.replay(lib) {
            Ok(replayed) => {
                let longest = replayed.len().max(c.plan.len());
                if longest == 0 {
                    1.0
                } else {
                    let same = replayed.steps.iter().zip(&c.plan.steps).filter(|(a, b)| a == b).count();
                    same as f64 / longest as f64
                }
            }
            Err(_) => 0.0,
        };
        let complexity = c.provenance.operation_count().max(1) as f64;
        ReasoningInstance { trace, complexity }
    }
}

/// Mean of `trace / complexity`.
pub fn explainability(instances: &[ReasoningInstance]) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = instances.iter().map(|r| r.trace / r.complexity).sum();
    Ok(sum / instances.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceSeries {
    points: Vec<(f64, f64)>,
}

impl PerformanceSeries {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for &(t, p) in &points {
            if !t.is_finite() {
                return Err(Error::OutOfRange { what: "time".into(), value: t });
            }
            unit("performance", p)?;
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config("series times must be strictly increasing"));
        }
        Ok(PerformanceSeries { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Least-squares slope of performance against time.
pub fn adaptation_rate(series: &PerformanceSeries) -> Result<f64> {
    let pts = series.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_p = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, p) in pts {
        num += (t - mean_t) * (p - mean_p);
        den += (t - mean_t) * (t - mean_t);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimeCost {
    pub retrieval: f64,
    pub processing: f64,
    pub generation: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MemoryCost {
    pub model: f64,
    pub knowledge: f64,
    pub working: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub time: TimeCost,
    pub memory: MemoryCost,
    pub total_time: f64,
    pub total_memory: f64,
}

pub fn cost_report(time: TimeCost, memory: MemoryCost) -> Result<CostReport> {
    let parts = [
        ("retrieval time", time.retrieval),
        ("processing time", time.processing),
        ("generation time", time.generation),
        ("model memory", memory.model),
        ("knowledge memory", memory.knowledge),
        ("working memory", memory.working),
    ];
    for (what, v) in parts {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::OutOfRange { what: what.into(), value: v });
        }
    }
    Ok(CostReport {
        time,
        memory,
        total_time: time.retrieval + time.processing + time.generation,
        total_memory: memory.model + memory.knowledge + memory.working,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityWeights {
    pub accuracy: f64,
    pub relevance: f64,
    pub coherence: f64,
    pub novelty: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights { accuracy: 0.4, relevance: 0.3, coherence: 0.2, novelty: 0.1 }
    }
}

impl QualityWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.accuracy, self.relevance, self.coherence, self.novelty];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config("quality weights must be >= 0"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("quality weights must sum to 1"));
        }
        Ok(())
    }
}

pub fn quality(accuracy: f64, relevance: f64, coherence: f64, novelty: f64, qw: &QualityWeights) -> Result<f64> {
    qw.validate()?;
    let a = unit("accuracy", accuracy)?;
    let r = unit("relevance", relevance)?;
    let c = unit("coherence", coherence)?;
    let n = unit("novelty", novelty)?;
    Ok(qw.accuracy * a + qw.relevance * r + qw.coherence * c + qw.novelty * n)
}
