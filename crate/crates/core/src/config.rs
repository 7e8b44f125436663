//! Engine configuration: a sectioned `key = value` text file. Unknown
//! sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::adaptation::{GeneratorMode, PathwayWeights};
use crate::embed::EmbedderConfig;
use crate::error::{Error, Result};
use crate::gda::GdaConfig;
use crate::learning::RetentionConfig;
use crate::library::DEFAULT_CLUSTER_THRESHOLD;
use crate::metrics::QualityWeights;
use crate::retrieval::{FeatureWeights, RetrievalConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PathwaySettings {
    /// `None` derives the weights from the candidates' confidences.
    pub omega: Option<PathwayWeights>,
    pub cot_confidence: f64,
    pub parametric_confidence: f64,
}

impl Default for PathwaySettings {
    fn default() -> Self {
        PathwaySettings { omega: None, cot_confidence: 0.3, parametric_confidence: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub seed: u64,
    pub embedder: EmbedderConfig,
    pub cluster_threshold: f64,
    pub retrieval: RetrievalConfig,
    pub retention: RetentionConfig,
    pub eta: f64,
    pub generator: GeneratorMode,
    /// Template rule file, relative to the config file.
    pub rules: Option<String>,
    pub pathways: PathwaySettings,
    pub gda: GdaConfig,
    pub quality: QualityWeights,
    pub coverage: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            embedder: EmbedderConfig::default(),
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            retrieval: RetrievalConfig::default(),
            retention: RetentionConfig::default(),
            eta: 0.1,
            generator: GeneratorMode::Template,
            rules: None,
            pathways: PathwaySettings::default(),
            gda: GdaConfig::default(),
            quality: QualityWeights::default(),
            coverage: 0.5,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(format!("`{key}`: cannot parse `{v}`")))
}

fn triple(key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::config(format!("`{key}` needs three comma-separated numbers")));
    }
    Ok([num(key, parts[0])?, num(key, parts[1])?, num(key, parts[2])?])
}

fn parse_weights(v: &str) -> Result<FeatureWeights> {
    if v == "uniform" {
        return Ok(FeatureWeights::Uniform);
    }
    let mut map = BTreeMap::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, w) =
            item.split_once(':').ok_or_else(|| Error::config(format!("weight `{item}` must be `name:value`")))?;
        map.insert(name.trim().to_string(), num("weights", w.trim())?);
    }
    Ok(FeatureWeights::Explicit(map))
}

fn render_weights(w: &FeatureWeights) -> String {
    match w {
        FeatureWeights::Uniform => "uniform".into(),
        FeatureWeights::Explicit(map) => map.iter().map(|(n, w)| format!("{n}:{w}")).collect::<Vec<_>>().join(", "),
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.embedder.validate()?;
        if !(self.cluster_threshold > 0.0 && self.cluster_threshold <= 1.0) {
            return Err(Error::config("cluster_threshold must be in (0,1]"));
        }
        self.retrieval.validate()?;
        self.retention.validate()?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::config("eta must be in [0,1]"));
        }
        for (name, c) in [
            ("cot_confidence", self.pathways.cot_confidence),
            ("parametric_confidence", self.pathways.parametric_confidence),
            ("coverage", self.coverage),
        ] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::config(format!("{name} must be in [0,1]")));
            }
        }
        self.gda.validate()?;
        self.quality.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = EngineConfig::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let res = if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                const SECTIONS: [&str; 10] = [
                    "engine",
                    "embedder",
                    "library",
                    "retrieval",
                    "retention",
                    "transfer",
                    "adaptation",
                    "gda",
                    "quality",
                    "gaps",
                ];
                if SECTIONS.contains(&section.as_str()) {
                    Ok(())
                } else {
                    Err(Error::config(format!("unknown section `{section}`")))
                }
            } else if let Some((k, v)) = line.split_once('=') {
                cfg.set(&section, k.trim(), v.trim())
            } else {
                Err(Error::config(format!("expected `key = value`, got `{line}`")))
            };
            res.map_err(|e| e.at_line(i + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        match (section, key) {
            ("engine", "seed") => self.seed = num(key, v)?,
            ("embedder", "dim") => self.embedder.dim = num(key, v)?,
            ("embedder", "ngram") => self.embedder.ngram = num(key, v)?,
            ("embedder", "seed") => self.embedder.seed = num(key, v)?,
            ("library", "cluster_threshold") => self.cluster_threshold = num(key, v)?,
            ("retrieval", "tau") => self.retrieval.tau = num(key, v)?,
            ("retrieval", "lambda") => self.retrieval.lambda = triple(key, v)?,
            ("retrieval", "top_k") => self.retrieval.top_k = num(key, v)?,
            ("retrieval", "weights") => self.retrieval.weights = parse_weights(v)?,
            ("retention", "delta") => self.retention.delta = num(key, v)?,
            ("retention", "alpha") => self.retention.alpha = num(key, v)?,
            ("retention", "beta") => self.retention.beta = num(key, v)?,
            ("retention", "gamma") => self.retention.gamma = num(key, v)?,
            ("retention", "k") => self.retention.k = num(key, v)?,
            ("transfer", "eta") => self.eta = num(key, v)?,
            ("adaptation", "generator") => {
                self.generator = match v {
                    "template" => GeneratorMode::Template,
                    "external" => GeneratorMode::External,
                    _ => return Err(Error::config(format!("generator must be template or external, got `{v}`"))),
                }
            }
            ("adaptation", "rules") => self.rules = (!v.is_empty()).then(|| v.to_string()),
            ("adaptation", "omega") => {
                self.pathways.omega = if v == "auto" { None } else { Some(PathwayWeights::new(triple(key, v)?)?) }
            }
            ("adaptation", "cot_confidence") => self.pathways.cot_confidence = num(key, v)?,
            ("adaptation", "parametric_confidence") => self.pathways.parametric_confidence = num(key, v)?,
            ("gda", "theta_p") => self.gda.theta_p = num(key, v)?,
            ("gda", "theta_m") => self.gda.theta_m = num(key, v)?,
            ("gda", "period") => self.gda.period = num(key, v)?,
            ("gda", "max_depth") => self.gda.max_depth = num(key, v)?,
            ("quality", "accuracy") => self.quality.accuracy = num(key, v)?,
            ("quality", "relevance") => self.quality.relevance = num(key, v)?,
            ("quality", "coherence") => self.quality.coherence = num(key, v)?,
            ("quality", "novelty") => self.quality.novelty = num(key, v)?,
            ("gaps", "coverage") => self.coverage = num(key, v)?,
            ("", _) => return Err(Error::config(format!("`{key}` appears before any section"))),
            _ => return Err(Error::config(format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    /// Renders every setting; parsing the output gives back an equal config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let l = self.retrieval.lambda;
        let _ = writeln!(s, "[engine]\nseed = {}\n", self.seed);
        let _ = writeln!(
            s,
            "[embedder]\ndim = {}\nngram = {}\nseed = {}\n",
            self.embedder.dim, self.embedder.ngram, self.embedder.seed
        );
        let _ = writeln!(s, "[library]\ncluster_threshold = {}\n", self.cluster_threshold);
        let _ = writeln!(
            s,
            "[retrieval]\ntau = {}\nlambda = {}, {}, {}\ntop_k = {}\nweights = {}\n",
            self.retrieval.tau,
            l[0],
            l[1],
            l[2],
            self.retrieval.top_k,
            render_weights(&self.retrieval.weights)
        );
        let r = &self.retention;
        let _ = writeln!(
            s,
            "[retention]\ndelta = {}\nalpha = {}\nbeta = {}\ngamma = {}\nk = {}\n",
            r.delta, r.alpha, r.beta, r.gamma, r.k
        );
        let _ = writeln!(s, "[transfer]\neta = {}\n", self.eta);
        let generator = match self.generator {
            GeneratorMode::Template => "template",
            GeneratorMode::External => "external",
        };
        let omega = self
            .pathways
            .omega
            .map_or("auto".to_string(), |w| format!("{}, {}, {}", w.omega[0], w.omega[1], w.omega[2]));
        let _ = writeln!(
            s,
            "[adaptation]\ngenerator = {generator}\nrules = {}\nomega = {omega}\ncot_confidence = {}\nparametric_confidence = {}\n",
            self.rules.as_deref().unwrap_or(""),
            self.pathways.cot_confidence,
            self.pathways.parametric_confidence
        );
        let g = &self.gda;
        let _ = writeln!(
            s,
            "[gda]\ntheta_p = {}\ntheta_m = {}\nperiod = {}\nmax_depth = {}\n",
            g.theta_p, g.theta_m, g.period, g.max_depth
        );
        let q = &self.quality;
        let _ = writeln!(
            s,
            "[quality]\naccuracy = {}\nrelevance = {}\ncoherence = {}\nnovelty = {}\n",
            q.accuracy, q.relevance, q.coherence, q.novelty
        );
        let _ = write!(s, "[gaps]\ncoverage = {}\n", self.coverage);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_roundtrip() {
        let cfg = EngineConfig::default();
        assert_eq!(EngineConfig::parse(&cfg.render()).unwrap(), cfg);
        let mut custom = cfg.clone();
        custom.retrieval.weights = FeatureWeights::Explicit([("a".to_string(), 2.0)].into_iter().collect());
        custom.pathways.omega = Some(PathwayWeights::new([0.2, 0.5, 0.3]).unwrap());
        custom.rules = Some("rules.txt".into());
        assert_eq!(EngineConfig::parse(&custom.render()).unwrap(), custom);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(matches!(EngineConfig::parse("[retrieval]\ntaux = 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(EngineConfig::parse("[nope]\n"), Err(Error::Parse { line: 1, .. })));
        assert!(EngineConfig::parse("tau = 1\n").is_err());
        assert!(EngineConfig::parse("[retrieval]\ntau = lots\n").is_err());
    }

    #[test]
    fn invariants_checked_after_parse() {
        assert!(EngineConfig::parse("[retention]\nalpha = 0.9\n").is_err());
        assert!(EngineConfig::parse("[retrieval]\ntau = 1.5\n").is_err());
        let partial = EngineConfig::parse("# only one override\n[retrieval]\ntau = 0.25\n").unwrap();
        assert_eq!(partial.retrieval.tau, 0.25);
        assert_eq!(partial.gda, GdaConfig::default());
    }
}
