use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbr_core::adaptation::{
    adapt, combine_pathways, cot_candidate, parametric_candidate, parse_rules, CandidateSolution, ConstraintSet,
    Generated, GeneratorMode, PlanGenerator, TemplateGenerator,
};
use cbr_core::case::{build_case, parse_case_file, FeatureMap, FeatureValue, RawCaseRecord, SolutionPlan};
use cbr_core::config::EngineConfig;
use cbr_core::env::{Environment, Scenario};
use cbr_core::gda::{run_baseline_replanner, run_gda, update_mcb, update_pcb, Agent, Status};
use cbr_core::learning::{gap_report, retain as retain_case};
use cbr_core::library::CaseLibrary;
use cbr_core::metrics::{
    adaptation_rate, cost_report, explainability, quality, MemoryCost, PerformanceSeries, ReasoningInstance, TimeCost,
};
use cbr_core::persist::{render_case_bases, render_library};
use cbr_core::retrieval::{hybrid_retrieve_with_stats, Query, RetrievalConfig, RetrievalStats, ScoredCase};

use crate::files::{load_config, load_library, lock_for_write, read, write_atomic};
use crate::Global;

/// Ingest finished with rejected records and `--skip-bad` was not given.
#[derive(Debug)]
pub struct Rejected(pub usize);

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} record(s) rejected; nothing written (use --skip-bad to keep the rest)", self.0)
    }
}

impl std::error::Error for Rejected {}

fn parse_query(problem: &str, plan: Option<&str>) -> Result<Query> {
    let problem = FeatureMap::parse(problem).context("in --query")?;
    Ok(match plan {
        Some(p) => Query::with_plan(problem, SolutionPlan::parse(p).context("in --plan")?),
        None => Query::new(problem),
    })
}

fn retrieval_config(cfg: &EngineConfig, tau: Option<f64>, top_k: Option<usize>) -> RetrievalConfig {
    let mut r = cfg.retrieval.clone();
    if let Some(t) = tau {
        r.tau = t;
    }
    if let Some(k) = top_k {
        r.top_k = k;
    }
    r
}

#[derive(Args)]
pub struct IngestArgs {
    /// Case record files, one `problem: .. | solution: ..` record per line.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Library file to write.
    #[arg(long)]
    out: PathBuf,
    /// Write the library even when some records are rejected.
    #[arg(long)]
    skip_bad: bool,
}

pub fn ingest(g: &Global, a: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let _lock = lock_for_write(&a.out)?;
    let mut lib = CaseLibrary::new(cfg.embedder, cfg.cluster_threshold)?;
    let mut rejects = 0;
    for path in &a.files {
        let text = read(path)?;
        for (line, raw) in parse_case_file(&text) {
            let res = raw.and_then(|raw| build_case(&raw, lib.next_tick())).and_then(|c| lib.insert(c));
            if let Err(e) = res {
                eprintln!("{}:{line}: {e}", path.display());
                rejects += 1;
            }
        }
    }
    if rejects > 0 && !a.skip_bad {
        return Err(Rejected(rejects).into());
    }
    write_atomic(&a.out, &render_library(&lib)?)?;
    writeln!(out, "cases={} clusters={} rejects={rejects}", lib.len(), lib.hierarchy().clusters().len())?;
    Ok(())
}

#[derive(Args)]
pub struct RetrieveArgs {
    /// Library file written by `ingest`.
    #[arg(long)]
    library: PathBuf,
    /// Problem features, e.g. `service=web; symptom=crash`.
    #[arg(long)]
    query: String,
    /// Partial plan used by the structural channel.
    #[arg(long)]
    plan: Option<String>,
    /// Minimum fused score; overrides `[retrieval] tau`.
    #[arg(long)]
    tau: Option<f64>,
    /// Maximum number of cases; overrides `[retrieval] top_k`.
    #[arg(long)]
    top_k: Option<usize>,
}

pub fn retrieve(g: &Global, a: &RetrieveArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let lib = load_library(&a.library, &cfg)?;
    let q = parse_query(&a.query, a.plan.as_deref())?;
    let (hits, stats) = hybrid_retrieve_with_stats(&q, &lib, &retrieval_config(&cfg, a.tau, a.top_k))?;
    writeln!(out, "rank\tid\tscore\tsemantic\tfeature\tstructural\tsolution")?;
    for (i, h) in hits.iter().enumerate() {
        let plan = lib.get(&h.id).map(|e| e.case.solution.to_string()).unwrap_or_default();
        let c = h.channels;
        writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{plan}",
            i + 1,
            h.id,
            h.score,
            c.semantic,
            c.feature,
            c.structural
        )?;
    }
    writeln!(out, "# scored={} pruned={}", stats.scored, stats.pruned)?;
    if hits.is_empty() {
        return Err(cbr_core::Error::NothingRetrieved.into());
    }
    Ok(())
}

#[derive(Args)]
pub struct SolveArgs {
    /// Library file written by `ingest`.
    #[arg(long)]
    library: PathBuf,
    /// Problem features, e.g. `service=web; symptom=crash`.
    #[arg(long)]
    query: String,
    /// Partial plan used by the structural channel.
    #[arg(long)]
    plan: Option<String>,
    /// e.g. `sub web->api; forbid page; require verify`. `sub` renames
    /// argument symbols; `forbid` and `require` name actions.
    #[arg(long)]
    constraints: Option<String>,
    /// Template rule file; overrides `[adaptation] rules`.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Minimum fused score; overrides `[retrieval] tau`.
    #[arg(long)]
    tau: Option<f64>,
    /// Maximum number of cases; overrides `[retrieval] top_k`.
    #[arg(long)]
    top_k: Option<usize>,
    /// Also build chain-of-thought and parametric candidates and keep the best.
    #[arg(long)]
    pathways: bool,
    /// Report wall-clock time on stderr.
    #[arg(long)]
    timings: bool,
}

struct Unavailable;

impl PlanGenerator for Unavailable {
    fn generate(&self, _: &Query, _: &[SolutionPlan]) -> cbr_core::Result<Generated> {
        Err(cbr_core::Error::ExternalGeneratorUnavailable)
    }
}

struct Solved {
    lib: CaseLibrary,
    cfg: EngineConfig,
    hits: Vec<ScoredCase>,
    stats: RetrievalStats,
    candidate: CandidateSolution,
}

fn generator(cfg: &EngineConfig, rules: Option<&Path>) -> Result<Option<Box<dyn PlanGenerator>>> {
    if cfg.generator == GeneratorMode::External {
        return Ok(Some(Box::new(Unavailable)));
    }
    match rules {
        None => Ok(None),
        Some(p) => {
            let rules = parse_rules(&read(p)?).with_context(|| format!("in rules {}", p.display()))?;
            Ok(Some(Box::new(TemplateGenerator::new(rules)?)))
        }
    }
}

fn run_solve(g: &Global, a: &SolveArgs) -> Result<Solved> {
    let (cfg, config_rules) = load_config(g.config.as_deref())?;
    let lib = load_library(&a.library, &cfg)?;
    let q = parse_query(&a.query, a.plan.as_deref())?;
    let cs = match &a.constraints {
        Some(c) => ConstraintSet::parse(c).context("in --constraints")?,
        None => ConstraintSet::default(),
    };
    let generator = generator(&cfg, a.rules.as_deref().or(config_rules.as_deref()))?;
    let (hits, stats) = hybrid_retrieve_with_stats(&q, &lib, &retrieval_config(&cfg, a.tau, a.top_k))?;
    let cbr = adapt(&q, &hits, &lib, &cs, generator.as_deref())?;
    let candidate = if a.pathways {
        let p = &cfg.pathways;
        let mut cands = vec![cbr, cot_candidate(&q, p.cot_confidence)];
        if let Some(gen) = generator.as_deref() {
            cands.extend(parametric_candidate(&q, gen, p.parametric_confidence));
        }
        combine_pathways(&cands, p.omega.as_ref())?
    } else {
        cbr
    };
    Ok(Solved { lib, cfg, hits, stats, candidate })
}

fn write_header(out: &mut dyn Write, c: &CandidateSolution) -> Result<()> {
    writeln!(out, "plan\t{}", c.plan)?;
    writeln!(out, "pathway\t{}", c.pathway)?;
    writeln!(out, "confidence\t{:.6}", c.confidence)?;
    writeln!(out, "provenance")?;
    for line in c.provenance.render() {
        writeln!(out, "  {line}")?;
    }
    Ok(())
}

pub fn solve(g: &Global, a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let s = run_solve(g, a)?;
    let c = &s.candidate;
    write_header(out, c)?;

    // Costs are counted in deterministic work units, not seconds or bytes.
    let instance = ReasoningInstance::from_candidate(c, &s.lib);
    let top = &s.hits[0];
    let top_case = &s.lib.get(&top.id).context("top case missing from library")?.case;
    let sources: Vec<f64> =
        c.provenance.sources.iter().filter_map(|src| s.lib.get(&src.id).map(|e| e.case.outcome.success)).collect();
    let accuracy = if sources.is_empty() { 0.0 } else { sources.iter().sum::<f64>() / sources.len() as f64 };
    let reused = c.plan.steps.iter().filter(|st| top_case.solution.steps.contains(st)).count();
    let novelty = if c.plan.is_empty() { 0.0 } else { 1.0 - reused as f64 / c.plan.len() as f64 };
    let q = quality(accuracy, top.score.clamp(0.0, 1.0), instance.trace, novelty, &s.cfg.quality)?;
    let generated = c.provenance.fallback.as_ref().map_or(0, |f| f.generated.len());
    let costs = cost_report(
        TimeCost {
            retrieval: s.stats.scored as f64,
            processing: c.provenance.operation_count() as f64,
            generation: generated as f64,
        },
        MemoryCost {
            model: s.cfg.embedder.dim as f64,
            knowledge: s.lib.len() as f64,
            working: (s.hits.len() + c.plan.len()) as f64,
        },
    )?;
    writeln!(out, "metrics")?;
    writeln!(out, "  explainability\t{:.6}", explainability(&[instance])?)?;
    writeln!(out, "  quality\t{q:.6}")?;
    let t = costs.time;
    writeln!(
        out,
        "  time_units\tretrieval={} processing={} generation={} total={}",
        t.retrieval, t.processing, t.generation, costs.total_time
    )?;
    let m = costs.memory;
    writeln!(
        out,
        "  memory_units\tmodel={} knowledge={} working={} total={}",
        m.model, m.knowledge, m.working, costs.total_memory
    )?;
    if a.timings {
        eprintln!("wall_ms\t{:.3}", start.elapsed().as_secs_f64() * 1000.0);
    }
    Ok(())
}

pub fn explain(g: &Global, a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let s = run_solve(g, a)?;
    let c = &s.candidate;
    write_header(out, c)?;
    let replayed = c.provenance.replay(&s.lib)?;
    let instance = ReasoningInstance::from_candidate(c, &s.lib);
    writeln!(out, "replay\t{}", if replayed == c.plan { "ok" } else { "differs" })?;
    writeln!(out, "trace_completeness\t{:.6}", instance.trace)?;
    writeln!(out, "complexity\t{}", instance.complexity)?;
    if replayed != c.plan {
        anyhow::bail!("replayed plan `{replayed}` differs from `{}`", c.plan);
    }
    Ok(())
}

#[derive(Args)]
pub struct RetainArgs {
    /// Library file written by `ingest`.
    #[arg(long)]
    library: PathBuf,
    /// One case record line.
    #[arg(long)]
    record: String,
    /// Report the decision without changing the library.
    #[arg(long)]
    dry_run: bool,
}

pub fn retain(g: &Global, a: &RetainArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let _lock = if a.dry_run { None } else { Some(lock_for_write(&a.library)?) };
    let mut lib = load_library(&a.library, &cfg)?;
    let raw = RawCaseRecord::parse_line(&a.record).context("in --record")?;
    let case = build_case(&raw, lib.next_tick()).context("in --record")?;
    let id = case.meta.id.clone();
    let d = retain_case(&mut lib, case, &cfg.retention, &cfg.retrieval)?;
    let u = d.utility;
    writeln!(out, "id\t{id}")?;
    writeln!(out, "novelty\t{:.6}", u.novelty)?;
    writeln!(out, "effectiveness\t{:.6}", u.effectiveness)?;
    writeln!(out, "generalizability\t{:.6}", u.generalizability)?;
    writeln!(out, "utility\t{:.6}", u.value)?;
    let decision = match (d.retained, a.dry_run) {
        (false, _) => "rejected",
        (true, true) => "would-retain",
        (true, false) => "retained",
    };
    writeln!(out, "decision\t{decision}")?;
    if d.retained && !a.dry_run {
        write_atomic(&a.library, &render_library(&lib)?)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario file: script, goal, initial plan and case bases.
    #[arg(long)]
    scenario: PathBuf,
    /// Episodes to run; case bases learned in one carry to the next.
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Directory for per-episode traces and the learned case bases.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the non-monitoring replanner instead of the goal-driven agent.
    #[arg(long)]
    baseline: bool,
}

pub fn simulate(g: &Global, a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let scenario = Scenario::parse(&read(&a.scenario)?).with_context(|| format!("in {}", a.scenario.display()))?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let agent = Agent { initial_plan: scenario.plan.clone() };
    let (mut pcb, mut mcb) = (scenario.pcb.clone(), scenario.mcb.clone());
    for ep in 1..=a.episodes {
        let mut env = Environment::new(scenario.script.clone())?;
        let trace = if a.baseline {
            run_baseline_replanner(&mut env, &agent, &scenario.goal, &pcb, &cfg.gda)
        } else {
            run_gda(&mut env, &agent, &scenario.goal, &pcb, &mcb, &cfg.gda)
        }
        .with_context(|| format!("episode {ep}"))?;
        let (pcb_size, mcb_size) = (pcb.len(), mcb.len());
        let (pcb_added, mcb_added) = if a.baseline {
            (0, 0)
        } else {
            (update_pcb(&mut pcb, &trace, &cfg.gda), update_mcb(&mut mcb, &trace, &cfg.gda))
        };
        let (status, tick) = match trace.status {
            Status::Success { tick } => ("success", tick),
            Status::Incomplete { tick } => ("incomplete", tick),
        };
        writeln!(
            out,
            "episode={ep}\tstatus={status}\ttick={tick}\tmismatches={}\ttransitions={}\tpcb={pcb_size}\tmcb={mcb_size}\tpcb_added={pcb_added}\tmcb_added={mcb_added}",
            trace.mismatches().count(),
            trace.transitions().count(),
        )?;
        if let Some(dir) = &a.out {
            write_atomic(&dir.join(format!("episode-{ep:03}.trace")), &trace.render())?;
        }
    }
    if let Some(dir) = &a.out {
        write_atomic(&dir.join("case-bases.txt"), &render_case_bases(&pcb, &mcb))?;
    }
    Ok(())
}

#[derive(Args)]
pub struct GapsArgs {
    /// Library file written by `ingest`.
    #[arg(long)]
    library: PathBuf,
    /// Probe file, one feature map per line.
    #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
    probes: Option<PathBuf>,
    /// Draw this many probes from the library's feature vocabulary.
    #[arg(long)]
    sample: Option<usize>,
    /// Probes whose best similarity falls below this are reported.
    #[arg(long)]
    coverage: Option<f64>,
}

/// Random probes mixing known feature values with unseen symbols.
fn sample_probes(lib: &CaseLibrary, n: usize, seed: u64) -> Result<Vec<FeatureMap>> {
    let mut vocab: BTreeMap<String, BTreeMap<String, FeatureValue>> = BTreeMap::new();
    for c in lib.cases() {
        for (name, v) in c.problem.iter() {
            vocab.entry(name.clone()).or_default().insert(v.to_string(), v.clone());
        }
    }
    if vocab.is_empty() {
        return Err(cbr_core::Error::EmptyInput).context("cannot sample probes from an empty library");
    }
    let names: Vec<(&String, Vec<&FeatureValue>)> = vocab.iter().map(|(n, vs)| (n, vs.values().collect())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(n);
    for i in 0..n {
        let mut fm = FeatureMap::new();
        for (name, values) in &names {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let v = if rng.gen_bool(0.25) {
                FeatureValue::Symbol(format!("unseen{i}"))
            } else {
                values[rng.gen_range(0..values.len())].clone()
            };
            fm.insert(name.as_str(), v);
        }
        if fm.is_empty() {
            let (name, values) = &names[rng.gen_range(0..names.len())];
            fm.insert(name.as_str(), values[0].clone());
        }
        probes.push(fm);
    }
    Ok(probes)
}

pub fn gaps(g: &Global, a: &GapsArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let lib = load_library(&a.library, &cfg)?;
    let probes: Vec<FeatureMap> = match (&a.probes, a.sample) {
        (Some(p), _) => {
            let text = read(p)?;
            let mut probes = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let fm = FeatureMap::parse(line).with_context(|| format!("{}:{}", p.display(), i + 1))?;
                probes.push(fm);
            }
            probes
        }
        (None, Some(n)) => sample_probes(&lib, n, g.seed.unwrap_or(cfg.seed))?,
        (None, None) => unreachable!("clap requires one of --probes/--sample"),
    };
    let queries: Vec<Query> = probes.iter().cloned().map(Query::new).collect();
    let report = gap_report(&lib, &queries, a.coverage.unwrap_or(cfg.coverage), &cfg.retrieval)?;
    writeln!(out, "probe\tbest\tquery")?;
    for gap in &report.gaps {
        writeln!(out, "{}\t{:.6}\t{}", gap.probe + 1, gap.best, probes[gap.probe])?;
    }
    writeln!(out, "cluster\tmembers\tdensity")?;
    for c in &report.clusters {
        writeln!(out, "{}\t{}\t{:.6}", c.cluster, c.members, c.density)?;
    }
    writeln!(out, "# probes={} gaps={}", probes.len(), report.gaps.len())?;
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Metric sheets. Lines: `instance trace=T complexity=C`, `series T P`,
    /// `quality accuracy=A relevance=R coherence=C novelty=N`,
    /// `time retrieval=R processing=P generation=G`,
    /// `memory model=M knowledge=K working=W`.
    #[arg(required = true)]
    sheets: Vec<PathBuf>,
}

#[derive(Default)]
struct Sheet {
    instances: Vec<ReasoningInstance>,
    series: Vec<(f64, f64)>,
    quality: Vec<[f64; 4]>,
    time: Vec<TimeCost>,
    memory: Vec<MemoryCost>,
}

fn sheet_err(line: usize, reason: impl Into<String>) -> cbr_core::Error {
    cbr_core::Error::Parse { line, reason: reason.into() }
}

fn named<const N: usize>(line: usize, parts: &[&str], names: [&str; N]) -> cbr_core::Result<[f64; N]> {
    let mut vals = [f64::NAN; N];
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| sheet_err(line, format!("expected `name=value`, got `{p}`")))?;
        let slot = names.iter().position(|n| *n == k).ok_or_else(|| sheet_err(line, format!("unknown field `{k}`")))?;
        vals[slot] = v.parse().map_err(|_| sheet_err(line, format!("bad number `{v}`")))?;
    }
    if let Some(i) = vals.iter().position(|v| v.is_nan()) {
        return Err(sheet_err(line, format!("missing field `{}`", names[i])));
    }
    Ok(vals)
}

fn parse_sheet(text: &str, sheet: &mut Sheet) -> cbr_core::Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let rest = &parts[1..];
        match parts[0] {
            "instance" => {
                let [t, c] = named(n, rest, ["trace", "complexity"])?;
                sheet.instances.push(ReasoningInstance::new(t, c).map_err(|e| sheet_err(n, e.to_string()))?);
            }
            "series" => {
                let [t, p] = rest else {
                    return Err(sheet_err(n, "series needs `time performance`"));
                };
                let parse = |v: &str| v.parse::<f64>().map_err(|_| sheet_err(n, format!("bad number `{v}`")));
                sheet.series.push((parse(t)?, parse(p)?));
            }
            "quality" => sheet.quality.push(named(n, rest, ["accuracy", "relevance", "coherence", "novelty"])?),
            "time" => {
                let [r, p, g] = named(n, rest, ["retrieval", "processing", "generation"])?;
                sheet.time.push(TimeCost { retrieval: r, processing: p, generation: g });
            }
            "memory" => {
                let [m, k, w] = named(n, rest, ["model", "knowledge", "working"])?;
                sheet.memory.push(MemoryCost { model: m, knowledge: k, working: w });
            }
            other => return Err(sheet_err(n, format!("unknown entry `{other}`"))),
        }
    }
    Ok(())
}

pub fn metrics(g: &Global, a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let (cfg, _) = load_config(g.config.as_deref())?;
    let mut sheet = Sheet::default();
    for path in &a.sheets {
        parse_sheet(&read(path)?, &mut sheet).with_context(|| format!("in sheet {}", path.display()))?;
    }
    let empty = sheet.instances.is_empty()
        && sheet.series.is_empty()
        && sheet.quality.is_empty()
        && sheet.time.is_empty()
        && sheet.memory.is_empty();
    if empty {
        return Err(cbr_core::Error::EmptyInput).context("no metric entries in the given sheets");
    }
    if !sheet.instances.is_empty() {
        writeln!(out, "explainability\t{}", explainability(&sheet.instances)?)?;
    }
    if !sheet.series.is_empty() {
        let series = PerformanceSeries::new(sheet.series.clone())?;
        writeln!(out, "adaptation_rate\t{}", adaptation_rate(&series)?)?;
    }
    for (i, [acc, rel, coh, nov]) in sheet.quality.iter().enumerate() {
        writeln!(out, "quality[{}]\t{}", i + 1, quality(*acc, *rel, *coh, *nov, &cfg.quality)?)?;
    }
    if !sheet.time.is_empty() || !sheet.memory.is_empty() {
        let sum_t = sheet.time.iter().fold(TimeCost::default(), |acc, t| TimeCost {
            retrieval: acc.retrieval + t.retrieval,
            processing: acc.processing + t.processing,
            generation: acc.generation + t.generation,
        });
        let sum_m = sheet.memory.iter().fold(MemoryCost::default(), |acc, m| MemoryCost {
            model: acc.model + m.model,
            knowledge: acc.knowledge + m.knowledge,
            working: acc.working + m.working,
        });
        let report = cost_report(sum_t, sum_m)?;
        writeln!(out, "total_time\t{}", report.total_time)?;
        writeln!(out, "total_memory\t{}", report.total_memory)?;
    }
    Ok(())
}
