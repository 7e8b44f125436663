//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbr_core::adaptation::{adapt, transform_traced, ConstraintSet};
use cbr_core::case::{build_case, parse_case_file, Case, FeatureMap, FeatureValue, RawCaseRecord, SolutionPlan};
use cbr_core::embed::{cosine, embed, EmbedderConfig, Vector};
use cbr_core::env::{Environment, Fact, Scenario, WorldState};
use cbr_core::gda::{
    jaccard, run_baseline_replanner, run_gda, update_mcb, update_pcb, Agent, GdaConfig, MismatchCase, PlanningCase,
    Status,
};
use cbr_core::learning::{retain, RetentionConfig};
use cbr_core::library::CaseLibrary;
use cbr_core::metrics::{
    adaptation_rate, cost_report, explainability, quality, MemoryCost, PerformanceSeries, QualityWeights,
    ReasoningInstance, TimeCost,
};
use cbr_core::retrieval::{exact_scan, hybrid_retrieve, FeatureWeights, Query, RetrievalConfig};

type Outcome = Result<String, String>;

/// Name, check and optional time limit.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

const NAMES: [&str; 6] = ["service", "symptom", "region", "severity", "load", "tier"];
const SYMBOLS: [&str; 8] = ["web", "db", "cache", "crash", "latency", "eu", "us", "gold"];
const ACTIONS: [&str; 7] = ["page", "restart", "verify", "scale", "drain", "notify", "rollback"];

fn random_value(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0..=5 => SYMBOLS.choose(rng).unwrap().to_string(),
        6 | 7 => rng.gen_range(0..6).to_string(),
        8 => format!("{:.2}", rng.gen_range(0.0..2.0)),
        _ => format!("\"{} {}\"", SYMBOLS.choose(rng).unwrap(), SYMBOLS.choose(rng).unwrap()),
    }
}

fn random_problem(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=NAMES.len());
    let mut names: Vec<&str> = NAMES.choose_multiple(rng, n).copied().collect();
    names.sort();
    names.iter().map(|k| format!("{k}={}", random_value(rng))).collect::<Vec<_>>().join("; ")
}

fn random_plan(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    (0..n)
        .map(|_| {
            let args: Vec<&str> = (0..rng.gen_range(0..=2)).map(|_| *SYMBOLS.choose(rng).unwrap()).collect();
            format!("{}({})", ACTIONS.choose(rng).unwrap(), args.join(","))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn random_case(rng: &mut ChaCha8Rng, tick: u64) -> Case {
    let line = format!(
        "problem: {} | solution: {} | outcome: success={}",
        random_problem(rng),
        random_plan(rng, 5),
        rng.gen_range(0..=20) as f64 / 20.0
    );
    build_case(&RawCaseRecord::parse_line(&line).unwrap(), tick).unwrap()
}

fn random_library(rng: &mut ChaCha8Rng, size: usize, threshold: f64) -> CaseLibrary {
    let mut lib = CaseLibrary::new(EmbedderConfig::default(), threshold).unwrap();
    for i in 0..size {
        let c = random_case(rng, i as u64);
        if !lib.contains(&c.meta.id) {
            lib.insert(c).unwrap();
        }
    }
    lib
}

fn random_query(rng: &mut ChaCha8Rng) -> Query {
    let fm = FeatureMap::parse(&random_problem(rng)).unwrap();
    if rng.gen_bool(0.5) {
        Query::with_plan(fm, SolutionPlan::parse(&random_plan(rng, 4)).unwrap())
    } else {
        Query::new(fm)
    }
}

fn random_retrieval_config(rng: &mut ChaCha8Rng) -> RetrievalConfig {
    let weights = if rng.gen_bool(0.5) {
        FeatureWeights::Uniform
    } else {
        let mut m = std::collections::BTreeMap::new();
        for n in NAMES {
            if rng.gen_bool(0.7) {
                m.insert(n.to_string(), rng.gen_range(0.0..3.0));
            }
        }
        m.insert(NAMES.choose(rng).unwrap().to_string(), rng.gen_range(0.5..3.0));
        FeatureWeights::Explicit(m)
    };
    let mut lambda = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    if rng.gen_bool(0.15) {
        lambda[rng.gen_range(0..3)] = 0.0;
    }
    lambda[0] += 0.01;
    RetrievalConfig { tau: rng.gen_range(0.0..0.9), weights, lambda, top_k: rng.gen_range(1..=40) }
}

// ---- independent scoring, written from the formulas rather than the library code ----

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    let d = (na * nb).sqrt();
    if d == 0.0 {
        0.0
    } else {
        (dot / d).clamp(-1.0, 1.0)
    }
}

fn oracle_value_sim(a: &FeatureValue, b: &FeatureValue) -> f64 {
    match (a, b) {
        (FeatureValue::Number(x), FeatureValue::Number(y)) => 1.0 / (1.0 + (x - y).abs()),
        _ if a == b => 1.0,
        _ => 0.0,
    }
}

fn weight_of(w: &FeatureWeights, name: &str) -> f64 {
    match w {
        FeatureWeights::Uniform => 1.0,
        FeatureWeights::Explicit(m) => m.get(name).copied().unwrap_or(0.0),
    }
}

fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

/// Fused score of every case for `q`, filtered by tau, ranked, truncated.
fn oracle_scan(q: &Query, lib: &CaseLibrary, cfg: &RetrievalConfig) -> Vec<(String, f64)> {
    let embedded: Vec<Vector> =
        lib.cases().map(|c| embed(&c.problem.to_string(), &EmbedderConfig::default()).unwrap()).collect();
    oracle_scan_with(q, lib, &embedded, cfg)
}

fn oracle_scan_with(q: &Query, lib: &CaseLibrary, embedded: &[Vector], cfg: &RetrievalConfig) -> Vec<(String, f64)> {
    let qv = embed(&q.problem.to_string(), &EmbedderConfig::default()).unwrap();
    let feature_on = q.problem.iter().any(|(n, _)| weight_of(&cfg.weights, n) > 0.0);
    let hint: Option<Vec<String>> =
        q.plan_hint.as_ref().filter(|p| !p.is_empty()).map(|p| p.steps.iter().map(|s| s.action.clone()).collect());
    let lam =
        [cfg.lambda[0], if feature_on { cfg.lambda[1] } else { 0.0 }, if hint.is_some() { cfg.lambda[2] } else { 0.0 }];
    let lam_sum = lam[0] + lam[1] + lam[2];
    let mut out = Vec::new();
    for (case, cv) in lib.cases().zip(embedded) {
        let semantic = oracle_cosine(qv.values(), cv.values()).max(0.0);
        let feature = if lam[1] > 0.0 {
            let (mut num, mut den) = (0.0, 0.0);
            for (name, qv) in q.problem.iter() {
                let w = weight_of(&cfg.weights, name);
                if w > 0.0 {
                    den += w;
                    num += w * case.problem.get(name).map_or(0.0, |pv| oracle_value_sim(qv, pv));
                }
            }
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let structural = match (&hint, lam[2] > 0.0) {
            (Some(h), true) => {
                let c: Vec<String> = case.solution.steps.iter().map(|s| s.action.clone()).collect();
                oracle_lcs(h, &c) as f64 / h.len().max(c.len()) as f64
            }
            _ => 0.0,
        };
        let score = ((lam[0] * semantic + lam[1] * feature + lam[2] * structural) / lam_sum).clamp(0.0, 1.0);
        if score >= cfg.tau {
            out.push((case.meta.id.0.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(cfg.top_k);
    out
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut queries, mut mismatches, mut total_cases, mut nonempty) = (0, 0, 0, 0);
    for _ in 0..100 {
        let size = rng.gen_range(1..=500);
        let threshold = rng.gen_range(0.3..0.95);
        let lib = random_library(&mut rng, size, threshold);
        total_cases += lib.len();
        let embedded: Vec<Vector> =
            lib.cases().map(|c| embed(&c.problem.to_string(), &EmbedderConfig::default()).unwrap()).collect();
        for _ in 0..3 {
            let q = random_query(&mut rng);
            let cfg = random_retrieval_config(&mut rng);
            let got: Vec<(String, f64)> =
                hybrid_retrieve(&q, &lib, &cfg).unwrap().into_iter().map(|s| (s.id.0, s.score)).collect();
            let want = oracle_scan_with(&q, &lib, &embedded, &cfg);
            queries += 1;
            nonempty += usize::from(!want.is_empty());
            if got != want {
                mismatches += 1;
            }
        }
    }
    if mismatches > 0 {
        return Err(format!("{mismatches} of {queries} queries differ from the exhaustive scan"));
    }
    Ok(format!("100 libraries ({total_cases} cases), {queries} queries ({nonempty} non-empty), 0 mismatches"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut retained, mut boundary) = (0, 0);
    for trial in 0..1000 {
        let size = rng.gen_range(0..=30);
        let mut lib = random_library(&mut rng, size, 0.7);
        let c = loop {
            let c = random_case(&mut rng, 1000);
            if !lib.contains(&c.meta.id) {
                break c;
            }
        };
        let raw = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0)];
        let s: f64 = raw.iter().sum();
        let (alpha, beta) = (raw[0] / s, raw[1] / s);
        let mut rcfg = RetentionConfig { alpha, beta, gamma: 1.0 - alpha - beta, k: rng.gen_range(1..=5), delta: 0.0 };
        let rcfg_ret = RetrievalConfig { lambda: [0.5, 0.3, 0.2], ..Default::default() };

        // Utility recomputed from the oracle scan over every case.
        let probe = Query::from_case(&c);
        let all = oracle_scan(&probe, &lib, &RetrievalConfig { tau: 0.0, top_k: usize::MAX, ..rcfg_ret.clone() });
        let novelty = all.first().map_or(1.0, |(_, s)| 1.0 - s);
        let take = rcfg.k.min(all.len());
        let general = if take == 0 { 0.0 } else { all[..take].iter().map(|(_, s)| s).sum::<f64>() / take as f64 };
        let u = rcfg.alpha * novelty + rcfg.beta * c.outcome.success + rcfg.gamma * general;

        // Every tenth trial puts delta exactly on the utility.
        rcfg.delta = if trial % 10 == 0 { u.clamp(0.0, 1.0) } else { rng.gen_range(0.0..1.0) };
        boundary += usize::from(rcfg.delta == u);
        let before = lib.len();
        let d = retain(&mut lib, c, &rcfg, &rcfg_ret).map_err(|e| format!("trial {trial}: {e}"))?;
        let expect = u >= rcfg.delta;
        if d.retained != expect || d.utility.value != u || lib.len() != before + usize::from(expect) {
            return Err(format!(
                "trial {trial}: retained={} expected={expect} utility={} oracle={u}",
                d.retained, d.utility.value
            ));
        }
        retained += usize::from(expect);
    }
    Ok(format!("1000 triples, {retained} retained, {boundary} at utility = delta, 0 disagreements"))
}

fn fixture_library() -> (CaseLibrary, Vec<Case>) {
    let text = fs::read_to_string(fixtures().join("cases.txt")).unwrap();
    let mut lib = CaseLibrary::new(EmbedderConfig::default(), 0.7).unwrap();
    let mut cases = Vec::new();
    for (_, raw) in parse_case_file(&text) {
        let c = build_case(&raw.unwrap(), lib.next_tick()).unwrap();
        cases.push(c.clone());
        lib.insert(c).unwrap();
    }
    (lib, cases)
}

fn criterion_3() -> Outcome {
    let (lib, cases) = fixture_library();
    if cases.len() != 50 {
        return Err(format!("expected 50 fixture cases, found {}", cases.len()));
    }
    let cfg = RetrievalConfig::default();
    for c in &cases {
        let q = Query::new(c.problem.clone());
        let hits = hybrid_retrieve(&q, &lib, &cfg).map_err(|e| e.to_string())?;
        let sol = adapt(&q, &hits, &lib, &ConstraintSet::default(), None).map_err(|e| e.to_string())?;
        if sol.plan != c.solution || sol.provenance.sources.len() != 1 || sol.provenance.sources[0].id != c.meta.id {
            return Err(format!("case {}: got `{}`, stored `{}`", c.meta.id, sol.plan, c.solution));
        }
        if !sol.provenance.differences.is_empty() {
            return Err(format!("case {}: non-empty difference list", c.meta.id));
        }
    }
    Ok("50 of 50 fixture cases return their stored solution".into())
}

/// Step-by-step interpreter: insert missing required actions, drop forbidden
/// steps, rename arguments once.
fn reference_transform(plan: &[(String, Vec<String>)], cs: &ConstraintSet) -> Vec<(String, Vec<String>)> {
    let mut steps = plan.to_vec();
    for r in &cs.required {
        if !steps.iter().any(|(a, _)| a == r) {
            steps.push((r.clone(), vec![]));
        }
    }
    steps.retain(|(a, _)| !cs.forbidden.contains(a));
    for (_, args) in &mut steps {
        for a in args.iter_mut() {
            if let Some(to) = cs.substitutions.get(a.as_str()) {
                *a = to.clone();
            }
        }
    }
    steps
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut emptied, mut edits_total) = (0, 0);
    for i in 0..10_000 {
        let plan = SolutionPlan::parse(&random_plan(&mut rng, 6)).unwrap();
        let mut cs = ConstraintSet::default();
        for _ in 0..rng.gen_range(0..=3) {
            cs.substitutions
                .insert(SYMBOLS.choose(&mut rng).unwrap().to_string(), SYMBOLS.choose(&mut rng).unwrap().to_string());
        }
        for _ in 0..rng.gen_range(0..=3) {
            cs.forbidden.insert(ACTIONS.choose(&mut rng).unwrap().to_string());
        }
        for _ in 0..rng.gen_range(0..=2) {
            cs.required.push(ACTIONS.choose(&mut rng).unwrap().to_string());
        }
        let flat: Vec<(String, Vec<String>)> =
            plan.steps.iter().map(|s| (s.action.clone(), s.args.iter().map(|a| a.to_string()).collect())).collect();
        let want = reference_transform(&flat, &cs);
        match transform_traced(&plan, &cs) {
            Ok((got, edits)) => {
                let got_flat: Vec<(String, Vec<String>)> = got
                    .steps
                    .iter()
                    .map(|s| (s.action.clone(), s.args.iter().map(|a| a.to_string()).collect()))
                    .collect();
                if got_flat != want {
                    return Err(format!("iteration {i}: `{plan}` with `{cs}` gave `{got}`"));
                }
                edits_total += edits.len();
            }
            Err(_) if want.is_empty() => emptied += 1,
            Err(e) => return Err(format!("iteration {i}: unexpected {e}")),
        }
    }
    Ok(format!("10000 iterations ({edits_total} edits, {emptied} emptied plans), 0 divergences"))
}

fn scenario(name: &str) -> Scenario {
    Scenario::parse(&fs::read_to_string(fixtures().join("scenarios").join(name)).unwrap()).unwrap()
}

fn criterion_5() -> Outcome {
    let sc = scenario("supply-cutoff.scn");
    let cfg = GdaConfig::default();
    let agent = Agent { initial_plan: sc.plan.clone() };
    let event_tick = sc.script.events.iter().map(|e| e.tick).min().ok_or("scenario has no event")?;
    let mut env = Environment::new(sc.script.clone()).map_err(|e| e.to_string())?;
    let trace = run_gda(&mut env, &agent, &sc.goal, &sc.pcb, &sc.mcb, &cfg).map_err(|e| e.to_string())?;
    let transitions: Vec<u64> = trace.transitions().map(|(t, _, _)| t).collect();
    let expected_tick = event_tick + cfg.period;
    if transitions != [expected_tick] {
        return Err(format!("transitions at {transitions:?}, expected exactly [{expected_tick}]"));
    }
    let Status::Success { tick } = trace.status else {
        return Err(format!("agent ended {:?}", trace.status));
    };
    if tick >= sc.script.horizon {
        return Err(format!("success at {tick} is not before horizon {}", sc.script.horizon));
    }
    let mut env = Environment::new(sc.script.clone()).map_err(|e| e.to_string())?;
    let base = run_baseline_replanner(&mut env, &agent, &sc.goal, &sc.pcb, &cfg).map_err(|e| e.to_string())?;
    if base.succeeded() {
        return Err("baseline replanner reached success".into());
    }
    Ok(format!("one transition at tick {expected_tick}, success at tick {tick}, baseline {:?}", base.status))
}

fn criterion_6() -> Outcome {
    let mut event_free = scenario("event-free.scn");
    event_free.pcb.clear();
    let mut cutoff = scenario("supply-cutoff.scn");
    cutoff.pcb.retain(|c| c.g.facts().iter().all(|f| f.to_string() != "delivered(site_a)"));
    let scenarios = [("event-free", event_free), ("supply-cutoff", cutoff), ("cascading", scenario("cascading.scn"))];

    let (mut added, mut at_threshold) = (0, 0);
    for (name, sc) in &scenarios {
        for theta in [0.0, 0.5, 0.8, 1.0] {
            let cfg = GdaConfig { theta_p: theta, theta_m: theta, ..GdaConfig::default() };
            let agent = Agent { initial_plan: sc.plan.clone() };
            let (mut pcb, mut mcb): (Vec<PlanningCase>, Vec<MismatchCase>) = (sc.pcb.clone(), sc.mcb.clone());
            for ep in 1..=3 {
                let mut env = Environment::new(sc.script.clone()).map_err(|e| e.to_string())?;
                let trace = run_gda(&mut env, &agent, &sc.goal, &pcb, &mcb, &cfg).map_err(|e| e.to_string())?;
                let (old_pcb, old_mcb) = (pcb.clone(), mcb.clone());
                added += update_pcb(&mut pcb, &trace, &cfg) + update_mcb(&mut mcb, &trace, &cfg);
                let ctx = format!("{name} theta={theta} episode {ep}");
                if pcb[..old_pcb.len()] != old_pcb[..] || mcb[..old_mcb.len()] != old_mcb[..] {
                    return Err(format!("{ctx}: case base was not append-only"));
                }
                for seg in &trace.segments {
                    at_threshold += usize::from(seg.quality == theta);
                    let new = !old_pcb.contains(&seg.case);
                    if new && pcb.contains(&seg.case) != (seg.quality > theta) {
                        return Err(format!("{ctx}: segment with quality {} vs theta {theta}", seg.quality));
                    }
                }
                for r in &trace.resolutions {
                    at_threshold += usize::from(r.quality == theta);
                    let new = !old_mcb.contains(&r.case);
                    if new && mcb.contains(&r.case) != (r.quality > theta) {
                        return Err(format!("{ctx}: resolution with quality {} vs theta {theta}", r.quality));
                    }
                }
            }
        }
    }
    if at_threshold == 0 || added == 0 {
        return Err(format!("vacuous run: {added} additions, {at_threshold} entries at the threshold"));
    }
    Ok(format!(
        "3 scenarios x 4 thresholds x 3 episodes: {added} appended, {at_threshold} entries exactly at the threshold"
    ))
}

fn criterion_7() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let ri = |t, c| ReasoningInstance::new(t, c).unwrap();
    let series = |p: &[(f64, f64)]| adaptation_rate(&PerformanceSeries::new(p.to_vec()).unwrap()).unwrap();
    let qw = QualityWeights { accuracy: 0.4, relevance: 0.3, coherence: 0.2, novelty: 0.1 };
    let q = |a, r, c, n| quality(a, r, c, n, &qw).unwrap();
    let t = |r, p, g| TimeCost { retrieval: r, processing: p, generation: g };
    let checks = [
        ("explainability [(1,1)]", explainability(&[ri(1.0, 1.0)]).unwrap(), 1.0),
        ("explainability [(0.8,2),(0.4,1)]", explainability(&[ri(0.8, 2.0), ri(0.4, 1.0)]).unwrap(), 0.4),
        ("explainability [(0,5)]", explainability(&[ri(0.0, 5.0)]).unwrap(), 0.0),
        ("adaptation_rate two points", series(&[(0.0, 0.5), (1.0, 0.7)]), 0.2),
        ("adaptation_rate constant", series(&[(0.0, 0.3), (1.0, 0.3), (2.0, 0.3)]), 0.0),
        ("adaptation_rate collinear", series(&[(0.0, 0.2), (1.0, 0.4), (2.0, 0.6)]), 0.2),
        ("quality all ones", q(1.0, 1.0, 1.0, 1.0), 1.0),
        ("quality basis", q(1.0, 0.0, 0.0, 0.0), 0.4),
        ("quality midpoint", q(0.5, 0.5, 0.5, 0.5), 0.5),
        ("cost (1,2,3)", cost_report(t(1.0, 2.0, 3.0), MemoryCost::default()).unwrap().total_time, 6.0),
        ("cost zeros", cost_report(t(0.0, 0.0, 0.0), MemoryCost::default()).unwrap().total_memory, 0.0),
    ];
    for (name, got, want) in &checks {
        if !close(*got, *want) {
            return Err(format!("{name}: got {got}, want {want}"));
        }
    }
    Ok(format!("{} tabulated examples within 1e-9", checks.len()))
}

fn run_cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_cbr")).current_dir(dir).args(args).output().expect("spawn cbr");
    let mut bytes = out.status.code().unwrap_or(-1).to_string().into_bytes();
    bytes.extend(out.stdout);
    bytes
}

/// Every file under `dir`, sorted by path, with contents.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn criterion_8() -> Outcome {
    let fx = fixtures();
    let fx = fx.to_str().unwrap();
    let cases = format!("{fx}/cases.txt");
    let rules = format!("{fx}/rules.txt");
    let probes = format!("{fx}/probes.txt");
    let sheet = format!("{fx}/metrics.sheet");
    let conf = format!("{fx}/engine.conf");
    let cascading = format!("{fx}/scenarios/cascading.scn");
    let q = "service=web; symptom=crash; region=eu";
    let record = "problem: service=mail; symptom=bounce | solution: requeue(mail); verify(mail)";
    let commands: Vec<Vec<&str>> = vec![
        vec!["--seed", "5", "--config", &conf, "ingest", &cases, "--out", "lib.cbr"],
        vec!["--seed", "5", "retrieve", "--library", "lib.cbr", "--query", q, "--plan", "restart(web)"],
        vec!["--seed", "5", "solve", "--library", "lib.cbr", "--query", q, "--rules", &rules, "--pathways"],
        vec!["--seed", "5", "explain", "--library", "lib.cbr", "--query", q, "--constraints", "forbid page"],
        vec!["--seed", "5", "gaps", "--library", "lib.cbr", "--probes", &probes],
        vec!["--seed", "5", "gaps", "--library", "lib.cbr", "--sample", "25"],
        vec!["--seed", "5", "retain", "--library", "lib.cbr", "--record", record],
        vec!["--seed", "5", "simulate", "--scenario", &cascading, "--episodes", "3", "--out", "sim"],
        vec!["--seed", "5", "simulate", "--scenario", &cascading, "--baseline", "--out", "base"],
        vec!["--seed", "5", "metrics", &sheet],
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in &commands {
        let (oa, ob) = (run_cli(a.path(), cmd), run_cli(b.path(), cmd));
        if oa != ob {
            return Err(format!("stdout differs for `{}`", cmd.join(" ")));
        }
        if !oa.starts_with(b"0") {
            return Err(format!("`{}` failed", cmd.join(" ")));
        }
        if snapshot(a.path()) != snapshot(b.path()) {
            return Err(format!("files differ after `{}`", cmd.join(" ")));
        }
    }
    Ok(format!(
        "{} commands run twice, identical stdout and {} identical files",
        commands.len(),
        snapshot(a.path()).len()
    ))
}

fn random_state(rng: &mut ChaCha8Rng) -> WorldState {
    const FACTS: [&str; 8] = ["p(a)", "p(b)", "q(a)", "q(b)", "r", "s(a,b)", "s(b,a)", "t(c)"];
    let mut ws = WorldState::new();
    for f in FACTS {
        if rng.gen_bool(0.4) {
            ws.insert(Fact::parse(f).unwrap());
        }
    }
    ws
}

fn criterion_9() -> Outcome {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    for i in 0..N {
        let dim = rng.gen_range(1..=16);
        let mut v = || Vector::new((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let (a, b) = (v(), v());
        let (ab, ba) = (cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
        if ab != ba || !(-1.0..=1.0).contains(&ab) || cosine(&a, &a).unwrap() != 1.0 {
            return Err(format!("cosine input {i}: ab={ab} ba={ba}"));
        }
    }

    for i in 0..N {
        let (a, b) = (random_state(&mut rng), random_state(&mut rng));
        let j = jaccard(&a, &b);
        if !(0.0..=1.0).contains(&j) || j != jaccard(&b, &a) || (j == 1.0) != (a == b) {
            return Err(format!("jaccard input {i}: {a} vs {b} gave {j}"));
        }
    }

    let libs: Vec<CaseLibrary> = (0..20).map(|_| random_library(&mut rng, 25, 0.7)).collect();
    for i in 0..N {
        let lib = &libs[i % libs.len()];
        let q = random_query(&mut rng);
        let mut cfg = random_retrieval_config(&mut rng);
        cfg.top_k = usize::MAX;
        let t2 = rng.gen_range(cfg.tau..=1.0);
        let loose = exact_scan(&q, lib, &cfg).unwrap();
        let strict = exact_scan(&q, lib, &RetrievalConfig { tau: t2, ..cfg.clone() }).unwrap();
        if strict.iter().any(|s| !loose.contains(s)) {
            return Err(format!("threshold input {i}: raising tau {} -> {t2} added cases", cfg.tau));
        }
    }

    for i in 0..N {
        let lib = &libs[i % libs.len()];
        let q = random_query(&mut rng);
        let weights: std::collections::BTreeMap<String, f64> =
            NAMES.iter().map(|n| (n.to_string(), rng.gen_range(0.05..4.0))).collect();
        let c = rng.gen_range(0.01..100.0);
        let base = RetrievalConfig {
            tau: 0.0,
            top_k: usize::MAX,
            weights: FeatureWeights::Explicit(weights.clone()),
            lambda: [rng.gen_range(0.0..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.0..1.0)],
        };
        let scaled = RetrievalConfig {
            weights: FeatureWeights::Explicit(weights.iter().map(|(k, w)| (k.clone(), w * c)).collect()),
            ..base.clone()
        };
        let (r1, r2) = (exact_scan(&q, lib, &base).unwrap(), exact_scan(&q, lib, &scaled).unwrap());
        // The scaled argmax must be a maximum of the original ranking, up to rounding.
        let best = r1[0].score;
        let same = r1.iter().find(|s| s.id == r2[0].id).unwrap();
        if best - same.score > 1e-12 {
            return Err(format!("weight-scaling input {i}: argmax moved from {} to {}", r1[0].id, r2[0].id));
        }
    }
    Ok(format!("{N} inputs each for cosine, Jaccard, threshold monotonicity, weight scaling; 0 violations"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("retrieval oracle equivalence", criterion_1, Some(Duration::from_secs(30))),
        ("retention gate exactness", criterion_2, Some(Duration::from_secs(10))),
        ("adaptation identity law", criterion_3, None),
        ("transform composition order", criterion_4, None),
        ("goal-driven scenario regression", criterion_5, Some(Duration::from_secs(5))),
        ("learning monotonicity and strict thresholds", criterion_6, None),
        ("metric formulas", criterion_7, None),
        ("CLI determinism", criterion_8, None),
        ("similarity invariants", criterion_9, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => {
                Err(format!("took {:.2}s, limit {}s", elapsed.as_secs_f64(), l.as_secs()))
            }
            (o, _) => o,
        };
        let limit = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({:.2}s{limit})", i + 1, elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} ({:.2}s{limit})", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
