//! Text formats for libraries and GDA case bases.
//!
//! A library file is a header followed by one line per case:
//!
//! ```text
//! cbr-library v1
//! embedder <digest> dim=<d> ngram=<n> seed=<s>
//! cluster_threshold <t>
//! case<TAB><id><TAB><tick><TAB><v1,v2,...><TAB><record line>
//! ```
//!
//! Vectors are written with shortest round-trip float formatting, so a
//! loaded library scores queries exactly as the saved one did.

use crate::case::{build_case, RawCaseRecord};
use crate::embed::{EmbedderConfig, Vector};
use crate::error::{Error, Result};
use crate::gda::{MismatchCase, PlanningCase};
use crate::library::CaseLibrary;

pub const LIBRARY_MAGIC: &str = "cbr-library v1";

pub fn render_library(lib: &CaseLibrary) -> Result<String> {
    let cfg = lib.embedder_config().ok_or_else(|| Error::config("only hashing-embedder libraries can be saved"))?;
    let mut out = format!(
        "{LIBRARY_MAGIC}\nembedder {} dim={} ngram={} seed={}\ncluster_threshold {}\n",
        cfg.digest(),
        cfg.dim,
        cfg.ngram,
        cfg.seed,
        lib.hierarchy().threshold()
    );
    for e in lib.entries() {
        let c = &e.case;
        out.push_str(&format!("case\t{}\t{}\t{}\t{}\n", c.meta.id, c.meta.created_at, e.embedding, c.to_record_line()));
    }
    Ok(out)
}

fn header_value<'a>(line: Option<(usize, &'a str)>, key: &str) -> Result<&'a str> {
    let (n, line) = line.ok_or_else(|| Error::Parse { line: 0, reason: format!("missing `{key}` header") })?;
    line.strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::Parse { line: n + 1, reason: format!("expected `{key}` header") })
}

/// Loads a library written by [`render_library`]. The stored embedder
/// digest must equal `expected.digest()`.
pub fn parse_library(text: &str, expected: &EmbedderConfig) -> Result<CaseLibrary> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, LIBRARY_MAGIC)) => {}
        _ => return Err(Error::Parse { line: 1, reason: format!("expected `{LIBRARY_MAGIC}`") }),
    }
    let embedder = header_value(lines.next(), "embedder")?;
    let found = embedder.split_whitespace().next().unwrap_or("").to_string();
    if found != expected.digest() {
        return Err(Error::DigestMismatch { expected: expected.digest(), found });
    }
    let threshold_line = lines.next();
    let line_no = threshold_line.map_or(3, |(n, _)| n + 1);
    let threshold: f64 = header_value(threshold_line, "cluster_threshold")?
        .parse()
        .map_err(|_| Error::Parse { line: line_no, reason: "bad cluster threshold".into() })?;
    let mut lib = CaseLibrary::new(*expected, threshold)?;

    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let parsed: Result<()> = (|| {
            let parts: Vec<&str> = line.splitn(5, '\t').collect();
            let [tag, id, tick, vector, record] = parts[..] else {
                return Err(Error::malformed("case line needs five tab-separated fields"));
            };
            if tag != "case" {
                return Err(Error::malformed(format!("unexpected line kind `{tag}`")));
            }
            let tick: u64 = tick.parse().map_err(|_| Error::malformed(format!("bad tick `{tick}`")))?;
            let case = build_case(&RawCaseRecord::parse_line(record)?, tick)?;
            if case.meta.id.0 != id {
                return Err(Error::malformed(format!("stored id {id} does not match content id {}", case.meta.id)));
            }
            let values = vector
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| Error::malformed(format!("bad vector entry `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            lib.insert_with_embedding(case, Vector::new(values)?)
        })();
        parsed.map_err(|e| e.at_line(n + 1))?;
    }
    Ok(lib)
}

/// `[pcb]` and `[mcb]` sections, one case per line.
pub fn render_case_bases(pcb: &[PlanningCase], mcb: &[MismatchCase]) -> String {
    let mut out = String::from("[pcb]\n");
    for c in pcb {
        out.push_str(&format!("{c}\n"));
    }
    out.push_str("[mcb]\n");
    for c in mcb {
        out.push_str(&format!("{c}\n"));
    }
    out
}

pub fn parse_case_bases(text: &str) -> Result<(Vec<PlanningCase>, Vec<MismatchCase>)> {
    let (mut pcb, mut mcb) = (Vec::new(), Vec::new());
    let mut section = "";
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let res = match line {
            "[pcb]" | "[mcb]" => {
                section = if line == "[pcb]" { "pcb" } else { "mcb" };
                Ok(())
            }
            _ if section == "pcb" => PlanningCase::parse(line).map(|c| pcb.push(c)),
            _ if section == "mcb" => MismatchCase::parse(line).map(|c| mcb.push(c)),
            _ => Err(Error::malformed("content before `[pcb]` or `[mcb]`")),
        };
        res.map_err(|e| e.at_line(i + 1))?;
    }
    Ok((pcb, mcb))
}
