//! Scenario files: perspectives, observations, queries and optional goldens
//! in one JSON document, plus the runner, golden checks and artifact writer.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::arbiter::{Arbiter, ArbiterError, CurationPolicy, EncodingReport, QueryResult};
use crate::argumentation::{serialize_af, AttackGraph, Extension, RetrievalMode};
use crate::buffer::{AckOrTtl, Clock, Observation, ObservationBuffer};
use crate::kgstore::{serialize_turtle, write_turtle, KgError, PrefixMap, TBoxSpec};
use crate::perspective::{
    BackendSpec, EndpointDescriptor, PerspectiveAgent, PerspectiveConfig, PerspectiveError, QueryContext, RuleSet,
    ScriptedFixture,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("perspective `{perspective}`: {source}")]
    Perspective {
        perspective: String,
        #[source]
        source: PerspectiveError,
    },
    #[error(transparent)]
    Arbiter(#[from] ArbiterError),
}

pub type Result<T, E = ScenarioError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub perspectives: Vec<PerspectiveSpec>,
    #[serde(default)]
    pub observations: Vec<Observation>,
    #[serde(default)]
    pub queries: Vec<QueryContext>,
    #[serde(default)]
    pub retention: RetentionSpec,
    #[serde(default)]
    pub curation: Option<CurationPolicy>,
    #[serde(default)]
    pub expected: Option<Expected>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerspectiveSpec {
    pub id: String,
    pub name: String,
    pub goal: String,
    /// Added to the standard rdf/rdfs/xsd/owl prefixes.
    #[serde(default)]
    pub prefixes: BTreeMap<String, String>,
    #[serde(default)]
    pub seed_tbox: TBoxSpec,
    pub backend: BackendConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Scripted { fixture: ScriptedFixture },
    RuleBased { rules: RuleSet },
    External { endpoint: EndpointDescriptor },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionSpec {
    /// No time-based eviction when absent.
    #[serde(default)]
    pub ttl_seconds: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default)]
    pub encoding: Option<ExpectedEncoding>,
    #[serde(default)]
    pub queries: BTreeMap<String, ExpectedQuery>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedEncoding {
    /// Observation ids each perspective encodes.
    #[serde(default)]
    pub selectivity: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub relevance_checks: Option<usize>,
    #[serde(default)]
    pub encode_calls: Option<usize>,
    #[serde(default)]
    pub encoded: Option<usize>,
    #[serde(default)]
    pub possible: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedQuery {
    #[serde(default)]
    pub proposers: Option<Vec<String>>,
    #[serde(default)]
    pub attacks: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub grounded: Option<Vec<String>>,
    #[serde(default)]
    pub mode: Option<RetrievalMode>,
    #[serde(default)]
    pub preferred: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub max_calls: Option<usize>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let scenario: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| ScenarioError::Json {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        de.end().map_err(|e| ScenarioError::Json {
            path: ".".into(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn query(&self, id: &str) -> Option<&QueryContext> {
        self.queries.iter().find(|q| q.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        let mut ids = BTreeSet::new();
        for p in &self.perspectives {
            if !ids.insert(p.id.as_str()) {
                return invalid(format!("perspectives: duplicate id `{}`", p.id));
            }
            if crate::argumentation::ArgumentId::new(p.id.as_str()).is_err() {
                return invalid(format!(
                    "perspectives: id `{}` must be non-empty without whitespace",
                    p.id
                ));
            }
        }
        let mut obs = BTreeSet::new();
        for o in &self.observations {
            if !obs.insert(o.id.as_str()) {
                return invalid(format!("observations: duplicate id `{}`", o.id));
            }
        }
        let mut queries = BTreeSet::new();
        for q in &self.queries {
            if !queries.insert(q.id.as_str()) {
                return invalid(format!("queries: duplicate id `{}`", q.id));
            }
            if q.query.trim().is_empty() {
                return invalid(format!("queries.{}.query: empty text", q.id));
            }
        }
        let Some(expected) = &self.expected else {
            return Ok(());
        };
        if let Some(enc) = &expected.encoding {
            for (p, list) in &enc.selectivity {
                if !ids.contains(p.as_str()) {
                    return invalid(format!("expected.encoding.selectivity: unknown perspective `{p}`"));
                }
                if let Some(o) = list.iter().find(|o| !obs.contains(o.as_str())) {
                    return invalid(format!("expected.encoding.selectivity.{p}: unknown observation `{o}`"));
                }
            }
        }
        for (q, golden) in &expected.queries {
            if !queries.contains(q.as_str()) {
                return invalid(format!("expected.queries: unknown query `{q}`"));
            }
            let named = golden
                .attacks
                .iter()
                .flatten()
                .flat_map(|(a, b)| [a, b])
                .chain(golden.grounded.iter().flatten())
                .chain(golden.proposers.iter().flatten())
                .chain(golden.preferred.iter().flatten().flatten());
            for p in named {
                if !ids.contains(p.as_str()) {
                    return invalid(format!("expected.queries.{q}: unknown perspective `{p}`"));
                }
            }
        }
        Ok(())
    }

    pub fn perspective_config(&self, spec: &PerspectiveSpec) -> Result<PerspectiveConfig> {
        let wrap = |e: KgError| ScenarioError::Perspective {
            perspective: spec.id.clone(),
            source: e.into(),
        };
        let mut prefixes = PrefixMap::with_standard();
        for (p, ns) in &spec.prefixes {
            prefixes.insert(p.clone(), ns.clone()).map_err(wrap)?;
        }
        let seed_tbox = spec.seed_tbox.resolve(&prefixes).map_err(wrap)?;
        let backend = match &spec.backend {
            BackendConfig::Scripted { fixture } => BackendSpec::Scripted(fixture.clone()),
            BackendConfig::RuleBased { rules } => BackendSpec::RuleBased(rules.clone()),
            BackendConfig::External { endpoint } => BackendSpec::External(endpoint.clone()),
        };
        Ok(PerspectiveConfig {
            id: spec.id.clone(),
            name: spec.name.clone(),
            goal_statement: spec.goal.clone(),
            prefixes,
            seed_tbox,
            backend,
        })
    }

    /// Builds agents and a buffer on `clock`, and stages every observation.
    pub fn build_arbiter(&self, clock: Arc<dyn Clock>) -> Result<Arbiter> {
        let mut agents = Vec::new();
        for spec in &self.perspectives {
            let config = self.perspective_config(spec)?;
            let agent = PerspectiveAgent::from_config(config).map_err(|source| ScenarioError::Perspective {
                perspective: spec.id.clone(),
                source,
            })?;
            agents.push(agent);
        }
        let policy = AckOrTtl {
            ttl: self.retention.ttl_seconds.map(Duration::seconds),
        };
        let buffer = ObservationBuffer::new(policy, clock);
        let mut arbiter = Arbiter::new(agents, buffer)?;
        if let Some(curation) = self.curation {
            arbiter = arbiter.with_curation(curation);
        }
        for o in &self.observations {
            arbiter.observe(o.clone())?;
        }
        Ok(arbiter)
    }
}

/// The product of running a scenario.
#[derive(Debug)]
pub struct ScenarioRun {
    pub arbiter: Arbiter,
    pub report: EncodingReport,
    pub results: Vec<QueryResult>,
}

impl ScenarioRun {
    pub fn result(&self, query_id: &str) -> Option<&QueryResult> {
        self.results.iter().find(|r| match r {
            QueryResult::Resolved(o) => o.ctx.id == query_id,
            QueryResult::NoProposals { ctx, .. } => ctx.id == query_id,
        })
    }
}

/// Runs the encoding cycle, then the queries named in `only` (all when `None`).
pub fn run_scenario(scenario: &ScenarioFile, clock: Arc<dyn Clock>, only: Option<&[&str]>) -> Result<ScenarioRun> {
    let mut arbiter = scenario.build_arbiter(clock)?;
    let report = arbiter.run_encoding_cycle()?;
    let mut results = Vec::new();
    for q in &scenario.queries {
        if only.is_some_and(|ids| !ids.contains(&q.id.as_str())) {
            continue;
        }
        results.push(arbiter.run_query(q)?);
    }
    Ok(ScenarioRun {
        arbiter,
        report,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn compare<T: std::fmt::Debug + PartialEq>(name: String, expected: T, actual: T) -> Check {
    let passed = expected == actual;
    let detail = if passed {
        format!("{actual:?}")
    } else {
        format!("expected {expected:?}, got {actual:?}")
    };
    Check { name, passed, detail }
}

fn names_of(ext: &Extension) -> BTreeSet<String> {
    ext.iter().map(|a| a.as_str().to_owned()).collect()
}

fn edge_set(graph: &AttackGraph) -> BTreeSet<(String, String)> {
    graph
        .attacks()
        .map(|(a, b)| (a.as_str().to_owned(), b.as_str().to_owned()))
        .collect()
}

/// Structural comparison of a run against the scenario's goldens.
pub fn check_expected(expected: &Expected, run: &ScenarioRun) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Some(enc) = &expected.encoding {
        for (p, list) in &enc.selectivity {
            let want: BTreeSet<&str> = list.iter().map(String::as_str).collect();
            let got: BTreeSet<&str> = run.report.encoded_by(p).into_iter().collect();
            checks.push(compare(format!("encoding.selectivity.{p}"), want, got));
        }
        let counters = [
            ("relevance_checks", enc.relevance_checks, run.report.relevance_checks),
            ("encode_calls", enc.encode_calls, run.report.encode_calls),
            ("encoded", enc.encoded, run.report.encoded),
            ("possible", enc.possible, run.report.possible),
        ];
        for (name, want, got) in counters {
            if let Some(want) = want {
                checks.push(compare(format!("encoding.{name}"), want, got));
            }
        }
    }
    for (q, golden) in &expected.queries {
        let prefix = format!("query.{q}");
        let Some(result) = run.result(q) else {
            checks.push(Check {
                name: prefix,
                passed: false,
                detail: "query was not run".into(),
            });
            continue;
        };
        let Some(outcome) = result.outcome() else {
            checks.push(Check {
                name: format!("{prefix}.outcome"),
                passed: false,
                detail: "no perspective proposed".into(),
            });
            continue;
        };
        if let Some(want) = &golden.proposers {
            let got: BTreeSet<String> = outcome.proposals.iter().map(|p| p.perspective_id.clone()).collect();
            checks.push(compare(
                format!("{prefix}.proposers"),
                want.iter().cloned().collect(),
                got,
            ));
        }
        if let Some(want) = &golden.attacks {
            checks.push(compare(
                format!("{prefix}.attacks"),
                want.iter().cloned().collect(),
                edge_set(&outcome.graph),
            ));
        }
        if let Some(want) = &golden.grounded {
            checks.push(compare(
                format!("{prefix}.grounded"),
                want.iter().cloned().collect(),
                names_of(&outcome.grounded),
            ));
        }
        if let Some(want) = golden.mode {
            checks.push(compare(
                format!("{prefix}.mode"),
                want.to_string(),
                outcome.mode.to_string(),
            ));
        }
        if let Some(want) = &golden.preferred {
            let want: BTreeSet<BTreeSet<String>> = want.iter().map(|e| e.iter().cloned().collect()).collect();
            let got: BTreeSet<BTreeSet<String>> = outcome.preferred.iter().map(names_of).collect();
            checks.push(compare(format!("{prefix}.preferred"), want, got));
        }
        if let Some(max) = golden.max_calls {
            let spent = outcome.calls.total();
            checks.push(Check {
                name: format!("{prefix}.calls"),
                passed: spent <= max,
                detail: format!("{spent} of at most {max}"),
            });
        }
    }
    checks
}

/// Ordered member names as written in reports: declaration order.
pub fn ordered(graph: &AttackGraph, ext: &Extension) -> Vec<String> {
    graph
        .ordered_members(ext)
        .into_iter()
        .map(|a| a.as_str().to_owned())
        .collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::write(dir.join(name), contents)
}

/// Writes per-perspective graphs and the selectivity report.
pub fn write_encoding_artifacts(dir: &Path, run: &ScenarioRun) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for agent in run.arbiter.agents() {
        let graph = agent.graph();
        write(dir, &format!("{}.ttl", agent.id()), &serialize_turtle(graph))?;
        write(
            dir,
            &format!("{}.tbox.ttl", agent.id()),
            &write_turtle(graph.prefixes(), &graph.tbox().to_triples()),
        )?;
    }
    Ok(())
}

/// Writes the outcome document, AF file, DOT file and explanation text for
/// every query that was run.
pub fn write_query_artifacts(dir: &Path, run: &ScenarioRun) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for result in &run.results {
        let (id, json) = match result {
            QueryResult::Resolved(o) => {
                write(dir, &format!("{}.af", o.ctx.id), &serialize_af(&o.graph))?;
                write(dir, &format!("{}.dot", o.ctx.id), &o.dot())?;
                let text = format!(
                    "Query: {}\nMode: {}\n\n{}\n{}",
                    o.ctx.query,
                    o.mode,
                    o.response.render(),
                    o.explanation.render()
                );
                write(dir, &format!("{}.explanation.txt", o.ctx.id), &text)?;
                (o.ctx.id.clone(), serde_json::to_string_pretty(result)?)
            }
            QueryResult::NoProposals { ctx, .. } => (ctx.id.clone(), serde_json::to_string_pretty(result)?),
        };
        write(dir, &format!("{id}.outcome.json"), &(json + "\n"))?;
    }
    Ok(())
}

/// One line per query for reports and CLI output.
pub fn query_summary(result: &QueryResult) -> serde_json::Value {
    match result {
        QueryResult::Resolved(o) => json!({
            "query": o.ctx.id,
            "proposals": o.proposals.len(),
            "attacks": o.graph.edge_count(),
            "grounded": ordered(&o.graph, &o.grounded),
            "mode": o.mode.to_string(),
            "preferred": o.preferred.iter().map(|e| ordered(&o.graph, e)).collect::<Vec<_>>(),
            "calls": o.calls.total(),
        }),
        QueryResult::NoProposals { ctx, calls } => json!({
            "query": ctx.id,
            "proposals": 0,
            "mode": "no proposals",
            "calls": calls.total(),
        }),
    }
}

/// `report.json` and `report.txt`.
pub fn write_report(
    dir: &Path,
    scenario: &ScenarioFile,
    run: &ScenarioRun,
    checks: Option<&[Check]>,
    generated_at: &str,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let weights: BTreeMap<&str, BTreeMap<String, f64>> = run
        .arbiter
        .agents()
        .iter()
        .map(|a| {
            let w = a
                .graph()
                .encodings()
                .iter()
                .map(|(id, e)| (id.to_string(), e.weight))
                .collect();
            (a.id(), w)
        })
        .collect();
    let doc = json!({
        "scenario": scenario.name,
        "generated_at": generated_at,
        "encoding": run.report,
        "queries": run.results.iter().map(query_summary).collect::<Vec<_>>(),
        "weights": weights,
        "checks": checks,
    });
    write(dir, "report.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;

    let mut text = format!("scenario: {}\ngenerated_at: {generated_at}\n\n", scenario.name);
    text.push_str(&run.report.render());
    if !run.results.is_empty() {
        text.push('\n');
        text.push_str(&render_query_table(&run.results));
    }
    if let Some(checks) = checks {
        text.push('\n');
        text.push_str(&render_checks(checks));
    }
    write(dir, "report.txt", &text)
}

pub fn render_query_table(results: &[QueryResult]) -> String {
    let mut out = format!(
        "{:<8} {:>9} {:>7} {:<30} {}\n",
        "query", "proposals", "attacks", "grounded", "mode"
    );
    for r in results {
        let s = query_summary(r);
        let grounded = s["grounded"]
            .as_array()
            .map(|g| {
                let names: Vec<&str> = g.iter().filter_map(|v| v.as_str()).collect();
                format!("{{{}}}", names.join(", "))
            })
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<8} {:>9} {:>7} {:<30} {}\n",
            s["query"].as_str().unwrap_or(""),
            s["proposals"].to_string(),
            s.get("attacks").map_or("-".to_owned(), |v| v.to_string()),
            grounded,
            s["mode"].as_str().unwrap_or("")
        ));
    }
    out
}

pub fn render_checks(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:<width$}  {}\n", c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    out
}
