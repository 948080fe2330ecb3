//! Encoding cycles and the four-phase retrieval protocol.
//!
//! A query is broadcast to every agent, agents with relevant encodings
//! propose, each proposer critiques all other proposals in one batched call,
//! and the resulting attack graph is resolved under grounded semantics. The
//! mode read off the grounded extension decides how the response is
//! composed; the graph itself becomes the explanation.

mod compose;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::thread;

use serde::Serialize;
use thiserror::Error;

use crate::argumentation::{classify_mode, ArgumentationError, AttackGraph, Extension, RetrievalMode};
use crate::buffer::{BufferError, Observation, ObservationBuffer};
use crate::kgstore::{EncodingId, KgError, DEFAULT_DECAY_FACTOR, DEFAULT_RETRIEVAL_BUMP};
use crate::perspective::{
    Attack, CallCounts, PerspectiveAgent, PerspectiveError, Proposal, QueryContext, MIN_JUSTIFICATION_CHARS,
};

pub use compose::{
    assemble_explanation, compose_response, Explanation, Ground, Names, Rejected, RejectionKind, Response, Section,
    Selected,
};

#[derive(Debug, Error)]
pub enum ArbiterError {
    #[error("duplicate perspective id `{0}`")]
    DuplicatePerspective(String),
    #[error("no perspectives registered")]
    NoPerspectives,
    #[error("query `{0}` has empty text")]
    EmptyQuery(String),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error(transparent)]
    Argumentation(#[from] ArgumentationError),
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error("incoherent outcome: {0}")]
    Incoherent(String),
}

pub type Result<T, E = ArbiterError> = std::result::Result<T, E>;

/// Retrieval-driven weighting applied after each resolved query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurationPolicy {
    #[serde(default = "default_bump")]
    pub retrieval_bump: f64,
    #[serde(default = "default_decay")]
    pub decay_factor: f64,
    /// Decay every this many query rounds; 0 disables decay.
    #[serde(default = "default_every")]
    pub decay_every: u32,
}

fn default_bump() -> f64 {
    DEFAULT_RETRIEVAL_BUMP
}

fn default_decay() -> f64 {
    DEFAULT_DECAY_FACTOR
}

fn default_every() -> u32 {
    1
}

impl Default for CurationPolicy {
    fn default() -> Self {
        Self {
            retrieval_bump: DEFAULT_RETRIEVAL_BUMP,
            decay_factor: DEFAULT_DECAY_FACTOR,
            decay_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Encoded {
        encoding_id: EncodingId,
        triples: usize,
        rationale: String,
    },
    Skipped {
        rationale: String,
    },
    Failed {
        error: String,
    },
    /// Acknowledged by this perspective in an earlier cycle.
    NotPending,
}

impl Cell {
    pub fn is_encoded(&self) -> bool {
        matches!(self, Cell::Encoded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub observation: String,
    /// Aligned with [`EncodingReport::perspectives`].
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerspectiveTotal {
    pub perspective: String,
    pub encoded: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EncodingReport {
    pub perspectives: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub totals: Vec<PerspectiveTotal>,
    pub encoded: usize,
    pub possible: usize,
    pub relevance_checks: usize,
    pub encode_calls: usize,
    pub failures: usize,
    pub evicted: Vec<String>,
}

impl EncodingReport {
    pub fn cell(&self, observation: &str, perspective: &str) -> Option<&Cell> {
        let col = self.perspectives.iter().position(|p| p == perspective)?;
        self.rows
            .iter()
            .find(|r| r.observation == observation)
            .map(|r| &r.cells[col])
    }

    /// Observation ids encoded by `perspective`, in report order.
    pub fn encoded_by(&self, perspective: &str) -> Vec<&str> {
        let Some(col) = self.perspectives.iter().position(|p| p == perspective) else {
            return vec![];
        };
        self.rows
            .iter()
            .filter(|r| r.cells[col].is_encoded())
            .map(|r| r.observation.as_str())
            .collect()
    }

    /// A plain-text selectivity table.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.observation.len()).max().unwrap_or(0).max(11);
        let mut out = format!("{:width$}", "observation");
        for p in &self.perspectives {
            let _ = write!(out, "  {p:>6}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:width$}", row.observation);
            for cell in &row.cells {
                let mark = match cell {
                    Cell::Encoded { .. } => "yes",
                    Cell::Skipped { .. } => "-",
                    Cell::Failed { .. } => "ERR",
                    Cell::NotPending => ".",
                };
                let _ = write!(out, "  {mark:>6}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:width$}", "encoded");
        for t in &self.totals {
            let _ = write!(out, "  {:>6}", format!("{}/{}", t.encoded, t.total));
        }
        let _ = writeln!(
            out,
            "\n\n{} of {} possible encodings ({} relevance checks, {} encode calls)",
            self.encoded, self.possible, self.relevance_checks, self.encode_calls
        );
        out
    }
}

/// Agent invocations spent on one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryCalls {
    pub propose: usize,
    pub critique: usize,
    pub assembly: usize,
}

impl QueryCalls {
    pub fn total(&self) -> usize {
        self.propose + self.critique + self.assembly
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedAttack {
    pub attack: Attack,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalOutcome {
    pub ctx: QueryContext,
    pub names: Names,
    pub proposals: Vec<Proposal>,
    pub attacks: Vec<Attack>,
    pub dropped_attacks: Vec<DroppedAttack>,
    pub graph: AttackGraph,
    pub grounded: Extension,
    /// Only computed when the grounded extension is empty.
    pub preferred: Vec<Extension>,
    pub mode: RetrievalMode,
    pub response: Response,
    pub explanation: Explanation,
    pub calls: QueryCalls,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum QueryResult {
    Resolved(Box<RetrievalOutcome>),
    /// No perspective found the query relevant. Distinct from surfacing.
    NoProposals {
        ctx: QueryContext,
        calls: QueryCalls,
    },
}

impl QueryResult {
    pub fn outcome(&self) -> Option<&RetrievalOutcome> {
        match self {
            QueryResult::Resolved(o) => Some(o),
            QueryResult::NoProposals { .. } => None,
        }
    }

    pub fn calls(&self) -> QueryCalls {
        match self {
            QueryResult::Resolved(o) => o.calls,
            QueryResult::NoProposals { calls, .. } => *calls,
        }
    }
}

pub struct Arbiter {
    agents: Vec<PerspectiveAgent>,
    buffer: ObservationBuffer,
    curation: CurationPolicy,
    rounds: u64,
    assemblies: usize,
}

impl std::fmt::Debug for Arbiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Arbiter")
            .field("agents", &self.agents)
            .field("rounds", &self.rounds)
            .finish_non_exhaustive()
    }
}

impl Arbiter {
    /// Registers every agent with `buffer`. Agent order is the registration
    /// order used for reports, graphs and composed sections.
    pub fn new(agents: Vec<PerspectiveAgent>, mut buffer: ObservationBuffer) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for agent in &agents {
            if !seen.insert(agent.id().to_owned()) {
                return Err(ArbiterError::DuplicatePerspective(agent.id().to_owned()));
            }
            buffer.register_perspective(agent.id());
        }
        Ok(Self {
            agents,
            buffer,
            curation: CurationPolicy::default(),
            rounds: 0,
            assemblies: 0,
        })
    }

    pub fn with_curation(mut self, curation: CurationPolicy) -> Self {
        self.curation = curation;
        self
    }

    pub fn agents(&self) -> &[PerspectiveAgent] {
        &self.agents
    }

    pub fn agent(&self, id: &str) -> Option<&PerspectiveAgent> {
        self.agents.iter().find(|a| a.id() == id)
    }

    pub fn buffer(&self) -> &ObservationBuffer {
        &self.buffer
    }

    pub fn names(&self) -> Names {
        self.agents
            .iter()
            .map(|a| (a.id().to_owned(), a.name().to_owned()))
            .collect()
    }

    /// Backend calls across all agents plus response assemblies.
    pub fn calls(&self) -> (CallCounts, usize) {
        let counts = self.agents.iter().fold(CallCounts::default(), |acc, a| acc + a.calls());
        (counts, self.assemblies)
    }

    pub fn observe(&mut self, observation: Observation) -> Result<()> {
        Ok(self.buffer.append(observation)?)
    }

    /// Runs relevance filtering and encoding for everything pending in the
    /// buffer, one thread per agent. Every processed pair is acknowledged,
    /// failed ones included, then the retention policy runs.
    pub fn run_encoding_cycle(&mut self) -> Result<EncodingReport> {
        let perspectives: Vec<String> = self.agents.iter().map(|a| a.id().to_owned()).collect();
        let mut pending: Vec<Vec<Observation>> = Vec::with_capacity(self.agents.len());
        for id in &perspectives {
            pending.push(self.buffer.pending_for(id)?.into_iter().cloned().collect());
        }
        let observations: Vec<String> = self
            .buffer
            .entries()
            .iter()
            .map(|e| e.observation.id.clone())
            .filter(|id| pending.iter().any(|p| p.iter().any(|o| &o.id == id)))
            .collect();

        let columns: Vec<(BTreeMap<String, Cell>, usize, usize)> = thread::scope(|s| {
            let handles: Vec<_> = self
                .agents
                .iter_mut()
                .zip(&pending)
                .map(|(agent, todo)| s.spawn(move || encode_pending(agent, todo)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("encoding thread panicked"))
                .collect()
        });

        let mut report = EncodingReport {
            perspectives: perspectives.clone(),
            ..Default::default()
        };
        for obs in &observations {
            let cells = columns
                .iter()
                .map(|(col, _, _)| col.get(obs).cloned().unwrap_or(Cell::NotPending))
                .collect();
            report.rows.push(ReportRow {
                observation: obs.clone(),
                cells,
            });
        }
        for (col_idx, (id, (col, checks, encodes))) in perspectives.iter().zip(&columns).enumerate() {
            let encoded = report.rows.iter().filter(|r| r.cells[col_idx].is_encoded()).count();
            report.totals.push(PerspectiveTotal {
                perspective: id.clone(),
                encoded,
                total: observations.len(),
            });
            report.encoded += encoded;
            report.relevance_checks += checks;
            report.encode_calls += encodes;
            report.failures += col.values().filter(|c| matches!(c, Cell::Failed { .. })).count();
        }
        report.possible = observations.len() * perspectives.len();

        for (id, todo) in perspectives.iter().zip(&pending) {
            for obs in todo {
                self.buffer.acknowledge(id, &obs.id)?;
            }
        }
        report.evicted = self.buffer.evict_now();
        Ok(report)
    }

    pub fn run_query(&mut self, ctx: &QueryContext) -> Result<QueryResult> {
        if self.agents.is_empty() {
            return Err(ArbiterError::NoPerspectives);
        }
        if ctx.query.trim().is_empty() {
            return Err(ArbiterError::EmptyQuery(ctx.id.clone()));
        }
        let before = self.calls().0;

        // Broadcast and proposal.
        let proposals: Vec<Proposal> = thread::scope(|s| {
            let handles: Vec<_> = self.agents.iter().map(|a| s.spawn(move || a.propose(ctx))).collect();
            handles
                .into_iter()
                .zip(&self.agents)
                .filter_map(|(h, agent)| match h.join().expect("proposal thread panicked") {
                    Ok(p) => p,
                    Err(e) => {
                        log::warn!("{}: treating proposal failure as abstention: {e}", agent.id());
                        None
                    }
                })
                .collect()
        });
        if proposals.is_empty() {
            let spent = self.calls().0.since(before);
            return Ok(QueryResult::NoProposals {
                ctx: ctx.clone(),
                calls: QueryCalls {
                    propose: spent.propose,
                    critique: spent.critique,
                    assembly: 0,
                },
            });
        }

        // Batched critique: each proposer sees every other proposal at once.
        let proposers: BTreeSet<&str> = proposals.iter().map(|p| p.perspective_id.as_str()).collect();
        let raw: Vec<Attack> = if proposals.len() < 2 {
            Vec::new()
        } else {
            thread::scope(|s| {
                let handles: Vec<_> = self
                    .agents
                    .iter()
                    .filter_map(|agent| {
                        let own = proposals.iter().find(|p| p.perspective_id == agent.id())?;
                        let others: Vec<Proposal> = proposals
                            .iter()
                            .filter(|p| p.perspective_id != agent.id())
                            .cloned()
                            .collect();
                        Some((agent, s.spawn(move || agent.critique(ctx, Some(own), &others))))
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|(agent, h)| match h.join().expect("critique thread panicked") {
                        Ok(attacks) => attacks
                            .into_iter()
                            .map(|mut a| {
                                a.attacker = agent.id().to_owned();
                                a
                            })
                            .collect(),
                        Err(e) => {
                            log::warn!("{}: critique failed, no attacks recorded: {e}", agent.id());
                            Vec::new()
                        }
                    })
                    .collect()
            })
        };
        let (attacks, dropped) = screen_attacks(raw, &proposers);
        for d in &dropped {
            log::warn!(
                "dropping attack {} -> {}: {}",
                d.attack.attacker,
                d.attack.target,
                d.reason
            );
        }

        // Resolution.
        let graph = AttackGraph::from_parts(
            proposals.iter().map(|p| p.perspective_id.as_str()),
            attacks.iter().map(|a| (a.attacker.as_str(), a.target.as_str())),
        )?;
        let grounded = graph.grounded_extension();
        let mode = classify_mode(&graph, &grounded)?;
        let preferred = if mode == RetrievalMode::Surfacing {
            graph.preferred_extensions()
        } else {
            Vec::new()
        };
        let names: Names = self
            .agents
            .iter()
            .filter(|a| proposers.contains(a.id()))
            .map(|a| (a.id().to_owned(), a.name().to_owned()))
            .collect();
        let response = compose_response(&mode, &grounded, &proposals, &names);
        let explanation = assemble_explanation(&mode, &graph, &grounded, &proposals, &attacks, &names);
        self.assemblies += 1;

        let spent = self.calls().0.since(before);
        let outcome = RetrievalOutcome {
            ctx: ctx.clone(),
            names,
            proposals,
            attacks,
            dropped_attacks: dropped,
            graph,
            grounded,
            preferred,
            mode,
            response,
            explanation,
            calls: QueryCalls {
                propose: spent.propose,
                critique: spent.critique,
                assembly: 1,
            },
        };
        verify_outcome(&outcome).map_err(ArbiterError::Incoherent)?;
        self.curate(&outcome)?;
        Ok(QueryResult::Resolved(Box::new(outcome)))
    }

    fn curate(&mut self, outcome: &RetrievalOutcome) -> Result<()> {
        for p in &outcome.proposals {
            if !outcome
                .explanation
                .selected
                .iter()
                .any(|s| s.perspective_id == p.perspective_id)
            {
                continue;
            }
            if let Some(agent) = self.agents.iter_mut().find(|a| a.id() == p.perspective_id) {
                agent
                    .graph_mut()
                    .record_retrieval_with(&p.supporting_encodings, self.curation.retrieval_bump)?;
            }
        }
        self.rounds += 1;
        let every = u64::from(self.curation.decay_every);
        if every > 0 && self.rounds.is_multiple_of(every) {
            for agent in &mut self.agents {
                agent.graph_mut().decay_weights(self.curation.decay_factor)?;
            }
        }
        Ok(())
    }
}

fn encode_pending(agent: &mut PerspectiveAgent, todo: &[Observation]) -> (BTreeMap<String, Cell>, usize, usize) {
    let mut cells = BTreeMap::new();
    let (mut checks, mut encodes) = (0, 0);
    for obs in todo {
        checks += 1;
        let cell = match agent.assess_relevance(obs) {
            Err(e) => failed(agent.id(), &obs.id, &e),
            Ok(decision) if !decision.relevant => Cell::Skipped {
                rationale: decision.rationale,
            },
            Ok(decision) => {
                encodes += 1;
                match agent.encode(obs) {
                    Ok((encoding_id, result)) => Cell::Encoded {
                        encoding_id,
                        triples: result.triples.len(),
                        rationale: decision.rationale,
                    },
                    Err(e) => failed(agent.id(), &obs.id, &e),
                }
            }
        };
        cells.insert(obs.id.clone(), cell);
    }
    (cells, checks, encodes)
}

fn failed(perspective: &str, observation: &str, e: &PerspectiveError) -> Cell {
    log::warn!("{perspective} x {observation}: {e}");
    Cell::Failed { error: e.to_string() }
}

/// Splits attacks into admissible ones and ones dropped with a reason.
pub fn screen_attacks(raw: Vec<Attack>, proposers: &BTreeSet<&str>) -> (Vec<Attack>, Vec<DroppedAttack>) {
    let mut kept: Vec<Attack> = Vec::new();
    let mut dropped = Vec::new();
    for attack in raw {
        let reason = if attack.attacker == attack.target {
            Some("self-attack".to_owned())
        } else if !proposers.contains(attack.target.as_str()) {
            Some(format!("target `{}` made no proposal", attack.target))
        } else if !proposers.contains(attack.attacker.as_str()) {
            Some(format!("attacker `{}` made no proposal", attack.attacker))
        } else if attack.justification.trim().chars().count() < MIN_JUSTIFICATION_CHARS {
            Some(format!(
                "justification shorter than {MIN_JUSTIFICATION_CHARS} characters"
            ))
        } else if kept
            .iter()
            .any(|k| k.attacker == attack.attacker && k.target == attack.target)
        {
            Some("duplicate of an earlier attack".to_owned())
        } else {
            None
        };
        match reason {
            Some(reason) => dropped.push(DroppedAttack { attack, reason }),
            None => kept.push(attack),
        }
    }
    (kept, dropped)
}

/// Checks the invariants tying an outcome's parts together.
pub fn verify_outcome(o: &RetrievalOutcome) -> Result<(), String> {
    let ids: Vec<&str> = o.proposals.iter().map(|p| p.perspective_id.as_str()).collect();
    let args: Vec<&str> = o.graph.arguments().iter().map(|a| a.as_str()).collect();
    if ids != args {
        return Err(format!("arguments {args:?} differ from proposers {ids:?}"));
    }
    let edges: BTreeSet<(&str, &str)> = o.graph.attacks().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let projected: BTreeSet<(&str, &str)> = o
        .attacks
        .iter()
        .map(|a| (a.attacker.as_str(), a.target.as_str()))
        .collect();
    if edges != projected || projected.len() != o.attacks.len() {
        return Err("graph edges differ from accepted attacks".into());
    }
    if edges.iter().any(|(a, b)| a == b) {
        return Err("self-attack in graph".into());
    }
    if o.grounded != o.graph.grounded_extension() {
        return Err("grounded extension is stale".into());
    }
    let mode = classify_mode(&o.graph, &o.grounded).map_err(|e| e.to_string())?;
    if mode != o.mode {
        return Err(format!("mode {} but graph gives {mode}", o.mode));
    }
    if (o.mode == RetrievalMode::Surfacing) == o.preferred.is_empty() {
        return Err("preferred extensions must be reported exactly when surfacing".into());
    }

    let ex = &o.explanation;
    let mut covered: Vec<&str> = ex
        .selected
        .iter()
        .map(|s| s.perspective_id.as_str())
        .chain(ex.rejected.iter().map(|r| r.perspective_id.as_str()))
        .collect();
    covered.sort_unstable();
    let mut expected = ids.clone();
    expected.sort_unstable();
    if covered != expected {
        return Err(format!("explanation covers {covered:?}, proposals are {expected:?}"));
    }
    if o.mode == RetrievalMode::Surfacing && !ex.selected.is_empty() {
        return Err("surfacing explanation selected a proposal".into());
    }
    for r in &ex.rejected {
        let incoming: Vec<&Attack> = o.attacks.iter().filter(|a| a.target == r.perspective_id).collect();
        if incoming.is_empty() || incoming.len() != r.grounds.len() {
            return Err(format!("rejected `{}` lacks its grounds", r.perspective_id));
        }
        if incoming.iter().zip(&r.grounds).any(|(a, g)| *a != &g.attack) {
            return Err(format!("grounds for `{}` are not verbatim", r.perspective_id));
        }
    }
    Ok(())
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The attack graph in DOT. Grounded members are filled light blue, the rest
/// grey.
pub fn render_dot(name: &str, graph: &AttackGraph, grounded: &Extension, names: &Names) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n  node [shape=ellipse];\n", dot_id(name));
    for arg in graph.arguments() {
        let label = names.get(arg.as_str()).map_or(arg.as_str(), String::as_str);
        let fill = if grounded.contains(arg) { "lightblue" } else { "gray85" };
        let _ = writeln!(
            out,
            "  {} [label={}, style=filled, fillcolor={fill}];",
            dot_id(arg.as_str()),
            dot_id(label)
        );
    }
    for (a, b) in graph.attacks() {
        let _ = writeln!(out, "  {} -> {};", dot_id(a.as_str()), dot_id(b.as_str()));
    }
    out.push_str("}\n");
    out
}

impl RetrievalOutcome {
    pub fn dot(&self) -> String {
        render_dot(&self.ctx.id, &self.graph, &self.grounded, &self.names)
    }
}
