//! Goal-perspective agents.
//!
//! A [`PerspectiveAgent`] owns one perspective's configuration, backend and
//! knowledge graph. It filters observations for relevance, encodes relevant
//! ones (term typing, taxonomy placement, relation extraction), proposes an
//! interpretation for a query and critiques the other perspectives'
//! proposals in a single batched call.
//!
//! Backends implement [`PerspectiveBackend`]. Three are provided: a scripted
//! replay of recorded outputs, a keyword rule engine, and an adapter for an
//! external text-generation service.

pub mod external;
pub mod rules;
pub mod scripted;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buffer::Observation;
use crate::kgstore::{vocab, EncodingId, Iri, KgError, PerspectiveGraph, PrefixMap, RdfTerm, TBox, Triple};

pub use external::{EndpointDescriptor, ExternalBackend, GenerationRequest, TextGenerationService};
pub use rules::{CritiqueRule, EncodingRule, ProposalRule, RuleBackend, RuleSet};
pub use scripted::{
    ScriptedAttack, ScriptedBackend, ScriptedEncoding, ScriptedFixture, ScriptedProposal, ScriptedQuery,
};

/// Attacks must carry at least this many characters of justification.
pub const MIN_JUSTIFICATION_CHARS: usize = 20;

#[derive(Debug, Error)]
pub enum PerspectiveError {
    #[error("perspective `{perspective}` has no scripted entry for {key}")]
    FixtureGap { perspective: String, key: String },
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error("backend produced invalid output: {0}")]
    InvalidOutput(String),
    #[error("backend call failed: {0}")]
    Backend(String),
    #[error("backend call timed out after {0} ms")]
    Timeout(u64),
    #[error("no transport configured for external endpoint {0}")]
    NoTransport(String),
}

pub type Result<T, E = PerspectiveError> = std::result::Result<T, E>;

/// Everything the arbiter broadcasts with a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContext {
    pub id: String,
    pub query: String,
    #[serde(default)]
    pub querier: String,
    #[serde(default)]
    pub decision_type: String,
    #[serde(default)]
    pub current_priorities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceDecision {
    pub relevant: bool,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingTask {
    /// Classifies an entity against the TBox.
    TermTyping,
    /// Places a new class in the hierarchy.
    TaxonomyDiscovery,
    /// Relates entities through properties.
    RelationExtraction,
}

/// Which task produced each part of an encoding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TaskTrace {
    pub typings: Vec<(Iri, Iri)>,
    pub placements: Vec<(Iri, Iri)>,
    pub relations: Vec<Triple>,
    pub provenance: Vec<(Triple, EncodingTask)>,
}

impl TaskTrace {
    /// Derives the trace from a delta and the triples it accompanies.
    ///
    /// `rdf:type` triples are typings; when the class was introduced by the
    /// delta the typing depends on a taxonomy placement as well.
    pub fn derive(delta: &TBox, triples: &BTreeSet<Triple>) -> Self {
        let placements: Vec<(Iri, Iri)> = delta.subclass_edges().iter().cloned().collect();
        let placed: BTreeSet<&Iri> = placements.iter().map(|(c, _)| c).collect();
        let mut trace = TaskTrace {
            placements: placements.clone(),
            ..Default::default()
        };
        for triple in triples {
            if triple.predicate == vocab::rdf_type() {
                if let RdfTerm::Iri(class) = &triple.object {
                    trace.typings.push((triple.subject.clone(), class.clone()));
                    let task = if placed.contains(class) {
                        EncodingTask::TaxonomyDiscovery
                    } else {
                        EncodingTask::TermTyping
                    };
                    trace.provenance.push((triple.clone(), task));
                    continue;
                }
            }
            trace.relations.push(triple.clone());
            trace
                .provenance
                .push((triple.clone(), EncodingTask::RelationExtraction));
        }
        trace
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncodingResult {
    pub tbox_delta: TBox,
    pub triples: BTreeSet<Triple>,
    pub task_trace: TaskTrace,
}

impl EncodingResult {
    pub fn new(tbox_delta: TBox, triples: BTreeSet<Triple>) -> Self {
        let task_trace = TaskTrace::derive(&tbox_delta, &triples);
        Self {
            tbox_delta,
            triples,
            task_trace,
        }
    }
}

/// A candidate interpretation with the encodings it rests on.
///
/// `frame` is a short noun phrase ("margin analysis") and `recommendation` a
/// short verb phrase ("focusing on margin recovery"); both feed the
/// explanation templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub perspective_id: String,
    pub interpretation: String,
    pub relevance_claim: String,
    pub supporting_encodings: Vec<EncodingId>,
    #[serde(default)]
    pub frame: String,
    #[serde(default)]
    pub recommendation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attack {
    pub attacker: String,
    pub target: String,
    pub justification: String,
}

/// How a perspective's backend is built.
#[derive(Debug, Clone)]
pub enum BackendSpec {
    Scripted(ScriptedFixture),
    RuleBased(RuleSet),
    External(EndpointDescriptor),
}

#[derive(Debug, Clone)]
pub struct PerspectiveConfig {
    pub id: String,
    /// Display name used in explanations, e.g. "Risk Management".
    pub name: String,
    pub goal_statement: String,
    pub prefixes: PrefixMap,
    pub seed_tbox: TBox,
    pub backend: BackendSpec,
}

pub trait PerspectiveBackend: Send + Sync {
    fn assess_relevance(&self, config: &PerspectiveConfig, observation: &Observation) -> Result<RelevanceDecision>;

    fn encode(
        &self,
        config: &PerspectiveConfig,
        observation: &Observation,
        graph: &PerspectiveGraph,
    ) -> Result<EncodingResult>;

    fn propose(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        graph: &PerspectiveGraph,
    ) -> Result<Option<Proposal>>;

    /// One batched call evaluating every other proposal.
    fn critique(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        own: Option<&Proposal>,
        others: &[Proposal],
        graph: &PerspectiveGraph,
    ) -> Result<Vec<Attack>>;
}

/// Backend invocation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CallCounts {
    pub relevance: usize,
    pub encode: usize,
    pub propose: usize,
    pub critique: usize,
}

impl CallCounts {
    pub fn since(self, earlier: CallCounts) -> CallCounts {
        CallCounts {
            relevance: self.relevance - earlier.relevance,
            encode: self.encode - earlier.encode,
            propose: self.propose - earlier.propose,
            critique: self.critique - earlier.critique,
        }
    }

    pub fn total(&self) -> usize {
        self.relevance + self.encode + self.propose + self.critique
    }
}

impl std::ops::Add for CallCounts {
    type Output = CallCounts;

    fn add(self, rhs: CallCounts) -> CallCounts {
        CallCounts {
            relevance: self.relevance + rhs.relevance,
            encode: self.encode + rhs.encode,
            propose: self.propose + rhs.propose,
            critique: self.critique + rhs.critique,
        }
    }
}

#[derive(Debug, Default)]
struct CallCounters {
    relevance: AtomicUsize,
    encode: AtomicUsize,
    propose: AtomicUsize,
    critique: AtomicUsize,
}

impl CallCounters {
    fn snapshot(&self) -> CallCounts {
        CallCounts {
            relevance: self.relevance.load(Ordering::SeqCst),
            encode: self.encode.load(Ordering::SeqCst),
            propose: self.propose.load(Ordering::SeqCst),
            critique: self.critique.load(Ordering::SeqCst),
        }
    }
}

pub struct PerspectiveAgent {
    config: PerspectiveConfig,
    backend: Box<dyn PerspectiveBackend>,
    graph: PerspectiveGraph,
    calls: CallCounters,
}

impl fmt::Debug for PerspectiveAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerspectiveAgent")
            .field("id", &self.config.id)
            .field("encodings", &self.graph.encodings().len())
            .finish_non_exhaustive()
    }
}

impl PerspectiveAgent {
    pub fn new(config: PerspectiveConfig, backend: Box<dyn PerspectiveBackend>) -> Result<Self> {
        let graph = PerspectiveGraph::new(config.id.clone(), config.prefixes.clone(), config.seed_tbox.clone())?;
        Ok(Self {
            config,
            backend,
            graph,
            calls: CallCounters::default(),
        })
    }

    /// Builds the backend named by `config.backend`. External backends need
    /// a transport; use [`PerspectiveAgent::with_transport`] for those.
    pub fn from_config(config: PerspectiveConfig) -> Result<Self> {
        let backend: Box<dyn PerspectiveBackend> = match &config.backend {
            BackendSpec::Scripted(fixture) => Box::new(ScriptedBackend::new(fixture.clone())),
            BackendSpec::RuleBased(rules) => Box::new(RuleBackend::new(rules.clone())),
            BackendSpec::External(endpoint) => return Err(PerspectiveError::NoTransport(endpoint.url.clone())),
        };
        Self::new(config, backend)
    }

    pub fn with_transport(
        config: PerspectiveConfig,
        service: std::sync::Arc<dyn TextGenerationService>,
    ) -> Result<Self> {
        let backend: Box<dyn PerspectiveBackend> = match &config.backend {
            BackendSpec::External(endpoint) => Box::new(ExternalBackend::new(endpoint.clone(), service)),
            _ => return Self::from_config(config),
        };
        Self::new(config, backend)
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn config(&self) -> &PerspectiveConfig {
        &self.config
    }

    pub fn graph(&self) -> &PerspectiveGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut PerspectiveGraph {
        &mut self.graph
    }

    pub fn calls(&self) -> CallCounts {
        self.calls.snapshot()
    }

    pub fn assess_relevance(&self, observation: &Observation) -> Result<RelevanceDecision> {
        self.calls.relevance.fetch_add(1, Ordering::SeqCst);
        let decision = self.backend.assess_relevance(&self.config, observation)?;
        if decision.rationale.trim().is_empty() {
            return Err(PerspectiveError::InvalidOutput(format!(
                "relevance decision for `{}` has no rationale",
                observation.id
            )));
        }
        Ok(decision)
    }

    /// Encodes `observation` into this agent's graph.
    pub fn encode(&mut self, observation: &Observation) -> Result<(EncodingId, EncodingResult)> {
        self.calls.encode.fetch_add(1, Ordering::SeqCst);
        let result = self.backend.encode(&self.config, observation, &self.graph)?;
        let id = self
            .graph
            .insert_encoding(&observation.id, result.triples.iter().cloned(), &result.tbox_delta)?;
        Ok((id, result))
    }

    /// `Ok(None)` is an abstention. A graph without encodings always abstains.
    pub fn propose(&self, ctx: &QueryContext) -> Result<Option<Proposal>> {
        if self.graph.encodings().is_empty() {
            return Ok(None);
        }
        self.calls.propose.fetch_add(1, Ordering::SeqCst);
        let Some(proposal) = self.backend.propose(&self.config, ctx, &self.graph)? else {
            return Ok(None);
        };
        if proposal.perspective_id != self.config.id {
            return Err(PerspectiveError::InvalidOutput(format!(
                "proposal claims perspective `{}`",
                proposal.perspective_id
            )));
        }
        if proposal.interpretation.trim().is_empty() {
            return Err(PerspectiveError::InvalidOutput("empty interpretation".into()));
        }
        if proposal.supporting_encodings.is_empty() {
            return Err(PerspectiveError::InvalidOutput("proposal cites no encodings".into()));
        }
        if let Some(missing) = proposal
            .supporting_encodings
            .iter()
            .find(|id| self.graph.encoding(id).is_none())
        {
            return Err(PerspectiveError::InvalidOutput(format!(
                "proposal cites unknown encoding `{missing}`"
            )));
        }
        Ok(Some(proposal))
    }

    /// Attacks are returned as produced; the arbiter decides which are admissible.
    pub fn critique(&self, ctx: &QueryContext, own: Option<&Proposal>, others: &[Proposal]) -> Result<Vec<Attack>> {
        self.calls.critique.fetch_add(1, Ordering::SeqCst);
        self.backend.critique(&self.config, ctx, own, others, &self.graph)
    }
}

/// Replaces characters outside `[A-Za-z0-9_-]` so an id can sit in a local name.
pub(crate) fn local_name_of(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
