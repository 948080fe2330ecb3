//! Adapter for an external text-generation service.
//!
//! Each backend call becomes one [`GenerationRequest`]: a role prompt built
//! from the goal statement, a JSON task payload and the JSON schema the reply
//! must satisfy. Temperature is pinned to 0. A reply that does not
//! deserialize strictly into the expected shape counts as a failure. Every
//! call has a timeout and is retried once.
//!
//! No transport ships with the crate; callers supply a
//! [`TextGenerationService`].

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    Attack, EncodingResult, PerspectiveBackend, PerspectiveConfig, PerspectiveError, Proposal, QueryContext,
    RelevanceDecision, Result,
};
use crate::buffer::Observation;
use crate::kgstore::{parse_turtle_with, serialize_turtle, EncodingId, KgError, PerspectiveGraph, TBoxSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointDescriptor {
    pub url: String,
    #[serde(default)]
    pub model: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    pub endpoint: String,
    pub model: String,
    pub task: &'static str,
    pub system_prompt: String,
    pub payload: Value,
    pub response_schema: Value,
    pub temperature: f64,
}

pub trait TextGenerationService: Send + Sync {
    /// Returns the raw reply text, expected to be a JSON document.
    fn generate(&self, request: &GenerationRequest) -> std::result::Result<String, String>;
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncodeReply {
    #[serde(default)]
    tbox_delta: TBoxSpec,
    triples: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposeReply {
    proposal: Option<ProposalReply>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposalReply {
    interpretation: String,
    relevance_claim: String,
    supporting_encodings: Vec<EncodingId>,
    #[serde(default)]
    frame: String,
    #[serde(default)]
    recommendation: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CritiqueReply {
    attacks: Vec<AttackReply>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackReply {
    target: String,
    justification: String,
}

pub struct ExternalBackend {
    endpoint: EndpointDescriptor,
    service: Arc<dyn TextGenerationService>,
}

impl std::fmt::Debug for ExternalBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalBackend")
            .field("endpoint", &self.endpoint)
            .finish()
    }
}

impl ExternalBackend {
    pub fn new(endpoint: EndpointDescriptor, service: Arc<dyn TextGenerationService>) -> Self {
        Self { endpoint, service }
    }

    fn request(
        &self,
        config: &PerspectiveConfig,
        task: &'static str,
        payload: Value,
        schema: Value,
    ) -> GenerationRequest {
        GenerationRequest {
            endpoint: self.endpoint.url.clone(),
            model: self.endpoint.model.clone(),
            task,
            system_prompt: format!(
                "You are the {} perspective. Your goal: {}\nReply with a single JSON document matching the schema.",
                config.name, config.goal_statement
            ),
            payload,
            response_schema: schema,
            temperature: 0.0,
        }
    }

    fn call<T: DeserializeOwned>(&self, request: GenerationRequest) -> Result<T> {
        match self.attempt(&request) {
            Ok(v) => Ok(v),
            Err(first) => {
                log::warn!(
                    "{} call to {} failed, retrying: {first}",
                    request.task,
                    request.endpoint
                );
                self.attempt(&request)
            }
        }
    }

    fn attempt<T: DeserializeOwned>(&self, request: &GenerationRequest) -> Result<T> {
        let (tx, rx) = mpsc::channel();
        let service = Arc::clone(&self.service);
        let owned = request.clone();
        thread::spawn(move || {
            let _ = tx.send(service.generate(&owned));
        });
        let timeout = self.endpoint.timeout_ms;
        let text = match rx.recv_timeout(Duration::from_millis(timeout)) {
            Ok(reply) => reply.map_err(PerspectiveError::Backend)?,
            Err(_) => return Err(PerspectiveError::Timeout(timeout)),
        };
        serde_json::from_str(&text).map_err(|e| PerspectiveError::InvalidOutput(e.to_string()))
    }
}

fn observation_payload(observation: &Observation) -> Value {
    json!({
        "id": observation.id,
        "timestamp": observation.timestamp.to_rfc3339(),
        "content": observation.content,
        "source": observation.source,
    })
}

fn proposal_payload(p: &Proposal) -> Value {
    json!({
        "perspective_id": p.perspective_id,
        "interpretation": p.interpretation,
        "relevance_claim": p.relevance_claim,
    })
}

impl PerspectiveBackend for ExternalBackend {
    fn assess_relevance(&self, config: &PerspectiveConfig, observation: &Observation) -> Result<RelevanceDecision> {
        let schema = json!({
            "type": "object",
            "required": ["relevant", "rationale"],
            "additionalProperties": false,
            "properties": {"relevant": {"type": "boolean"}, "rationale": {"type": "string"}}
        });
        let req = self.request(
            config,
            "relevance",
            json!({"observation": observation_payload(observation)}),
            schema,
        );
        self.call(req)
    }

    fn encode(
        &self,
        config: &PerspectiveConfig,
        observation: &Observation,
        graph: &PerspectiveGraph,
    ) -> Result<EncodingResult> {
        let schema = json!({
            "type": "object",
            "required": ["triples"],
            "additionalProperties": false,
            "properties": {
                "tbox_delta": {"type": "object"},
                "triples": {"type": "string", "description": "Turtle using the given prefixes"}
            }
        });
        let prefixes: Value = config
            .prefixes
            .iter()
            .map(|(p, ns)| (p.to_owned(), json!(ns)))
            .collect();
        let tbox = crate::kgstore::write_turtle(graph.prefixes(), &graph.tbox().to_triples());
        let payload = json!({
            "observation": observation_payload(observation),
            "prefixes": prefixes,
            "tbox": tbox,
            "tasks": ["term typing", "taxonomy placement", "relation extraction"],
        });
        let reply: EncodeReply = self.call(self.request(config, "encode", payload, schema))?;
        let delta = reply.tbox_delta.resolve(&config.prefixes)?;
        let doc = parse_turtle_with(&reply.triples, &config.prefixes).map_err(KgError::from)?;
        Ok(EncodingResult::new(delta, doc.triples))
    }

    fn propose(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        graph: &PerspectiveGraph,
    ) -> Result<Option<Proposal>> {
        let schema = json!({
            "type": "object",
            "required": ["proposal"],
            "properties": {"proposal": {"type": ["object", "null"],
                "required": ["interpretation", "relevance_claim", "supporting_encodings"]}}
        });
        let encodings: Vec<Value> = graph.encodings().keys().map(|id| json!(id.as_str())).collect();
        let payload = json!({
            "query": ctx,
            "encoding_ids": encodings,
            "graph": serialize_turtle(graph),
        });
        let reply: ProposeReply = self.call(self.request(config, "propose", payload, schema))?;
        Ok(reply.proposal.map(|p| Proposal {
            perspective_id: config.id.clone(),
            interpretation: p.interpretation,
            relevance_claim: p.relevance_claim,
            supporting_encodings: p.supporting_encodings,
            frame: p.frame,
            recommendation: p.recommendation,
        }))
    }

    fn critique(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        own: Option<&Proposal>,
        others: &[Proposal],
        _graph: &PerspectiveGraph,
    ) -> Result<Vec<Attack>> {
        let schema = json!({
            "type": "object",
            "required": ["attacks"],
            "properties": {"attacks": {"type": "array", "items": {"type": "object",
                "required": ["target", "justification"]}}}
        });
        let payload = json!({
            "query": ctx,
            "own": own.map(proposal_payload),
            "others": others.iter().map(proposal_payload).collect::<Vec<_>>(),
        });
        let reply: CritiqueReply = self.call(self.request(config, "critique", payload, schema))?;
        Ok(reply
            .attacks
            .into_iter()
            .map(|a| Attack {
                attacker: config.id.clone(),
                target: a.target,
                justification: a.justification,
            })
            .collect())
    }
}
