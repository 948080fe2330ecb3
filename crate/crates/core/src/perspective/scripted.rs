//! Replays recorded perspective outputs from a fixture.
//!
//! Every observation and query the backend is asked about must have an
//! entry; a missing entry is a [`PerspectiveError::FixtureGap`], never a
//! silent "not relevant".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    Attack, EncodingResult, PerspectiveBackend, PerspectiveConfig, PerspectiveError, Proposal, QueryContext,
    RelevanceDecision, Result,
};
use crate::buffer::Observation;
use crate::kgstore::{parse_turtle_with, EncodingId, KgError, PerspectiveGraph, TBoxSpec};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedFixture {
    #[serde(default)]
    pub observations: BTreeMap<String, ScriptedEncoding>,
    #[serde(default)]
    pub queries: BTreeMap<String, ScriptedQuery>,
}

/// `triples` is a Turtle snippet resolved against the perspective's prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEncoding {
    pub relevant: bool,
    pub rationale: String,
    #[serde(default)]
    pub tbox_delta: TBoxSpec,
    #[serde(default)]
    pub triples: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedQuery {
    #[serde(default)]
    pub proposal: Option<ScriptedProposal>,
    #[serde(default)]
    pub attacks: Vec<ScriptedAttack>,
}

/// Supporting encodings are named by observation; every encoding the
/// perspective holds for those observations is cited.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedProposal {
    pub interpretation: String,
    pub relevance_claim: String,
    pub supporting_observations: Vec<String>,
    #[serde(default)]
    pub frame: String,
    #[serde(default)]
    pub recommendation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedAttack {
    pub target: String,
    pub justification: String,
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    fixture: ScriptedFixture,
}

impl ScriptedBackend {
    pub fn new(fixture: ScriptedFixture) -> Self {
        Self { fixture }
    }

    fn observation(&self, config: &PerspectiveConfig, id: &str) -> Result<&ScriptedEncoding> {
        self.fixture
            .observations
            .get(id)
            .ok_or_else(|| PerspectiveError::FixtureGap {
                perspective: config.id.clone(),
                key: format!("observation `{id}`"),
            })
    }

    fn query(&self, config: &PerspectiveConfig, id: &str) -> Result<&ScriptedQuery> {
        self.fixture
            .queries
            .get(id)
            .ok_or_else(|| PerspectiveError::FixtureGap {
                perspective: config.id.clone(),
                key: format!("query `{id}`"),
            })
    }
}

impl PerspectiveBackend for ScriptedBackend {
    fn assess_relevance(&self, config: &PerspectiveConfig, observation: &Observation) -> Result<RelevanceDecision> {
        let entry = self.observation(config, &observation.id)?;
        Ok(RelevanceDecision {
            relevant: entry.relevant,
            rationale: entry.rationale.clone(),
        })
    }

    fn encode(
        &self,
        config: &PerspectiveConfig,
        observation: &Observation,
        _graph: &PerspectiveGraph,
    ) -> Result<EncodingResult> {
        let entry = self.observation(config, &observation.id)?;
        let delta = entry.tbox_delta.resolve(&config.prefixes)?;
        let doc = parse_turtle_with(&entry.triples, &config.prefixes).map_err(KgError::from)?;
        Ok(EncodingResult::new(delta, doc.triples))
    }

    fn propose(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        graph: &PerspectiveGraph,
    ) -> Result<Option<Proposal>> {
        let Some(scripted) = &self.query(config, &ctx.id)?.proposal else {
            return Ok(None);
        };
        let supporting: Vec<EncodingId> = scripted
            .supporting_observations
            .iter()
            .flat_map(|obs| graph.encodings_for_observation(obs).cloned())
            .collect();
        if supporting.is_empty() {
            return Ok(None);
        }
        Ok(Some(Proposal {
            perspective_id: config.id.clone(),
            interpretation: scripted.interpretation.clone(),
            relevance_claim: scripted.relevance_claim.clone(),
            supporting_encodings: supporting,
            frame: scripted.frame.clone(),
            recommendation: scripted.recommendation.clone(),
        }))
    }

    fn critique(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        _own: Option<&Proposal>,
        _others: &[Proposal],
        _graph: &PerspectiveGraph,
    ) -> Result<Vec<Attack>> {
        let entry = self.query(config, &ctx.id)?;
        Ok(entry
            .attacks
            .iter()
            .map(|a| Attack {
                attacker: config.id.clone(),
                target: a.target.clone(),
                justification: a.justification.clone(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::{PrefixMap, TBox};
    use crate::perspective::{BackendSpec, PerspectiveAgent};
    use chrono::{TimeZone, Utc};

    fn config(fixture: ScriptedFixture) -> PerspectiveConfig {
        let mut prefixes = PrefixMap::with_standard();
        prefixes.insert("ex", "http://example.org/ex#").unwrap();
        let seed = TBoxSpec {
            classes: vec![crate::kgstore::ClassSpec {
                iri: "ex:Event".into(),
                label: "Event".into(),
            }],
            ..Default::default()
        }
        .resolve(&prefixes)
        .unwrap();
        PerspectiveConfig {
            id: "ex".into(),
            name: "Example".into(),
            goal_statement: "track events".into(),
            prefixes,
            seed_tbox: seed,
            backend: BackendSpec::Scripted(fixture),
        }
    }

    fn obs(id: &str) -> Observation {
        Observation {
            id: id.into(),
            timestamp: Utc.timestamp_opt(0, 0).unwrap(),
            content: "something happened".into(),
            source: Default::default(),
        }
    }

    fn fixture() -> ScriptedFixture {
        serde_json::from_str(
            r#"{
              "observations": {
                "o1": {"relevant": true, "rationale": "an event",
                       "tbox_delta": {"classes": [{"iri": "ex:Alarm", "label": "Alarm"}],
                                      "subclass_of": [["ex:Alarm", "ex:Event"]]},
                       "triples": "ex:o1 a ex:Alarm ; rdfs:label \"alarm\" ."},
                "o2": {"relevant": false, "rationale": "noise"}
              },
              "queries": {
                "q": {"proposal": {"interpretation": "an alarm fired", "relevance_claim": "alarms matter",
                                   "supporting_observations": ["o1"]},
                      "attacks": [{"target": "other", "justification": "alarms outrank everything else"},
                                  {"target": "absent", "justification": "this target never proposed"}]},
                "quiet": {}
              }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn replays_relevance_and_encoding() {
        let mut agent = PerspectiveAgent::from_config(config(fixture())).unwrap();
        assert!(agent.assess_relevance(&obs("o1")).unwrap().relevant);
        assert!(!agent.assess_relevance(&obs("o2")).unwrap().relevant);
        let (id, result) = agent.encode(&obs("o1")).unwrap();
        assert_eq!(id.as_str(), "ex/o1/0");
        assert_eq!(result.triples.len(), 2);
        assert_eq!(result.task_trace.placements.len(), 1);
        assert_eq!(agent.calls().relevance, 2);
        assert_eq!(agent.calls().encode, 1);
    }

    #[test]
    fn fixture_gap_is_loud() {
        let agent = PerspectiveAgent::from_config(config(fixture())).unwrap();
        let err = agent.assess_relevance(&obs("o9")).unwrap_err();
        assert!(matches!(err, PerspectiveError::FixtureGap { .. }), "{err}");
    }

    #[test]
    fn empty_graph_abstains_without_calling_backend() {
        let agent = PerspectiveAgent::from_config(config(fixture())).unwrap();
        let ctx = QueryContext {
            id: "q".into(),
            query: "what happened?".into(),
            querier: String::new(),
            decision_type: String::new(),
            current_priorities: vec![],
        };
        assert_eq!(agent.propose(&ctx).unwrap(), None);
        assert_eq!(agent.calls().propose, 0);
    }

    #[test]
    fn proposal_and_critique() {
        let mut agent = PerspectiveAgent::from_config(config(fixture())).unwrap();
        agent.encode(&obs("o1")).unwrap();
        let ctx = QueryContext {
            id: "q".into(),
            query: "what happened?".into(),
            querier: String::new(),
            decision_type: String::new(),
            current_priorities: vec![],
        };
        let proposal = agent.propose(&ctx).unwrap().unwrap();
        assert_eq!(proposal.supporting_encodings.len(), 1);
        let other = Proposal {
            perspective_id: "other".into(),
            ..proposal.clone()
        };
        let attacks = agent.critique(&ctx, Some(&proposal), &[other]).unwrap();
        // Recorded attacks come back untouched; the arbiter screens targets.
        assert_eq!(attacks.len(), 2);
        assert_eq!(attacks[0].target, "other");

        let quiet = QueryContext {
            id: "quiet".into(),
            ..ctx
        };
        assert_eq!(agent.propose(&quiet).unwrap(), None);
    }

    #[test]
    fn undeclared_vocabulary_is_rejected() {
        let mut fx = fixture();
        fx.observations.get_mut("o1").unwrap().tbox_delta = TBoxSpec::default();
        let mut agent = PerspectiveAgent::from_config(config(fx)).unwrap();
        let err = agent.encode(&obs("o1")).unwrap_err();
        assert!(
            matches!(err, PerspectiveError::Graph(KgError::UndeclaredTerms(_))),
            "{err}"
        );
        assert!(agent.graph().encodings().is_empty());
        let _ = TBox::new();
    }
}
