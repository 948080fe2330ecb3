//! Keyword rule engine: an offline, deterministic stand-in for model judgment.
//!
//! Observation text is lowercased and split on non-alphanumeric characters.
//! A perspective finds an observation relevant when any of its relevance
//! keywords appears among the tokens. Encoding applies every rule whose
//! keywords match (a rule with no keywords always matches). Proposals and
//! critiques are looked up by the query's decision type.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    local_name_of, Attack, EncodingResult, PerspectiveBackend, PerspectiveConfig, PerspectiveError, Proposal,
    QueryContext, RelevanceDecision, Result,
};
use crate::buffer::Observation;
use crate::kgstore::{parse_turtle_with, EncodingId, KgError, PerspectiveGraph, RdfTerm, TBox, TBoxSpec};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    pub relevance_keywords: BTreeSet<String>,
    #[serde(default)]
    pub encoding_rules: Vec<EncodingRule>,
    #[serde(default)]
    pub proposal_rules: Vec<ProposalRule>,
    #[serde(default)]
    pub critique_rules: Vec<CritiqueRule>,
}

/// `triples` is a Turtle template; `{obs}` is replaced by the observation id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingRule {
    #[serde(default)]
    pub keywords: BTreeSet<String>,
    #[serde(default)]
    pub tbox_delta: TBoxSpec,
    pub triples: String,
}

/// Fires for the listed decision types (any type when empty). The proposal
/// cites every encoding mentioning one of the `cite` terms and abstains when
/// there is none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalRule {
    #[serde(default)]
    pub decision_types: Vec<String>,
    pub interpretation: String,
    pub relevance_claim: String,
    pub cite: Vec<String>,
    #[serde(default)]
    pub frame: String,
    #[serde(default)]
    pub recommendation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CritiqueRule {
    pub decision_type: String,
    pub target: String,
    pub justification: String,
}

pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct RuleBackend {
    rules: RuleSet,
}

impl RuleBackend {
    pub fn new(rules: RuleSet) -> Self {
        Self { rules }
    }
}

impl PerspectiveBackend for RuleBackend {
    fn assess_relevance(&self, config: &PerspectiveConfig, observation: &Observation) -> Result<RelevanceDecision> {
        let found = tokens(&observation.content);
        let hits: Vec<&str> = self
            .rules
            .relevance_keywords
            .iter()
            .filter(|k| found.contains(k.as_str()))
            .map(String::as_str)
            .collect();
        Ok(if hits.is_empty() {
            RelevanceDecision {
                relevant: false,
                rationale: format!("no {} keyword present", config.name),
            }
        } else {
            RelevanceDecision {
                relevant: true,
                rationale: format!("matched {}", hits.join(", ")),
            }
        })
    }

    fn encode(
        &self,
        config: &PerspectiveConfig,
        observation: &Observation,
        _graph: &PerspectiveGraph,
    ) -> Result<EncodingResult> {
        let found = tokens(&observation.content);
        let local = local_name_of(&observation.id);
        let mut delta = TBox::new();
        let mut triples = BTreeSet::new();
        let mut matched = false;
        for rule in &self.rules.encoding_rules {
            if !rule.keywords.is_empty() && rule.keywords.is_disjoint(&found) {
                continue;
            }
            matched = true;
            delta = delta.union(&rule.tbox_delta.resolve(&config.prefixes)?);
            let text = rule.triples.replace("{obs}", &local);
            let doc = parse_turtle_with(&text, &config.prefixes).map_err(KgError::from)?;
            triples.extend(doc.triples);
        }
        if !matched {
            return Err(PerspectiveError::InvalidOutput(format!(
                "no encoding rule matches observation `{}`",
                observation.id
            )));
        }
        Ok(EncodingResult::new(delta, triples))
    }

    fn propose(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        graph: &PerspectiveGraph,
    ) -> Result<Option<Proposal>> {
        let Some(rule) = self
            .rules
            .proposal_rules
            .iter()
            .find(|r| r.decision_types.is_empty() || r.decision_types.contains(&ctx.decision_type))
        else {
            return Ok(None);
        };
        let cited = rule
            .cite
            .iter()
            .map(|name| config.prefixes.expand(name))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let supporting: Vec<EncodingId> = graph
            .encodings()
            .iter()
            .filter(|(_, e)| {
                e.triples.iter().any(|t| {
                    cited.contains(&t.subject)
                        || cited.contains(&t.predicate)
                        || matches!(&t.object, RdfTerm::Iri(o) if cited.contains(o))
                })
            })
            .map(|(id, _)| id.clone())
            .collect();
        if supporting.is_empty() {
            return Ok(None);
        }
        Ok(Some(Proposal {
            perspective_id: config.id.clone(),
            interpretation: rule.interpretation.clone(),
            relevance_claim: rule.relevance_claim.clone(),
            supporting_encodings: supporting,
            frame: rule.frame.clone(),
            recommendation: rule.recommendation.clone(),
        }))
    }

    fn critique(
        &self,
        config: &PerspectiveConfig,
        ctx: &QueryContext,
        _own: Option<&Proposal>,
        others: &[Proposal],
        _graph: &PerspectiveGraph,
    ) -> Result<Vec<Attack>> {
        Ok(self
            .rules
            .critique_rules
            .iter()
            .filter(|r| r.decision_type == ctx.decision_type)
            .filter(|r| others.iter().any(|p| p.perspective_id == r.target))
            .map(|r| Attack {
                attacker: config.id.clone(),
                target: r.target.clone(),
                justification: r.justification.clone(),
            })
            .collect())
    }
}
