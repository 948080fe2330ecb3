//! Per-perspective knowledge graphs.
//!
//! A [`PerspectiveGraph`] holds one perspective's terminology ([`TBox`]), its
//! instance triples (the ABox), and the bookkeeping for each encoding that
//! contributed triples: the source observation and an importance weight that
//! retrieval reinforces and curation decays.
//!
//! Every operation takes exactly one graph. There is no API that reads or
//! writes two perspectives' graphs together.

mod tbox;
mod terms;
pub mod turtle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tbox::{ClassSpec, PropertyDecl, PropertyRange, PropertySpec, TBox, TBoxSpec};
pub use terms::{vocab, Iri, Literal, PrefixMap, RdfTerm, Triple};
pub use turtle::{parse_turtle, parse_turtle_with, serialize_turtle, write_turtle, TurtleDocument, TurtleError};

pub const DEFAULT_RETRIEVAL_BUMP: f64 = 1.0;
pub const DEFAULT_DECAY_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KgError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("subclass edge {child} -> {parent} would create a cycle")]
    SubclassCycle { child: Iri, parent: Iri },
    #[error("class {0} is referenced but not declared")]
    UndeclaredClass(Iri),
    #[error("property {0} is redeclared with a different signature")]
    ConflictingProperty(Iri),
    #[error("undeclared terms: {}", join_iris(.0))]
    UndeclaredTerms(Vec<Iri>),
    #[error("an encoding must assert at least one triple")]
    EmptyEncoding,
    #[error("unknown encoding `{0}`")]
    UnknownEncoding(String),
    #[error("decay factor must lie in (0, 1), got {0}")]
    InvalidDecayFactor(f64),
    #[error("retrieval bump must be finite and non-negative, got {0}")]
    InvalidBump(f64),
    #[error(transparent)]
    Turtle(#[from] TurtleError),
}

fn join_iris(iris: &[Iri]) -> String {
    iris.iter().map(Iri::as_str).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = KgError> = std::result::Result<T, E>;

/// `<perspective>/<observation>/<sequence>`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodingId(String);

impl EncodingId {
    pub fn new(perspective: &str, observation: &str, sequence: usize) -> Self {
        Self(format!("{perspective}/{observation}/{sequence}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EncodingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoding {
    pub observation_id: String,
    pub triples: BTreeSet<Triple>,
    pub weight: f64,
}

/// A triple pattern; `None` slots are wildcards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriplePattern {
    pub subject: Option<Iri>,
    pub predicate: Option<Iri>,
    pub object: Option<RdfTerm>,
}

impl TriplePattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn subject(mut self, iri: Iri) -> Self {
        self.subject = Some(iri);
        self
    }

    pub fn predicate(mut self, iri: Iri) -> Self {
        self.predicate = Some(iri);
        self
    }

    pub fn object(mut self, term: impl Into<RdfTerm>) -> Self {
        self.object = Some(term.into());
        self
    }

    pub fn matches(&self, triple: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == triple.subject)
            && self.predicate.as_ref().is_none_or(|p| *p == triple.predicate)
            && self.object.as_ref().is_none_or(|o| *o == triple.object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveGraph {
    perspective_id: String,
    prefixes: PrefixMap,
    tbox: TBox,
    abox: BTreeSet<Triple>,
    encodings: BTreeMap<EncodingId, Encoding>,
}

impl PerspectiveGraph {
    /// A graph seeded with `tbox`, which must satisfy the TBox invariants.
    pub fn new(perspective_id: impl Into<String>, prefixes: PrefixMap, tbox: TBox) -> Result<Self> {
        let tbox = TBox::default().merge(&tbox)?;
        Ok(Self {
            perspective_id: perspective_id.into(),
            prefixes,
            tbox,
            abox: BTreeSet::new(),
            encodings: BTreeMap::new(),
        })
    }

    pub fn perspective_id(&self) -> &str {
        &self.perspective_id
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn tbox(&self) -> &TBox {
        &self.tbox
    }

    pub fn abox(&self) -> &BTreeSet<Triple> {
        &self.abox
    }

    pub fn encodings(&self) -> &BTreeMap<EncodingId, Encoding> {
        &self.encodings
    }

    pub fn encoding(&self, id: &EncodingId) -> Option<&Encoding> {
        self.encodings.get(id)
    }

    pub fn encodings_for_observation<'a>(
        &'a self,
        observation_id: &'a str,
    ) -> impl Iterator<Item = &'a EncodingId> + 'a {
        self.encodings
            .iter()
            .filter(move |(_, e)| e.observation_id == observation_id)
            .map(|(id, _)| id)
    }

    /// Merges `delta` into the TBox. Idempotent; leaves the graph untouched on error.
    pub fn apply_tbox_update(&mut self, delta: &TBox) -> Result<()> {
        self.tbox = self.tbox.merge(delta)?;
        Ok(())
    }

    /// Registers a new encoding with weight 1.0 after extending the TBox by `delta`.
    ///
    /// Validation happens before any mutation: a rejected encoding leaves both
    /// the TBox and the ABox unchanged.
    pub fn insert_encoding<I>(&mut self, observation_id: &str, triples: I, delta: &TBox) -> Result<EncodingId>
    where
        I: IntoIterator<Item = Triple>,
    {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        if triples.is_empty() {
            return Err(KgError::EmptyEncoding);
        }
        let tbox = self.tbox.merge(delta)?;
        let undeclared = tbox.undeclared_terms(&triples);
        if !undeclared.is_empty() {
            return Err(KgError::UndeclaredTerms(undeclared));
        }

        let sequence = self.encodings_for_observation(observation_id).count();
        let id = EncodingId::new(&self.perspective_id, observation_id, sequence);
        self.tbox = tbox;
        self.abox.extend(triples.iter().cloned());
        self.encodings.insert(
            id.clone(),
            Encoding {
                observation_id: observation_id.to_owned(),
                triples,
                weight: 1.0,
            },
        );
        Ok(id)
    }

    pub fn match_pattern(&self, pattern: &TriplePattern) -> Vec<&Triple> {
        self.abox.iter().filter(|t| pattern.matches(t)).collect()
    }

    /// Encodings that contributed at least one triple matching `pattern`.
    pub fn encodings_matching(&self, pattern: &TriplePattern) -> Vec<&EncodingId> {
        self.encodings
            .iter()
            .filter(|(_, e)| e.triples.iter().any(|t| pattern.matches(t)))
            .map(|(id, _)| id)
            .collect()
    }

    pub fn record_retrieval(&mut self, ids: &[EncodingId]) -> Result<()> {
        self.record_retrieval_with(ids, DEFAULT_RETRIEVAL_BUMP)
    }

    pub fn record_retrieval_with(&mut self, ids: &[EncodingId], bump: f64) -> Result<()> {
        if !bump.is_finite() || bump < 0.0 {
            return Err(KgError::InvalidBump(bump));
        }
        if let Some(missing) = ids.iter().find(|id| !self.encodings.contains_key(id)) {
            return Err(KgError::UnknownEncoding(missing.0.clone()));
        }
        for id in ids {
            if let Some(encoding) = self.encodings.get_mut(id) {
                encoding.weight += bump;
            }
        }
        Ok(())
    }

    pub fn decay_weights(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(KgError::InvalidDecayFactor(factor));
        }
        for encoding in self.encodings.values_mut() {
            encoding.weight *= factor;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefixes() -> PrefixMap {
        let mut p = PrefixMap::with_standard();
        p.insert("rel", "http://example.org/rashomon/relationship#").unwrap();
        p.insert("fin", "http://example.org/rashomon/finance#").unwrap();
        p
    }

    fn iri(p: &PrefixMap, name: &str) -> Iri {
        p.expand(name).unwrap()
    }

    fn relationship_graph() -> PerspectiveGraph {
        let p = prefixes();
        let tbox = TBox::new()
            .with_class(iri(&p, "rel:RelationshipEvent"), "Relationship event")
            .with_property(
                iri(&p, "rel:hasTrustLevel"),
                iri(&p, "rel:RelationshipEvent"),
                PropertyRange::Datatype(vocab::xsd_string()),
            )
            .with_property(
                iri(&p, "rel:reciprocityExpectation"),
                iri(&p, "rel:RelationshipEvent"),
                PropertyRange::Datatype(vocab::xsd_string()),
            );
        PerspectiveGraph::new("rel", p, tbox).unwrap()
    }

    fn trust_signal_delta(p: &PrefixMap) -> TBox {
        TBox::new()
            .with_class(iri(p, "rel:TrustSignal"), "Trust signal")
            .with_subclass(iri(p, "rel:TrustSignal"), iri(p, "rel:RelationshipEvent"))
    }

    fn concession_triples(p: &PrefixMap) -> Vec<Triple> {
        let s = iri(p, "rel:meridianConcession");
        vec![
            Triple::new(s.clone(), vocab::rdf_type(), iri(p, "rel:TrustSignal")),
            Triple::new(s.clone(), iri(p, "rel:hasTrustLevel"), Literal::string("guarded")),
            Triple::new(s, iri(p, "rel:reciprocityExpectation"), Literal::string("low")),
        ]
    }

    #[test]
    fn tbox_update_adds_class_and_edge() {
        let mut g = relationship_graph();
        let p = g.prefixes().clone();
        g.apply_tbox_update(&trust_signal_delta(&p)).unwrap();
        assert!(g.tbox().has_class(&iri(&p, "rel:TrustSignal")));
        assert!(g.tbox().has_class(&iri(&p, "rel:RelationshipEvent")));
        assert_eq!(g.tbox().subclass_edges().len(), 1);

        let once = g.clone();
        g.apply_tbox_update(&trust_signal_delta(&p)).unwrap();
        assert_eq!(g, once);
        g.apply_tbox_update(&TBox::new()).unwrap();
        assert_eq!(g, once);
    }

    #[test]
    fn tbox_update_rejects_cycles_and_dangling_parents() {
        let mut g = relationship_graph();
        let p = g.prefixes().clone();
        let a = iri(&p, "rel:A");
        let b = iri(&p, "rel:B");
        let cyclic = TBox::new()
            .with_class(a.clone(), "A")
            .with_class(b.clone(), "B")
            .with_subclass(a.clone(), b.clone())
            .with_subclass(b.clone(), a.clone());
        let before = g.clone();
        match g.apply_tbox_update(&cyclic) {
            Err(KgError::SubclassCycle { child, parent }) => {
                assert_eq!((child, parent), (b.clone(), a.clone()));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
        assert_eq!(g, before);

        let dangling = TBox::new()
            .with_class(a.clone(), "A")
            .with_subclass(a, iri(&p, "rel:Missing"));
        assert!(matches!(
            g.apply_tbox_update(&dangling),
            Err(KgError::UndeclaredClass(_))
        ));
    }

    #[test]
    fn insert_encoding_registers_weight_and_triples() {
        let mut g = relationship_graph();
        let p = g.prefixes().clone();
        let id = g
            .insert_encoding("obs-2", concession_triples(&p), &trust_signal_delta(&p))
            .unwrap();
        assert_eq!(id.as_str(), "rel/obs-2/0");
        assert_eq!(g.abox().len(), 3);
        assert_eq!(g.encoding(&id).unwrap().weight, 1.0);

        // Same triples again: a second encoding, no ABox growth.
        let second = g
            .insert_encoding("obs-2", concession_triples(&p), &TBox::new())
            .unwrap();
        assert_eq!(second.as_str(), "rel/obs-2/1");
        assert_eq!(g.abox().len(), 3);
    }

    #[test]
    fn insert_encoding_rejects_bad_input() {
        let mut g = relationship_graph();
        let p = g.prefixes().clone();
        assert_eq!(
            g.insert_encoding("obs-2", Vec::new(), &TBox::new()),
            Err(KgError::EmptyEncoding)
        );
        // Without the delta, TrustSignal is undeclared.
        let before = g.clone();
        match g.insert_encoding("obs-2", concession_triples(&p), &TBox::new()) {
            Err(KgError::UndeclaredTerms(terms)) => {
                assert_eq!(terms, vec![iri(&p, "rel:TrustSignal")]);
            }
            other => panic!("expected undeclared-term error, got {other:?}"),
        }
        assert_eq!(g, before);
    }

    #[test]
    fn pattern_matching() {
        let mut g = relationship_graph();
        assert!(g.match_pattern(&TriplePattern::any()).is_empty());
        let p = g.prefixes().clone();
        let id = g
            .insert_encoding("obs-2", concession_triples(&p), &trust_signal_delta(&p))
            .unwrap();
        assert_eq!(g.match_pattern(&TriplePattern::any()).len(), 3);

        let guarded = TriplePattern::any()
            .predicate(iri(&p, "rel:hasTrustLevel"))
            .object(Literal::string("guarded"));
        assert_eq!(g.match_pattern(&guarded).len(), 1);
        assert_eq!(g.encodings_matching(&guarded), vec![&id]);

        let by_subject = TriplePattern::any().subject(iri(&p, "rel:meridianConcession"));
        assert_eq!(g.match_pattern(&by_subject).len(), 3);
        let other = TriplePattern::any().subject(iri(&p, "rel:nothing"));
        assert!(g.match_pattern(&other).is_empty());
    }

    #[test]
    fn retrieval_bump_then_decay() {
        let mut g = relationship_graph();
        let p = g.prefixes().clone();
        let id = g
            .insert_encoding("obs-2", concession_triples(&p), &trust_signal_delta(&p))
            .unwrap();
        g.record_retrieval(std::slice::from_ref(&id)).unwrap();
        assert_eq!(g.encoding(&id).unwrap().weight, 2.0);
        g.decay_weights(0.95).unwrap();
        assert!((g.encoding(&id).unwrap().weight - 1.9).abs() < 1e-12);
    }

    #[test]
    fn curation_error_paths() {
        let mut g = relationship_graph();
        let empty = g.clone();
        g.decay_weights(0.5).unwrap();
        assert_eq!(g, empty);
        assert_eq!(g.decay_weights(1.0), Err(KgError::InvalidDecayFactor(1.0)));
        assert!(g.decay_weights(0.0).is_err());
        assert!(g.decay_weights(f64::NAN).is_err());
        let ghost = EncodingId::new("rel", "obs-9", 0);
        assert!(matches!(g.record_retrieval(&[ghost]), Err(KgError::UnknownEncoding(_))));
    }
}
