use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{KgError, Result};

/// An absolute IRI. Prefixed names are expanded through a [`PrefixMap`]
/// before an `Iri` is constructed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if is_absolute_iri(&value) {
            Ok(Self(value))
        } else {
            Err(KgError::InvalidIri(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_absolute_iri(value: &str) -> bool {
    let Some((scheme, rest)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        && !rest.is_empty()
        && !value.chars().any(|c| {
            c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`')
        })
}

impl TryFrom<String> for Iri {
    type Error = KgError;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

pub mod vocab {
    use super::Iri;

    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";

    fn term(ns: &str, local: &str) -> Iri {
        Iri(format!("{ns}{local}"))
    }

    pub fn rdf_type() -> Iri {
        term(RDF, "type")
    }
    pub fn rdf_lang_string() -> Iri {
        term(RDF, "langString")
    }
    pub fn rdfs_label() -> Iri {
        term(RDFS, "label")
    }
    pub fn rdfs_comment() -> Iri {
        term(RDFS, "comment")
    }
    pub fn rdfs_sub_class_of() -> Iri {
        term(RDFS, "subClassOf")
    }
    pub fn rdfs_domain() -> Iri {
        term(RDFS, "domain")
    }
    pub fn rdfs_range() -> Iri {
        term(RDFS, "range")
    }
    pub fn owl_class() -> Iri {
        term(OWL, "Class")
    }
    pub fn owl_object_property() -> Iri {
        term(OWL, "ObjectProperty")
    }
    pub fn owl_datatype_property() -> Iri {
        term(OWL, "DatatypeProperty")
    }
    pub fn xsd_string() -> Iri {
        term(XSD, "string")
    }
    pub fn xsd_integer() -> Iri {
        term(XSD, "integer")
    }
    pub fn xsd_decimal() -> Iri {
        term(XSD, "decimal")
    }
    pub fn xsd_boolean() -> Iri {
        term(XSD, "boolean")
    }
}

/// A literal with a datatype; language-tagged literals carry `rdf:langString`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: vocab::xsd_string(),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self> {
        if datatype == vocab::rdf_lang_string() {
            return Err(KgError::InvalidLiteral("rdf:langString requires a language tag".into()));
        }
        Ok(Self {
            lexical: lexical.into(),
            datatype,
            language: None,
        })
    }

    pub fn lang(lexical: impl Into<String>, tag: impl Into<String>) -> Result<Self> {
        let tag = tag.into();
        if !is_language_tag(&tag) {
            return Err(KgError::InvalidLiteral(format!("bad language tag {tag:?}")));
        }
        Ok(Self {
            lexical: lexical.into(),
            datatype: vocab::rdf_lang_string(),
            language: Some(tag),
        })
    }

    pub fn integer(value: i64) -> Self {
        Self {
            lexical: value.to_string(),
            datatype: vocab::xsd_integer(),
            language: None,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

pub(crate) fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    parts
        .next()
        .is_some_and(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()))
        && parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdfTerm {
    Iri(Iri),
    Literal(Literal),
}

impl From<Iri> for RdfTerm {
    fn from(iri: Iri) -> Self {
        RdfTerm::Iri(iri)
    }
}

impl From<Literal> for RdfTerm {
    fn from(literal: Literal) -> Self {
        RdfTerm::Literal(literal)
    }
}

impl RdfTerm {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            RdfTerm::Iri(iri) => Some(iri),
            RdfTerm::Literal(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: RdfTerm,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<RdfTerm>) -> Self {
        Self {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

/// Prefix name to namespace IRI.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrefixMap(BTreeMap<String, String>);

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// `rdf`, `rdfs`, `xsd` and `owl`.
    pub fn with_standard() -> Self {
        let mut map = Self::new();
        for (name, ns) in [
            ("rdf", vocab::RDF),
            ("rdfs", vocab::RDFS),
            ("xsd", vocab::XSD),
            ("owl", vocab::OWL),
        ] {
            map.0.insert(name.into(), ns.into());
        }
        map
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) -> Result<()> {
        let prefix = prefix.into();
        let namespace = namespace.into();
        if !is_prefix_name(&prefix) {
            return Err(KgError::InvalidIri(format!("{prefix}:")));
        }
        Iri::new(namespace.clone())?;
        self.0.insert(prefix, namespace);
        Ok(())
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.0.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expands `prefix:local` or `<absolute-iri>`.
    pub fn expand(&self, name: &str) -> Result<Iri> {
        if let Some(inner) = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')) {
            return Iri::new(inner);
        }
        let (prefix, local) = name
            .split_once(':')
            .ok_or_else(|| KgError::InvalidIri(name.to_owned()))?;
        let ns = self
            .get(prefix)
            .ok_or_else(|| KgError::UnknownPrefix(prefix.to_owned()))?;
        Iri::new(format!("{ns}{local}"))
    }

    /// The shortest `prefix:local` form of `iri`, if any namespace yields a
    /// local name the Turtle reader accepts.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        self.0
            .iter()
            .filter_map(|(prefix, ns)| {
                iri.as_str()
                    .strip_prefix(ns.as_str())
                    .filter(|local| is_local_name(local))
                    .map(|local| (ns.len(), prefix, local))
            })
            // Longest namespace wins; ties broken by prefix name.
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, prefix, local)| format!("{prefix}:{local}"))
    }
}

pub(crate) fn is_prefix_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) => c.is_ascii_alphabetic() && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
    }
}

pub(crate) fn is_local_name(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) => {
            (c.is_ascii_alphanumeric() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
    }
}
