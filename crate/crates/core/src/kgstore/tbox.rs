use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::terms::{vocab, Iri, Literal, PrefixMap, RdfTerm, Triple};
use super::{KgError, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyRange {
    Class(Iri),
    Datatype(Iri),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyDecl {
    pub domain: Iri,
    pub range: PropertyRange,
}

/// Classes with labels, a subclass hierarchy and typed properties.
///
/// The same type is used for a full terminology and for a delta applied to
/// one; a delta may mention classes it does not itself declare, as long as the
/// target TBox does.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TBox {
    classes: BTreeMap<Iri, String>,
    subclass_edges: BTreeSet<(Iri, Iri)>,
    properties: BTreeMap<Iri, PropertyDecl>,
}

impl TBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_class(mut self, class: Iri, label: impl Into<String>) -> Self {
        self.classes.insert(class, label.into());
        self
    }

    pub fn with_subclass(mut self, child: Iri, parent: Iri) -> Self {
        self.subclass_edges.insert((child, parent));
        self
    }

    pub fn with_property(mut self, property: Iri, domain: Iri, range: PropertyRange) -> Self {
        self.properties.insert(property, PropertyDecl { domain, range });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.subclass_edges.is_empty() && self.properties.is_empty()
    }

    pub fn has_class(&self, class: &Iri) -> bool {
        self.classes.contains_key(class)
    }

    pub fn class_label(&self, class: &Iri) -> Option<&str> {
        self.classes.get(class).map(String::as_str)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&Iri, &str)> {
        self.classes.iter().map(|(c, l)| (c, l.as_str()))
    }

    pub fn subclass_edges(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.subclass_edges
    }

    pub fn properties(&self) -> &BTreeMap<Iri, PropertyDecl> {
        &self.properties
    }

    pub fn has_property(&self, property: &Iri) -> bool {
        self.properties.contains_key(property)
    }

    /// Plain union without validation, for accumulating deltas.
    pub fn union(&self, other: &TBox) -> TBox {
        let mut out = self.clone();
        for (class, label) in &other.classes {
            out.classes.entry(class.clone()).or_insert_with(|| label.clone());
        }
        out.subclass_edges.extend(other.subclass_edges.iter().cloned());
        for (property, decl) in &other.properties {
            out.properties.entry(property.clone()).or_insert_with(|| decl.clone());
        }
        out
    }

    /// `self` extended by `delta`. Existing class labels are kept.
    pub fn merge(&self, delta: &TBox) -> Result<TBox> {
        let mut merged = self.clone();
        for (class, label) in &delta.classes {
            merged.classes.entry(class.clone()).or_insert_with(|| label.clone());
        }
        for (property, decl) in &delta.properties {
            match merged.properties.get(property) {
                Some(existing) if existing != decl => return Err(KgError::ConflictingProperty(property.clone())),
                Some(_) => {}
                None => {
                    merged.properties.insert(property.clone(), decl.clone());
                }
            }
        }
        for (child, parent) in &delta.subclass_edges {
            for class in [child, parent] {
                if !merged.has_class(class) {
                    return Err(KgError::UndeclaredClass(class.clone()));
                }
            }
        }
        for decl in delta.properties.values() {
            if !merged.has_class(&decl.domain) {
                return Err(KgError::UndeclaredClass(decl.domain.clone()));
            }
            if let PropertyRange::Class(range) = &decl.range {
                if !merged.has_class(range) {
                    return Err(KgError::UndeclaredClass(range.clone()));
                }
            }
        }
        for (child, parent) in &delta.subclass_edges {
            if merged.subclass_edges.contains(&(child.clone(), parent.clone())) {
                continue;
            }
            if merged.is_subclass_of(parent, child) {
                return Err(KgError::SubclassCycle {
                    child: child.clone(),
                    parent: parent.clone(),
                });
            }
            merged.subclass_edges.insert((child.clone(), parent.clone()));
        }
        Ok(merged)
    }

    /// Reflexive-transitive subclass check.
    pub fn is_subclass_of(&self, class: &Iri, ancestor: &Iri) -> bool {
        let mut stack = vec![class];
        let mut seen = BTreeSet::new();
        while let Some(current) = stack.pop() {
            if current == ancestor {
                return true;
            }
            if !seen.insert(current) {
                continue;
            }
            stack.extend(self.subclass_edges.iter().filter(|(c, _)| c == current).map(|(_, p)| p));
        }
        false
    }

    /// Predicates and `rdf:type` objects in `triples` that this TBox does not declare.
    pub fn undeclared_terms<'a, I>(&self, triples: I) -> Vec<Iri>
    where
        I: IntoIterator<Item = &'a Triple>,
    {
        let builtin = [vocab::rdf_type(), vocab::rdfs_label(), vocab::rdfs_comment()];
        let mut missing = BTreeSet::new();
        for triple in triples {
            if triple.predicate == builtin[0] {
                match &triple.object {
                    RdfTerm::Iri(class) if self.has_class(class) => {}
                    RdfTerm::Iri(class) => {
                        missing.insert(class.clone());
                    }
                    RdfTerm::Literal(_) => {
                        missing.insert(triple.predicate.clone());
                    }
                }
            } else if !builtin.contains(&triple.predicate) && !self.has_property(&triple.predicate) {
                missing.insert(triple.predicate.clone());
            }
        }
        missing.into_iter().collect()
    }

    /// OWL/RDFS rendering of the terminology.
    pub fn to_triples(&self) -> BTreeSet<Triple> {
        let mut out = BTreeSet::new();
        for (class, label) in &self.classes {
            out.insert(Triple::new(class.clone(), vocab::rdf_type(), vocab::owl_class()));
            out.insert(Triple::new(
                class.clone(),
                vocab::rdfs_label(),
                Literal::string(label.clone()),
            ));
        }
        for (child, parent) in &self.subclass_edges {
            out.insert(Triple::new(child.clone(), vocab::rdfs_sub_class_of(), parent.clone()));
        }
        for (property, decl) in &self.properties {
            let (kind, range) = match &decl.range {
                PropertyRange::Class(c) => (vocab::owl_object_property(), c),
                PropertyRange::Datatype(d) => (vocab::owl_datatype_property(), d),
            };
            out.insert(Triple::new(property.clone(), vocab::rdf_type(), kind));
            out.insert(Triple::new(property.clone(), vocab::rdfs_domain(), decl.domain.clone()));
            out.insert(Triple::new(property.clone(), vocab::rdfs_range(), range.clone()));
        }
        out
    }
}

/// Serialized TBox with prefixed names, as found in scenario files and
/// structured backend responses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TBoxSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<ClassSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subclass_of: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub properties: Vec<PropertySpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub iri: String,
    pub label: String,
}

/// Exactly one of `range` (a class) or `datatype` must be given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySpec {
    pub iri: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
}

impl TBoxSpec {
    pub fn resolve(&self, prefixes: &PrefixMap) -> Result<TBox> {
        let mut tbox = TBox::new();
        for class in &self.classes {
            tbox = tbox.with_class(prefixes.expand(&class.iri)?, class.label.clone());
        }
        for (child, parent) in &self.subclass_of {
            tbox = tbox.with_subclass(prefixes.expand(child)?, prefixes.expand(parent)?);
        }
        for property in &self.properties {
            let range = match (&property.range, &property.datatype) {
                (Some(class), None) => PropertyRange::Class(prefixes.expand(class)?),
                (None, Some(datatype)) => PropertyRange::Datatype(prefixes.expand(datatype)?),
                _ => {
                    return Err(KgError::InvalidIri(format!(
                        "property {} needs exactly one of `range` or `datatype`",
                        property.iri
                    )))
                }
            };
            tbox = tbox.with_property(
                prefixes.expand(&property.iri)?,
                prefixes.expand(&property.domain)?,
                range,
            );
        }
        Ok(tbox)
    }
}
