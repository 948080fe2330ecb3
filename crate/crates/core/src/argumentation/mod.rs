//! Abstract argumentation frameworks.
//!
//! An [`AttackGraph`] is a Dung framework: a finite set of arguments and a
//! binary attack relation. This module provides the two semantics used by the
//! retrieval arbiter (grounded and preferred), the building blocks they rest on
//! (conflict-freeness and defense), and the classification of a resolved graph
//! into a [`RetrievalMode`].
//!
//! Arguments are stored in declaration order and all computations work on
//! dense indices, so results never depend on hash iteration order.

mod af_format;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use af_format::{parse_af, serialize_af};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArgumentationError {
    #[error("argument identifier must be a non-empty token without whitespace, got {0:?}")]
    InvalidId(String),
    #[error("unknown argument `{0}`")]
    UnknownArgument(String),
    #[error("duplicate argument `{0}`")]
    DuplicateArgument(String),
    #[error("cannot classify a framework without arguments")]
    EmptyFramework,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = ArgumentationError> = std::result::Result<T, E>;

/// Identifier of an argument. In retrieval this is the proposing perspective's id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ArgumentId(String);

impl ArgumentId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() || value.chars().any(char::is_whitespace) {
            return Err(ArgumentationError::InvalidId(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ArgumentId {
    type Error = ArgumentationError;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ArgumentId> for String {
    fn from(id: ArgumentId) -> Self {
        id.0
    }
}

impl fmt::Display for ArgumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A set of accepted arguments.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Extension {
    members: BTreeSet<ArgumentId>,
}

impl Extension {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: &ArgumentId) -> bool {
        self.members.contains(id)
    }

    pub fn insert(&mut self, id: ArgumentId) -> bool {
        self.members.insert(id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArgumentId> {
        self.members.iter()
    }

    pub fn is_subset(&self, other: &Extension) -> bool {
        self.members.is_subset(&other.members)
    }
}

impl FromIterator<ArgumentId> for Extension {
    fn from_iter<I: IntoIterator<Item = ArgumentId>>(iter: I) -> Self {
        Self {
            members: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Extension {
    type Item = &'a ArgumentId;
    type IntoIter = std::collections::btree_set::Iter<'a, ArgumentId>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// How multiple survivors relate to the full proposal set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionKind {
    /// Every proposal survived.
    Complementary,
    /// Several, but not all, proposals survived.
    Filtered,
}

/// Outcome class of a resolved attack graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetrievalMode {
    Selection,
    Composition { detail: CompositionKind },
    Surfacing,
}

impl fmt::Display for RetrievalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrievalMode::Selection => f.write_str("selection"),
            RetrievalMode::Composition {
                detail: CompositionKind::Complementary,
            } => f.write_str("composition (complementary)"),
            RetrievalMode::Composition {
                detail: CompositionKind::Filtered,
            } => f.write_str("composition (filtered)"),
            RetrievalMode::Surfacing => f.write_str("surfacing"),
        }
    }
}

/// Arguments plus a directed attack relation.
///
/// Arguments keep their declaration order; edges are stored as index pairs
/// and are unique. Self-attacks are representable.
#[derive(Debug, Clone, Default)]
pub struct AttackGraph {
    arguments: Vec<ArgumentId>,
    index: HashMap<ArgumentId, usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl PartialEq for AttackGraph {
    fn eq(&self, other: &Self) -> bool {
        self.arguments == other.arguments && self.edges == other.edges
    }
}

impl Eq for AttackGraph {}

impl AttackGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from argument names and `(attacker, target)` pairs.
    /// Duplicate edges are collapsed.
    pub fn from_parts<A, E, S>(arguments: A, attacks: E) -> Result<Self>
    where
        A: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut graph = Self::new();
        for name in arguments {
            graph.add_argument(ArgumentId::new(name.as_ref())?)?;
        }
        for (attacker, target) in attacks {
            let attacker = ArgumentId::new(attacker.as_ref())?;
            let target = ArgumentId::new(target.as_ref())?;
            graph.add_attack(&attacker, &target)?;
        }
        Ok(graph)
    }

    pub fn add_argument(&mut self, id: ArgumentId) -> Result<usize> {
        if self.index.contains_key(&id) {
            return Err(ArgumentationError::DuplicateArgument(id.0));
        }
        let idx = self.arguments.len();
        self.index.insert(id.clone(), idx);
        self.arguments.push(id);
        Ok(idx)
    }

    /// Adds an attack edge. Returns `false` when the edge was already present.
    pub fn add_attack(&mut self, attacker: &ArgumentId, target: &ArgumentId) -> Result<bool> {
        let a = self.index_of(attacker)?;
        let b = self.index_of(target)?;
        Ok(self.edges.insert((a, b)))
    }

    pub fn arguments(&self) -> &[ArgumentId] {
        &self.arguments
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: &ArgumentId) -> bool {
        self.index.contains_key(id)
    }

    pub fn has_attack(&self, attacker: &ArgumentId, target: &ArgumentId) -> bool {
        match (self.index.get(attacker), self.index.get(target)) {
            (Some(&a), Some(&b)) => self.edges.contains(&(a, b)),
            _ => false,
        }
    }

    /// Edges in declaration-index order.
    pub fn attacks(&self) -> impl Iterator<Item = (&ArgumentId, &ArgumentId)> {
        self.edges
            .iter()
            .map(|&(a, b)| (&self.arguments[a], &self.arguments[b]))
    }

    pub fn attackers_of(&self, id: &ArgumentId) -> Result<Vec<&ArgumentId>> {
        let target = self.index_of(id)?;
        Ok(self
            .edges
            .iter()
            .filter(|&&(_, b)| b == target)
            .map(|&(a, _)| &self.arguments[a])
            .collect())
    }

    /// Members of `ext` in declaration order. Unknown members are skipped.
    pub fn ordered_members<'a>(&'a self, ext: &Extension) -> Vec<&'a ArgumentId> {
        self.arguments.iter().filter(|a| ext.contains(a)).collect()
    }

    fn index_of(&self, id: &ArgumentId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| ArgumentationError::UnknownArgument(id.0.clone()))
    }

    fn mask_of(&self, ext: &Extension) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.arguments.len()];
        for id in ext {
            mask[self.index_of(id)?] = true;
        }
        Ok(mask)
    }

    fn extension_of(&self, mask: &[bool]) -> Extension {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.arguments[i].clone())
            .collect()
    }

    fn attacker_table(&self) -> Vec<Vec<usize>> {
        let mut table = vec![Vec::new(); self.arguments.len()];
        for &(a, b) in &self.edges {
            table[b].push(a);
        }
        table
    }

    /// True iff no edge has both endpoints in `s`.
    pub fn is_conflict_free(&self, s: &Extension) -> Result<bool> {
        let mask = self.mask_of(s)?;
        Ok(!self.edges.iter().any(|&(a, b)| mask[a] && mask[b]))
    }

    /// True iff every attacker of `a` is attacked by some member of `s`.
    pub fn defends(&self, s: &Extension, a: &ArgumentId) -> Result<bool> {
        let mask = self.mask_of(s)?;
        let target = self.index_of(a)?;
        let attackers = self.attacker_table();
        Ok(defended(&attackers, &mask, target))
    }

    /// The least fixed point of the defense operator.
    ///
    /// Starts from the unattacked arguments and repeatedly adds every argument
    /// the current set defends until nothing changes.
    pub fn grounded_extension(&self) -> Extension {
        self.extension_of(&self.grounded_mask())
    }

    fn grounded_mask(&self) -> Vec<bool> {
        let attackers = self.attacker_table();
        let mut current = vec![false; self.arguments.len()];
        loop {
            let next: Vec<bool> = (0..self.arguments.len())
                .map(|i| defended(&attackers, &current, i))
                .collect();
            if next == current {
                return current;
            }
            current = next;
        }
    }

    /// All maximal admissible sets, ordered by their members' declaration indices.
    ///
    /// Exhaustive search with conflict-free pruning; exponential in the worst
    /// case, intended for frameworks with tens of arguments.
    pub fn preferred_extensions(&self) -> Vec<Extension> {
        let n = self.arguments.len();
        let attackers = self.attacker_table();
        let mut adjacency = vec![vec![false; n]; n];
        for &(a, b) in &self.edges {
            adjacency[a][b] = true;
        }

        let mut admissible: Vec<Vec<usize>> = Vec::new();
        let mut chosen = vec![false; n];
        let mut members = Vec::new();
        collect_admissible(0, &adjacency, &attackers, &mut chosen, &mut members, &mut admissible);

        let masks: Vec<Vec<bool>> = admissible
            .iter()
            .map(|set| {
                let mut mask = vec![false; n];
                set.iter().for_each(|&i| mask[i] = true);
                mask
            })
            .collect();
        let mut maximal: Vec<&Vec<usize>> = admissible
            .iter()
            .enumerate()
            .filter(|&(i, set)| {
                !masks
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != i && admissible[j].len() > set.len() && set.iter().all(|&k| other[k]))
            })
            .map(|(_, set)| set)
            .collect();
        maximal.sort();
        maximal.dedup();
        maximal
            .into_iter()
            .map(|set| set.iter().map(|&i| self.arguments[i].clone()).collect())
            .collect()
    }
}

fn defended(attackers: &[Vec<usize>], set: &[bool], target: usize) -> bool {
    attackers[target].iter().all(|&b| attackers[b].iter().any(|&c| set[c]))
}

fn collect_admissible(
    next: usize,
    adjacency: &[Vec<bool>],
    attackers: &[Vec<usize>],
    chosen: &mut Vec<bool>,
    members: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if next == adjacency.len() {
        if members.iter().all(|&m| defended(attackers, chosen, m)) {
            out.push(members.clone());
        }
        return;
    }
    let compatible = !adjacency[next][next] && members.iter().all(|&m| !adjacency[m][next] && !adjacency[next][m]);
    if compatible {
        chosen[next] = true;
        members.push(next);
        collect_admissible(next + 1, adjacency, attackers, chosen, members, out);
        members.pop();
        chosen[next] = false;
    }
    collect_admissible(next + 1, adjacency, attackers, chosen, members, out);
}

/// Maps a grounded extension onto a retrieval mode.
///
/// A lone surviving proposal in a single-argument graph is reported as a
/// complementary composition: there are no rejected alternatives to contrast.
pub fn classify_mode(graph: &AttackGraph, grounded: &Extension) -> Result<RetrievalMode> {
    if graph.is_empty() {
        return Err(ArgumentationError::EmptyFramework);
    }
    if let Some(unknown) = grounded.iter().find(|id| !graph.contains(id)) {
        return Err(ArgumentationError::UnknownArgument(unknown.0.clone()));
    }
    if cfg!(debug_assertions) && *grounded != graph.grounded_extension() {
        return Err(ArgumentationError::ContractViolation(
            "extension is not the grounded extension of the graph".into(),
        ));
    }
    let mode = if grounded.len() == graph.len() {
        RetrievalMode::Composition {
            detail: CompositionKind::Complementary,
        }
    } else if grounded.is_empty() {
        RetrievalMode::Surfacing
    } else if grounded.len() == 1 {
        RetrievalMode::Selection
    } else {
        RetrievalMode::Composition {
            detail: CompositionKind::Filtered,
        }
    };
    Ok(mode)
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    arguments: Vec<ArgumentId>,
    attacks: Vec<(ArgumentId, ArgumentId)>,
}

impl Serialize for AttackGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GraphDocument {
            arguments: self.arguments.clone(),
            attacks: self.attacks().map(|(a, b)| (a.clone(), b.clone())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AttackGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = GraphDocument::deserialize(deserializer)?;
        let mut graph = AttackGraph::new();
        for id in doc.arguments {
            graph.add_argument(id).map_err(serde::de::Error::custom)?;
        }
        for (a, b) in &doc.attacks {
            graph.add_attack(a, b).map_err(serde::de::Error::custom)?;
        }
        Ok(graph)
    }
}
