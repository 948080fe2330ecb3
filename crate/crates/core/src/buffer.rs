//! Time-bounded staging log of raw observations.
//!
//! Every registered perspective sees every observation until it acknowledges
//! it. Entries leave the buffer when the [`RetentionPolicy`] says so; the
//! default policy evicts once all perspectives have acknowledged or once the
//! entry is older than an optional TTL. Eviction is permanent.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BufferError {
    #[error("observation `{0}` was already appended")]
    Duplicate(String),
    #[error("observation `{0}` has empty content")]
    EmptyContent(String),
    #[error("observation id must not be empty")]
    EmptyId,
    #[error("unknown perspective `{0}`")]
    UnknownPerspective(String),
    #[error("observation `{0}` is unknown or already evicted")]
    NotPresent(String),
}

pub type Result<T, E = BufferError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub id: String,
    pub timestamp: Timestamp,
    pub content: String,
    #[serde(default)]
    pub source: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferEntry {
    pub observation: Observation,
    pub acked_by: BTreeSet<String>,
    pub inserted_at: Timestamp,
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Utc::now()
    }
}

/// Deterministic clock: starts at a fixed instant and advances one second per reading.
#[derive(Debug)]
pub struct LogicalClock {
    origin: Timestamp,
    ticks: AtomicI64,
}

impl LogicalClock {
    pub fn starting_at(origin: Timestamp) -> Self {
        Self {
            origin,
            ticks: AtomicI64::new(0),
        }
    }

    pub fn advance(&self, seconds: i64) {
        self.ticks.fetch_add(seconds, Ordering::SeqCst);
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::starting_at(Utc.timestamp_opt(0, 0).single().expect("epoch is valid"))
    }
}

impl Clock for LogicalClock {
    fn now(&self) -> Timestamp {
        let tick = self.ticks.fetch_add(1, Ordering::SeqCst);
        self.origin + Duration::seconds(tick)
    }
}

/// Decides whether an entry leaves the buffer.
pub trait RetentionPolicy: Send + Sync {
    fn should_evict(&self, entry: &BufferEntry, registered: &BTreeSet<String>, now: Timestamp) -> bool;
}

/// Evict when every registered perspective has acknowledged, or when the
/// entry is older than `ttl` (no time-based eviction when `ttl` is `None`).
#[derive(Debug, Clone, Copy, Default)]
pub struct AckOrTtl {
    pub ttl: Option<Duration>,
}

impl RetentionPolicy for AckOrTtl {
    fn should_evict(&self, entry: &BufferEntry, registered: &BTreeSet<String>, now: Timestamp) -> bool {
        let all_acked = !registered.is_empty() && registered.is_subset(&entry.acked_by);
        let expired = self.ttl.is_some_and(|ttl| now - entry.inserted_at > ttl);
        all_acked || expired
    }
}

pub struct ObservationBuffer {
    registered: BTreeSet<String>,
    entries: Vec<BufferEntry>,
    history: HashSet<String>,
    policy: Box<dyn RetentionPolicy>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for ObservationBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObservationBuffer")
            .field("registered", &self.registered)
            .field("entries", &self.entries)
            .finish_non_exhaustive()
    }
}

impl ObservationBuffer {
    pub fn new(policy: impl RetentionPolicy + 'static, clock: Arc<dyn Clock>) -> Self {
        Self {
            registered: BTreeSet::new(),
            entries: Vec::new(),
            history: HashSet::new(),
            policy: Box::new(policy),
            clock,
        }
    }

    /// Buffer with [`AckOrTtl`] and no TTL, on a [`LogicalClock`].
    pub fn deterministic() -> Self {
        Self::new(AckOrTtl::default(), Arc::new(LogicalClock::default()))
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn register_perspective(&mut self, id: impl Into<String>) {
        self.registered.insert(id.into());
    }

    pub fn registered(&self) -> &BTreeSet<String> {
        &self.registered
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    pub fn append(&mut self, observation: Observation) -> Result<()> {
        if observation.id.is_empty() {
            return Err(BufferError::EmptyId);
        }
        if observation.content.trim().is_empty() {
            return Err(BufferError::EmptyContent(observation.id));
        }
        if !self.history.insert(observation.id.clone()) {
            return Err(BufferError::Duplicate(observation.id));
        }
        self.entries.push(BufferEntry {
            observation,
            acked_by: BTreeSet::new(),
            inserted_at: self.clock.now(),
        });
        Ok(())
    }

    /// Live observations `perspective` has not acknowledged, in insertion order.
    pub fn pending_for(&self, perspective: &str) -> Result<Vec<&Observation>> {
        if !self.registered.contains(perspective) {
            return Err(BufferError::UnknownPerspective(perspective.to_owned()));
        }
        Ok(self
            .entries
            .iter()
            .filter(|e| !e.acked_by.contains(perspective))
            .map(|e| &e.observation)
            .collect())
    }

    /// Acknowledging twice is a no-op; acknowledgement cannot be withdrawn.
    pub fn acknowledge(&mut self, perspective: &str, observation_id: &str) -> Result<()> {
        if !self.registered.contains(perspective) {
            return Err(BufferError::UnknownPerspective(perspective.to_owned()));
        }
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.observation.id == observation_id)
            .ok_or_else(|| BufferError::NotPresent(observation_id.to_owned()))?;
        entry.acked_by.insert(perspective.to_owned());
        Ok(())
    }

    /// Removes every entry the policy releases at `now`; returns their ids.
    pub fn evict(&mut self, now: Timestamp) -> Vec<String> {
        let registered = &self.registered;
        let policy = &self.policy;
        let mut evicted = Vec::new();
        self.entries.retain(|entry| {
            if policy.should_evict(entry, registered, now) {
                evicted.push(entry.observation.id.clone());
                false
            } else {
                true
            }
        });
        evicted
    }

    pub fn evict_now(&mut self) -> Vec<String> {
        let now = self.clock.now();
        self.evict(now)
    }

    pub fn snapshot(&self) -> Vec<BufferEntry> {
        self.entries.clone()
    }
}

/// Single writer, many snapshot readers.
#[derive(Clone)]
pub struct SharedBuffer(Arc<RwLock<ObservationBuffer>>);

impl SharedBuffer {
    pub fn new(buffer: ObservationBuffer) -> Self {
        Self(Arc::new(RwLock::new(buffer)))
    }

    pub fn write<R>(&self, f: impl FnOnce(&mut ObservationBuffer) -> R) -> R {
        let mut guard = self.0.write().unwrap_or_else(|e| e.into_inner());
        f(&mut guard)
    }

    pub fn snapshot(&self) -> Vec<BufferEntry> {
        self.0.read().unwrap_or_else(|e| e.into_inner()).snapshot()
    }
}
