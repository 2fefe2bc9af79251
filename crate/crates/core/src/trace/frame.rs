use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use super::{Category, Timestamp, TraceError, TraceEvent};

type Predicate = Arc<dyn Fn(&TraceEvent) -> bool + Send + Sync>;

/// Conjunction of optional event criteria. An unset criterion passes
/// everything.
#[derive(Clone, Default)]
pub struct EventFilter {
    pub ranks: Option<Vec<u32>>,
    pub files: Option<Vec<String>>,
    pub categories: Option<Vec<Category>>,
    pub predicate: Option<Predicate>,
}

impl fmt::Debug for EventFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventFilter")
            .field("ranks", &self.ranks)
            .field("files", &self.files)
            .field("categories", &self.categories)
            .field("predicate", &self.predicate.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl EventFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ranks(mut self, ranks: impl IntoIterator<Item = u32>) -> Self {
        self.ranks = Some(ranks.into_iter().collect());
        self
    }

    pub fn files<S: Into<String>>(mut self, files: impl IntoIterator<Item = S>) -> Self {
        self.files = Some(files.into_iter().map(Into::into).collect());
        self
    }

    pub fn categories(mut self, categories: impl IntoIterator<Item = Category>) -> Self {
        self.categories = Some(categories.into_iter().collect());
        self
    }

    pub fn predicate(mut self, f: impl Fn(&TraceEvent) -> bool + Send + Sync + 'static) -> Self {
        self.predicate = Some(Arc::new(f));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_none() && self.files.is_none() && self.categories.is_none() && self.predicate.is_none()
    }

    pub fn matches(&self, e: &TraceEvent) -> bool {
        if let Some(ranks) = &self.ranks {
            if !ranks.contains(&e.rank) {
                return false;
            }
        }
        if let Some(files) = &self.files {
            match &e.file {
                Some(f) if files.iter().any(|x| x == f) => {}
                _ => return false,
            }
        }
        if let Some(cats) = &self.categories {
            if !cats.contains(&e.category) {
                return false;
            }
        }
        if let Some(p) = &self.predicate {
            if !p(e) {
                return false;
            }
        }
        true
    }
}

/// Immutable table of trace events sorted by `(rank, start, event_id)`, with
/// per-file and per-rank position indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IOFrame {
    events: Vec<TraceEvent>,
    file_index: BTreeMap<String, Vec<usize>>,
    rank_index: BTreeMap<u32, Vec<usize>>,
    epoch_span: Option<(Timestamp, Timestamp)>,
}

impl IOFrame {
    /// Validates, sorts and indexes `events`. Input order does not matter.
    pub fn build(mut events: Vec<TraceEvent>) -> Result<Self, TraceError> {
        let mut ids = HashSet::with_capacity(events.len());
        for e in &events {
            e.validate().map_err(|reason| TraceError::InvalidEvent {
                event_id: e.event_id,
                reason,
            })?;
            if !ids.insert(e.event_id) {
                return Err(TraceError::InvalidEvent {
                    event_id: e.event_id,
                    reason: "duplicate event_id".into(),
                });
            }
        }
        events.sort_by_key(|e| (e.rank, e.start, e.event_id));
        Ok(Self::from_valid(events))
    }

    fn from_valid(events: Vec<TraceEvent>) -> Self {
        let mut file_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut rank_index: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        let mut span: Option<(Timestamp, Timestamp)> = None;
        for (pos, e) in events.iter().enumerate() {
            if let Some(f) = &e.file {
                file_index.entry(f.clone()).or_default().push(pos);
            }
            rank_index.entry(e.rank).or_default().push(pos);
            span = Some(match span {
                None => (e.start, e.end),
                Some((lo, hi)) => (lo.min(e.start), hi.max(e.end)),
            });
        }
        IOFrame {
            events,
            file_index,
            rank_index,
            epoch_span: span,
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(earliest start, latest end)`, absent for an empty frame.
    pub fn epoch_span(&self) -> Option<(Timestamp, Timestamp)> {
        self.epoch_span
    }

    /// Files in ascending path order.
    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.file_index.keys().map(String::as_str)
    }

    pub fn ranks(&self) -> impl Iterator<Item = u32> + '_ {
        self.rank_index.keys().copied()
    }

    pub fn file_positions(&self, file: &str) -> &[usize] {
        self.file_index.get(file).map_or(&[], Vec::as_slice)
    }

    pub fn rank_positions(&self, rank: u32) -> &[usize] {
        self.rank_index.get(&rank).map_or(&[], Vec::as_slice)
    }

    /// Events on `file`, in frame order.
    pub fn file_events<'a>(&'a self, file: &str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.file_positions(file).iter().map(move |&p| &self.events[p])
    }

    pub fn rank_events(&self, rank: u32) -> impl Iterator<Item = &TraceEvent> + '_ {
        self.rank_positions(rank).iter().map(move |&p| &self.events[p])
    }

    pub fn contains_file(&self, file: &str) -> bool {
        self.file_index.contains_key(file)
    }

    /// New frame holding exactly the events that pass `filter`.
    pub fn filter(&self, filter: &EventFilter) -> IOFrame {
        if filter.is_empty() {
            return self.clone();
        }
        let events = self.events.iter().filter(|e| filter.matches(e)).cloned().collect();
        IOFrame::from_valid(events)
    }
}
